//! Run configuration: one TOML file naming the D-H table, environment and
//! magnet, resolved into a self-contained form that output artefacts embed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::DEFAULT_SIMILARITY_D_MT;
use crate::environment::{EnvError, Environment, RobotBody, DEFAULT_PATH_STEP};
use crate::kinematics::{DhTable, DEFAULT_POSE_RESOLUTION};
use crate::magnetostatics::{MagnetSpec, MU_0};
use crate::nvspin::{NvParams, DEFAULT_GAMMA_E};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Io(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MagnetToml {
    outer_radius_m: f64,
    #[serde(default)]
    inner_radius_m: f64,
    length_m: f64,
    #[serde(rename = "magnetisation_A_per_m")]
    magnetisation: Option<f64>,
    #[serde(rename = "remanence_T")]
    remanence: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NvToml {
    d_hz: Option<f64>,
    pi_hz: Option<f64>,
    gamma_e_hz_per_t: Option<f64>,
    axis_alpha_y_rad: Option<f64>,
    axis_alpha_z_rad: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunToml {
    seed: Option<u64>,
    dh_path: Option<PathBuf>,
    environment_path: Option<PathBuf>,
    sample_m: Option<[f64; 3]>,
    standoff_m: Option<f64>,
    resolution_m: Option<f64>,
    path_step_rad: Option<f64>,
    #[serde(rename = "similarity_d_mT")]
    similarity_d_mt: Option<f64>,
    magnet: Option<MagnetToml>,
    nv: Option<NvToml>,
}

/// Fully resolved run configuration. Serialises to JSON for embedding in
/// output artefacts and deserialises back for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub dh: DhTable,
    pub body: RobotBody,
    /// Absolute path of the environment manifest, if any.
    pub environment_path: Option<PathBuf>,
    pub magnet: MagnetSpec,
    pub nv: NvParams,
    pub sample_m: [f64; 3],
    pub standoff_m: f64,
    pub resolution_m: f64,
    pub path_step_rad: f64,
    pub similarity_d_mt: f64,
}

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_SAMPLE: [f64; 3] = [0.3, 0.1, 0.15];
pub const DEFAULT_STANDOFF: f64 = 0.06;

impl Default for ResolvedConfig {
    fn default() -> Self {
        let dh = DhTable::nominal();
        Self {
            seed: DEFAULT_SEED,
            body: RobotBody::nominal(&dh),
            dh,
            environment_path: None,
            magnet: MagnetSpec::nominal(),
            nv: NvParams::default(),
            sample_m: DEFAULT_SAMPLE,
            standoff_m: DEFAULT_STANDOFF,
            resolution_m: DEFAULT_POSE_RESOLUTION,
            path_step_rad: DEFAULT_PATH_STEP,
            similarity_d_mt: DEFAULT_SIMILARITY_D_MT,
        }
    }
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    };
    std::fs::canonicalize(&joined).unwrap_or(joined)
}

impl ResolvedConfig {
    /// Parses run-config TOML; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RunToml = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut cfg = Self::default();
        if let Some(s) = raw.seed {
            cfg.seed = s;
        }
        if let Some(p) = raw.dh_path {
            let path = absolute(base_dir, &p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
                ConfigError::Parse(format!("{}: {e}", path.display()))
            })?;
            cfg.dh = DhTable::from_toml_table(&table)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
            cfg.body = RobotBody::from_toml_table(&table, &cfg.dh)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        }
        if let Some(p) = raw.environment_path {
            let path = absolute(base_dir, &p);
            if !path.is_file() {
                return Err(ConfigError::Io(format!(
                    "environment manifest {} not found",
                    path.display()
                )));
            }
            cfg.environment_path = Some(path);
        }
        if let Some(s) = raw.sample_m {
            cfg.sample_m = s;
        }
        if let Some(s) = raw.standoff_m {
            cfg.standoff_m = s;
        }
        if let Some(r) = raw.resolution_m {
            cfg.resolution_m = r;
        }
        if let Some(s) = raw.path_step_rad {
            cfg.path_step_rad = s;
        }
        if let Some(d) = raw.similarity_d_mt {
            cfg.similarity_d_mt = d;
        }
        if let Some(m) = raw.magnet {
            let magnetisation = match (m.magnetisation, m.remanence) {
                (Some(mm), None) => mm,
                (None, Some(br)) => br / MU_0,
                _ => {
                    return Err(ConfigError::Invalid(
                        "magnet: give exactly one of magnetisation_A_per_m or remanence_T".into(),
                    ))
                }
            };
            cfg.magnet = MagnetSpec::new(
                m.outer_radius_m,
                m.inner_radius_m,
                m.length_m,
                magnetisation,
            )
            .map_err(|e| ConfigError::Invalid(format!("magnet: {e}")))?;
        }
        if let Some(nv) = raw.nv {
            let d = NvParams::default();
            cfg.nv = NvParams {
                d: nv.d_hz.unwrap_or(d.d),
                pi: nv.pi_hz.unwrap_or(d.pi),
                gamma_e: nv.gamma_e_hz_per_t.unwrap_or(DEFAULT_GAMMA_E),
                axis_alpha_y: nv.axis_alpha_y_rad.unwrap_or(0.0),
                axis_alpha_z: nv.axis_alpha_z_rad.unwrap_or(0.0),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invalid(m));
        if self.sample_m.iter().any(|v| !v.is_finite()) {
            return inv("sample_m must be finite".into());
        }
        if !(self.standoff_m > 0.0) {
            return inv("standoff_m must be > 0".into());
        }
        if !(self.resolution_m > 0.0) {
            return inv("resolution_m must be > 0".into());
        }
        if !(self.path_step_rad > 0.0) {
            return inv("path_step_rad must be > 0".into());
        }
        if !(self.similarity_d_mt > 0.0) {
            return inv("similarity_d_mT must be > 0".into());
        }
        self.dh
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.body
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.magnet
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.nv
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn sample(&self) -> crate::Vec3 {
        crate::Vec3::from(self.sample_m)
    }

    pub fn environment(&self) -> Result<Environment, EnvError> {
        match &self.environment_path {
            Some(p) => Environment::load_manifest(p),
            None => Ok(Environment::empty()),
        }
    }
}
