//! NV-centre spin-1 physics.
//!
//! Frequencies are in Hz throughout. The ms = 0-like eigenstate is picked
//! by overlap with |0⟩ rather than by energy order, so resonances stay
//! well-defined when transverse fields mix the levels.

mod cubic;
mod hamiltonian;
mod inversion;
mod odmr;
mod orientation;

use serde::{Deserialize, Serialize};

pub use cubic::{
    characteristic_roots, cubic_coefficients, cubic_resonances, cubic_splitting,
    depressed_cubic_real_roots,
};
pub use hamiltonian::{
    hamiltonian, nv_frame, resonances, spin_operators, world_to_nv_frame, SpinMatrix,
};
pub use inversion::{normalize_splittings, polar_angle_from_resonances, PolarField};
pub use odmr::{
    fit_resonances, linear_grid, lorentzian, odmr_spectrum, OdmrSpectrum, ResonanceFit,
};
pub use orientation::{
    angle_diff_mod_pi, field_nv_angle, fit_orientation, synthesize_trajectory, OrientationFit,
    TrajectoryPoint, MULTISTART_GRID,
};

/// Electron gyromagnetic ratio γe/2π (Hz/T).
pub const DEFAULT_GAMMA_E: f64 = 28.02495e9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpinError {
    #[error("no eigenstate has |<0|psi>|^2 >= 0.5; field mixes the spin states too strongly")]
    StateMixingTooStrong,
    #[error("characteristic cubic has complex roots")]
    ComplexRoots,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no field magnitude and angle reproduce the resonances")]
    NoConsistentField,
    #[error("field magnitude must be > 0 for normalisation")]
    ZeroMagnitude,
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("fit diverged")]
    FitDiverged,
}

/// NV parameters. Axis angles place the NV axis at `unit_normal(axis_alpha_y, axis_alpha_z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvParams {
    /// Zero-field splitting (Hz).
    pub d: f64,
    /// Strain/charge term Π (Hz).
    pub pi: f64,
    /// Hz/T.
    pub gamma_e: f64,
    pub axis_alpha_y: f64,
    pub axis_alpha_z: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self {
            d: 2.8704e9,
            pi: 1.8515e6,
            gamma_e: DEFAULT_GAMMA_E,
            axis_alpha_y: 0.0,
            axis_alpha_z: 0.0,
        }
    }
}

impl NvParams {
    pub fn validate(&self) -> Result<(), SpinError> {
        if !(self.d > 0.0) {
            return Err(SpinError::InvalidParameter("D must be > 0".into()));
        }
        if !(self.pi >= 0.0) {
            return Err(SpinError::InvalidParameter("Pi must be >= 0".into()));
        }
        if !(self.gamma_e > 0.0) {
            return Err(SpinError::InvalidParameter("gamma_e must be > 0".into()));
        }
        if !(self.axis_alpha_y.is_finite() && self.axis_alpha_z.is_finite()) {
            return Err(SpinError::InvalidParameter(
                "axis angles must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Transition frequencies from the ms = 0-like state (Hz).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonancePair {
    pub f_minus: f64,
    pub f_plus: f64,
    pub splitting: f64,
}

impl ResonancePair {
    /// Orders the two frequencies so `f_plus >= f_minus`.
    pub fn new(a: f64, b: f64) -> Self {
        let (f_minus, f_plus) = if a <= b { (a, b) } else { (b, a) };
        Self {
            f_minus,
            f_plus,
            splitting: f_plus - f_minus,
        }
    }
}
