//! Magnetic field models for the magnet tool.
//!
//! The hollow cylinder is the superposition of an outer solid cylinder and
//! an inner solid cylinder of opposite magnetisation, each evaluated in closed
//! form. Far from the magnet both reduce to the point-dipole field, which is
//! also inverted exactly to find the dipole orientation that produces a given
//! field at a given displacement.

mod cylinder;
mod dipole;
pub mod elliptic;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Vec3;

pub use cylinder::{cylinder_field, solid_cylinder_field_local};
pub use dipole::{dipole_field, equivalent_dipole, inverse_dipole};

/// Vacuum permeability (T·m/A), pre-2019 SI exact value.
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Points within this distance of magnet material count as inside it (m).
pub const MATERIAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FieldError {
    #[error("observer coincides with the dipole (|r| = 0)")]
    ZeroDistance,
    #[error("observer lies inside magnet material")]
    ObserverInsideMaterial,
    #[error("invalid magnet specification: {0}")]
    InvalidMagnet(String),
}

/// Axially magnetised (optionally hollow) cylindrical permanent magnet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetSpec {
    pub outer_radius: f64,
    /// Zero for a solid cylinder.
    pub inner_radius: f64,
    pub length: f64,
    /// Magnetisation along the cylinder axis (A/m).
    pub magnetisation: f64,
}

impl MagnetSpec {
    pub fn new(
        outer_radius: f64,
        inner_radius: f64,
        length: f64,
        magnetisation: f64,
    ) -> Result<Self, FieldError> {
        let spec = Self {
            outer_radius,
            inner_radius,
            length,
            magnetisation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_remanence(
        outer_radius: f64,
        inner_radius: f64,
        length: f64,
        remanence: f64,
    ) -> Result<Self, FieldError> {
        Self::new(outer_radius, inner_radius, length, remanence / MU_0)
    }

    /// Nominal NdFeB ring magnet: Ø20 mm × 20 mm with a Ø4 mm bore, Br ≈ 1.3 T.
    /// Gives roughly 10 mT on-axis at 5 cm. Not the hardware of any particular setup.
    pub fn nominal() -> Self {
        Self {
            outer_radius: 0.010,
            inner_radius: 0.002,
            length: 0.020,
            magnetisation: 1.3 / MU_0,
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |m: &str| Err(FieldError::InvalidMagnet(m.into()));
        let all = [
            self.outer_radius,
            self.inner_radius,
            self.length,
            self.magnetisation,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite value");
        }
        if !(self.inner_radius >= 0.0 && self.inner_radius < self.outer_radius) {
            return bad("require 0 <= inner_radius < outer_radius");
        }
        if !(self.length > 0.0) {
            return bad("length must be > 0");
        }
        if !(self.magnetisation > 0.0) {
            return bad("magnetisation must be > 0");
        }
        Ok(())
    }

    pub fn remanence(&self) -> f64 {
        MU_0 * self.magnetisation
    }

    pub fn outer_diameter(&self) -> f64 {
        2.0 * self.outer_radius
    }

    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * (self.outer_radius.powi(2) - self.inner_radius.powi(2)) * self.length
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            magnetisation: self.magnetisation * factor,
            ..*self
        }
    }
}

/// Magnetic flux density (T) in the world frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldVector {
    pub const ZERO: FieldVector = FieldVector {
        bx: 0.0,
        by: 0.0,
        bz: 0.0,
    };

    pub fn new(bx: f64, by: f64, bz: f64) -> Self {
        Self { bx, by, bz }
    }

    pub fn from_millitesla(bx: f64, by: f64, bz: f64) -> Self {
        Self::new(bx * 1e-3, by * 1e-3, bz * 1e-3)
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.bx, self.by, self.bz)
    }

    pub fn to_millitesla(&self) -> [f64; 3] {
        [self.bx * 1e3, self.by * 1e3, self.bz * 1e3]
    }

    pub fn norm(&self) -> f64 {
        self.as_vec().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.bx.is_finite() && self.by.is_finite() && self.bz.is_finite()
    }
}

impl From<Vec3> for FieldVector {
    fn from(v: Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

impl Add for FieldVector {
    type Output = FieldVector;
    fn add(self, o: FieldVector) -> FieldVector {
        FieldVector::new(self.bx + o.bx, self.by + o.by, self.bz + o.bz)
    }
}

impl Sub for FieldVector {
    type Output = FieldVector;
    fn sub(self, o: FieldVector) -> FieldVector {
        FieldVector::new(self.bx - o.bx, self.by - o.by, self.bz - o.bz)
    }
}

impl Neg for FieldVector {
    type Output = FieldVector;
    fn neg(self) -> FieldVector {
        FieldVector::new(-self.bx, -self.by, -self.bz)
    }
}

impl Mul<f64> for FieldVector {
    type Output = FieldVector;
    fn mul(self, k: f64) -> FieldVector {
        FieldVector::new(self.bx * k, self.by * k, self.bz * k)
    }
}

/// Magnetic dipole moment (A·m²).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DipoleMoment {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl DipoleMoment {
    pub fn new(mx: f64, my: f64, mz: f64) -> Self {
        Self { mx, my, mz }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.mx, self.my, self.mz)
    }

    pub fn magnitude(&self) -> f64 {
        self.as_vec().norm()
    }
}

impl From<Vec3> for DipoleMoment {
    fn from(v: Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}
