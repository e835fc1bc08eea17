//! Coordinate transforms, spatial-domain directions and UPA steering vectors.
//!
//! Antennas of a planar array are addressed either by their `(n_x, n_z)` pair
//! or by a flat index. The flat index is always `n = n_x * nz + n_z`, which is
//! the ordering produced by the Kronecker product `a_x ⊗ a_z`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Position in the base-station frame: distance, horizontal angle and pitch
/// angle (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        let p = SphericalPoint { r, theta, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn from_degrees(r: f64, theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(r, theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        const SLACK: f64 = 1e-12;
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidParameter(format!("distance {} must be >= 0", self.r)));
        }
        if !(-SLACK..=PI + SLACK).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!(
                "horizontal angle {} rad outside [0, pi]",
                self.theta
            )));
        }
        if !(-PI / 2.0 - SLACK..=PI / 2.0 + SLACK).contains(&self.phi) {
            return Err(Error::InvalidParameter(format!(
                "pitch angle {} rad outside [-pi/2, pi/2]",
                self.phi
            )));
        }
        Ok(())
    }

    pub fn sdd(&self) -> SddPair {
        sdd_of(self.theta, self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub fn distance_to(&self, other: &CartesianPoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Spatial-domain direction: `psi = cos(phi) cos(theta)`, `omega = sin(phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SddPair {
    pub psi: f64,
    pub omega: f64,
}

/// Uniform planar array in the `y = 0` plane with its reference element at
/// the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub nx: usize,
    pub nz: usize,
    pub spacing_d: f64,
    pub f0: f64,
}

impl ArrayGeometry {
    pub fn new(nx: usize, nz: usize, spacing_d: f64, f0: f64) -> Result<Self> {
        let g = ArrayGeometry { nx, nz, spacing_d, f0 };
        g.validate()?;
        Ok(g)
    }

    /// Array with half-wavelength spacing at `f0`.
    pub fn half_wavelength(nx: usize, nz: usize, f0: f64) -> Result<Self> {
        Self::new(nx, nz, SPEED_OF_LIGHT / (2.0 * f0), f0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::InvalidParameter(format!(
                "array dimensions {}x{} must be >= 1",
                self.nx, self.nz
            )));
        }
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return Err(Error::InvalidParameter(format!("carrier {} Hz must be > 0", self.f0)));
        }
        let half_lambda = self.wavelength() / 2.0;
        if !(self.spacing_d > 0.0 && self.spacing_d <= half_lambda * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "element spacing {} m violates the half-wavelength bound 0 < d <= lambda/2 = {} m",
                self.spacing_d, half_lambda
            )));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f0
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, n_x: usize, n_z: usize) -> usize {
        debug_assert!(n_x < self.nx && n_z < self.nz);
        n_x * self.nz + n_z
    }

    pub fn split_index(&self, flat: usize) -> (usize, usize) {
        (flat / self.nz, flat % self.nz)
    }

    pub fn element_position(&self, n_x: usize, n_z: usize) -> CartesianPoint {
        CartesianPoint {
            x: n_x as f64 * self.spacing_d,
            y: 0.0,
            z: n_z as f64 * self.spacing_d,
        }
    }

    /// Phase increment between adjacent elements for a unit spatial direction.
    pub fn phase_per_unit_direction(&self) -> f64 {
        2.0 * PI * self.f0 * self.spacing_d / SPEED_OF_LIGHT
    }
}

pub fn spherical_to_cartesian(p: SphericalPoint) -> CartesianPoint {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    CartesianPoint {
        x: p.r * cp * ct,
        y: p.r * cp * st,
        z: p.r * sp,
    }
}

/// Inverse of [`spherical_to_cartesian`] for points with `y >= 0`.
pub fn cartesian_to_spherical(c: CartesianPoint) -> SphericalPoint {
    let r = c.norm();
    if r == 0.0 {
        return SphericalPoint { r: 0.0, theta: 0.0, phi: 0.0 };
    }
    let phi = (c.z / r).clamp(-1.0, 1.0).asin();
    let theta = c.y.atan2(c.x);
    SphericalPoint { r, theta, phi }
}

pub fn sdd_of(theta: f64, phi: f64) -> SddPair {
    SddPair {
        psi: phi.cos() * theta.cos(),
        omega: phi.sin(),
    }
}

/// Horizontal angle from a horizontal SDD and a pitch angle. The ratio is
/// clamped into `[-1, 1]` before `acos`.
pub fn theta_from_psi(psi: f64, phi: f64) -> f64 {
    (psi / phi.cos()).clamp(-1.0, 1.0).acos()
}

/// `[1, e^{j k v}, ..., e^{j k v (count-1)}]` with `k = 2 pi f0 d / c`.
pub fn axis_steering(count: usize, f0: f64, d: f64, value: f64) -> Vec<Complex64> {
    let step = 2.0 * PI * f0 * d * value / SPEED_OF_LIGHT;
    (0..count)
        .map(|i| Complex64::from_polar(1.0, step * i as f64))
        .collect()
}

/// Kronecker product of the x-axis steering (psi) with the z-axis steering
/// (omega), laid out by [`ArrayGeometry::flat_index`].
pub fn upa_steering(geom: &ArrayGeometry, sdd: SddPair) -> Vec<Complex64> {
    let ax = axis_steering(geom.nx, geom.f0, geom.spacing_d, sdd.psi);
    let az = axis_steering(geom.nz, geom.f0, geom.spacing_d, sdd.omega);
    let mut out = Vec::with_capacity(geom.len());
    for x in &ax {
        for z in &az {
            out.push(x * z);
        }
    }
    out
}
