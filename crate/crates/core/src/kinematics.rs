//! Target motion across one OFDM frame and the virtual-velocity plane model.

use crate::error::{Error, Result};
use crate::geometry::{sdd_of, ArrayGeometry, SddPair, SphericalPoint, SPEED_OF_LIGHT};

/// Ground-truth 6D state of a point target at symbol 0.
///
/// Velocities are positive when the corresponding coordinate decreases:
/// `v_r > 0` closes distance, `omega_theta > 0` decreases `theta`,
/// `omega_phi > 0` decreases `phi`. Angular rates are in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub position: SphericalPoint,
    pub v_r: f64,
    pub omega_theta: f64,
    pub omega_phi: f64,
    /// Mean radar cross section (m^2) of the Swerling-I fluctuation.
    pub rcs: f64,
}

impl TargetState {
    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        if !(self.rcs.is_finite() && self.rcs > 0.0) {
            return Err(Error::InvalidParameter(format!("rcs {} must be > 0", self.rcs)));
        }
        if ![self.v_r, self.omega_theta, self.omega_phi].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("velocities must be finite".into()));
        }
        Ok(())
    }

    /// Convenience constructor taking degrees and deg/s.
    pub fn from_degrees(
        r: f64,
        theta_deg: f64,
        phi_deg: f64,
        v_r: f64,
        omega_theta_deg: f64,
        omega_phi_deg: f64,
        rcs: f64,
    ) -> Result<Self> {
        let s = TargetState {
            position: SphericalPoint::from_degrees(r, theta_deg, phi_deg)?,
            v_r,
            omega_theta: omega_theta_deg.to_radians(),
            omega_phi: omega_phi_deg.to_radians(),
            rcs,
        };
        s.validate()?;
        Ok(s)
    }
}

/// OFDM frame layout. `f_m = f0 + m * delta_f`, `T_s = 1/delta_f + t_guard`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmGrid {
    pub m_subcarriers: usize,
    pub delta_f: f64,
    pub f0: f64,
    pub n_symbols: usize,
    pub t_guard: f64,
}

impl OfdmGrid {
    /// Grid with the default guard interval `0.25 / delta_f`.
    pub fn new(m_subcarriers: usize, delta_f: f64, f0: f64, n_symbols: usize) -> Result<Self> {
        let g = OfdmGrid {
            m_subcarriers,
            delta_f,
            f0,
            n_symbols,
            t_guard: Self::default_guard(delta_f),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn default_guard(delta_f: f64) -> f64 {
        0.25 / delta_f
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_subcarriers == 0 || self.n_symbols == 0 {
            return Err(Error::InvalidParameter(
                "subcarrier and symbol counts must be >= 1".into(),
            ));
        }
        if !(self.delta_f.is_finite() && self.delta_f > 0.0) {
            return Err(Error::InvalidParameter("subcarrier spacing must be > 0".into()));
        }
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return Err(Error::InvalidParameter("carrier frequency must be > 0".into()));
        }
        if !(self.t_guard.is_finite() && self.t_guard >= 0.0) {
            return Err(Error::InvalidParameter("guard interval must be >= 0".into()));
        }
        Ok(())
    }

    pub fn symbol_interval(&self) -> f64 {
        1.0 / self.delta_f + self.t_guard
    }

    pub fn subcarrier_frequency(&self, m: usize) -> f64 {
        self.f0 + m as f64 * self.delta_f
    }

    /// Distance at which the subcarrier phase progression wraps, `c / (2 delta_f)`.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.delta_f)
    }

    /// Largest virtual velocity magnitude without Doppler phase wrap, `c / (4 f0 T_s)`.
    pub fn unambiguous_velocity(&self) -> f64 {
        SPEED_OF_LIGHT / (4.0 * self.f0 * self.symbol_interval())
    }
}

/// Coefficients of `v_vir(n_x, n_z) = a + b n_x + c n_z`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PlaneCoeffs {
    pub fn eval(&self, n_x: f64, n_z: f64) -> f64 {
        self.a + self.b * n_x + self.c * n_z
    }
}

pub fn state_at_symbol(state: &TargetState, n: usize, t_s: f64) -> Result<SphericalPoint> {
    let t = n as f64 * t_s;
    let r = state.position.r - state.v_r * t;
    if r <= 0.0 {
        return Err(Error::NonPositiveRange { r, n });
    }
    Ok(SphericalPoint {
        r,
        theta: state.position.theta - state.omega_theta * t,
        phi: state.position.phi - state.omega_phi * t,
    })
}

pub fn exact_sdd_at_symbol(state: &TargetState, n: usize, t_s: f64) -> SddPair {
    let t = n as f64 * t_s;
    sdd_of(
        state.position.theta - state.omega_theta * t,
        state.position.phi - state.omega_phi * t,
    )
}

/// First-order Taylor expansion of the SDD around symbol 0.
pub fn first_order_sdd_at_symbol(state: &TargetState, n: usize, t_s: f64) -> SddPair {
    let t = n as f64 * t_s;
    let (st, ct) = state.position.theta.sin_cos();
    let (sp, cp) = state.position.phi.sin_cos();
    SddPair {
        psi: cp * ct + sp * ct * state.omega_phi * t + cp * st * state.omega_theta * t,
        omega: sp - cp * state.omega_phi * t,
    }
}

/// Apparent radial velocity seen by receive antenna `rx_index = (n_x, n_z)`.
///
/// Transmit-side terms use `tx_geom.spacing_d`, receive-side terms use
/// `spacing_d`.
pub fn virtual_velocity(
    state: &TargetState,
    tx_geom: &ArrayGeometry,
    rx_index: (usize, usize),
    spacing_d: f64,
) -> f64 {
    let (n_x, n_z) = (rx_index.0 as f64, rx_index.1 as f64);
    let (st, ct) = state.position.theta.sin_cos();
    let (sp, cp) = state.position.phi.sin_cos();
    let dh = tx_geom.spacing_d;
    let hx = (tx_geom.nx - 1) as f64;
    let hz = (tx_geom.nz - 1) as f64;
    let (wt, wp) = (state.omega_theta, state.omega_phi);

    state.v_r - dh / 4.0 * (hz * cp - hx * sp * ct) * wp
        - spacing_d / 2.0 * (n_z * cp - n_x * sp * ct) * wp
        + dh / 4.0 * hx * cp * st * wt
        + spacing_d / 2.0 * n_x * cp * st * wt
}

pub fn plane_coeffs_forward(
    state: &TargetState,
    tx_geom: &ArrayGeometry,
    spacing_d: f64,
) -> PlaneCoeffs {
    let (st, ct) = state.position.theta.sin_cos();
    let (sp, cp) = state.position.phi.sin_cos();
    let dh = tx_geom.spacing_d;
    let hx = (tx_geom.nx - 1) as f64;
    let hz = (tx_geom.nz - 1) as f64;
    let (wt, wp) = (state.omega_theta, state.omega_phi);
    PlaneCoeffs {
        a: state.v_r - dh / 4.0 * (hz * cp - hx * sp * ct) * wp + dh / 4.0 * hx * cp * st * wt,
        b: spacing_d / 2.0 * (sp * ct * wp + cp * st * wt),
        c: -spacing_d / 2.0 * cp * wp,
    }
}
