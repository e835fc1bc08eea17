//! 6D recovery: ESPRIT along four tensor axes, a least-squares plane through
//! the per-antenna virtual velocities, and inversion of the plane
//! coefficients into radial and angular velocities.

use std::f64::consts::PI;

use log::debug;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::airlink::{erase_symbols, suppress_clutter, EchoTensor, Stage, SymbolFrame};
use crate::error::{Error, Result, Step};
use crate::geometry::{ArrayGeometry, SPEED_OF_LIGHT};
use crate::kinematics::{OfdmGrid, PlaneCoeffs};
use crate::subspace::{esprit_mean_removed, esprit_space_values, SnapshotMatrix, SpaceValueSet};

/// Guard on `cos(phi)` and `sin(theta)` denominators.
pub const EPSILON: f64 = 1e-3;

/// Tolerance on `|SDD| - 1` before an estimate is flagged.
const SDD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub kappa_omega: f64,
    pub kappa_psi: f64,
    pub kappa_r: f64,
    pub plane: PlaneCoeffs,
    /// RMS of `v - plane(n_x, n_z)` over the fitted samples.
    pub residual_rms: f64,
    /// MDL orders of the pitch, horizontal and distance steps.
    pub mdl_orders: [usize; 3],
    pub vv_samples: usize,
    pub vv_failures: usize,
    /// Largest virtual velocity representable without phase wrap.
    pub velocity_bound: f64,
    pub flags: Vec<String>,
}

/// Recovered parameters. Angles in radians, angular rates in rad/s.
/// Unobservable components are NaN and listed in `diagnostics.flags`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate6D {
    pub r_hat: f64,
    pub theta_hat: f64,
    pub phi_hat: f64,
    pub v_r_hat: f64,
    pub omega_theta_hat: f64,
    pub omega_phi_hat: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualVelocitySample {
    pub n_x: usize,
    pub n_z: usize,
    pub v: f64,
}

/// Angle estimate from one ESPRIT axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    pub angle: f64,
    pub kappa: f64,
    pub sdd: f64,
    /// The SDD (or its ratio with `cos phi`) left `[-1, 1]` and was clamped.
    pub clamped: bool,
    pub mdl_order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityRecovery {
    pub v_r: f64,
    pub omega_theta: f64,
    pub omega_phi: f64,
    pub flags: Vec<String>,
}

/// What the estimator needs to know about the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub grid: OfdmGrid,
    /// Apply temporal mean subtraction to EEC input.
    pub suppression: bool,
}

fn require_processed(t: &EchoTensor) -> Result<()> {
    if t.stage == Stage::Raw {
        return Err(Error::WrongStage { expected: "eec or dt_eec", got: t.stage });
    }
    Ok(())
}

fn dominant(sv: &SpaceValueSet, l: usize) -> f64 {
    if sv.count > 1 {
        debug!("MDL selected {} sources on an axis of length {l}; using the dominant one", sv.count);
    }
    sv.values[0]
}

fn run_esprit(y: &SnapshotMatrix) -> Result<SpaceValueSet> {
    match esprit_space_values(y, None) {
        Err(Error::SingularRotation { .. }) | Err(Error::ArrayTooShort { .. }) => {
            let mut sv = esprit_space_values(y, Some(1))?;
            sv.count = 1;
            Ok(sv)
        }
        other => other,
    }
}

fn sdd_from_kappa(kappa: f64, rx: &ArrayGeometry) -> f64 {
    SPEED_OF_LIGHT * kappa / (2.0 * PI * rx.f0 * rx.spacing_d)
}

/// Pitch angle from the z-axis invariance (`N_R^z x N_R^x N M` snapshots).
pub fn estimate_pitch(t: &EchoTensor, rx: &ArrayGeometry) -> Result<AngleEstimate> {
    require_processed(t)?;
    let (nx, nz, n, m) = t.dims();
    if nz < 2 {
        return Err(Error::ArrayTooShort { len: nz, order: 1 });
    }
    let y = SnapshotMatrix::from_fn(nz, nx * n * m, |z, s| {
        let (x, rest) = (s / (n * m), s % (n * m));
        t.data[(x, z, rest / m, rest % m)]
    })?;
    let sv = run_esprit(&y)?;
    let kappa = dominant(&sv, nz);
    let omega = sdd_from_kappa(kappa, rx);
    Ok(AngleEstimate {
        angle: omega.clamp(-1.0, 1.0).asin(),
        kappa,
        sdd: omega,
        clamped: omega.abs() > 1.0 + SDD_TOL,
        mdl_order: sv.mdl_order,
    })
}

/// Horizontal angle from the x-axis invariance, given the pitch estimate.
pub fn estimate_horizontal(t: &EchoTensor, rx: &ArrayGeometry, phi_hat: f64) -> Result<AngleEstimate> {
    require_processed(t)?;
    let (nx, nz, n, m) = t.dims();
    if nx < 2 {
        return Err(Error::ArrayTooShort { len: nx, order: 1 });
    }
    let cphi = phi_hat.cos();
    if cphi.abs() < EPSILON {
        return Err(Error::Unobservable("horizontal angle"));
    }
    let y = SnapshotMatrix::from_fn(nx, nz * n * m, |x, s| {
        let (z, rest) = (s / (n * m), s % (n * m));
        t.data[(x, z, rest / m, rest % m)]
    })?;
    let sv = run_esprit(&y)?;
    let kappa = dominant(&sv, nx);
    let psi = sdd_from_kappa(kappa, rx);
    let ratio = psi / cphi;
    Ok(AngleEstimate {
        angle: ratio.clamp(-1.0, 1.0).acos(),
        kappa,
        sdd: psi,
        clamped: ratio.abs() > 1.0 + SDD_TOL,
        mdl_order: sv.mdl_order,
    })
}

/// `r = -c kappa / (4 pi delta_f)` after mapping `kappa` into `(-2 pi, 0]`.
pub fn distance_from_kappa(kappa: f64, delta_f: f64) -> f64 {
    let mut k = kappa;
    if k > 1e-12 {
        k -= 2.0 * PI;
    }
    if k > 0.0 {
        k = 0.0;
    }
    -SPEED_OF_LIGHT * k / (4.0 * PI * delta_f)
}

/// Distance from the subcarrier invariance (`M x N_R N` snapshots).
/// Returns `(r_hat, kappa_r, mdl_order)`.
pub fn estimate_distance(t: &EchoTensor, grid: &OfdmGrid) -> Result<(f64, f64, usize)> {
    require_processed(t)?;
    let (nx, nz, n, m) = t.dims();
    if m < 2 {
        return Err(Error::ArrayTooShort { len: m, order: 1 });
    }
    let y = SnapshotMatrix::from_fn(m, nx * nz * n, |mm, s| {
        let (x, rest) = (s / (nz * n), s % (nz * n));
        t.data[(x, rest / n, rest % n, mm)]
    })?;
    let sv = run_esprit(&y)?;
    let kappa = dominant(&sv, m);
    Ok((distance_from_kappa(kappa, grid.delta_f), kappa, sv.mdl_order))
}

/// Per-antenna virtual velocity `c kappa / (4 pi f0 T_s)` from the symbol
/// axis of each `(N x M)` slice. Failed antennas are skipped; the second
/// value is their count.
pub fn estimate_virtual_velocities(t: &EchoTensor, grid: &OfdmGrid) -> Result<(Vec<VirtualVelocitySample>, usize)> {
    require_processed(t)?;
    let (nx, nz, n, m) = t.dims();
    if n < 2 {
        return Err(Error::TooFewSymbols { needed: 2, got: n });
    }
    let mean_removed = t.stage == Stage::DtEec;
    let scale = SPEED_OF_LIGHT / (4.0 * PI * grid.f0 * grid.symbol_interval());
    let results: Vec<Option<VirtualVelocitySample>> = (0..nx * nz)
        .into_par_iter()
        .map(|i| {
            let (x, z) = (i / nz, i % nz);
            let y = SnapshotMatrix::new(DMatrix::from_fn(n, m, |nn, mm| t.data[(x, z, nn, mm)])).ok()?;
            let sv = if mean_removed {
                esprit_mean_removed(&y)
            } else {
                esprit_space_values(&y, Some(1))
            };
            match sv {
                Ok(sv) => Some(VirtualVelocitySample { n_x: x, n_z: z, v: scale * sv.values[0] }),
                Err(e) => {
                    debug!("virtual velocity at antenna ({x}, {z}) failed: {e}");
                    None
                }
            }
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    Ok((results.into_iter().flatten().collect(), failures))
}

/// Least-squares plane `v = a + b n_x + c n_z` on centered coordinates. When
/// every sample shares one `n_x`, `b` is fixed to 0 and a line is fit.
pub fn fit_plane(samples: &[VirtualVelocitySample]) -> Result<PlaneCoeffs> {
    if samples.is_empty() {
        return Err(Error::DegenerateDesign { axis: "n_x and n_z (no samples)" });
    }
    let k = samples.len() as f64;
    let mx = samples.iter().map(|s| s.n_x as f64).sum::<f64>() / k;
    let mz = samples.iter().map(|s| s.n_z as f64).sum::<f64>() / k;
    let mv = samples.iter().map(|s| s.v).sum::<f64>() / k;
    let (mut sxx, mut szz, mut sxz, mut sxv, mut szv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let (dx, dz, dv) = (s.n_x as f64 - mx, s.n_z as f64 - mz, s.v - mv);
        sxx += dx * dx;
        szz += dz * dz;
        sxz += dx * dz;
        sxv += dx * dv;
        szv += dz * dv;
    }
    if szz == 0.0 {
        return Err(Error::DegenerateDesign { axis: "n_z" });
    }
    if sxx == 0.0 {
        let c = szv / szz;
        return Ok(PlaneCoeffs { a: mv - c * mz, b: 0.0, c });
    }
    let det = sxx * szz - sxz * sxz;
    if det <= 1e-12 * sxx * szz {
        return Err(Error::DegenerateDesign { axis: "n_x/n_z (collinear samples)" });
    }
    let b = (szz * sxv - sxz * szv) / det;
    let c = (sxx * szv - sxz * sxv) / det;
    Ok(PlaneCoeffs { a: mv - b * mx - c * mz, b, c })
}

/// Inverts the plane coefficients. `d` is the receive spacing used in `B`
/// and `C`; transmit terms use `tx.spacing_d`. A NaN `theta_hat` (horizontal
/// axis absent) leaves `omega_theta` NaN and `v_r` NaN unless `N_H^x = 1`.
pub fn recover_velocities(
    coeffs: PlaneCoeffs,
    theta_hat: f64,
    phi_hat: f64,
    tx: &ArrayGeometry,
    d: f64,
) -> VelocityRecovery {
    let mut flags = Vec::new();
    let dh = tx.spacing_d;
    let hx = (tx.nx - 1) as f64;
    let hz = (tx.nz - 1) as f64;
    let (sp, cp) = phi_hat.sin_cos();

    if cp.abs() < EPSILON {
        flags.push("pitch angular velocity unobservable (|cos phi| < eps)".to_string());
        return VelocityRecovery { v_r: f64::NAN, omega_theta: f64::NAN, omega_phi: f64::NAN, flags };
    }
    let omega_phi = -2.0 * coeffs.c / (d * cp);

    if theta_hat.is_nan() {
        flags.push("horizontal angular velocity unobservable (no horizontal axis)".to_string());
        let v_r = if tx.nx == 1 {
            coeffs.a + dh / 4.0 * hz * cp * omega_phi
        } else {
            flags.push("radial velocity needs the horizontal angle when N_H^x > 1".to_string());
            f64::NAN
        };
        return VelocityRecovery { v_r, omega_theta: f64::NAN, omega_phi, flags };
    }

    let (st, ct) = theta_hat.sin_cos();
    let omega_theta = if (cp * st).abs() < EPSILON {
        flags.push("horizontal angular velocity unobservable (|cos phi sin theta| < eps)".to_string());
        f64::NAN
    } else {
        (2.0 * coeffs.b / d - sp * ct * omega_phi) / (cp * st)
    };
    let wt_term = if omega_theta.is_nan() { 0.0 } else { dh / 4.0 * hx * cp * st * omega_theta };
    let v_r = coeffs.a + dh / 4.0 * (hz * cp - hx * sp * ct) * omega_phi - wt_term;
    VelocityRecovery { v_r, omega_theta, omega_phi, flags }
}

fn residual_rms(samples: &[VirtualVelocitySample], p: &PlaneCoeffs) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let ss: f64 = samples
        .iter()
        .map(|s| (s.v - p.eval(s.n_x as f64, s.n_z as f64)).powi(2))
        .sum();
    (ss / samples.len() as f64).sqrt()
}

/// Full pipeline. Raw tensors need their symbol frame.
pub fn estimate_6d(t: &EchoTensor, cfg: &EstimatorConfig, symbols: Option<&SymbolFrame>) -> Result<Estimate6D> {
    let (nx, nz, n, m) = t.dims();
    if (nx, nz, n, m) != (cfg.rx.nx, cfg.rx.nz, cfg.grid.n_symbols, cfg.grid.m_subcarriers) {
        return Err(Error::DimensionMismatch {
            expected: format!(
                "({}, {}, {}, {})",
                cfg.rx.nx, cfg.rx.nz, cfg.grid.n_symbols, cfg.grid.m_subcarriers
            ),
            got: format!("({nx}, {nz}, {n}, {m})"),
        });
    }

    let eec;
    let mut current = t;
    if current.stage == Stage::Raw {
        let s = symbols.ok_or_else(|| {
            Error::InvalidParameter("raw tensor needs its symbol frame".into()).at(Step::SymbolErasure)
        })?;
        eec = erase_symbols(current, s).map_err(|e| e.at(Step::SymbolErasure))?;
        current = &eec;
    }
    let dt;
    if current.stage == Stage::Eec && cfg.suppression {
        dt = suppress_clutter(current).map_err(|e| e.at(Step::ClutterSuppression))?;
        current = &dt;
    }
    let t = current;

    let mut diag = Diagnostics {
        velocity_bound: cfg.grid.unambiguous_velocity(),
        ..Default::default()
    };

    let pitch = estimate_pitch(t, &cfg.rx).map_err(|e| e.at(Step::Pitch))?;
    if pitch.clamped {
        diag.flags.push(format!("pitch SDD {} clamped into [-1, 1]", pitch.sdd));
    }
    diag.kappa_omega = pitch.kappa;
    diag.mdl_orders[0] = pitch.mdl_order;
    let phi_hat = pitch.angle;

    // theta consumes phi
    let theta_hat = if nx >= 2 {
        let h = estimate_horizontal(t, &cfg.rx, phi_hat).map_err(|e| e.at(Step::Horizontal))?;
        if h.clamped {
            diag.flags.push(format!("horizontal SDD ratio {} clamped into [-1, 1]", h.sdd / phi_hat.cos()));
        }
        diag.kappa_psi = h.kappa;
        diag.mdl_orders[1] = h.mdl_order;
        h.angle
    } else {
        diag.flags.push("horizontal angle unobservable (N_R^x = 1)".to_string());
        diag.kappa_psi = f64::NAN;
        f64::NAN
    };

    let (r_hat, kappa_r, mdl_r) = estimate_distance(t, &cfg.grid).map_err(|e| e.at(Step::Distance))?;
    diag.kappa_r = kappa_r;
    diag.mdl_orders[2] = mdl_r;

    let (samples, failures) = estimate_virtual_velocities(t, &cfg.grid).map_err(|e| e.at(Step::VirtualVelocity))?;
    diag.vv_samples = samples.len();
    diag.vv_failures = failures;
    if let Some(vmax) = samples.iter().map(|s| s.v.abs()).reduce(f64::max) {
        if vmax > 0.9 * diag.velocity_bound {
            diag.flags.push(format!("virtual velocity {vmax:.1} m/s near the wrap bound"));
        }
    }

    let plane = fit_plane(&samples).map_err(|e| e.at(Step::PlaneFit))?;
    diag.plane = plane;
    diag.residual_rms = residual_rms(&samples, &plane);

    // v_r consumes both angular rates
    let vel = recover_velocities(plane, theta_hat, phi_hat, &cfg.tx, cfg.rx.spacing_d);
    if vel.omega_phi.is_nan() {
        return Err(Error::Unobservable("pitch angular velocity").at(Step::VelocityRecovery));
    }
    diag.flags.extend(vel.flags);

    Ok(Estimate6D {
        r_hat,
        theta_hat,
        phi_hat,
        v_r_hat: vel.v_r,
        omega_theta_hat: vel.omega_theta,
        omega_phi_hat: vel.omega_phi,
        diagnostics: diag,
    })
}
