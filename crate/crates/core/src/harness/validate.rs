//! Quick invariant checks against a loaded config, run by `isac6d validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::sweep::{errors, mix_seed, run_trial, simulate_frame};
use crate::airlink::{erase_symbols, suppress_clutter, Stage};
use crate::channel::{exact_path_channel, factored_channel, max_phase_discrepancy, ChannelMode, RealizedTarget};
use crate::geometry::SphericalPoint;
use crate::kinematics::{plane_coeffs_forward, TargetState};
use crate::motion::recover_velocities;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Tolerances of the noiseless recovery check: m, deg, deg, m/s, deg/s, deg/s.
pub const NOISELESS_TOLERANCES: [f64; 6] = [0.1, 0.05, 0.05, 0.05, 0.5, 0.5];

pub fn run_checks(cfg: &SimConfig) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let seed = mix_seed(cfg.seed, u64::MAX, 0);

    out.push(match run_trial(cfg, f64::INFINITY, seed) {
        Ok(e) => {
            let err = errors(&cfg.targets[0], &e);
            let ok = err
                .iter()
                .zip(NOISELESS_TOLERANCES)
                .all(|(e, t)| e.is_nan() || e.abs() <= t);
            check(
                "noiseless recovery",
                ok,
                format!(
                    "errors r={:.3e} m theta={:.3e} deg phi={:.3e} deg v_r={:.3e} m/s w_theta={:.3e} deg/s w_phi={:.3e} deg/s",
                    err[0], err[1], err[2], err[3], err[4], err[5]
                ),
            )
        }
        Err(f) => check("noiseless recovery", false, f.message),
    });

    out.push(match (run_trial(cfg, 10.0, seed), run_trial(cfg, 10.0, seed)) {
        (Ok(a), Ok(b)) => check("trial determinism", a == b, "same seed twice at 10 dB".into()),
        (Err(a), Err(b)) => check("trial determinism", a == b, format!("both failed: {}", a.message)),
        _ => check("trial determinism", false, "one run failed, the other did not".into()),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.ru.spacing_d;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let st = TargetState {
            position: SphericalPoint {
                r: 100.0,
                theta: rng.random_range(0.1..3.04),
                phi: rng.random_range(-1.4..1.4),
            },
            v_r: rng.random_range(-50.0..50.0),
            omega_theta: rng.random_range(-0.5..0.5),
            omega_phi: rng.random_range(-0.5..0.5),
            rcs: 1.0,
        };
        let r = recover_velocities(plane_coeffs_forward(&st, &cfg.hu, d), st.position.theta, st.position.phi, &cfg.hu, d);
        for (got, want) in [(r.v_r, st.v_r), (r.omega_theta, st.omega_theta), (r.omega_phi, st.omega_phi)] {
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    out.push(check("plane forward/inverse identity", worst <= 1e-9, format!("worst relative error {worst:.2e}")));

    let t0 = cfg.targets[0];
    let mut phases = Vec::new();
    for r in [50.0, 100.0, 200.0, 400.0] {
        let mut t = t0;
        t.position.r = r;
        let rt = RealizedTarget::nominal(t);
        let pair = exact_path_channel(&cfg.hu, &cfg.ru, &rt, 0, 0, &cfg.grid)
            .and_then(|e| Ok((e, factored_channel(&cfg.hu, &cfg.ru, &rt, 0, 0, &cfg.grid, ChannelMode::SixD)?)));
        match pair {
            Ok((e, f)) => phases.push(max_phase_discrepancy(&e.entries, &f.entries)),
            Err(_) => phases.push(f64::NAN),
        }
    }
    let monotone = phases.windows(2).all(|w| w[1] < w[0]);
    out.push(check("far-field convergence", monotone, format!("max phase error at 50/100/200/400 m: {phases:.4?} rad")));

    out.push(match simulate_frame(cfg, 10.0, seed) {
        Ok(f) => {
            let once = erase_symbols(&f.raw, &f.symbols).and_then(|e| suppress_clutter(&e));
            match once {
                Ok(once) => {
                    let mut again = once.clone();
                    again.stage = Stage::Eec;
                    let twice = suppress_clutter(&again).expect("stage set");
                    let diff = twice
                        .data
                        .iter()
                        .zip(once.data.iter())
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                    let scale = once.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    check("suppression idempotence", diff <= 1e-12 * scale.max(1e-300), format!("max difference {diff:.2e}"))
                }
                Err(e) => check("suppression idempotence", false, e.to_string()),
            }
        }
        Err(e) => check("suppression idempotence", false, e.to_string()),
    });

    out
}
