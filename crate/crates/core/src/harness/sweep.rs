//! Deterministic Monte Carlo trials and RMSE sweeps.
//!
//! Trial `i` of SNR cell `j` draws everything from a ChaCha8 stream seeded
//! with [`mix_seed`]`(config.seed, j, i)`, in a fixed order: target RCS,
//! clutter, symbols, noise.
//!
//! SNR is the mean per-entry power of the noiseless, first-target-only echo
//! tensor after the configured processing (symbol erasure, and clutter
//! suppression when enabled) divided by the noise variance. It is measured
//! on each trial's own realisation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ClutterLevel, ClutterSpec, Fluctuation, SimConfig};
use super::report::{ReportRow, RmseReport};
use crate::airlink::{
    add_noise, erase_symbols, remove_temporal_mean, synthesize_noiseless, tx_beam, EchoTensor, SymbolFrame,
};
use crate::channel::{ClutterChannel, ClutterModel, RealizedTarget, SensingChannel};
use crate::error::{Error, Result, Step};
use crate::kinematics::TargetState;
use crate::motion::{estimate_6d, Estimate6D};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: `splitmix64(splitmix64(seed ^ splitmix64(j)) ^ splitmix64(i ^ 2^63))`.
pub fn mix_seed(seed: u64, snr_index: u64, trial_index: u64) -> u64 {
    let a = splitmix64(seed ^ splitmix64(snr_index));
    splitmix64(a ^ splitmix64(trial_index ^ (1 << 63)))
}

/// One synthesised frame with everything needed to estimate or dump it.
#[derive(Debug, Clone)]
pub struct SimulatedFrame {
    pub raw: EchoTensor,
    pub symbols: SymbolFrame,
    pub realized: Vec<RealizedTarget>,
    pub noise_sigma: f64,
    /// Processed first-target power the SNR refers to.
    pub signal_power: f64,
}

pub fn clutter_model(cfg: &SimConfig) -> Result<ClutterModel> {
    Ok(match &cfg.clutter {
        ClutterSpec::None => ClutterModel::None,
        ClutterSpec::Explicit(s) => ClutterModel::Explicit(s.clone()),
        ClutterSpec::Gaussian(ClutterLevel::BetaC(b)) => ClutterModel::Gaussian { beta_c: *b },
        ClutterSpec::Gaussian(ClutterLevel::RelativeDb(db)) => {
            // raw per-entry powers: target alpha^2 rho P N_H at the beam
            // peak, clutter beta_c^2 rho P
            let t = RealizedTarget::nominal(cfg.targets[0]);
            let alpha = t.alpha(cfg.grid.f0)?;
            ClutterModel::Gaussian {
                beta_c: alpha * (cfg.hu.len() as f64 * 10f64.powf(db / 10.0)).sqrt(),
            }
        }
    })
}

pub fn simulate_frame(cfg: &SimConfig, snr_db: f64, trial_seed: u64) -> Result<SimulatedFrame> {
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("SNR is NaN".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let realized: Vec<RealizedTarget> = cfg
        .targets
        .iter()
        .map(|t| match cfg.fluctuation {
            Fluctuation::Swerling1 => RealizedTarget::draw(*t, &mut rng),
            Fluctuation::None => RealizedTarget::nominal(*t),
        })
        .collect();
    let model = clutter_model(cfg)?;
    let clutter = match model {
        ClutterModel::None => None,
        ref m => Some(ClutterChannel::realize(m, &cfg.ru, &cfg.hu, &cfg.grid, &mut rng)?),
    };
    let symbols = SymbolFrame::qpsk(cfg.grid.n_symbols, cfg.grid.m_subcarriers, &mut rng);
    let beam = tx_beam(&cfg.hu, cfg.beam.aim.0, cfg.beam.aim.1, cfg.beam.power_w, cfg.beam.rho)?;

    let full = SensingChannel::new(cfg.hu, cfg.ru, cfg.grid, realized.clone(), cfg.channel_mode, clutter);
    let mut raw = synthesize_noiseless(&full, &cfg.ru, &cfg.grid, &beam, &symbols)?;
    raw.seed = trial_seed;

    let noise_sigma = if snr_db == f64::INFINITY {
        0.0
    } else {
        f64::NAN
    };
    let mut frame = SimulatedFrame { raw, symbols, realized, noise_sigma, signal_power: f64::NAN };

    // reference power of the first target alone after processing
    let reference = if frame.realized.len() == 1 && full.clutter.is_none() {
        erase_symbols(&frame.raw, &frame.symbols)?
    } else {
        let one = SensingChannel::new(cfg.hu, cfg.ru, cfg.grid, vec![frame.realized[0]], cfg.channel_mode, None);
        erase_symbols(&synthesize_noiseless(&one, &cfg.ru, &cfg.grid, &beam, &frame.symbols)?, &frame.symbols)?
    };
    frame.signal_power = if cfg.suppression {
        let d = remove_temporal_mean(&reference.data);
        d.iter().map(|v| v.norm_sqr()).sum::<f64>() / d.len() as f64
    } else {
        reference.mean_power()
    };

    if snr_db != f64::INFINITY {
        if !(frame.signal_power > 0.0) {
            return Err(Error::InvalidParameter(
                "target has no power after processing; SNR is undefined".into(),
            ));
        }
        let sigma = (frame.signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
        frame.noise_sigma = sigma;
        add_noise(&mut frame.raw, sigma, &mut rng);
    }
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub step: Option<Step>,
    pub message: String,
}

pub type TrialOutcome = std::result::Result<Estimate6D, TrialFailure>;

impl From<Error> for TrialFailure {
    fn from(e: Error) -> Self {
        TrialFailure { step: e.step(), message: e.to_string() }
    }
}

/// Synthesise and estimate one frame. Failures are returned, not raised.
pub fn run_trial(cfg: &SimConfig, snr_db: f64, trial_seed: u64) -> TrialOutcome {
    let frame = simulate_frame(cfg, snr_db, trial_seed)?;
    Ok(estimate_6d(&frame.raw, &cfg.estimator(), Some(&frame.symbols))?)
}

/// Signed errors in report units: m, deg, deg, m/s, deg/s, deg/s.
pub fn errors(truth: &TargetState, e: &Estimate6D) -> [f64; 6] {
    [
        e.r_hat - truth.position.r,
        (e.theta_hat - truth.position.theta).to_degrees(),
        (e.phi_hat - truth.position.phi).to_degrees(),
        e.v_r_hat - truth.v_r,
        (e.omega_theta_hat - truth.omega_theta).to_degrees(),
        (e.omega_phi_hat - truth.omega_phi).to_degrees(),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub trials: usize,
    pub failures: usize,
    /// `None` when no successful trial produced a finite value.
    pub rmse: [Option<f64>; 6],
    pub mean_error: [Option<f64>; 6],
}

/// RMSE and mean signed error per parameter over the successful trials,
/// skipping non-finite (unobservable) components.
pub fn summarize(truth: &TargetState, outcomes: &[TrialOutcome]) -> ErrorSummary {
    let mut sq = [0.0f64; 6];
    let mut sum = [0.0f64; 6];
    let mut count = [0usize; 6];
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok(e) => {
                for (k, err) in errors(truth, e).into_iter().enumerate() {
                    if err.is_finite() {
                        sq[k] += err * err;
                        sum[k] += err;
                        count[k] += 1;
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    let per = |f: &dyn Fn(usize) -> f64| -> [Option<f64>; 6] {
        std::array::from_fn(|k| if count[k] == 0 { None } else { Some(f(k)) })
    };
    ErrorSummary {
        trials: outcomes.len(),
        failures,
        rmse: per(&|k| (sq[k] / count[k] as f64).sqrt()),
        mean_error: per(&|k| sum[k] / count[k] as f64),
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub snr_db: f64,
    pub seeds: Vec<u64>,
    pub outcomes: Vec<TrialOutcome>,
}

/// Every trial of every SNR cell, in `(snr index, trial index)` order
/// regardless of how many workers ran them.
pub fn run_cells(cfg: &SimConfig) -> Vec<CellResult> {
    let jobs: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|j| (0..cfg.trials).map(move |i| (j, i)))
        .collect();
    let outcomes: Vec<(u64, TrialOutcome)> = jobs
        .par_iter()
        .map(|&(j, i)| {
            let seed = mix_seed(cfg.seed, j as u64, i as u64);
            (seed, run_trial(cfg, cfg.snr_db[j], seed))
        })
        .collect();
    let mut it = outcomes.into_iter();
    cfg.snr_db
        .iter()
        .map(|&snr| {
            let (seeds, outcomes) = it.by_ref().take(cfg.trials).unzip();
            CellResult { snr_db: snr, seeds, outcomes }
        })
        .collect()
}

pub fn report_from_cells(cfg: &SimConfig, cells: &[CellResult]) -> RmseReport {
    let truth = cfg.targets[0];
    RmseReport {
        rows: cells
            .iter()
            .map(|c| {
                let s = summarize(&truth, &c.outcomes);
                ReportRow { snr_db: c.snr_db, trials: s.trials, rmse: s.rmse, failures: s.failures, seed: cfg.seed }
            })
            .collect(),
    }
}

pub fn run_sweep(cfg: &SimConfig) -> RmseReport {
    report_from_cells(cfg, &run_cells(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ConfigFile;
    use crate::motion::Diagnostics;
    use std::collections::HashSet;

    fn small() -> SimConfig {
        let mut f = ConfigFile::desk_default();
        f.hu.nx = 4;
        f.hu.nz = 4;
        f.ru.nx = 8;
        f.ru.nz = 8;
        f.grid.symbols = 16;
        f.grid.subcarriers = 16;
        f.sweep.trials = Some(4);
        f.sweep.snr_db = Some(vec![10.0, f64::INFINITY]);
        f.resolve().unwrap()
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = HashSet::new();
        for j in 0..20 {
            for i in 0..500 {
                assert!(seen.insert(mix_seed(99, j, i)));
            }
        }
        assert_ne!(mix_seed(1, 0, 0), mix_seed(2, 0, 0));
        assert_ne!(mix_seed(1, 0, 1), mix_seed(1, 1, 0));
    }

    #[test]
    fn trial_is_deterministic() {
        let c = small();
        let a = run_trial(&c, 10.0, 1234).unwrap();
        let b = run_trial(&c, 10.0, 1234).unwrap();
        assert_eq!(a, b);
        let other = run_trial(&c, 10.0, 1235).unwrap();
        assert_ne!(a.r_hat, other.r_hat);
    }

    #[test]
    fn snr_definition_holds() {
        let c = small();
        let f = simulate_frame(&c, 7.0, 5).unwrap();
        let ratio = f.signal_power / (f.noise_sigma * f.noise_sigma);
        assert!((10.0 * ratio.log10() - 7.0).abs() < 1e-9);
        let clean = simulate_frame(&c, f64::INFINITY, 5).unwrap();
        assert_eq!(clean.noise_sigma, 0.0);
    }

    #[test]
    fn noiseless_trial_meets_tolerances() {
        let c = small();
        let e = run_trial(&c, f64::INFINITY, 3).unwrap();
        let err = errors(&c.targets[0], &e);
        let tol = [0.1, 0.05, 0.05, 0.05, 0.5, 0.5];
        for k in 0..6 {
            assert!(err[k].abs() <= tol[k], "{k}: {}", err[k]);
        }
    }

    #[test]
    fn rmse_of_constant_error() {
        let truth = TargetState::from_degrees(100.0, 80.0, 10.0, 5.0, 1.0, 2.0, 1.0).unwrap();
        let e = Estimate6D {
            r_hat: 100.0 - 0.3,
            theta_hat: truth.position.theta + 0.2f64.to_radians(),
            phi_hat: truth.position.phi,
            v_r_hat: 5.0 + 0.125,
            omega_theta_hat: f64::NAN,
            omega_phi_hat: truth.omega_phi - 4f64.to_radians(),
            diagnostics: Diagnostics::default(),
        };
        let outcomes: Vec<TrialOutcome> = vec![
            Ok(e.clone()),
            Ok(e.clone()),
            Err(TrialFailure { step: Some(Step::Pitch), message: "x".into() }),
        ];
        let s = summarize(&truth, &outcomes);
        assert_eq!((s.trials, s.failures), (3, 1));
        let r = s.rmse.map(|v| v.map(|x| (x * 1e9).round() / 1e9));
        assert_eq!(r, [Some(0.3), Some(0.2), Some(0.0), Some(0.125), None, Some(4.0)]);
        assert!((s.mean_error[0].unwrap() + 0.3).abs() < 1e-12);

        let all_failed = summarize(&truth, &outcomes[2..]);
        assert_eq!(all_failed.rmse, [None; 6]);
    }

    #[test]
    fn sweep_independent_of_worker_count() {
        let c = small();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_sweep(&c));
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_sweep(&c));
        assert_eq!(one, many);
        assert_eq!(one.rows.len(), 2);
        let clean = &one.rows[1];
        assert!(clean.rmse[0].unwrap() < 0.1 && clean.rmse[3].unwrap() < 0.05);
    }
}
