//! End-to-end properties of the estimation pipeline.

use isac6d::harness::config::{ConfigFile, ModeName};
use isac6d::harness::sweep::{errors, mix_seed, run_cells, run_trial, simulate_frame};
use isac6d::motion::estimate_6d;

fn mean_abs_errors(file: &ConfigFile, snrs: &[f64], trials: usize) -> Vec<[f64; 6]> {
    let mut f = file.clone();
    f.sweep.snr_db = Some(snrs.to_vec());
    f.sweep.trials = Some(trials);
    let cfg = f.resolve().unwrap();
    run_cells(&cfg)
        .iter()
        .map(|c| {
            let mut acc = [0.0; 6];
            let ok: Vec<_> = c.outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
            assert_eq!(ok.len(), trials, "trials failed at {} dB", c.snr_db);
            for e in ok {
                for (a, err) in acc.iter_mut().zip(errors(&cfg.targets[0], e)) {
                    *a += err.abs() / trials as f64;
                }
            }
            acc
        })
        .collect()
}

#[test]
fn noiseless_plane_residual_is_tiny() {
    let cfg = ConfigFile::desk_default().resolve().unwrap();
    for trial in 0..4 {
        let e = run_trial(&cfg, f64::INFINITY, mix_seed(cfg.seed, 0, trial)).unwrap();
        assert!(e.diagnostics.residual_rms < 1e-6, "residual {}", e.diagnostics.residual_rms);
        assert_eq!(e.diagnostics.vv_failures, 0);
    }
}

#[test]
fn raw_and_erased_inputs_agree() {
    let cfg = ConfigFile::desk_default().resolve().unwrap();
    let frame = simulate_frame(&cfg, 15.0, 77).unwrap();
    let from_raw = estimate_6d(&frame.raw, &cfg.estimator(), Some(&frame.symbols)).unwrap();
    let eec = isac6d::airlink::erase_symbols(&frame.raw, &frame.symbols).unwrap();
    let from_eec = estimate_6d(&eec, &cfg.estimator(), None).unwrap();
    assert_eq!(from_raw, from_eec);
}

#[test]
fn four_d_channel_has_no_rotation() {
    let mut f = ConfigFile::desk_default();
    f.channel_mode = Some(ModeName::FourD);
    let cfg = f.resolve().unwrap();
    let e = run_trial(&cfg, f64::INFINITY, 3).unwrap();
    assert!(e.omega_theta_hat.abs().to_degrees() < 0.5);
    assert!(e.omega_phi_hat.abs().to_degrees() < 0.5);
    assert!((e.v_r_hat - cfg.targets[0].v_r).abs() < 0.05);
}

#[test]
fn monotone_noise_response() {
    let rows = mean_abs_errors(&ConfigFile::desk_default(), &[0.0, 10.0, 20.0], 50);
    let mut inversions = Vec::new();
    for k in 0..6 {
        for w in rows.windows(2) {
            if w[1][k] > w[0][k] {
                inversions.push((k, (w[1][k] - w[0][k]) / w[0][k]));
            }
        }
    }
    println!("mean |error| per SNR: {rows:?}");
    assert!(inversions.len() <= 1 && inversions.iter().all(|&(_, r)| r <= 0.10), "inversions {inversions:?}");
}

/// Mean signed error below a tenth of the RMSE for each parameter at 20 dB.
#[test]
fn unbiasedness_proxy() {
    let mut f = ConfigFile::desk_default();
    f.sweep.snr_db = Some(vec![20.0]);
    f.sweep.trials = Some(200);
    let cfg = f.resolve().unwrap();
    let cells = run_cells(&cfg);
    let s = isac6d::harness::summarize(&cfg.targets[0], &cells[0].outcomes);
    assert_eq!(s.failures, 0);
    let mut bad = Vec::new();
    for k in 0..6 {
        let (mean, rmse) = (s.mean_error[k].unwrap(), s.rmse[k].unwrap());
        println!("param {k}: mean {mean:.3e} rmse {rmse:.3e} ratio {:.3}", mean.abs() / rmse);
        if mean.abs() >= rmse / 10.0 {
            bad.push(k);
        }
    }
    assert!(bad.is_empty(), "biased parameters {bad:?}");
}
