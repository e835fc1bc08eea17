use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use isac6d::airlink::dump::{read_tensor, write_tensor};
use isac6d::airlink::erase_symbols;
use isac6d::harness::config::config_to_string;
use isac6d::harness::sweep::{errors, mix_seed, report_from_cells, run_cells, simulate_frame};
use isac6d::harness::validate::run_checks;
use isac6d::harness::{load_config, write_report, SimConfig};
use isac6d::motion::{estimate_6d, Estimate6D, EPSILON};
use isac6d::Error;

#[derive(Parser)]
#[command(name = "isac6d", version, about = "MIMO-OFDM echo simulation and 6D motion estimation")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "ISAC6D_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "ISAC6D_WORKERS", default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trial, print the estimate and dump the EEC tensor.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// SNR in dB; `inf` for no noise.
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Tensor file name inside the output directory.
        #[arg(long, default_value = "frame.i6dt")]
        dump: String,
    },
    /// Run the estimator on a dumped tensor.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Full RMSE sweep written as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Report file name inside the output directory.
        #[arg(long, default_value = "rmse.csv")]
        output: String,
    },
    /// Check the model invariants against the config.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<SimConfig, Failure> {
    load_config(path).map_err(|e| Failure::Config(e.to_string()))
}

fn print_estimate(e: &Estimate6D) {
    println!("r_m                   = {}", e.r_hat);
    println!("theta_deg             = {}", e.theta_hat.to_degrees());
    println!("phi_deg               = {}", e.phi_hat.to_degrees());
    println!("v_r_mps               = {}", e.v_r_hat);
    println!("omega_theta_degps     = {}", e.omega_theta_hat.to_degrees());
    println!("omega_phi_degps       = {}", e.omega_phi_hat.to_degrees());
    let d = &e.diagnostics;
    println!("kappa_omega           = {}", d.kappa_omega);
    println!("kappa_psi             = {}", d.kappa_psi);
    println!("kappa_r               = {}", d.kappa_r);
    println!("plane_a_b_c           = {} {} {}", d.plane.a, d.plane.b, d.plane.c);
    println!("plane_residual_rms    = {}", d.residual_rms);
    println!("mdl_orders            = {:?}", d.mdl_orders);
    println!("vv_samples_failures   = {} {}", d.vv_samples, d.vv_failures);
    println!("velocity_bound_mps    = {}", d.velocity_bound);
    for f in &d.flags {
        println!("flag                  = {f}");
    }
}

fn out_path(dir: &Path, name: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config, snr_db, trial, dump } => {
            let cfg = load(&config)?;
            let seed = mix_seed(cfg.seed, 0, trial);
            let frame = simulate_frame(&cfg, snr_db, seed)?;
            let eec = erase_symbols(&frame.raw, &frame.symbols)?;
            let path = out_path(&cli.out_dir, &dump)?;
            write_tensor(&eec, &path)?;
            info!("wrote {}", path.display());
            println!("seed                  = {seed}");
            println!("noise_sigma           = {}", frame.noise_sigma);
            println!("signal_power          = {}", frame.signal_power);
            println!("tensor                = {}", path.display());
            let e = estimate_6d(&eec, &cfg.estimator(), None)?;
            print_estimate(&e);
            let err = errors(&cfg.targets[0], &e);
            println!("errors                = {err:?}");
            Ok(())
        }
        Command::Estimate { config, tensor } => {
            let cfg = load(&config)?;
            let t = read_tensor(&tensor)?;
            println!("seed                  = {}", t.seed);
            let e = estimate_6d(&t, &cfg.estimator(), None)?;
            print_estimate(&e);
            Ok(())
        }
        Command::Sweep { config, output } => {
            let cfg = load(&config)?;
            let cells = run_cells(&cfg);
            let report = report_from_cells(&cfg, &cells);
            let path = out_path(&cli.out_dir, &output)?;
            write_report(&report, &path)?;
            let echo = format!(
                "# resolved configuration of {}\n# estimator epsilon = {EPSILON}\n{}",
                path.display(),
                config_to_string(&cfg)?
            );
            let echo_path = path.with_extension("config.toml");
            std::fs::write(&echo_path, echo).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("wrote {} and {}", path.display(), echo_path.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let results = run_checks(&cfg);
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(Failure::Runtime("invariant checks failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
