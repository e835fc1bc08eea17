//! TOML experiment configuration.
//!
//! Units are SI with angles in degrees and angular rates in deg/s; they are
//! converted to radians when the [`SimConfig`] is built. Required keys:
//! `seed`, `grid.{f0_hz, delta_f_hz, subcarriers, symbols}`,
//! `hu.{nx, nz}`, `ru.{nx, nz}` and at least one `[[targets]]` entry with
//! `r_m, theta_deg, phi_deg, v_r_mps, omega_theta_degps, omega_phi_degps`.
//! Everything else has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMode, Scatterer};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, SphericalPoint, SPEED_OF_LIGHT};
use crate::kinematics::{OfdmGrid, TargetState};
use crate::motion::EstimatorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    SixD,
    FourD,
    Exact,
}

impl From<ModeName> for ChannelMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::SixD => ChannelMode::SixD,
            ModeName::FourD => ChannelMode::FourD,
            ModeName::Exact => ChannelMode::Exact,
        }
    }
}

/// RCS fluctuation across frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Fluctuation {
    #[default]
    Swerling1,
    /// `sigma^2` fixed at the mean RCS.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub f0_hz: f64,
    pub delta_f_hz: f64,
    pub subcarriers: usize,
    pub symbols: usize,
    /// Defaults to `0.25 / delta_f`.
    pub t_guard_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub nx: usize,
    pub nz: usize,
    /// Defaults to half a wavelength at `f0`.
    pub spacing_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub power_w: Option<f64>,
    pub rho: Option<f64>,
    /// Aim direction; both default to the first target's true direction.
    pub aim_theta_deg: Option<f64>,
    pub aim_phi_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub r_m: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub v_r_mps: f64,
    pub omega_theta_degps: f64,
    pub omega_phi_degps: f64,
    pub rcs_m2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSection {
    pub r_m: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub rcs_m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClutterKind {
    #[default]
    None,
    Gaussian,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ClutterSection {
    #[serde(default)]
    pub kind: ClutterKind,
    /// Absolute power regulation factor of the Gaussian model.
    pub beta_c: Option<f64>,
    /// Alternative to `beta_c`: clutter-to-target per-entry power ratio of
    /// the raw echo, in dB, relative to the first target at its mean RCS.
    pub clutter_to_target_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scatterers: Vec<ScattererSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// May contain `inf` for a noiseless cell.
    pub snr_db: Option<Vec<f64>>,
    pub trials: Option<usize>,
}

/// On-disk layout of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub suppression: Option<bool>,
    pub channel_mode: Option<ModeName>,
    pub fluctuation: Option<Fluctuation>,
    pub grid: GridSection,
    pub hu: ArraySection,
    pub ru: ArraySection,
    #[serde(default)]
    pub beam: BeamSection,
    pub targets: Vec<TargetSection>,
    #[serde(default)]
    pub clutter: ClutterSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    pub power_w: f64,
    pub rho: f64,
    /// `(theta, phi)` in radians.
    pub aim: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClutterLevel {
    BetaC(f64),
    RelativeDb(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClutterSpec {
    None,
    Gaussian(ClutterLevel),
    Explicit(Vec<Scatterer>),
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub suppression: bool,
    pub channel_mode: ChannelMode,
    pub fluctuation: Fluctuation,
    pub grid: OfdmGrid,
    pub hu: ArrayGeometry,
    pub ru: ArrayGeometry,
    pub beam: BeamSpec,
    pub targets: Vec<TargetState>,
    pub clutter: ClutterSpec,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// The file form with defaults made explicit; what [`save_config`] writes.
    pub resolved: ConfigFile,
}

fn cfg_err(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {e}"))
}

impl ConfigFile {
    /// Desk-scale baseline: 8x8 transmit, 16x16 receive, N = M = 32.
    pub fn desk_default() -> Self {
        ConfigFile {
            seed: 20240601,
            suppression: None,
            channel_mode: None,
            fluctuation: None,
            grid: GridSection { f0_hz: 28e9, delta_f_hz: 480e3, subcarriers: 32, symbols: 32, t_guard_s: None },
            hu: ArraySection { nx: 8, nz: 8, spacing_m: None },
            ru: ArraySection { nx: 16, nz: 16, spacing_m: None },
            beam: BeamSection::default(),
            targets: vec![TargetSection {
                r_m: 120.0,
                theta_deg: 75.0,
                phi_deg: 20.0,
                v_r_mps: 15.0,
                omega_theta_degps: 2.0,
                omega_phi_degps: 8.0,
                rcs_m2: None,
            }],
            clutter: ClutterSection::default(),
            sweep: SweepSection::default(),
        }
    }

    /// Copy with every optional field set to its effective value.
    pub fn with_defaults(&self) -> Self {
        let mut f = self.clone();
        let half = SPEED_OF_LIGHT / (2.0 * f.grid.f0_hz);
        f.suppression.get_or_insert(true);
        f.channel_mode.get_or_insert(ModeName::SixD);
        f.fluctuation.get_or_insert(Fluctuation::Swerling1);
        f.grid.t_guard_s.get_or_insert(OfdmGrid::default_guard(f.grid.delta_f_hz));
        f.hu.spacing_m.get_or_insert(half);
        f.ru.spacing_m.get_or_insert(half);
        f.beam.power_w.get_or_insert(1.0);
        f.beam.rho.get_or_insert(1.0);
        if let Some(t) = f.targets.first() {
            let (th, ph) = (t.theta_deg, t.phi_deg);
            f.beam.aim_theta_deg.get_or_insert(th);
            f.beam.aim_phi_deg.get_or_insert(ph);
        }
        for t in &mut f.targets {
            t.rcs_m2.get_or_insert(1.0);
        }
        if f.clutter.kind == ClutterKind::Gaussian && f.clutter.beta_c.is_none() {
            f.clutter.clutter_to_target_db.get_or_insert(10.0);
        }
        f.sweep.snr_db.get_or_insert_with(|| vec![0.0, 10.0, 20.0]);
        f.sweep.trials.get_or_insert(50);
        f
    }

    pub fn resolve(&self) -> Result<SimConfig> {
        let f = self.with_defaults();
        let grid = OfdmGrid {
            m_subcarriers: f.grid.subcarriers,
            delta_f: f.grid.delta_f_hz,
            f0: f.grid.f0_hz,
            n_symbols: f.grid.symbols,
            t_guard: f.grid.t_guard_s.unwrap(),
        };
        grid.validate().map_err(|e| cfg_err("grid", e))?;
        if grid.n_symbols < 2 {
            return Err(cfg_err("grid.symbols", "at least 2 symbols are needed for clutter suppression and Doppler"));
        }

        let array = |name: &str, a: &ArraySection| -> Result<ArrayGeometry> {
            ArrayGeometry::new(a.nx, a.nz, a.spacing_m.unwrap(), grid.f0).map_err(|e| cfg_err(name, e))
        };
        let hu = array("hu", &f.hu)?;
        let ru = array("ru", &f.ru)?;

        if f.targets.is_empty() {
            return Err(cfg_err("targets", "at least one target is required"));
        }
        let targets = f
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                TargetState::from_degrees(
                    t.r_m,
                    t.theta_deg,
                    t.phi_deg,
                    t.v_r_mps,
                    t.omega_theta_degps,
                    t.omega_phi_degps,
                    t.rcs_m2.unwrap(),
                )
                .map_err(|e| cfg_err(&format!("targets[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;

        let power_w = f.beam.power_w.unwrap();
        let rho = f.beam.rho.unwrap();
        if !(power_w.is_finite() && power_w > 0.0) {
            return Err(cfg_err("beam.power_w", "must be > 0"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(cfg_err("beam.rho", "must lie in (0, 1]"));
        }
        let aim = SphericalPoint::from_degrees(1.0, f.beam.aim_theta_deg.unwrap(), f.beam.aim_phi_deg.unwrap())
            .map_err(|e| cfg_err("beam", e))?;

        let clutter = match f.clutter.kind {
            ClutterKind::None => ClutterSpec::None,
            ClutterKind::Gaussian => match (f.clutter.beta_c, f.clutter.clutter_to_target_db) {
                (Some(b), None) if b.is_finite() && b >= 0.0 => ClutterSpec::Gaussian(ClutterLevel::BetaC(b)),
                (Some(_), None) => return Err(cfg_err("clutter.beta_c", "must be >= 0")),
                (None, Some(db)) if db.is_finite() => ClutterSpec::Gaussian(ClutterLevel::RelativeDb(db)),
                (None, Some(_)) => return Err(cfg_err("clutter.clutter_to_target_db", "must be finite")),
                _ => return Err(cfg_err("clutter", "give exactly one of beta_c or clutter_to_target_db")),
            },
            ClutterKind::Explicit => {
                if f.clutter.scatterers.is_empty() {
                    return Err(cfg_err("clutter.scatterers", "explicit clutter needs at least one scatterer"));
                }
                let s = f
                    .clutter
                    .scatterers
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let position = SphericalPoint::from_degrees(s.r_m, s.theta_deg, s.phi_deg)
                            .map_err(|e| cfg_err(&format!("clutter.scatterers[{i}]"), e))?;
                        if !(s.rcs_m2 > 0.0) {
                            return Err(cfg_err(&format!("clutter.scatterers[{i}].rcs_m2"), "must be > 0"));
                        }
                        Ok(Scatterer { position, rcs: s.rcs_m2 })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ClutterSpec::Explicit(s)
            }
        };

        let snr_db = f.sweep.snr_db.clone().unwrap();
        if snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(cfg_err("sweep.snr_db", "values must be numbers or +inf"));
        }
        let trials = f.sweep.trials.unwrap();
        if trials == 0 {
            return Err(cfg_err("sweep.trials", "must be >= 1"));
        }

        Ok(SimConfig {
            seed: f.seed,
            suppression: f.suppression.unwrap(),
            channel_mode: f.channel_mode.unwrap().into(),
            fluctuation: f.fluctuation.unwrap(),
            grid,
            hu,
            ru,
            beam: BeamSpec { power_w, rho, aim: (aim.theta, aim.phi) },
            targets,
            clutter,
            snr_db,
            trials,
            resolved: f,
        })
    }
}

impl SimConfig {
    pub fn desk_default() -> Self {
        ConfigFile::desk_default().resolve().expect("desk default is valid")
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig { tx: self.hu, rx: self.ru, grid: self.grid, suppression: self.suppression }
    }

    /// Rebuilds from the resolved file form after editing it.
    pub fn rebuild(file: &ConfigFile) -> Result<Self> {
        file.resolve()
    }
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    file.resolve()
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn config_to_string(cfg: &SimConfig) -> Result<String> {
    toml::to_string(&cfg.resolved).map_err(|e| Error::Config(e.to_string()))
}

/// Writes the resolved config, defaults included.
pub fn save_config(cfg: &SimConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config_to_string(cfg)?)?;
    Ok(())
}
