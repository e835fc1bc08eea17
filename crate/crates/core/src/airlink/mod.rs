//! Beamformed transmission, echo tensors, symbol erasure and static-clutter
//! suppression.
//!
//! The received echo at `(n, m)` is `H_{n,m} conj(w) s_{n,m} + noise`: the
//! conjugate applies to the beam weights, the sensing symbol enters as is so
//! that dividing by `s_{n,m}` leaves the equivalent echo channel.

pub mod dump;

use ndarray::{Array2, Array4, Axis, Zip};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{standard_complex_normal, ChannelSource};
use crate::error::{Error, Result};
use crate::geometry::{sdd_of, upa_steering, ArrayGeometry};
use crate::kinematics::OfdmGrid;

/// Processing stage of an [`EchoTensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Raw,
    Eec,
    DtEec,
}

impl Stage {
    pub fn code(self) -> u8 {
        match self {
            Stage::Raw => 0,
            Stage::Eec => 1,
            Stage::DtEec => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Stage> {
        match c {
            0 => Some(Stage::Raw),
            1 => Some(Stage::Eec),
            2 => Some(Stage::DtEec),
            _ => None,
        }
    }
}

/// Echo tensor indexed `(n_x, n_z, n, m)` over the receive array, symbols
/// and subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoTensor {
    pub data: Array4<Complex64>,
    pub stage: Stage,
    /// Seed of the trial that produced the tensor, 0 if unknown.
    pub seed: u64,
}

impl EchoTensor {
    pub fn zeros(rx: &ArrayGeometry, n_symbols: usize, m_subcarriers: usize, stage: Stage) -> Self {
        EchoTensor {
            data: Array4::zeros((rx.nx, rx.nz, n_symbols, m_subcarriers)),
            stage,
            seed: 0,
        }
    }

    /// `(nx, nz, N, M)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    pub fn mean_power(&self) -> f64 {
        let n = self.data.len();
        if n == 0 {
            return 0.0;
        }
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    fn expect(&self, stage: Stage, name: &'static str) -> Result<()> {
        if self.stage != stage {
            return Err(Error::WrongStage { expected: name, got: self.stage });
        }
        Ok(())
    }
}

/// Unit-modulus sensing symbols, `N x M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Array2<Complex64>,
}

impl SymbolFrame {
    pub fn ones(n_symbols: usize, m_subcarriers: usize) -> Self {
        SymbolFrame {
            symbols: Array2::from_elem((n_symbols, m_subcarriers), Complex64::new(1.0, 0.0)),
        }
    }

    /// Uniform QPSK on the unit circle.
    pub fn qpsk<R: Rng + ?Sized>(n_symbols: usize, m_subcarriers: usize, rng: &mut R) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let points = [
            Complex64::new(h, h),
            Complex64::new(-h, h),
            Complex64::new(-h, -h),
            Complex64::new(h, -h),
        ];
        SymbolFrame {
            symbols: Array2::from_shape_simple_fn((n_symbols, m_subcarriers), || points[rng.random_range(0..4)]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for ((n, m), s) in self.symbols.indexed_iter() {
            if (s.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "symbol at (n={n}, m={m}) has modulus {}, expected 1",
                    s.norm()
                )));
            }
        }
        Ok(())
    }
}

/// `sqrt(rho P / N_H) a_H(aim)`.
pub fn tx_beam(tx: &ArrayGeometry, aim_theta: f64, aim_phi: f64, power: f64, rho: f64) -> Result<Vec<Complex64>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho {rho} outside (0, 1]")));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be > 0".into()));
    }
    let scale = (rho * power / tx.len() as f64).sqrt();
    Ok(upa_steering(tx, sdd_of(aim_theta, aim_phi))
        .into_iter()
        .map(|a| a * scale)
        .collect())
}

/// Noiseless echoes `H_{n,m} conj(beam) s_{n,m}` for every `(n, m)`.
pub fn synthesize_noiseless<C: ChannelSource + Sync>(
    source: &C,
    rx: &ArrayGeometry,
    grid: &OfdmGrid,
    beam: &[Complex64],
    symbols: &SymbolFrame,
) -> Result<EchoTensor> {
    let (n_sym, m_sub) = (grid.n_symbols, grid.m_subcarriers);
    if symbols.symbols.dim() != (n_sym, m_sub) {
        return Err(Error::DimensionMismatch {
            expected: format!("symbols {n_sym}x{m_sub}"),
            got: format!("{:?}", symbols.symbols.dim()),
        });
    }
    if source.rx_len() != rx.len() || source.tx_len() != beam.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("rx {} / tx {}", source.rx_len(), source.tx_len()),
            got: format!("rx {} / beam {}", rx.len(), beam.len()),
        });
    }
    let weights: Vec<Complex64> = beam.iter().map(|w| w.conj()).collect();

    let columns: Vec<Vec<Complex64>> = (0..n_sym * m_sub)
        .into_par_iter()
        .map(|idx| {
            let (n, m) = (idx / m_sub, idx % m_sub);
            let mut out = vec![Complex64::new(0.0, 0.0); rx.len()];
            source.accumulate(n, m, &weights, &mut out)?;
            let s = symbols.symbols[(n, m)];
            out.iter_mut().for_each(|v| *v *= s);
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut t = EchoTensor::zeros(rx, n_sym, m_sub, Stage::Raw);
    for (idx, col) in columns.iter().enumerate() {
        let (n, m) = (idx / m_sub, idx % m_sub);
        for (i, v) in col.iter().enumerate() {
            let (x, z) = rx.split_index(i);
            t.data[(x, z, n, m)] = *v;
        }
    }
    Ok(t)
}

/// Adds i.i.d. circular complex Gaussian noise of variance `sigma^2`.
pub fn add_noise<R: Rng + ?Sized>(t: &mut EchoTensor, sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    t.data.iter_mut().for_each(|v| *v += sigma * standard_complex_normal(rng));
}

pub fn synthesize_echoes<C: ChannelSource + Sync, R: Rng + ?Sized>(
    source: &C,
    rx: &ArrayGeometry,
    grid: &OfdmGrid,
    beam: &[Complex64],
    symbols: &SymbolFrame,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<EchoTensor> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise sigma {noise_sigma} must be >= 0")));
    }
    let mut t = synthesize_noiseless(source, rx, grid, beam, symbols)?;
    add_noise(&mut t, noise_sigma, rng);
    Ok(t)
}

/// Divides every `(., ., n, m)` slice by `s_{n,m}`.
pub fn erase_symbols(t: &EchoTensor, symbols: &SymbolFrame) -> Result<EchoTensor> {
    t.expect(Stage::Raw, "raw")?;
    let (_, _, n_sym, m_sub) = t.dims();
    if symbols.symbols.dim() != (n_sym, m_sub) {
        return Err(Error::DimensionMismatch {
            expected: format!("symbols {n_sym}x{m_sub}"),
            got: format!("{:?}", symbols.symbols.dim()),
        });
    }
    if let Some(((n, m), _)) = symbols.symbols.indexed_iter().find(|(_, s)| s.norm() == 0.0) {
        return Err(Error::ZeroSymbol { n, m });
    }
    let mut data = t.data.clone();
    Zip::indexed(&mut data).for_each(|(_, _, n, m), v| *v /= symbols.symbols[(n, m)]);
    Ok(EchoTensor { data, stage: Stage::Eec, seed: t.seed })
}

/// Removes the temporal mean of every `(antenna, m)` series.
pub fn suppress_clutter(t: &EchoTensor) -> Result<EchoTensor> {
    t.expect(Stage::Eec, "eec")?;
    let n_sym = t.dims().2;
    if n_sym < 2 {
        return Err(Error::TooFewSymbols { needed: 2, got: n_sym });
    }
    Ok(EchoTensor {
        data: remove_temporal_mean(&t.data),
        stage: Stage::DtEec,
        seed: t.seed,
    })
}

/// Mean subtraction without the stage check; used to measure how much of a
/// component survives the suppression filter.
pub fn remove_temporal_mean(data: &Array4<Complex64>) -> Array4<Complex64> {
    let mut out = data.clone();
    if out.dim().2 == 0 {
        return out;
    }
    let mean = out.mean_axis(Axis(2)).expect("non-empty");
    for n in 0..out.dim().2 {
        let mut slice = out.index_axis_mut(Axis(2), n);
        slice -= &mean;
    }
    out
}
