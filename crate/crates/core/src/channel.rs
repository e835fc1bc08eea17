//! Echo channel synthesis: exact path delays, the factored 6D/4D channel and
//! static clutter.
//!
//! Matrices are `N_R x N_H`, rows and columns indexed by the flat antenna
//! index of the receive and transmit arrays. Distance phases use the
//! subcarrier frequency `f_m`; Doppler and steering phases use `f0`.

use std::f64::consts::PI;

use log::warn;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{
    spherical_to_cartesian, upa_steering, ArrayGeometry, SphericalPoint, SPEED_OF_LIGHT,
};
use crate::kinematics::{exact_sdd_at_symbol, state_at_symbol, OfdmGrid, TargetState};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: Array2<Complex64>,
    pub n: usize,
    pub m: usize,
}

impl ChannelMatrix {
    pub fn zeros(rx: &ArrayGeometry, tx: &ArrayGeometry, n: usize, m: usize) -> Self {
        ChannelMatrix {
            entries: Array2::zeros((rx.len(), tx.len())),
            n,
            m,
        }
    }
}

/// How the target part of the channel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMode {
    /// Rank-1 channel with the SDD evolving over the frame.
    #[default]
    SixD,
    /// Rank-1 channel with the SDD frozen at symbol 0.
    FourD,
    /// Per-path Euclidean delays, no far-field approximation.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: SphericalPoint,
    pub rcs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ClutterModel {
    #[default]
    None,
    /// Sum of static point scatterers.
    Explicit(Vec<Scatterer>),
    /// `beta_c` times an i.i.d. standard complex normal matrix.
    Gaussian { beta_c: f64 },
}

impl ClutterModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ClutterModel::None => Ok(()),
            ClutterModel::Explicit(s) => {
                if s.is_empty() {
                    return Err(Error::InvalidParameter(
                        "explicit clutter needs at least one scatterer".into(),
                    ));
                }
                for sc in s {
                    sc.position.validate()?;
                    if !(sc.rcs > 0.0) {
                        return Err(Error::InvalidParameter("scatterer rcs must be > 0".into()));
                    }
                }
                Ok(())
            }
            ClutterModel::Gaussian { beta_c } => {
                if !(beta_c.is_finite() && *beta_c >= 0.0) {
                    return Err(Error::InvalidParameter("beta_c must be >= 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// Swerling-I amplitude: Rayleigh distributed with `E[sigma^2] = rcs`.
pub fn swerling_amplitude<R: Rng + ?Sized>(rcs: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (-rcs * (1.0 - u).ln()).sqrt()
}

/// `alpha = sqrt(lambda^2 / ((4 pi)^3 r^4)) * sigma`.
pub fn fading_factor(r: f64, rcs: f64, f0: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("fading distance {r} must be > 0")));
    }
    let lambda = SPEED_OF_LIGHT / f0;
    Ok((lambda * lambda / ((4.0 * PI).powi(3) * r.powi(4))).sqrt() * rcs)
}

pub fn range_guard_exceeded(r: f64, grid: &OfdmGrid) -> bool {
    r >= grid.unambiguous_range()
}

/// A target with one frame's Swerling draw applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedTarget {
    pub state: TargetState,
    /// Realised RCS value entering the fading factor.
    pub sigma: f64,
}

impl RealizedTarget {
    pub fn draw<R: Rng + ?Sized>(state: TargetState, rng: &mut R) -> Self {
        RealizedTarget {
            state,
            sigma: swerling_amplitude(state.rcs, rng),
        }
    }

    /// No fluctuation: `sigma^2` equals the mean RCS.
    pub fn nominal(state: TargetState) -> Self {
        RealizedTarget {
            state,
            sigma: state.rcs.sqrt(),
        }
    }

    /// Amplitude is evaluated at the frame-start distance for every symbol.
    pub fn alpha(&self, f0: f64) -> Result<f64> {
        fading_factor(self.state.position.r, self.sigma, f0)
    }
}

/// Common factor `alpha e^{-j4pi f_m r/c} e^{j4pi f0 v_r n T_s/c}`.
fn delay_doppler_factor(target: &RealizedTarget, n: usize, m: usize, grid: &OfdmGrid) -> Result<Complex64> {
    let alpha = target.alpha(grid.f0)?;
    let fm = grid.subcarrier_frequency(m);
    let t = n as f64 * grid.symbol_interval();
    let phase = -4.0 * PI * fm * target.state.position.r / SPEED_OF_LIGHT
        + 4.0 * PI * grid.f0 * target.state.v_r * t / SPEED_OF_LIGHT;
    Ok(Complex64::from_polar(alpha, phase))
}

fn rank_one_vectors(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    target: &RealizedTarget,
    n: usize,
    grid: &OfdmGrid,
    mode: ChannelMode,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let sdd = match mode {
        ChannelMode::FourD => target.state.position.sdd(),
        _ => exact_sdd_at_symbol(&target.state, n, grid.symbol_interval()),
    };
    (upa_steering(rx, sdd), upa_steering(tx, sdd))
}

/// Channel from true antenna-to-target distances at symbol `n`.
pub fn exact_path_channel(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    target: &RealizedTarget,
    n: usize,
    m: usize,
    grid: &OfdmGrid,
) -> Result<ChannelMatrix> {
    let pos = state_at_symbol(&target.state, n, grid.symbol_interval())?;
    if pos.r == 0.0 {
        return Err(Error::TargetAtOrigin);
    }
    let p = spherical_to_cartesian(pos);
    let alpha = target.alpha(grid.f0)?;
    let k = 2.0 * PI * grid.subcarrier_frequency(m) / SPEED_OF_LIGHT;

    let dist = |g: &ArrayGeometry| -> Vec<f64> {
        (0..g.len())
            .map(|i| {
                let (x, z) = g.split_index(i);
                p.distance_to(&g.element_position(x, z))
            })
            .collect()
    };
    let dh = dist(tx);
    let dr = dist(rx);
    let entries =
        Array2::from_shape_fn((rx.len(), tx.len()), |(i, j)| Complex64::from_polar(alpha, -k * (dh[j] + dr[i])));
    Ok(ChannelMatrix { entries, n, m })
}

/// Far-field rank-1 channel `c * a_R(sdd) a_H(sdd)^T`.
pub fn factored_channel(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    target: &RealizedTarget,
    n: usize,
    m: usize,
    grid: &OfdmGrid,
    mode: ChannelMode,
) -> Result<ChannelMatrix> {
    if mode == ChannelMode::Exact {
        return exact_path_channel(tx, rx, target, n, m, grid);
    }
    if target.state.position.r <= 0.0 {
        return Err(Error::TargetAtOrigin);
    }
    let coef = delay_doppler_factor(target, n, m, grid)?;
    let (ar, ah) = rank_one_vectors(tx, rx, target, n, grid, mode);
    let entries = Array2::from_shape_fn((rx.len(), tx.len()), |(i, j)| coef * ar[i] * ah[j]);
    Ok(ChannelMatrix { entries, n, m })
}

/// One frame's clutter realisation: a matrix per subcarrier, constant over
/// symbols.
#[derive(Debug, Clone)]
pub struct ClutterChannel {
    per_subcarrier: Vec<Array2<Complex64>>,
}

impl ClutterChannel {
    pub fn realize<R: Rng + ?Sized>(
        model: &ClutterModel,
        rx: &ArrayGeometry,
        tx: &ArrayGeometry,
        grid: &OfdmGrid,
        rng: &mut R,
    ) -> Result<Self> {
        model.validate()?;
        let shape = (rx.len(), tx.len());
        let per_subcarrier = match model {
            ClutterModel::None => vec![Array2::zeros(shape); grid.m_subcarriers],
            ClutterModel::Gaussian { beta_c } => (0..grid.m_subcarriers)
                .map(|_| Array2::from_shape_simple_fn(shape, || *beta_c * standard_complex_normal(rng)))
                .collect(),
            ClutterModel::Explicit(scatterers) => {
                let mut parts = Vec::with_capacity(scatterers.len());
                for s in scatterers {
                    let sigma = swerling_amplitude(s.rcs, rng);
                    let beta = fading_factor(s.position.r, sigma, grid.f0)?;
                    let sdd = s.position.sdd();
                    parts.push((beta, s.position.r, upa_steering(rx, sdd), upa_steering(tx, sdd)));
                }
                (0..grid.m_subcarriers)
                    .map(|m| {
                        let fm = grid.subcarrier_frequency(m);
                        let mut h = Array2::zeros(shape);
                        for (beta, r, ar, ah) in &parts {
                            let c = Complex64::from_polar(*beta, -4.0 * PI * fm * r / SPEED_OF_LIGHT);
                            for ((i, j), v) in h.indexed_iter_mut() {
                                *v += c * ar[i] * ah[j];
                            }
                        }
                        h
                    })
                    .collect()
            }
        };
        Ok(ClutterChannel { per_subcarrier })
    }

    pub fn matrix(&self, n: usize, m: usize) -> ChannelMatrix {
        ChannelMatrix {
            entries: self.per_subcarrier[m].clone(),
            n,
            m,
        }
    }

    pub fn subcarrier(&self, m: usize) -> &Array2<Complex64> {
        &self.per_subcarrier[m]
    }
}

/// Clutter matrix of subcarrier `m` from a fresh realisation.
pub fn clutter_channel<R: Rng + ?Sized>(
    model: &ClutterModel,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    m: usize,
    grid: &OfdmGrid,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let c = ClutterChannel::realize(model, rx, tx, grid, rng)?;
    Ok(c.matrix(0, m))
}

/// Circular complex normal with unit variance.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Anything that maps transmit weights to a receive-array snapshot.
pub trait ChannelSource {
    fn rx_len(&self) -> usize;
    fn tx_len(&self) -> usize;
    /// Adds `H_{n,m} * weights` into `out`.
    fn accumulate(&self, n: usize, m: usize, weights: &[Complex64], out: &mut [Complex64]) -> Result<()>;
}

/// Targets plus static clutter seen through one pair of arrays.
#[derive(Debug, Clone)]
pub struct SensingChannel {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub grid: OfdmGrid,
    pub targets: Vec<RealizedTarget>,
    pub mode: ChannelMode,
    pub clutter: Option<ClutterChannel>,
}

impl SensingChannel {
    pub fn new(
        tx: ArrayGeometry,
        rx: ArrayGeometry,
        grid: OfdmGrid,
        targets: Vec<RealizedTarget>,
        mode: ChannelMode,
        clutter: Option<ClutterChannel>,
    ) -> Self {
        for t in &targets {
            if range_guard_exceeded(t.state.position.r, &grid) {
                warn!(
                    "target at {:.2} m is beyond the unambiguous range {:.2} m; distance will alias",
                    t.state.position.r,
                    grid.unambiguous_range()
                );
            }
        }
        SensingChannel { tx, rx, grid, targets, mode, clutter }
    }

    pub fn matrix(&self, n: usize, m: usize) -> Result<ChannelMatrix> {
        sensing_channel(self, n, m)
    }
}

/// Sum of the per-target channels plus clutter at `(n, m)`.
pub fn sensing_channel(ch: &SensingChannel, n: usize, m: usize) -> Result<ChannelMatrix> {
    let mut total = ChannelMatrix::zeros(&ch.rx, &ch.tx, n, m);
    for t in &ch.targets {
        let h = factored_channel(&ch.tx, &ch.rx, t, n, m, &ch.grid, ch.mode)?;
        total.entries += &h.entries;
    }
    if let Some(c) = &ch.clutter {
        total.entries += c.subcarrier(m);
    }
    Ok(total)
}

impl ChannelSource for SensingChannel {
    fn rx_len(&self) -> usize {
        self.rx.len()
    }

    fn tx_len(&self) -> usize {
        self.tx.len()
    }

    fn accumulate(&self, n: usize, m: usize, weights: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if weights.len() != self.tx.len() || out.len() != self.rx.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("tx {} / rx {}", self.tx.len(), self.rx.len()),
                got: format!("tx {} / rx {}", weights.len(), out.len()),
            });
        }
        for t in &self.targets {
            match self.mode {
                ChannelMode::Exact => {
                    let h = exact_path_channel(&self.tx, &self.rx, t, n, m, &self.grid)?;
                    for (o, row) in out.iter_mut().zip(h.entries.rows()) {
                        *o += row.iter().zip(weights).map(|(a, b)| a * b).sum::<Complex64>();
                    }
                }
                mode => {
                    let coef = delay_doppler_factor(t, n, m, &self.grid)?;
                    let (ar, ah) = rank_one_vectors(&self.tx, &self.rx, t, n, &self.grid, mode);
                    let gain = coef * ah.iter().zip(weights).map(|(a, b)| a * b).sum::<Complex64>();
                    for (o, a) in out.iter_mut().zip(&ar) {
                        *o += gain * a;
                    }
                }
            }
        }
        if let Some(c) = &self.clutter {
            for (o, row) in out.iter_mut().zip(c.subcarrier(m).rows()) {
                *o += row.iter().zip(weights).map(|(a, b)| a * b).sum::<Complex64>();
            }
        }
        Ok(())
    }
}

/// Largest singular value ratio `s2 / s1` of a matrix, used to check rank.
pub fn second_singular_ratio(h: &Array2<Complex64>) -> f64 {
    let m = nalgebra::DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if s.len() < 2 || s[0] == 0.0 {
        return 0.0;
    }
    s[1] / s[0]
}

/// Largest entrywise `|arg(a / b)|` between two equally shaped matrices.
pub fn max_phase_discrepancy(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x * y.conj()).arg().abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(nh: usize, nr: usize) -> (ArrayGeometry, ArrayGeometry, OfdmGrid) {
        let f0 = 28e9;
        (
            ArrayGeometry::half_wavelength(nh, nh, f0).unwrap(),
            ArrayGeometry::half_wavelength(nr, nr, f0).unwrap(),
            OfdmGrid::new(32, 480e3, f0, 32).unwrap(),
        )
    }

    fn target(r: f64) -> RealizedTarget {
        RealizedTarget::nominal(TargetState::from_degrees(r, 75.0, 20.0, 15.0, 2.0, 8.0, 1.0).unwrap())
    }

    #[test]
    fn fading_factor_cases() {
        let a1 = fading_factor(100.0, 1.0, 28e9).unwrap();
        let a2 = fading_factor(200.0, 1.0, 28e9).unwrap();
        assert!((a1 / a2 - 4.0).abs() < 1e-12);
        assert!(a1 > 0.0);
        assert!(fading_factor(0.0, 1.0, 28e9).is_err());
        // lambda / ((4 pi)^1.5 r^2), evaluated independently
        let lambda = SPEED_OF_LIGHT / 28e9;
        let expected = lambda / ((4.0 * PI).powf(1.5) * 120.0 * 120.0);
        let got = fading_factor(120.0, 1.0, 28e9).unwrap();
        assert!((got - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn swerling_mean_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let ms: f64 = (0..n).map(|_| swerling_amplitude(2.5, &mut rng).powi(2)).sum::<f64>() / n as f64;
        assert!((ms - 2.5).abs() < 0.05, "{ms}");
    }

    #[test]
    fn exact_single_antenna_phase() {
        let f0 = 28e9;
        let one = ArrayGeometry::half_wavelength(1, 1, f0).unwrap();
        let grid = OfdmGrid::new(8, 480e3, f0, 4).unwrap();
        let t = RealizedTarget::nominal(TargetState::from_degrees(100.0, 90.0, 0.0, 10.0, 0.0, 0.0, 1.0).unwrap());
        for (n, m) in [(0, 0), (3, 5)] {
            let h = exact_path_channel(&one, &one, &t, n, m, &grid).unwrap();
            let r_n = 100.0 - 10.0 * n as f64 * grid.symbol_interval();
            let expected = -4.0 * PI * grid.subcarrier_frequency(m) * r_n / SPEED_OF_LIGHT;
            let got = h.entries[(0, 0)];
            let alpha = t.alpha(f0).unwrap();
            assert!((got - Complex64::from_polar(alpha, expected)).norm() < 1e-9 * alpha);
        }
    }

    #[test]
    fn exact_entries_share_modulus() {
        let (tx, rx, grid) = setup(4, 4);
        let t = target(120.0);
        let h = exact_path_channel(&tx, &rx, &t, 5, 7, &grid).unwrap();
        let alpha = t.alpha(grid.f0).unwrap();
        assert!(h.entries.iter().all(|v| (v.norm() - alpha).abs() < 1e-12 * alpha));
    }

    #[test]
    fn far_field_error_shrinks_with_range() {
        let (tx, rx, grid) = setup(16, 16);
        let mut last = f64::INFINITY;
        for r in [50.0, 100.0, 200.0, 400.0] {
            let t = target(r);
            let e = exact_path_channel(&tx, &rx, &t, 0, 0, &grid).unwrap();
            let f = factored_channel(&tx, &rx, &t, 0, 0, &grid, ChannelMode::SixD).unwrap();
            let d = max_phase_discrepancy(&e.entries, &f.entries);
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn four_d_equals_six_d_without_rotation() {
        let (tx, rx, grid) = setup(4, 6);
        let mut t = target(120.0);
        t.state.omega_phi = 0.0;
        t.state.omega_theta = 0.0;
        for n in [0, 7, 31] {
            let a = factored_channel(&tx, &rx, &t, n, 3, &grid, ChannelMode::SixD).unwrap();
            let b = factored_channel(&tx, &rx, &t, n, 3, &grid, ChannelMode::FourD).unwrap();
            assert_eq!(a.entries, b.entries);
        }
    }

    #[test]
    fn factored_channel_is_rank_one() {
        let (tx, rx, grid) = setup(4, 5);
        let t = target(120.0);
        for (n, m) in [(0, 0), (10, 20), (31, 31)] {
            let h = factored_channel(&tx, &rx, &t, n, m, &grid, ChannelMode::SixD).unwrap();
            assert!(second_singular_ratio(&h.entries) < 1e-10);
        }
    }

    #[test]
    fn factored_reference_element() {
        let (tx, rx, grid) = setup(4, 4);
        let mut t = target(120.0);
        t.state.v_r = 0.0;
        let h = factored_channel(&tx, &rx, &t, 0, 9, &grid, ChannelMode::SixD).unwrap();
        let alpha = t.alpha(grid.f0).unwrap();
        let expected = Complex64::from_polar(alpha, -4.0 * PI * grid.subcarrier_frequency(9) * 120.0 / SPEED_OF_LIGHT);
        assert!((h.entries[(0, 0)] - expected).norm() < 1e-12 * alpha);
    }

    #[test]
    fn doppler_phase_step_without_rotation() {
        let (tx, rx, grid) = setup(4, 4);
        let mut t = target(120.0);
        t.state.omega_phi = 0.0;
        t.state.omega_theta = 0.0;
        let expected = 4.0 * PI * grid.f0 * t.state.v_r * grid.symbol_interval() / SPEED_OF_LIGHT;
        for n in [0, 4, 30] {
            let a = factored_channel(&tx, &rx, &t, n, 2, &grid, ChannelMode::SixD).unwrap();
            let b = factored_channel(&tx, &rx, &t, n + 1, 2, &grid, ChannelMode::SixD).unwrap();
            let step = (b.entries[(5, 3)] / a.entries[(5, 3)]).arg();
            let diff = (step - expected).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-9);
        }
    }

    #[test]
    fn clutter_cases() {
        let (tx, rx, grid) = setup(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = clutter_channel(&ClutterModel::Gaussian { beta_c: 0.0 }, &rx, &tx, 4, &grid, &mut rng).unwrap();
        assert!(z.entries.iter().all(|v| *v == Complex64::new(0.0, 0.0)));

        let model = ClutterModel::Gaussian { beta_c: 0.3 };
        let c = ClutterChannel::realize(&model, &rx, &tx, &grid, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(c.matrix(0, 5).entries, c.matrix(17, 5).entries);

        let one = ClutterModel::Explicit(vec![Scatterer {
            position: SphericalPoint::from_degrees(80.0, 40.0, -5.0).unwrap(),
            rcs: 10.0,
        }]);
        let h = clutter_channel(&one, &rx, &tx, 2, &grid, &mut rng).unwrap();
        assert!(second_singular_ratio(&h.entries) < 1e-10);
        assert!(ClutterModel::Explicit(vec![]).validate().is_err());
        assert!(ClutterModel::Gaussian { beta_c: -1.0 }.validate().is_err());
    }

    #[test]
    fn sensing_channel_sums() {
        let (tx, rx, grid) = setup(3, 4);
        let empty = SensingChannel::new(tx, rx, grid, vec![], ChannelMode::SixD, None);
        assert!(empty.matrix(3, 3).unwrap().entries.iter().all(|v| v.norm() == 0.0));

        let t1 = target(120.0);
        let t2 = RealizedTarget::nominal(TargetState::from_degrees(90.0, 120.0, -10.0, -5.0, 1.0, 0.0, 2.0).unwrap());
        let one = SensingChannel::new(tx, rx, grid, vec![t1], ChannelMode::SixD, None);
        let f1 = factored_channel(&tx, &rx, &t1, 6, 2, &grid, ChannelMode::SixD).unwrap();
        assert_eq!(one.matrix(6, 2).unwrap().entries, f1.entries);

        let two = SensingChannel::new(tx, rx, grid, vec![t1, t2], ChannelMode::SixD, None);
        let f2 = factored_channel(&tx, &rx, &t2, 6, 2, &grid, ChannelMode::SixD).unwrap();
        let sum = &f1.entries + &f2.entries;
        let got = two.matrix(6, 2).unwrap().entries;
        assert!(got.iter().zip(sum.iter()).all(|(a, b)| (a - b).norm() < 1e-20));
    }

    #[test]
    fn accumulate_matches_matrix_product() {
        let (tx, rx, grid) = setup(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clutter = ClutterChannel::realize(&ClutterModel::Gaussian { beta_c: 1e-8 }, &rx, &tx, &grid, &mut rng).unwrap();
        for mode in [ChannelMode::SixD, ChannelMode::FourD, ChannelMode::Exact] {
            let ch = SensingChannel::new(tx, rx, grid, vec![target(120.0)], mode, Some(clutter.clone()));
            let w: Vec<Complex64> = (0..tx.len()).map(|i| Complex64::from_polar(1.0, 0.3 * i as f64)).collect();
            let mut out = vec![Complex64::new(0.0, 0.0); rx.len()];
            ch.accumulate(4, 6, &w, &mut out).unwrap();
            let mut h = ch.matrix(4, 6).unwrap();
            if mode == ChannelMode::Exact {
                h = exact_path_channel(&tx, &rx, &ch.targets[0], 4, 6, &grid).unwrap();
                h.entries += clutter.subcarrier(6);
            }
            for (i, o) in out.iter().enumerate() {
                let e: Complex64 = (0..tx.len()).map(|j| h.entries[(i, j)] * w[j]).sum();
                assert!((o - e).norm() < 1e-12 * e.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn range_guard() {
        let (_, _, grid) = setup(1, 1);
        assert!(!range_guard_exceeded(312.0, &grid));
        assert!(range_guard_exceeded(320.0, &grid));
    }
}
