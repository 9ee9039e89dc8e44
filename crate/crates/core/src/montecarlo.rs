//! Finite-size simulation of the uplink block model
//!
//! ```text
//! Y_t = (1 / sqrt(K)) sum_c H_c X_{c,t} + W_t,    t in {training, data}
//! ```
//!
//! and baseline estimators whose empirical MSEs can be compared with the
//! replica predictions.
//!
//! Every trial draws from its own ChaCha8 stream `(seed, trial)`, and
//! per-trial results are reduced in trial order with compensated summation,
//! so a report is bit-identical under sequential and parallel execution.
//!
//! Cells whose pilots are not known to the receiver cannot have their
//! channel estimated by the pilot-based schemes; their contribution is
//! treated as additional white noise.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::priors::Prior;
use crate::replica::{Pins, Scenario, Target, DATA, TRAINING};
use crate::solver::{self, SolverConfig};

pub type CMatrix = DMatrix<Complex64>;

/// Relative gap between the K1-th and (K1+1)-th singular values below which
/// an SVD-blind trial is flagged as degenerate.
pub const SINGULAR_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    PerfectCsiLmmse,
    PilotMmseChannel,
    PilotThenLmmseData,
    /// `k1` is the signal-subspace dimension; `None` uses the target cell's
    /// user count.
    SvdBlind { k1: Option<usize> },
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::PerfectCsiLmmse => "perfect_csi_lmmse",
            Scheme::PilotMmseChannel => "pilot_mmse_channel",
            Scheme::PilotThenLmmseData => "pilot_then_lmmse_data",
            Scheme::SvdBlind { .. } => "svd_blind",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Total number of users across cells.
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

/// Integer system sizes derived from the scenario ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub k: usize,
    pub n: usize,
    pub t: [usize; 2],
    pub k_cell: Vec<usize>,
}

impl Dims {
    /// Rounds `alpha K`, `beta_t K` and `k_c K` half away from zero. If the
    /// cell sizes do not add up to `K`, the largest cell absorbs the
    /// difference.
    pub fn derive(s: &Scenario, k: usize) -> Result<Self> {
        s.validate()?;
        if k < 2 {
            return Err(Error::Dimension(format!("K must be >= 2, got {k}")));
        }
        let kf = k as f64;
        let n = (s.alpha * kf).round() as usize;
        if n == 0 {
            return Err(Error::Dimension(format!("alpha K = {} rounds to zero antennas", s.alpha * kf)));
        }
        let mut t = [0usize; 2];
        for (ph, slot) in t.iter_mut().enumerate() {
            *slot = (s.beta[ph] * kf).round() as usize;
            if s.beta[ph] > 0.0 && *slot == 0 {
                return Err(Error::Dimension(format!(
                    "beta_{} K = {} rounds to an empty phase",
                    ph + 1,
                    s.beta[ph] * kf
                )));
            }
        }
        let mut k_cell: Vec<usize> = s.load.iter().map(|l| (l * kf).round() as usize).collect();
        let total: usize = k_cell.iter().sum();
        if total != k {
            let largest = (0..k_cell.len())
                .max_by(|&a, &b| s.load[a].total_cmp(&s.load[b]).then(b.cmp(&a)))
                .expect("at least one cell");
            let fixed = k_cell[largest] as i64 + k as i64 - total as i64;
            if fixed < 1 {
                return Err(Error::Dimension(format!("cannot split K = {k} across the cells")));
            }
            k_cell[largest] = fixed as usize;
        }
        for (c, (&kc, &l)) in k_cell.iter().zip(&s.load).enumerate() {
            if l > 0.0 && kc == 0 {
                return Err(Error::Dimension(format!("cell {c} has no users at K = {k}")));
            }
        }
        Ok(Dims { k, n, t, k_cell })
    }
}

/// One realization of the block model. Pilot symbols (`Known` priors) are
/// part of `x` and serve as side information for the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub dims: Dims,
    /// `h[c]` is `N x K_c`.
    pub h: Vec<CMatrix>,
    /// `x[c][t]` is `K_c x T_t`.
    pub x: Vec<[CMatrix; 2]>,
    /// `w[t]` and `y[t]` are `N x T_t`.
    pub w: [CMatrix; 2],
    pub y: [CMatrix; 2],
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn sample_symbol<R: Rng + ?Sized>(rng: &mut R, prior: &Prior) -> Complex64 {
    match prior {
        Prior::Gaussian { variance } => complex_gaussian(rng, *variance),
        Prior::Known { power } => complex_gaussian(rng, *power),
        Prior::Qpsk { power } => {
            let a = (power / 2.0).sqrt();
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            Complex64::new(re, im)
        }
        Prior::Discrete(d) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (x, p) in d.points().iter().zip(d.probs()) {
                acc += p;
                if u < acc {
                    return *x;
                }
            }
            // Rounding left `u` above the last partial sum.
            let last = d.probs().iter().rposition(|p| *p > 0.0).unwrap_or(0);
            d.points()[last]
        }
    }
}

fn sample_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    mut draw: impl FnMut(&mut R) -> Complex64,
) -> CMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| draw(rng)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// Draws `(H, X, W)` and assembles `Y`.
pub fn generate_instance<R: Rng + ?Sized>(s: &Scenario, k: usize, rng: &mut R) -> Result<Instance> {
    let dims = Dims::derive(s, k)?;
    let n = dims.n;
    let h: Vec<CMatrix> = (0..s.cells())
        .map(|c| sample_matrix(rng, n, dims.k_cell[c], |r| complex_gaussian(r, s.gain[c])))
        .collect();
    let x: Vec<[CMatrix; 2]> = (0..s.cells())
        .map(|c| {
            [TRAINING, DATA].map(|t| {
                sample_matrix(rng, dims.k_cell[c], dims.t[t], |r| sample_symbol(r, &s.priors[c][t]))
            })
        })
        .collect();
    let w = [TRAINING, DATA].map(|t| sample_matrix(rng, n, dims.t[t], |r| complex_gaussian(r, s.sigma2)));
    let scale = 1.0 / (k as f64).sqrt();
    let y = [TRAINING, DATA].map(|t| {
        let mut y = w[t].clone();
        for c in 0..s.cells() {
            y += (&h[c] * &x[c][t]) * Complex64::from(scale);
        }
        y
    });
    Ok(Instance { dims, h, x, w, y })
}

/// Random stream of one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Posterior of `x ~ CN(0, diag(d))` observed through `y = A x + n`,
/// `n ~ CN(0, s2 I)`, for every column of `y`.
struct LinearGaussian {
    mean: CMatrix,
    cov: CMatrix,
}

fn pinv_hermitian(m: CMatrix) -> CMatrix {
    let svd = m.svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = top * 1e-12 * svd.singular_values.len().max(1) as f64;
    svd.pseudo_inverse(eps).expect("both factors were requested")
}

fn linear_gaussian(a: &CMatrix, d: &[f64], s2: f64, y: &CMatrix) -> LinearGaussian {
    let (m, n) = a.shape();
    let prior = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        d.iter().map(|&v| Complex64::from(v)),
    ));
    if m == 0 {
        return LinearGaussian { mean: CMatrix::zeros(n, y.ncols()), cov: prior };
    }
    let ad = a * &prior;
    let mut gram = &ad * a.adjoint();
    for i in 0..m {
        gram[(i, i)] += s2;
    }
    // gain = M^{-1} A D, so the mean is gain^H y and cov = D - (A D)^H gain.
    let gain = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&ad),
        None => pinv_hermitian(gram) * &ad,
    };
    let mean = gain.adjoint() * y;
    let cov = &prior - ad.adjoint() * &gain;
    LinearGaussian { mean, cov }
}

fn trace_re(m: &CMatrix, from: usize, len: usize) -> f64 {
    (from..from + len).map(|i| m[(i, i)].re).sum()
}

/// Channel knowledge handed to the data detector: estimates of the listed
/// cells and the error covariance shared by every row of the stacked
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub cells: Vec<usize>,
    pub h: Vec<CMatrix>,
    pub error_cov: CMatrix,
}

impl ChannelEstimate {
    /// The true channels of every cell, with zero error.
    pub fn exact(inst: &Instance) -> Self {
        let cells: Vec<usize> = (0..inst.h.len()).collect();
        ChannelEstimate { cells, h: inst.h.clone(), error_cov: CMatrix::zeros(inst.dims.k, inst.dims.k) }
    }
}

/// Per-instance outcome of one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub targets: Vec<Target>,
    /// `||truth - estimate||^2` per entry.
    pub realized: Vec<f64>,
    /// Trace of the posterior covariance per entry, when the estimator
    /// carries one.
    pub posterior: Option<Vec<f64>>,
    pub degenerate: bool,
}

fn require_gaussian_data(s: &Scenario, cells: &[usize]) -> Result<()> {
    for &c in cells {
        if !matches!(s.priors[c][DATA], Prior::Gaussian { .. }) {
            return Err(Error::Unsupported(format!(
                "linear MMSE data detection is exact only for Gaussian symbols (cell {c})"
            )));
        }
    }
    Ok(())
}

fn known_pilot_cells(s: &Scenario) -> Vec<usize> {
    (0..s.cells()).filter(|&c| matches!(s.priors[c][TRAINING], Prior::Known { .. })).collect()
}

/// Power per received entry contributed by the cells outside `cells`.
fn residual_interference(s: &Scenario, dims: &Dims, cells: &[usize], t: usize) -> f64 {
    (0..s.cells())
        .filter(|c| !cells.contains(c))
        .map(|c| dims.k_cell[c] as f64 / dims.k as f64 * s.gain[c] * s.symbol_power(c, t))
        .sum()
}

fn stack_columns(blocks: &[&CMatrix], rows: usize) -> CMatrix {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

fn stack_rows(blocks: &[&CMatrix], cols: usize) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Linear MMSE detection of the data phase of the cells in `est`, treating
/// the channel estimate as the mean and its error as extra noise.
pub fn lmmse_data(s: &Scenario, inst: &Instance, est: &ChannelEstimate) -> Result<Estimate> {
    require_gaussian_data(s, &est.cells)?;
    let dims = &inst.dims;
    let kf = dims.k as f64;
    let sizes: Vec<usize> = est.cells.iter().map(|&c| dims.k_cell[c]).collect();
    let users: usize = sizes.iter().sum();
    if est.h.len() != est.cells.len() || est.error_cov.shape() != (users, users) {
        return Err(Error::Dimension("channel estimate does not match its cell list".into()));
    }
    let d: Vec<f64> = est
        .cells
        .iter()
        .flat_map(|&c| std::iter::repeat_n(s.symbol_power(c, DATA), dims.k_cell[c]))
        .collect();
    let channel_error: f64 =
        (0..users).map(|i| est.error_cov[(i, i)].re * d[i]).sum::<f64>() / kf;
    let s2 = s.sigma2 + residual_interference(s, dims, &est.cells, DATA) + channel_error;
    let a = stack_columns(&est.h.iter().collect::<Vec<_>>(), dims.n) / Complex64::from(kf.sqrt());
    let post = linear_gaussian(&a, &d, s2, &inst.y[DATA]);

    let t2 = dims.t[DATA];
    let mut realized = Vec::new();
    let mut posterior = Vec::new();
    let mut at = 0;
    for (&c, &kc) in est.cells.iter().zip(&sizes) {
        let err = &inst.x[c][DATA] - post.mean.rows(at, kc);
        realized.push(if t2 == 0 { 0.0 } else { err.norm_squared() / (kc * t2) as f64 });
        posterior.push(trace_re(&post.cov, at, kc) / kc as f64);
        at += kc;
    }
    Ok(Estimate {
        targets: est.cells.iter().map(|&c| Target::MseX(c, DATA)).collect(),
        realized,
        posterior: Some(posterior),
        degenerate: false,
    })
}

/// Data detection with the true channels of every cell.
pub fn perfect_csi_lmmse(s: &Scenario, inst: &Instance) -> Result<Estimate> {
    lmmse_data(s, inst, &ChannelEstimate::exact(inst))
}

/// Channel MMSE from the training block for every cell with known pilots.
fn channel_from_pilots(s: &Scenario, inst: &Instance) -> Result<(ChannelEstimate, Estimate)> {
    let cells = known_pilot_cells(s);
    if cells.is_empty() {
        return Err(Error::Unsupported("no cell has pilots known to the receiver".into()));
    }
    let dims = &inst.dims;
    let kf = dims.k as f64;
    let t1 = dims.t[TRAINING];
    // Row n of Y_1 is h_n X~ + w_n, so its transpose is observed through X~^T.
    let pilots = stack_rows(&cells.iter().map(|&c| &inst.x[c][TRAINING]).collect::<Vec<_>>(), t1);
    let a = pilots.transpose() / Complex64::from(kf.sqrt());
    let d: Vec<f64> =
        cells.iter().flat_map(|&c| std::iter::repeat_n(s.gain[c], dims.k_cell[c])).collect();
    let s2 = s.sigma2 + residual_interference(s, dims, &cells, TRAINING);
    let post = linear_gaussian(&a, &d, s2, &inst.y[TRAINING].transpose());
    let stacked = post.mean.transpose();

    let mut h = Vec::new();
    let mut realized = Vec::new();
    let mut posterior = Vec::new();
    let mut at = 0;
    for &c in &cells {
        let kc = dims.k_cell[c];
        let hc = stacked.columns(at, kc).into_owned();
        realized.push((&inst.h[c] - &hc).norm_squared() / (dims.n * kc) as f64);
        posterior.push(trace_re(&post.cov, at, kc) / kc as f64);
        h.push(hc);
        at += kc;
    }
    let estimate = Estimate {
        targets: cells.iter().map(|&c| Target::MseH(c)).collect(),
        realized,
        posterior: Some(posterior),
        degenerate: false,
    };
    Ok((ChannelEstimate { cells, h, error_cov: post.cov }, estimate))
}

/// Linear MMSE (exact Bayes for the Gaussian channel) estimate of the
/// channels from the known pilots.
pub fn pilot_mmse_channel(s: &Scenario, inst: &Instance) -> Result<Estimate> {
    channel_from_pilots(s, inst).map(|(_, e)| e)
}

/// Pilot-based channel estimate followed by linear MMSE data detection.
pub fn pilot_then_lmmse_data(s: &Scenario, inst: &Instance) -> Result<Estimate> {
    let (channel, mut est) = channel_from_pilots(s, inst)?;
    let data = lmmse_data(s, inst, &channel)?;
    est.targets.extend(data.targets);
    est.realized.extend(data.realized);
    if let (Some(p), Some(q)) = (est.posterior.as_mut(), data.posterior) {
        p.extend(q);
    }
    Ok(est)
}

/// Blind subspace baseline for cell 0.
///
/// The `k1` dominant left singular vectors `U` of `[Y_1 Y_2]` span the
/// estimated signal subspace. In the projected block `Z = U^H Y` the target
/// cell appears as `M X / sqrt(K)` with an unknown `k1 x k1` matrix `M`,
/// fitted by least squares on the pilots. The data are then detected by
/// linear MMSE with the pilot-fit residual power as noise level.
pub fn svd_blind(s: &Scenario, inst: &Instance, k1: usize) -> Result<Estimate> {
    let dims = &inst.dims;
    let (n, t1, t2) = (dims.n, dims.t[TRAINING], dims.t[DATA]);
    if k1 == 0 {
        return Err(Error::domain("SVD-blind subspace dimension must be >= 1"));
    }
    if k1 > n.min(t1 + t2) {
        return Err(Error::Dimension(format!("subspace dimension {k1} exceeds min(N, T) = {}", n.min(t1 + t2))));
    }
    if !matches!(s.priors[0][TRAINING], Prior::Known { .. }) || t1 == 0 {
        return Err(Error::Unsupported("SVD-blind needs known pilots in cell 0".into()));
    }
    let kc = dims.k_cell[0];
    let scale = Complex64::from((dims.k as f64).sqrt());

    let y = stack_columns(&[&inst.y[TRAINING], &inst.y[DATA]], n);
    let svd = y.svd(true, false);
    let u_all = svd.u.expect("left vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = |i: usize| svd.singular_values[order[i]];
    let degenerate =
        order.len() > k1 && (sv(k1 - 1) - sv(k1)).abs() <= SINGULAR_TIE_TOL * sv(0).max(f64::MIN_POSITIVE);
    let u = CMatrix::from_columns(&order[..k1].iter().map(|&i| u_all.column(i)).collect::<Vec<_>>());

    let z1 = u.adjoint() * &inst.y[TRAINING];
    let z2 = u.adjoint() * &inst.y[DATA];
    let pilots = &inst.x[0][TRAINING] / scale;
    let m = &z1 * pilots.adjoint() * pinv_hermitian(&pilots * pilots.adjoint());
    let h_hat = &u * &m;

    let dof = k1 * t1.saturating_sub(kc).max(1);
    let noise = ((&z1 - &m * &pilots).norm_squared() / dof as f64).max(s.sigma2);
    let power = s.symbol_power(0, DATA);
    let post = linear_gaussian(&(&m / scale), &vec![power; kc], noise, &z2);

    let mse_h = (&inst.h[0] - &h_hat).norm_squared() / (n * kc) as f64;
    let mse_x =
        if t2 == 0 { 0.0 } else { (&inst.x[0][DATA] - &post.mean).norm_squared() / (kc * t2) as f64 };
    Ok(Estimate {
        targets: vec![Target::MseH(0), Target::MseX(0, DATA)],
        realized: vec![mse_h, mse_x],
        posterior: None,
        degenerate,
    })
}

/// Runs the configured scheme on one instance.
pub fn estimate(s: &Scenario, inst: &Instance, scheme: Scheme) -> Result<Estimate> {
    match scheme {
        Scheme::PerfectCsiLmmse => perfect_csi_lmmse(s, inst),
        Scheme::PilotMmseChannel => pilot_mmse_channel(s, inst),
        Scheme::PilotThenLmmseData => pilot_then_lmmse_data(s, inst),
        Scheme::SvdBlind { k1 } => svd_blind(s, inst, k1.unwrap_or(inst.dims.k_cell[0])),
    }
}

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// Sample mean and its standard error. With a single sample the standard
/// error is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std_err: f64,
}

impl Stat {
    pub fn from_samples(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        let mut acc = Kahan::default();
        xs.iter().for_each(|&x| acc.add(x));
        let mean = acc.total() / n;
        if xs.len() < 2 {
            return Stat { mean, std_err: f64::INFINITY };
        }
        let mut sq = Kahan::default();
        xs.iter().for_each(|&x| sq.add((x - mean) * (x - mean)));
        Stat { mean, std_err: (sq.total() / (n - 1.0) / n).sqrt() }
    }

    pub fn ci_is_finite(&self) -> bool {
        self.std_err.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub target: Target,
    pub realized: Stat,
    pub posterior: Option<Stat>,
    /// Large-system prediction of the same quantity, when one exists.
    pub replica: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub scheme: String,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub dims: Dims,
    pub rows: Vec<McRow>,
    pub degenerate_trials: usize,
}

impl McReport {
    pub fn row(&self, target: Target) -> Option<&McRow> {
        self.rows.iter().find(|r| r.target == target)
    }
}

/// Replica predictions of the quantities a scheme estimates. Defined for
/// the perfect-CSI scheme, and for the pilot-based schemes when every cell
/// has known pilots.
pub fn replica_prediction(s: &Scenario, scheme: Scheme) -> Result<Option<Vec<(Target, f64)>>> {
    let config = SolverConfig::default();
    let all: Vec<usize> = (0..s.cells()).collect();
    match scheme {
        Scheme::PerfectCsiLmmse => {
            let pins = all.iter().fold(Pins::none(), |p, &c| p.with(Target::MseH(c), 0.0));
            let sol = solver::solve(s, &pins, &config)?;
            let p = &sol.selected().params;
            Ok(Some(all.iter().map(|&c| (Target::MseX(c, DATA), p.mse_x[c][DATA])).collect()))
        }
        Scheme::PilotMmseChannel | Scheme::PilotThenLmmseData => {
            if known_pilot_cells(s).len() != s.cells() || s.beta[TRAINING] <= 0.0 {
                return Ok(None);
            }
            let mut pilots_only = s.clone();
            pilots_only.beta[DATA] = 0.0;
            let stage1 = solver::solve(&pilots_only, &Pins::none(), &config)?;
            let mse_h = stage1.selected().params.mse_h.clone();
            let mut out: Vec<(Target, f64)> =
                all.iter().map(|&c| (Target::MseH(c), mse_h[c])).collect();
            if scheme == Scheme::PilotThenLmmseData {
                let pins = all.iter().fold(Pins::none(), |p, &c| p.with(Target::MseH(c), mse_h[c]));
                let sol = solver::solve(s, &pins, &config)?;
                let p = &sol.selected().params;
                out.extend(all.iter().map(|&c| (Target::MseX(c, DATA), p.mse_x[c][DATA])));
            }
            Ok(Some(out))
        }
        Scheme::SvdBlind { .. } => Ok(None),
    }
}

/// Runs `config.trials` independent trials and aggregates them.
pub fn run(s: &Scenario, config: &McConfig, execution: Execution) -> Result<McReport> {
    if config.trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let dims = Dims::derive(s, config.k)?;
    let outcomes = execution.map_range(config.trials, |trial| {
        let mut rng = trial_rng(config.seed, trial as u64);
        let inst = generate_instance(s, config.k, &mut rng)?;
        estimate(s, &inst, config.scheme)
    });
    let outcomes: Vec<Estimate> = outcomes.into_iter().collect::<Result<_>>()?;
    let targets = outcomes[0].targets.clone();
    let predictions = replica_prediction(s, config.scheme)?;
    let rows = targets
        .iter()
        .enumerate()
        .map(|(i, &target)| {
            let realized: Vec<f64> = outcomes.iter().map(|o| o.realized[i]).collect();
            let posterior = outcomes[0].posterior.as_ref().map(|_| {
                let xs: Vec<f64> =
                    outcomes.iter().map(|o| o.posterior.as_ref().expect("same scheme")[i]).collect();
                Stat::from_samples(&xs)
            });
            let replica = predictions
                .as_ref()
                .and_then(|p| p.iter().find(|(t, _)| *t == target).map(|(_, v)| *v));
            McRow { target, realized: Stat::from_samples(&realized), posterior, replica }
        })
        .collect();
    Ok(McReport {
        scheme: config.scheme.label().to_string(),
        k: config.k,
        trials: config.trials,
        seed: config.seed,
        dims,
        rows,
        degenerate_trials: outcomes.iter().filter(|o| o.degenerate).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{example1_perfect_csi, example2_jcd, Modulation, SingleCell};
    use approx::assert_abs_diff_eq;

    fn single(alpha: f64, beta: [f64; 2], sigma2: f64) -> Scenario {
        example2_jcd(&SingleCell {
            alpha,
            beta1: beta[0],
            beta2: beta[1],
            sigma2,
            gain: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            data: Modulation::Gaussian,
        })
        .unwrap()
        .scenario
    }

    #[test]
    fn trivial_noiseless_scalar_block() {
        let s = single(0.5, [0.5, 0.5], 0.0);
        let inst = generate_instance(&s, 2, &mut trial_rng(3, 0)).unwrap();
        assert_eq!(inst.dims.n, 1);
        let expect = (&inst.h[0] * &inst.x[0][DATA]) / Complex64::from(2f64.sqrt());
        assert_abs_diff_eq!((&inst.y[DATA] - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rounding_repairs_cell_sizes() {
        let mut s = single(1.0, [1.0, 1.0], 1.0);
        s.load = vec![0.35, 0.35, 0.3];
        s.gain = vec![1.0; 3];
        s.priors = vec![s.priors[0].clone(); 3];
        let d = Dims::derive(&s, 10).unwrap();
        // 3.5 -> 4, 3.5 -> 4, 3 -> 3 sums to 11; the first largest cell shrinks.
        assert_eq!(d.k_cell, vec![3, 4, 3]);
        assert!(Dims::derive(&s, 1).is_err());
    }

    #[test]
    fn same_seed_same_instance() {
        let s = single(2.0, [1.0, 2.0], 0.5);
        let a = generate_instance(&s, 8, &mut trial_rng(42, 7)).unwrap();
        let b = generate_instance(&s, 8, &mut trial_rng(42, 7)).unwrap();
        let c = generate_instance(&s, 8, &mut trial_rng(42, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn huge_noise_leaves_prior_variance() {
        let p = example1_perfect_csi(1.0, 1e12, 1.0, Prior::gaussian(1.0)).unwrap();
        let inst = generate_instance(&p.scenario, 16, &mut trial_rng(1, 0)).unwrap();
        let e = perfect_csi_lmmse(&p.scenario, &inst).unwrap();
        assert_abs_diff_eq!(e.posterior.unwrap()[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_power_data_is_recovered_exactly() {
        let mut s = single(1.0, [1.0, 1.0], 1.0);
        s.priors[0][DATA] = Prior::gaussian(0.0);
        let inst = generate_instance(&s, 8, &mut trial_rng(0, 0)).unwrap();
        let e = pilot_then_lmmse_data(&s, &inst).unwrap();
        assert_eq!(e.realized[1], 0.0);
    }

    #[test]
    fn qpsk_data_is_rejected_by_lmmse() {
        let p = example1_perfect_csi(1.0, 1.0, 1.0, Prior::qpsk(1.0)).unwrap();
        let inst = generate_instance(&p.scenario, 4, &mut trial_rng(0, 0)).unwrap();
        assert!(matches!(perfect_csi_lmmse(&p.scenario, &inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn svd_blind_rejects_empty_subspace() {
        let s = single(2.0, [1.0, 2.0], 0.1);
        let inst = generate_instance(&s, 4, &mut trial_rng(0, 0)).unwrap();
        assert!(svd_blind(&s, &inst, 0).is_err());
        assert!(svd_blind(&s, &inst, 100).is_err());
        assert!(svd_blind(&s, &inst, 4).is_ok());
    }

    #[test]
    fn kahan_beats_naive_summation() {
        let mut k = Kahan::default();
        let mut naive = 0.0;
        k.add(1.0);
        naive += 1.0;
        for _ in 0..10_000 {
            k.add(1e-16);
            naive += 1e-16;
        }
        assert_eq!(naive, 1.0);
        assert_abs_diff_eq!(k.total(), 1.0 + 1e-12, epsilon = 1e-15);
    }

    #[test]
    fn single_trial_has_infinite_error_bar() {
        let s = Stat::from_samples(&[0.3]);
        assert_eq!(s.mean, 0.3);
        assert!(!s.ci_is_finite());
    }

    #[test]
    fn report_is_identical_across_execution_modes() {
        let s = single(1.0, [1.0, 1.0], 1.0);
        let cfg = McConfig { k: 8, trials: 12, seed: 99, scheme: Scheme::PilotThenLmmseData };
        let a = run(&s, &cfg, Execution::Sequential).unwrap();
        let b = run(&s, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|r| r.replica.is_some()));
    }
}
