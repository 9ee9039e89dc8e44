//! Scalar priors and their denoising statistics on the complex scalar
//! Gaussian channel `Y = sqrt(q) X + W`, `W ~ CN(0, 1)`.
//!
//! Every prior reports its second moment, the MMSE of the posterior-mean
//! estimator and the mutual information `I(X; Y)` in nats.
//!
//! * Gaussian priors use the closed forms `v / (1 + v q)` and `ln(1 + v q)`.
//! * QPSK decouples into two binary-antipodal real channels, each integrated
//!   by Gauss-Hermite quadrature.
//! * Generic discrete constellations are integrated on a 2-D Gauss-Hermite
//!   product grid over the complex noise.
//! * `Known` models pilot symbols: the receiver already knows them, so both
//!   the MMSE and the mutual information are zero.
//!
//! The mutual information of non-Gaussian priors is computed from the
//! conditional-entropy integral directly rather than by integrating the
//! MMSE, so the I-MMSE relation stays an independent check.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussHermite;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss-Hermite nodes used by the binary-antipodal kernels.
pub const BINARY_NODES: usize = 256;

/// Default nodes per axis of the 2-D grid used for generic constellations.
pub const DEFAULT_DISCRETE_NODES: usize = 64;

const PROB_SUM_TOL: f64 = 1e-12;

/// Effective SNR `q >= 0` of the scalar channel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Snr(f64);

impl Snr {
    pub const ZERO: Snr = Snr(0.0);

    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::domain(format!("effective SNR must be finite, got {q}")));
        }
        if q < 0.0 {
            return Err(Error::domain(format!("effective SNR must be >= 0, got {q}")));
        }
        Ok(Snr(q))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A finite complex constellation with probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePrior {
    points: Vec<Complex64>,
    probs: Vec<f64>,
    nodes: usize,
}

impl DiscretePrior {
    pub fn new(points: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        Self::with_nodes(points, probs, DEFAULT_DISCRETE_NODES)
    }

    /// Same as [`DiscretePrior::new`] with an explicit number of quadrature
    /// nodes per noise axis.
    pub fn with_nodes(points: Vec<Complex64>, probs: Vec<f64>, nodes: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("discrete prior needs at least one point"));
        }
        if points.len() != probs.len() {
            return Err(Error::domain(format!(
                "discrete prior has {} points but {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if nodes == 0 {
            return Err(Error::domain("quadrature node count must be positive"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::domain(format!("probabilities must be >= 0, got {p}")));
        }
        if points.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::domain("constellation points must be finite"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::domain(format!("probabilities must sum to 1, got {total}")));
        }
        Ok(DiscretePrior { points, probs, nodes })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn support(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.probs.iter().copied())
            .filter(|(_, p)| *p > 0.0)
    }

    fn second_moment(&self) -> f64 {
        self.support().map(|(x, p)| p * x.norm_sqr()).sum()
    }

    fn variance(&self) -> f64 {
        let mean: Complex64 = self.support().map(|(x, p)| x * p).sum();
        (self.second_moment() - mean.norm_sqr()).max(0.0)
    }

    fn entropy(&self) -> f64 {
        -self.support().map(|(_, p)| p * p.ln()).sum::<f64>()
    }

    /// Expectation over `CN(0, 1)` noise, `E f(W)`, on the product grid.
    fn noise_expectation(&self, mut f: impl FnMut(Complex64) -> f64) -> f64 {
        let rule = hermite_rule(self.nodes);
        let total = rule.integrate(|re| rule.integrate(|im| f(Complex64::new(re, im))));
        total / std::f64::consts::PI
    }

    fn mmse(&self, q: f64) -> f64 {
        if q == 0.0 {
            return self.variance();
        }
        let sq = q.sqrt();
        let support: Vec<_> = self.support().collect();
        let mut logw = vec![0.0; support.len()];
        let mut total = 0.0;
        for &(x_true, p_true) in &support {
            let err = self.noise_expectation(|w| {
                for (lw, &(x, p)) in logw.iter_mut().zip(&support) {
                    *lw = p.ln() - (w + (x_true - x) * sq).norm_sqr();
                }
                let peak = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut norm = 0.0;
                let mut mean = Complex64::new(0.0, 0.0);
                for (lw, &(x, _)) in logw.iter().zip(&support) {
                    let e = (lw - peak).exp();
                    norm += e;
                    mean += x * e;
                }
                (x_true - mean / norm).norm_sqr()
            });
            total += p_true * err;
        }
        total
    }

    fn mutual_information(&self, q: f64) -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        let sq = q.sqrt();
        let support: Vec<_> = self.support().collect();
        let mut total = 0.0;
        for &(x_true, p_true) in &support {
            // ln p(y|x) - ln p(y) = -|w|^2 - ln sum_j p_j exp(-|w + sqrt(q)(x - x_j)|^2)
            let info = self.noise_expectation(|w| {
                let w2 = w.norm_sqr();
                let terms = support
                    .iter()
                    .map(|&(x, p)| p.ln() + w2 - (w + (x_true - x) * sq).norm_sqr());
                -log_sum_exp(terms)
            });
            total += p_true * info;
        }
        total.clamp(0.0, self.entropy())
    }
}

/// Scalar source distribution. All powers are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// Circularly-symmetric complex Gaussian `CN(0, variance)`.
    Gaussian { variance: f64 },
    /// Uniform QPSK with per-symbol power `power`.
    Qpsk { power: f64 },
    Discrete(DiscretePrior),
    /// Symbols known to the receiver (pilots); `power` is their average power.
    Known { power: f64 },
}

impl Prior {
    pub fn gaussian(variance: f64) -> Self {
        Prior::Gaussian { variance }
    }

    pub fn qpsk(power: f64) -> Self {
        Prior::Qpsk { power }
    }

    pub fn known(power: f64) -> Self {
        Prior::Known { power }
    }

    /// Checks that declared powers are finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::Gaussian { variance: v } | Prior::Qpsk { power: v } | Prior::Known { power: v } => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::domain(format!("prior power must be finite and >= 0, got {v}")));
                }
                Ok(())
            }
            Prior::Discrete(_) => Ok(()),
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, Prior::Known { .. })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Prior::Gaussian { .. })
    }

    /// `E|X|^2`.
    pub fn second_moment(&self) -> f64 {
        match self {
            Prior::Gaussian { variance } => *variance,
            Prior::Qpsk { power } | Prior::Known { power } => *power,
            Prior::Discrete(d) => d.second_moment(),
        }
    }

    /// MMSE at the given effective SNR, always in `[0, second_moment]`.
    pub fn mmse(&self, snr: Snr) -> f64 {
        let q = snr.get();
        let value = match self {
            Prior::Known { .. } => 0.0,
            Prior::Gaussian { variance } => variance / (1.0 + variance * q),
            Prior::Qpsk { power } => power * binary_mmse(q * power),
            Prior::Discrete(d) => d.mmse(q),
        };
        value.clamp(0.0, self.second_moment())
    }

    /// MMSE at `q`, treating `q = +inf` as a noiseless observation.
    pub fn mmse_saturating(&self, q: f64) -> Result<f64> {
        if q == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(self.mmse(Snr::new(q)?))
    }

    /// `I(X; sqrt(q) X + W)` in nats.
    pub fn mutual_information(&self, snr: Snr) -> f64 {
        let q = snr.get();
        match self {
            Prior::Known { .. } => 0.0,
            Prior::Gaussian { variance } => (variance * q).ln_1p(),
            Prior::Qpsk { power } => 2.0 * binary_mutual_information(q * power),
            Prior::Discrete(d) => d.mutual_information(q),
        }
    }
}

/// `E{|X - E{X|Y}|^2}` for `Y = sqrt(qtilde) X + W`.
pub fn scalar_mmse(prior: &Prior, qtilde: f64) -> Result<f64> {
    Ok(prior.mmse(Snr::new(qtilde)?))
}

/// `I(X; Y)` in nats for `Y = sqrt(qtilde) X + W`.
pub fn scalar_mi(prior: &Prior, qtilde: f64) -> Result<f64> {
    Ok(prior.mutual_information(Snr::new(qtilde)?))
}

/// MMSE of a unit-power binary-antipodal input on the real channel
/// `y = sqrt(s) x + z`, `z ~ N(0, 1)`: `1 - E tanh(s + sqrt(s) z)`.
pub fn binary_mmse(s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let rs = s.sqrt();
    // 1 - tanh(a) = 2 / (1 + e^{2a}), stable for large a.
    gaussian_expectation(|z| 2.0 / (1.0 + (2.0 * (s + rs * z)).exp()))
}

/// Mutual information (nats) of the same real binary-antipodal channel:
/// `ln 2 - E ln(1 + exp(-2 (s + sqrt(s) z)))`.
pub fn binary_mutual_information(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let rs = s.sqrt();
    let loss = gaussian_expectation(|z| softplus(-2.0 * (s + rs * z)));
    (std::f64::consts::LN_2 - loss).clamp(0.0, std::f64::consts::LN_2)
}

/// `E f(Z)` for `Z ~ N(0, 1)`.
fn gaussian_expectation(mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = hermite_rule(BINARY_NODES);
    rule.integrate(|x| f(std::f64::consts::SQRT_2 * x)) / std::f64::consts::PI.sqrt()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let peak = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + terms.map(|t| (t - peak).exp()).sum::<f64>().ln()
}

fn hermite_rule(nodes: usize) -> Arc<GaussHermite> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(nodes)
        .or_insert_with(|| {
            let deg = NonZeroUsize::new(nodes).expect("node count checked at construction");
            Arc::new(GaussHermite::new(deg))
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bpsk() -> Prior {
        Prior::Discrete(DiscretePrior::new(vec![1.0.into(), (-1.0).into()], vec![0.5, 0.5]).unwrap())
    }

    fn fine(prior: Prior, nodes: usize) -> Prior {
        match prior {
            Prior::Discrete(d) => {
                Prior::Discrete(DiscretePrior::with_nodes(d.points, d.probs, nodes).unwrap())
            }
            other => other,
        }
    }

    fn qpsk_points(power: f64) -> Prior {
        let a = (power / 2.0).sqrt();
        let pts = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .map(|&(r, i)| Complex64::new(a * r, a * i))
            .collect();
        Prior::Discrete(DiscretePrior::new(pts, vec![0.25; 4]).unwrap())
    }

    #[test]
    fn second_moments() {
        assert_eq!(Prior::gaussian(1.0).second_moment(), 1.0);
        assert_eq!(Prior::qpsk(2.0).second_moment(), 2.0);
        assert_eq!(bpsk().second_moment(), 1.0);
        assert_eq!(Prior::known(0.7).second_moment(), 0.7);
    }

    #[test]
    fn mmse_examples() {
        assert_eq!(scalar_mmse(&Prior::gaussian(1.0), 0.0).unwrap(), 1.0);
        assert_eq!(scalar_mmse(&Prior::gaussian(1.0), 1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(scalar_mmse(&Prior::qpsk(1.0), 0.0).unwrap(), 1.0);
        assert_eq!(scalar_mmse(&Prior::known(1.0), 0.37).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_closed_form_is_exact() {
        for &(v, q) in &[(1.0, 0.3), (2.5, 7.0), (0.1, 100.0)] {
            let m = scalar_mmse(&Prior::gaussian(v), q).unwrap();
            assert_eq!(m, v / (1.0 + v * q));
        }
    }

    #[test]
    fn mi_examples() {
        assert_eq!(scalar_mi(&Prior::gaussian(1.0), 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            scalar_mi(&Prior::gaussian(1.0), std::f64::consts::E - 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let sat = scalar_mi(&Prior::qpsk(1.0), 1e4).unwrap();
        assert_abs_diff_eq!(sat, 4f64.ln(), epsilon = 1e-3);
    }

    #[test]
    fn rejects_bad_snr() {
        assert!(scalar_mmse(&Prior::gaussian(1.0), -1e-3).is_err());
        assert!(scalar_mmse(&Prior::gaussian(1.0), f64::NAN).is_err());
        assert!(scalar_mi(&Prior::qpsk(1.0), f64::INFINITY).is_err());
        assert_eq!(Prior::qpsk(1.0).mmse_saturating(f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn discrete_validation() {
        assert!(DiscretePrior::new(vec![], vec![]).is_err());
        assert!(DiscretePrior::new(vec![1.0.into()], vec![0.9]).is_err());
        assert!(DiscretePrior::new(vec![1.0.into(), 2.0.into()], vec![1.2, -0.2]).is_err());
        assert!(DiscretePrior::new(vec![1.0.into()], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn generic_grid_matches_decoupled_qpsk() {
        let coarse = qpsk_points(1.0);
        let dense = fine(qpsk_points(1.0), 200);
        for &q in &[0.05, 0.5, 2.0, 6.0] {
            let snr = Snr::new(q).unwrap();
            let a = Prior::qpsk(1.0).mmse(snr);
            assert_abs_diff_eq!(a, coarse.mmse(snr), epsilon = 1e-4);
            assert_abs_diff_eq!(a, dense.mmse(snr), epsilon = 1e-7);
            let a = Prior::qpsk(1.0).mutual_information(snr);
            assert_abs_diff_eq!(a, coarse.mutual_information(snr), epsilon = 1e-4);
            assert_abs_diff_eq!(a, dense.mutual_information(snr), epsilon = 1e-7);
        }
    }

    #[test]
    fn bpsk_complex_matches_real_binary_kernel() {
        // Real BPSK in complex noise only sees the real noise component of
        // variance 1/2, i.e. a real channel at SNR 2q.
        for &q in &[0.1, 1.0, 3.0] {
            let m = fine(bpsk(), 200).mmse(Snr::new(q).unwrap());
            assert_abs_diff_eq!(m, binary_mmse(2.0 * q), epsilon = 1e-6);
        }
    }

    #[test]
    fn discrete_mi_bounded_by_entropy() {
        let mi = qpsk_points(1.0).mutual_information(Snr::new(400.0).unwrap());
        assert!(mi <= 4f64.ln() + 1e-12);
        assert_abs_diff_eq!(mi, 4f64.ln(), epsilon = 1e-6);
    }
}
