//! Order parameters and the replica-symmetric update maps.
//!
//! For cell `c` and phase `t` (0 = training, 1 = data) the residual
//! interference power is
//!
//! ```text
//! delta[c][t] = mse_h[c] * Gamma[c][t] + mse_x[c][t] * (G[c] - mse_h[c])
//! ```
//!
//! and, with `den[t] = sigma2 + sum_l k[l] * delta[l][t]`,
//!
//! ```text
//! qtilde_h[c]    = sum_t beta[t] * (Gamma[c][t] - mse_x[c][t]) / den[t]
//! qtilde_x[c][t] = alpha * (G[c] - mse_h[c]) / den[t]
//! ```
//!
//! The MSEs are then the scalar-channel MMSEs at those effective SNRs. A
//! state always carries effective SNRs consistent with its MSEs; one round
//! of the map recomputes every MSE from the current SNRs and then every SNR
//! from the new MSEs (a Jacobi sweep).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{Prior, Snr};

/// Phase index of the training (pilot) segment.
pub const TRAINING: usize = 0;
/// Phase index of the data segment.
pub const DATA: usize = 1;

const SUM_TOL: f64 = 1e-12;
/// Slack allowed on the `[0, prior power]` bounds of order parameters.
const BOUND_SLACK: f64 = 1e-9;

/// Named phase, mostly for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Training,
    Data,
}

impl Phase {
    pub fn index(self) -> usize {
        match self {
            Phase::Training => TRAINING,
            Phase::Data => DATA,
        }
    }
}

/// Full large-system parameterization.
///
/// Absolute sizes do not appear here: only the ratios `N/K = alpha`,
/// `T_t/K = beta[t]` and `K_c/K = load[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Per-cell load fractions `k_c`, summing to one.
    pub load: Vec<f64>,
    /// Antenna ratio `N/K`.
    pub alpha: f64,
    /// Phase ratios `(T_1/K, T_2/K)`.
    pub beta: [f64; 2],
    /// Noise variance.
    pub sigma2: f64,
    /// Large-scale fading power `G_c` of each cell.
    pub gain: Vec<f64>,
    /// Symbol prior per cell and phase.
    pub priors: Vec<[Prior; 2]>,
}

impl Scenario {
    pub fn new(
        load: Vec<f64>,
        alpha: f64,
        beta: [f64; 2],
        sigma2: f64,
        gain: Vec<f64>,
        priors: Vec<[Prior; 2]>,
    ) -> Result<Self> {
        let s = Scenario { load, alpha, beta, sigma2, gain, priors };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.load.len();
        if c == 0 {
            return Err(Error::scenario("at least one cell is required"));
        }
        if self.gain.len() != c || self.priors.len() != c {
            return Err(Error::scenario(format!(
                "per-cell lengths disagree: k has {c}, G has {}, priors has {}",
                self.gain.len(),
                self.priors.len()
            )));
        }
        if let Some(k) = self.load.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::scenario(format!("load fraction must be >= 0, got {k}")));
        }
        let total: f64 = self.load.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::scenario(format!("load fractions must sum to 1, got {total}")));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::scenario(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if let Some(b) = self.beta.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::scenario(format!("phase ratios must be >= 0, got {b}")));
        }
        if self.beta_total() <= 0.0 {
            return Err(Error::scenario("block ratio beta must be > 0"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::scenario(format!("sigma2 must be >= 0, got {}", self.sigma2)));
        }
        if let Some(g) = self.gain.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::scenario(format!("fading power must be >= 0, got {g}")));
        }
        for pair in &self.priors {
            for p in pair {
                p.validate()?;
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.load.len()
    }

    pub fn beta_total(&self) -> f64 {
        self.beta[0] + self.beta[1]
    }

    /// `Gamma_{c,t} = E|X_{c,t}|^2`.
    pub fn symbol_power(&self, c: usize, t: usize) -> f64 {
        self.priors[c][t].second_moment()
    }

    /// Channel prior of cell `c`.
    pub fn channel_prior(&self, c: usize) -> Prior {
        Prior::gaussian(self.gain[c])
    }

    pub(crate) fn check_cell(&self, c: usize) -> Result<()> {
        if c >= self.cells() {
            return Err(Error::IndexOutOfRange(format!("cell {c} (scenario has {})", self.cells())));
        }
        Ok(())
    }

    pub(crate) fn check_phase(t: usize) -> Result<()> {
        if t > DATA {
            return Err(Error::IndexOutOfRange(format!("phase {t} (valid: 0, 1)")));
        }
        Ok(())
    }
}

/// An order parameter that can be addressed (and pinned).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    MseH(usize),
    MseX(usize, usize),
}

impl Target {
    fn check(self, s: &Scenario) -> Result<()> {
        match self {
            Target::MseH(c) => s.check_cell(c),
            Target::MseX(c, t) => {
                s.check_cell(c)?;
                Scenario::check_phase(t)
            }
        }
    }

    /// Largest admissible value: the prior second moment.
    pub fn upper_bound(self, s: &Scenario) -> f64 {
        match self {
            Target::MseH(c) => s.gain[c],
            Target::MseX(c, t) => s.symbol_power(c, t),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::MseH(c) => write!(f, "mseH:{c}"),
            Target::MseX(c, t) => write!(f, "mseX:{c},{t}"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    /// Parses `mseH:<cell>` or `mseX:<cell>,<phase>` (0-based).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("cannot parse order parameter `{s}` (expected mseH:c or mseX:c,t)"));
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        match kind.trim() {
            "mseH" => Ok(Target::MseH(parse(idx)?)),
            "mseX" => {
                let (c, t) = idx.split_once(',').ok_or_else(bad)?;
                Ok(Target::MseX(parse(c)?, parse(t)?))
            }
            _ => Err(bad()),
        }
    }
}

/// MSE entries frozen at given values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pins(BTreeMap<Target, f64>);

impl Pins {
    pub fn none() -> Self {
        Pins::default()
    }

    pub fn with(mut self, target: Target, value: f64) -> Self {
        self.0.insert(target, value);
        self
    }

    pub fn insert(&mut self, target: Target, value: f64) {
        self.0.insert(target, value);
    }

    pub fn get(&self, target: Target) -> Option<f64> {
        self.0.get(&target).copied()
    }

    pub fn contains(&self, target: Target) -> bool {
        self.0.contains_key(&target)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Target, f64)> + '_ {
        self.0.iter().map(|(t, v)| (*t, *v))
    }

    pub fn validate(&self, s: &Scenario) -> Result<()> {
        for (target, value) in self.iter() {
            target.check(s)?;
            let hi = target.upper_bound(s);
            if !(value.is_finite() && (0.0..=hi).contains(&value)) {
                return Err(Error::domain(format!(
                    "pin {target}={value} outside [0, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// The replica state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderParams {
    pub mse_h: Vec<f64>,
    pub mse_x: Vec<[f64; 2]>,
    pub qtilde_h: Vec<f64>,
    pub qtilde_x: Vec<[f64; 2]>,
}

impl OrderParams {
    /// Builds a state from MSE values, computing consistent effective SNRs.
    /// Entries with a `Known` prior are forced to zero.
    pub fn from_mse(s: &Scenario, mse_h: Vec<f64>, mse_x: Vec<[f64; 2]>) -> Result<Self> {
        if mse_h.len() != s.cells() || mse_x.len() != s.cells() {
            return Err(Error::Dimension(format!(
                "order parameters sized for {} cells, scenario has {}",
                mse_h.len(),
                s.cells()
            )));
        }
        let mut p = OrderParams {
            qtilde_h: vec![0.0; mse_h.len()],
            qtilde_x: vec![[0.0; 2]; mse_x.len()],
            mse_h,
            mse_x,
        };
        p.zero_known(s);
        p.refresh_qtilde(s);
        Ok(p)
    }

    /// Total ignorance: every MSE at its prior variance.
    pub fn ignorance(s: &Scenario) -> Self {
        let mse_h = s.gain.clone();
        let mse_x = (0..s.cells())
            .map(|c| [s.symbol_power(c, TRAINING), s.symbol_power(c, DATA)])
            .collect();
        OrderParams::from_mse(s, mse_h, mse_x).expect("sized from scenario")
    }

    /// Near-perfect knowledge: every MSE at `floor` (clipped to the prior power).
    pub fn oracle(s: &Scenario, floor: f64) -> Self {
        let mse_h = s.gain.iter().map(|g| floor.min(*g)).collect();
        let mse_x = (0..s.cells())
            .map(|c| [floor.min(s.symbol_power(c, TRAINING)), floor.min(s.symbol_power(c, DATA))])
            .collect();
        OrderParams::from_mse(s, mse_h, mse_x).expect("sized from scenario")
    }

    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::MseH(c) => self.mse_h[c],
            Target::MseX(c, t) => self.mse_x[c][t],
        }
    }

    fn set(&mut self, target: Target, value: f64) {
        match target {
            Target::MseH(c) => self.mse_h[c] = value,
            Target::MseX(c, t) => self.mse_x[c][t] = value,
        }
    }

    fn zero_known(&mut self, s: &Scenario) {
        for (c, pair) in s.priors.iter().enumerate() {
            for (t, p) in pair.iter().enumerate() {
                if p.is_known() {
                    self.mse_x[c][t] = 0.0;
                }
            }
        }
    }

    /// Recomputes every effective SNR from the current MSEs.
    pub fn refresh_qtilde(&mut self, s: &Scenario) {
        let dens = [denominator(s, self, TRAINING), denominator(s, self, DATA)];
        for c in 0..s.cells() {
            self.qtilde_h[c] = qtilde_h_with(s, self, c, &dens);
            for (t, den) in dens.iter().enumerate() {
                self.qtilde_x[c][t] = qtilde_x_with(s, self, c, *den);
            }
        }
    }

    /// True when some effective SNR hit the `+inf` sentinel.
    pub fn is_saturated(&self) -> bool {
        self.qtilde_h
            .iter()
            .chain(self.qtilde_x.iter().flatten())
            .any(|q| q.is_infinite())
    }

    /// Sum of all MSE entries.
    pub fn total_mse(&self) -> f64 {
        self.mse_h.iter().sum::<f64>() + self.mse_x.iter().flatten().sum::<f64>()
    }

    /// Largest absolute difference over MSE entries not listed in `pins`.
    pub fn max_mse_change(&self, other: &OrderParams, pins: &Pins) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.mse_h.len() {
            if !pins.contains(Target::MseH(c)) {
                worst = worst.max((self.mse_h[c] - other.mse_h[c]).abs());
            }
            for t in 0..2 {
                if !pins.contains(Target::MseX(c, t)) {
                    worst = worst.max((self.mse_x[c][t] - other.mse_x[c][t]).abs());
                }
            }
        }
        worst
    }

    /// Checks the order-parameter invariants against `s`.
    pub fn validate(&self, s: &Scenario) -> Result<()> {
        if self.mse_h.len() != s.cells() || self.mse_x.len() != s.cells() {
            return Err(Error::Dimension("order parameters do not match scenario".into()));
        }
        for c in 0..s.cells() {
            check_bound("mse_h", self.mse_h[c], s.gain[c])?;
            for t in 0..2 {
                check_bound("mse_x", self.mse_x[c][t], s.symbol_power(c, t))?;
                if s.priors[c][t].is_known() && self.mse_x[c][t] != 0.0 {
                    return Err(Error::domain(format!("known entry ({c},{t}) has nonzero MSE")));
                }
            }
        }
        for q in self.qtilde_h.iter().chain(self.qtilde_x.iter().flatten()) {
            if q.is_nan() || *q < 0.0 {
                return Err(Error::domain(format!("effective SNR {q} is not >= 0")));
            }
        }
        Ok(())
    }
}

fn check_bound(name: &str, v: f64, hi: f64) -> Result<()> {
    if !(v >= -BOUND_SLACK && v <= hi + BOUND_SLACK) {
        return Err(Error::domain(format!("{name}={v} outside [0, {hi}]")));
    }
    Ok(())
}

fn delta_unchecked(s: &Scenario, p: &OrderParams, c: usize, t: usize) -> f64 {
    p.mse_h[c] * s.symbol_power(c, t) + p.mse_x[c][t] * (s.gain[c] - p.mse_h[c])
}

fn denominator(s: &Scenario, p: &OrderParams, t: usize) -> f64 {
    s.sigma2
        + (0..s.cells())
            .map(|l| s.load[l] * delta_unchecked(s, p, l, t))
            .sum::<f64>()
}

/// `num / den` with the `+inf` sentinel for a vanishing denominator.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn qtilde_h_with(s: &Scenario, p: &OrderParams, c: usize, dens: &[f64; 2]) -> f64 {
    (0..2)
        .map(|t| {
            let num = s.beta[t] * (s.symbol_power(c, t) - p.mse_x[c][t]).max(0.0);
            if num == 0.0 {
                0.0
            } else {
                ratio(num, dens[t])
            }
        })
        .sum()
}

fn qtilde_x_with(s: &Scenario, p: &OrderParams, c: usize, den: f64) -> f64 {
    ratio(s.alpha * (s.gain[c] - p.mse_h[c]).max(0.0), den)
}

/// Residual interference power `delta[c][t]`.
pub fn delta(s: &Scenario, p: &OrderParams, c: usize, t: usize) -> Result<f64> {
    s.check_cell(c)?;
    Scenario::check_phase(t)?;
    Ok(delta_unchecked(s, p, c, t))
}

/// Interference-plus-noise level `sigma2 + sum_l k_l delta[l][t]` of phase `t`.
pub fn interference_level(s: &Scenario, p: &OrderParams, t: usize) -> Result<f64> {
    Scenario::check_phase(t)?;
    Ok(denominator(s, p, t))
}

/// Effective SNR of the channel of cell `c`.
///
/// Returns `+inf` when a phase with a positive numerator has a zero
/// interference level (only reachable with `sigma2 = 0`).
pub fn update_qtilde_h(s: &Scenario, p: &OrderParams, c: usize) -> Result<f64> {
    s.check_cell(c)?;
    let dens = [denominator(s, p, TRAINING), denominator(s, p, DATA)];
    Ok(qtilde_h_with(s, p, c, &dens))
}

/// Effective SNR of the symbols of cell `c` in phase `t`; `+inf` as in
/// [`update_qtilde_h`].
pub fn update_qtilde_x(s: &Scenario, p: &OrderParams, c: usize, t: usize) -> Result<f64> {
    s.check_cell(c)?;
    Scenario::check_phase(t)?;
    Ok(qtilde_x_with(s, p, c, denominator(s, p, t)))
}

/// Proposed MSEs from the current effective SNRs (no pins, no damping).
fn proposed_mse(s: &Scenario, p: &OrderParams) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    let mut mse_h = Vec::with_capacity(s.cells());
    let mut mse_x = Vec::with_capacity(s.cells());
    for c in 0..s.cells() {
        mse_h.push(s.channel_prior(c).mmse_saturating(p.qtilde_h[c])?);
        let mut row = [0.0; 2];
        for (t, slot) in row.iter_mut().enumerate() {
            *slot = s.priors[c][t].mmse_saturating(p.qtilde_x[c][t])?;
        }
        mse_x.push(row);
    }
    Ok((mse_h, mse_x))
}

/// One full round of the fixed-point map.
pub fn update_mse(s: &Scenario, p: &OrderParams) -> Result<OrderParams> {
    advance(s, p, &Pins::none(), 0.0)
}

/// One damped round honoring pins: unpinned MSEs become
/// `(1 - damping) * proposed + damping * previous`, pinned ones keep their
/// pinned value, then the effective SNRs are refreshed.
pub fn advance(s: &Scenario, p: &OrderParams, pins: &Pins, damping: f64) -> Result<OrderParams> {
    Ok(advance_with_residual(s, p, pins, damping)?.0)
}

/// Like [`advance`], also returning the largest change the *undamped* map
/// would make to an unpinned MSE of `p`.
#[allow(clippy::needless_range_loop)]
pub fn advance_with_residual(
    s: &Scenario,
    p: &OrderParams,
    pins: &Pins,
    damping: f64,
) -> Result<(OrderParams, f64)> {
    let (mse_h, mse_x) = proposed_mse(s, p)?;
    let mut residual: f64 = 0.0;
    for c in 0..s.cells() {
        if !pins.contains(Target::MseH(c)) {
            residual = residual.max((mse_h[c] - p.mse_h[c]).abs());
        }
        for t in 0..2 {
            if !pins.contains(Target::MseX(c, t)) {
                residual = residual.max((mse_x[c][t] - p.mse_x[c][t]).abs());
            }
        }
    }
    let blend = |new: f64, old: f64| {
        if damping == 0.0 {
            new
        } else {
            (1.0 - damping) * new + damping * old
        }
    };
    let mut next = p.clone();
    for c in 0..s.cells() {
        next.mse_h[c] = blend(mse_h[c], p.mse_h[c]);
        for t in 0..2 {
            next.mse_x[c][t] = blend(mse_x[c][t], p.mse_x[c][t]);
        }
    }
    for (target, value) in pins.iter() {
        next.set(target, value);
    }
    next.zero_known(s);
    next.refresh_qtilde(s);
    Ok((next, residual))
}

/// Applies pinned values to `p` and refreshes the effective SNRs.
pub fn pin(s: &Scenario, p: &OrderParams, pins: &Pins) -> Result<OrderParams> {
    pins.validate(s)?;
    let mut next = p.clone();
    for (target, value) in pins.iter() {
        next.set(target, value);
    }
    next.zero_known(s);
    next.refresh_qtilde(s);
    Ok(next)
}

/// Replica-symmetric free entropy (nats) of a state.
///
/// Known symbols and pinned entries are treated as given rather than
/// inferred, so they contribute neither mutual-information nor `mse * q`
/// terms. Requires `sigma2 > 0`.
pub fn free_entropy(s: &Scenario, p: &OrderParams, pins: &Pins) -> Result<f64> {
    if s.sigma2 <= 0.0 {
        return Err(Error::Unsupported("free entropy requires sigma2 > 0".into()));
    }
    let beta = s.beta_total();
    let mut phi = -s.alpha * beta;
    for t in 0..2 {
        let level: f64 = (0..s.cells())
            .map(|c| s.load[c] * delta_unchecked(s, p, c, t))
            .sum();
        phi -= s.alpha * s.beta[t] * (level / s.sigma2).ln_1p();
    }
    for c in 0..s.cells() {
        let k = s.load[c];
        if !pins.contains(Target::MseH(c)) {
            let q = p.qtilde_h[c];
            let info = s.channel_prior(c).mutual_information(Snr::new(q)?);
            phi += s.alpha * k * (p.mse_h[c] * q - info);
        }
        for t in 0..2 {
            let prior = &s.priors[c][t];
            if prior.is_known() || pins.contains(Target::MseX(c, t)) || s.beta[t] == 0.0 {
                continue;
            }
            let q = p.qtilde_x[c][t];
            let info = prior.mutual_information(Snr::new(q)?);
            phi += s.beta[t] * k * (p.mse_x[c][t] * q - info);
        }
    }
    Ok(phi)
}
