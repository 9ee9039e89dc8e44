//! Damped fixed-point iteration over the replica map, multi-start fixed
//! point selection, parameter sweeps and transition localization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::priors::Prior;
use crate::replica::{self, OrderParams, Pins, Scenario, Target, DATA};

/// MSE floor of the oracle start; keeps `sigma2 = 0` denominators positive.
pub const ORACLE_FLOOR: f64 = 1e-12;

/// Starting point of one fixed-point run.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Every MSE at its prior variance.
    Ignorance,
    /// Every unpinned MSE at [`ORACLE_FLOOR`].
    Oracle,
    Custom { label: String, params: OrderParams },
}

impl Init {
    pub fn label(&self) -> &str {
        match self {
            Init::Ignorance => "ignorance",
            Init::Oracle => "oracle",
            Init::Custom { label, .. } => label,
        }
    }

    fn start(&self, s: &Scenario, pins: &Pins) -> Result<OrderParams> {
        let raw = match self {
            Init::Ignorance => OrderParams::ignorance(s),
            Init::Oracle => OrderParams::oracle(s, ORACLE_FLOOR),
            Init::Custom { params, .. } => {
                OrderParams::from_mse(s, params.mse_h.clone(), params.mse_x.clone())?
            }
        };
        replica::pin(s, &raw, pins)
    }
}

/// Rule picking one fixed point when several coexist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// Largest free entropy when `sigma2 > 0`; otherwise the branch reached
    /// from the ignorance start, with a warning.
    Auto,
    FreeEntropy,
    MinTotalMse,
    /// The fixed point reached from the start with this label.
    Branch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the previous iterate in the damped update, in `[0, 1)`.
    pub damping: f64,
    /// Convergence threshold on the largest undamped MSE change.
    pub tol: f64,
    pub max_iter: usize,
    pub inits: Vec<Init>,
    pub selection: Selection,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            damping: 0.0,
            tol: 1e-10,
            max_iter: 10_000,
            inits: vec![Init::Ignorance, Init::Oracle],
            selection: Selection::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::domain(format!("damping must be in [0, 1), got {}", self.damping)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::domain(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be >= 1"));
        }
        if self.inits.is_empty() {
            return Err(Error::domain("at least one initialization is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub params: OrderParams,
    pub iterations: usize,
    /// Largest undamped MSE change at the returned state.
    pub residual: f64,
    /// Free entropy, absent when `sigma2 = 0`.
    pub phi: Option<f64>,
    pub converged: bool,
    pub init_label: String,
    /// Other starts that ended at the same point.
    pub merged_from: Vec<String>,
}

impl FixedPoint {
    pub fn reached_from(&self, label: &str) -> bool {
        self.init_label == label || self.merged_from.iter().any(|l| l == label)
    }
}

/// All distinct fixed points found for one scenario plus the selected one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub fixed_points: Vec<FixedPoint>,
    pub selected: usize,
    pub warning: Option<String>,
}

impl Solution {
    pub fn selected(&self) -> &FixedPoint {
        &self.fixed_points[self.selected]
    }

    pub fn all_converged(&self) -> bool {
        self.fixed_points.iter().all(|f| f.converged)
    }
}

/// Runs the damped iteration from one start.
pub fn iterate(s: &Scenario, pins: &Pins, init: &Init, config: &SolverConfig) -> Result<FixedPoint> {
    let mut state = init.start(s, pins)?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let (next, r) = replica::advance_with_residual(s, &state, pins, config.damping)?;
        iterations += 1;
        residual = r;
        if r <= config.tol {
            converged = true;
            break;
        }
        if !r.is_finite() {
            break;
        }
        state = next;
    }
    let phi = if s.sigma2 > 0.0 {
        Some(replica::free_entropy(s, &state, pins)?)
    } else {
        None
    };
    Ok(FixedPoint {
        params: state,
        iterations,
        residual,
        phi,
        converged,
        init_label: init.label().to_string(),
        merged_from: Vec::new(),
    })
}

fn same_point(a: &OrderParams, b: &OrderParams, tol: f64) -> bool {
    a.max_mse_change(b, &Pins::none()) <= tol
}

/// Solves the fixed-point system from every configured start.
///
/// Results reaching the same point (all MSEs within `10 * tol`) are merged;
/// the selected point is chosen by `config.selection`. Non-convergence is
/// reported through [`FixedPoint::converged`], not as an error.
pub fn solve(s: &Scenario, pins: &Pins, config: &SolverConfig) -> Result<Solution> {
    s.validate()?;
    pins.validate(s)?;
    config.validate()?;
    let mut points: Vec<FixedPoint> = Vec::new();
    for init in &config.inits {
        let fp = iterate(s, pins, init, config)?;
        match points
            .iter_mut()
            .find(|p| same_point(&p.params, &fp.params, 10.0 * config.tol))
        {
            Some(existing) => {
                existing.merged_from.push(fp.init_label);
                existing.converged |= fp.converged;
            }
            None => points.push(fp),
        }
    }
    let (selected, warning) = select(s, &points, &config.selection)?;
    Ok(Solution { fixed_points: points, selected, warning })
}

fn select(s: &Scenario, points: &[FixedPoint], rule: &Selection) -> Result<(usize, Option<String>)> {
    let pool: Vec<usize> = if points.iter().any(|p| p.converged) {
        (0..points.len()).filter(|&i| points[i].converged).collect()
    } else {
        (0..points.len()).collect()
    };
    let best_by = |key: &dyn Fn(&FixedPoint) -> f64| {
        pool.iter()
            .copied()
            .fold(None::<usize>, |best, i| match best {
                Some(b) if key(&points[b]) >= key(&points[i]) => Some(b),
                _ => Some(i),
            })
            .expect("at least one fixed point")
    };
    match rule {
        Selection::Auto if s.sigma2 > 0.0 => select(s, points, &Selection::FreeEntropy),
        Selection::Auto => {
            let (i, _) = select(s, points, &Selection::Branch(Init::Ignorance.label().into()))?;
            Ok((
                i,
                Some("sigma2 = 0: free entropy unavailable, reporting the branch reached from ignorance".into()),
            ))
        }
        Selection::FreeEntropy => {
            if s.sigma2 <= 0.0 {
                return Err(Error::Unsupported("free-entropy selection requires sigma2 > 0".into()));
            }
            Ok((best_by(&|p| p.phi.unwrap_or(f64::NEG_INFINITY)), None))
        }
        Selection::MinTotalMse => Ok((best_by(&|p| -p.params.total_mse()), None)),
        Selection::Branch(label) => points
            .iter()
            .position(|p| p.reached_from(label))
            .map(|i| (i, None))
            .ok_or_else(|| Error::domain(format!("no start labelled `{label}`"))),
    }
}

/// A scalar scenario parameter that sweeps and overrides can address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Alpha,
    /// Training ratio with the total block ratio held fixed.
    Beta1,
    /// Data ratio with the training ratio held fixed.
    Beta2,
    /// Total block ratio with the training ratio held fixed.
    Beta,
    Sigma2,
    /// Fading power of one cell.
    Gain(usize),
    /// Symbol power of one phase, applied to every cell.
    Gamma(usize),
    /// Load of one cell; the other cells are rescaled to keep the sum at one.
    Load(usize),
}

impl Axis {
    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::domain(format!("unknown parameter `{name}`"));
        let indexed = |prefix: &str| -> Option<Result<usize>> {
            name.strip_prefix(prefix)
                .map(|rest| rest.parse::<usize>().map_err(|_| bad()))
        };
        Ok(match name {
            "alpha" => Axis::Alpha,
            "beta1" => Axis::Beta1,
            "beta2" => Axis::Beta2,
            "beta" => Axis::Beta,
            "sigma2" => Axis::Sigma2,
            _ => {
                if let Some(c) = indexed("G.") {
                    Axis::Gain(c?)
                } else if let Some(t) = indexed("Gamma.") {
                    Axis::Gamma(t?)
                } else if let Some(c) = indexed("k.") {
                    Axis::Load(c?)
                } else {
                    return Err(bad());
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            Axis::Alpha => "alpha".into(),
            Axis::Beta1 => "beta1".into(),
            Axis::Beta2 => "beta2".into(),
            Axis::Beta => "beta".into(),
            Axis::Sigma2 => "sigma2".into(),
            Axis::Gain(c) => format!("G.{c}"),
            Axis::Gamma(t) => format!("Gamma.{t}"),
            Axis::Load(c) => format!("k.{c}"),
        }
    }

    /// Returns a copy of `s` with this parameter set to `value`.
    pub fn apply(&self, s: &Scenario, value: f64) -> Result<Scenario> {
        let mut out = s.clone();
        match *self {
            Axis::Alpha => out.alpha = value,
            Axis::Beta1 => {
                out.beta = [value, s.beta_total() - value];
            }
            Axis::Beta2 => out.beta[DATA] = value,
            Axis::Beta => out.beta[DATA] = value - s.beta[0],
            Axis::Sigma2 => out.sigma2 = value,
            Axis::Gain(c) => {
                s.check_cell(c)?;
                out.gain[c] = value;
            }
            Axis::Gamma(t) => {
                Scenario::check_phase(t)?;
                for pair in &mut out.priors {
                    pair[t] = match &pair[t] {
                        Prior::Gaussian { .. } => Prior::gaussian(value),
                        Prior::Qpsk { .. } => Prior::qpsk(value),
                        Prior::Known { .. } => Prior::known(value),
                        Prior::Discrete(_) => {
                            return Err(Error::domain(
                                "cannot rescale the power of an explicit discrete constellation",
                            ))
                        }
                    };
                }
            }
            Axis::Load(c) => {
                s.check_cell(c)?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::scenario(format!("load fraction {value} outside [0, 1]")));
                }
                let rest: f64 = (0..s.cells()).filter(|&l| l != c).map(|l| s.load[l]).sum();
                let others = s.cells() - 1;
                for l in 0..s.cells() {
                    out.load[l] = if l == c {
                        value
                    } else if rest > 0.0 {
                        s.load[l] / rest * (1.0 - value)
                    } else {
                        (1.0 - value) / others as f64
                    };
                }
                if others == 0 && value != 1.0 {
                    return Err(Error::scenario("a single cell must carry the whole load"));
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    /// Seed each grid point with the previous point's selected solution in
    /// addition to the configured starts. Forces sequential evaluation.
    pub warm_start: bool,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub solution: Solution,
}

/// Label of the warm-start initialization used by sweeps.
pub const WARM_LABEL: &str = "warm";

/// Solves `template` at every grid value of `axis`.
pub fn sweep(
    template: &Scenario,
    pins: &Pins,
    axis: Axis,
    grid: &[f64],
    config: &SolverConfig,
    options: SweepOptions,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::domain("sweep grid is empty"));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::domain("sweep grid must be strictly monotone"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("sweep grid must be finite"));
    }
    let scenarios = grid
        .iter()
        .map(|&v| axis.apply(template, v))
        .collect::<Result<Vec<_>>>()?;

    if !options.warm_start {
        let solved = options
            .execution
            .map(&scenarios, |s| solve(s, pins, config));
        return grid
            .iter()
            .zip(solved)
            .map(|(&value, sol)| Ok(SweepPoint { value, solution: sol? }))
            .collect();
    }

    let mut out: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    for (&value, s) in grid.iter().zip(&scenarios) {
        let mut cfg = config.clone();
        if let Some(prev) = out.last() {
            cfg.inits.push(Init::Custom {
                label: WARM_LABEL.into(),
                params: prev.solution.selected().params.clone(),
            });
        }
        out.push(SweepPoint { value, solution: solve(s, pins, &cfg)? });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionReport {
    pub sweep_axis: String,
    pub observable: String,
    /// Final `[low, high]` bracket containing the jump.
    pub bracket: [f64; 2],
    /// Change of the observable across the final bracket.
    pub jump_size: f64,
    /// Final bracket width.
    pub resolved_to: f64,
    /// Observable at the low and high ends.
    pub values: [f64; 2],
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TransitionOutcome {
    Found(TransitionReport),
    NoTransition { reason: String },
}

impl TransitionOutcome {
    pub fn report(&self) -> Option<&TransitionReport> {
        match self {
            TransitionOutcome::Found(r) => Some(r),
            TransitionOutcome::NoTransition { .. } => None,
        }
    }
}

/// Bisects `bracket` on `axis` for a discontinuity of the selected value of
/// `observable` larger than `jump_threshold`.
///
/// The half keeping the larger change is retained each step. A steep but
/// continuous curve shrinks to a change below the threshold and is reported
/// as no transition.
#[allow(clippy::too_many_arguments)]
pub fn locate_transition(
    template: &Scenario,
    pins: &Pins,
    axis: Axis,
    bracket: (f64, f64),
    config: &SolverConfig,
    jump_threshold: f64,
    width_target: f64,
    observable: Target,
) -> Result<TransitionOutcome> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(width_target > 0.0 && jump_threshold >= 0.0) {
        return Err(Error::domain("width target must be > 0 and jump threshold >= 0"));
    }
    if lo == hi {
        return Ok(TransitionOutcome::NoTransition { reason: "degenerate bracket".into() });
    }
    let mut solves = 0;
    let mut eval = |v: f64| -> Result<f64> {
        solves += 1;
        let s = axis.apply(template, v)?;
        Ok(solve(&s, pins, config)?.selected().params.get(observable))
    };
    let mut f_lo = eval(lo)?;
    let mut f_hi = eval(hi)?;
    if (f_hi - f_lo).abs() <= jump_threshold {
        return Ok(TransitionOutcome::NoTransition {
            reason: format!("change {} across the bracket is below the threshold", (f_hi - f_lo).abs()),
        });
    }
    while hi - lo > width_target {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(mid)?;
        if (f_mid - f_lo).abs() >= (f_hi - f_mid).abs() {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let jump = (f_hi - f_lo).abs();
    if jump <= jump_threshold {
        return Ok(TransitionOutcome::NoTransition {
            reason: format!("curve is continuous: change {jump} over width {}", hi - lo),
        });
    }
    Ok(TransitionOutcome::Found(TransitionReport {
        sweep_axis: axis.name(),
        observable: observable.to_string(),
        bracket: [lo, hi],
        jump_size: jump,
        resolved_to: hi - lo,
        values: [f_lo, f_hi],
        solves,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replica::TRAINING;
    use approx::assert_abs_diff_eq;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn perfect_csi(alpha: f64, sigma2: f64) -> (Scenario, Pins) {
        let s = Scenario::new(
            vec![1.0],
            alpha,
            [0.0, 1.0],
            sigma2,
            vec![1.0],
            vec![[Prior::known(1.0), Prior::gaussian(1.0)]],
        )
        .unwrap();
        (s, Pins::none().with(Target::MseH(0), 0.0))
    }

    #[test]
    fn perfect_csi_golden_root() {
        let (s, pins) = perfect_csi(1.0, 1.0);
        let sol = solve(&s, &pins, &SolverConfig::default()).unwrap();
        assert_eq!(sol.fixed_points.len(), 1);
        let fp = sol.selected();
        assert!(fp.converged);
        assert_abs_diff_eq!(fp.params.mse_x[0][DATA], GOLDEN, epsilon = 1e-9);
        assert_eq!(fp.params.mse_h[0], 0.0);
    }

    #[test]
    fn pilot_only_golden_root() {
        let s = Scenario::new(
            vec![1.0],
            1.0,
            [1.0, 0.0],
            1.0,
            vec![1.0],
            vec![[Prior::known(1.0), Prior::gaussian(1.0)]],
        )
        .unwrap();
        let sol = solve(&s, &Pins::none(), &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.selected().params.mse_h[0], GOLDEN, epsilon = 1e-9);
    }

    #[test]
    fn converged_points_are_fixed_points() {
        let (s, pins) = perfect_csi(3.0, 0.2);
        let cfg = SolverConfig::default();
        let sol = solve(&s, &pins, &cfg).unwrap();
        for fp in &sol.fixed_points {
            let next = replica::advance(&s, &fp.params, &pins, 0.0).unwrap();
            assert!(next.max_mse_change(&fp.params, &pins) <= cfg.tol);
        }
    }

    #[test]
    fn damping_does_not_change_the_basin() {
        let s = Scenario::new(
            vec![1.0],
            2.0,
            [0.5, 1.5],
            0.3,
            vec![1.0],
            vec![[Prior::known(1.0), Prior::gaussian(1.0)]],
        )
        .unwrap();
        let base = SolverConfig { inits: vec![Init::Ignorance], ..Default::default() };
        let reference = solve(&s, &Pins::none(), &base).unwrap().selected().params.clone();
        for d in [0.3, 0.7] {
            let cfg = SolverConfig { damping: d, max_iter: 100_000, ..base.clone() };
            let p = solve(&s, &Pins::none(), &cfg).unwrap().selected().params.clone();
            assert!(p.max_mse_change(&reference, &Pins::none()) <= 100.0 * cfg.tol);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let (s, pins) = perfect_csi(1.0, 1.0);
        let cfg = SolverConfig { max_iter: 2, ..Default::default() };
        let sol = solve(&s, &pins, &cfg).unwrap();
        assert!(!sol.selected().converged);
        assert_eq!(sol.selected().iterations, 2);
    }

    #[test]
    fn config_validation() {
        let (s, pins) = perfect_csi(1.0, 1.0);
        for cfg in [
            SolverConfig { damping: 1.0, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
            SolverConfig { inits: vec![], ..Default::default() },
        ] {
            assert!(solve(&s, &pins, &cfg).is_err());
        }
    }

    #[test]
    fn pinned_entries_never_move() {
        let s = Scenario::new(
            vec![1.0],
            2.0,
            [1.0, 1.0],
            0.5,
            vec![1.0],
            vec![[Prior::gaussian(1.0), Prior::gaussian(1.0)]],
        )
        .unwrap();
        let pins = Pins::none().with(Target::MseX(0, TRAINING), 0.0).with(Target::MseH(0), 0.3);
        let mut p = replica::pin(&s, &OrderParams::ignorance(&s), &pins).unwrap();
        for _ in 0..50 {
            p = replica::advance(&s, &p, &pins, 0.2).unwrap();
            assert_eq!(p.mse_h[0], 0.3);
            assert_eq!(p.mse_x[0][TRAINING], 0.0);
        }
    }

    #[test]
    fn singleton_sweep_is_one_solve() {
        let (s, pins) = perfect_csi(1.0, 1.0);
        let out = sweep(&s, &pins, Axis::Alpha, &[1.0], &SolverConfig::default(), SweepOptions::default())
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out[0].solution.selected().params.mse_x[0][DATA], GOLDEN, epsilon = 1e-9);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let (s, pins) = perfect_csi(1.0, 1.0);
        let cfg = SolverConfig::default();
        let opts = SweepOptions::default();
        assert!(sweep(&s, &pins, Axis::Alpha, &[], &cfg, opts).is_err());
        assert!(sweep(&s, &pins, Axis::Alpha, &[1.0, 2.0, 2.0], &cfg, opts).is_err());
        assert!(sweep(&s, &pins, Axis::Alpha, &[1.0, -1.0], &cfg, opts).is_err());
    }

    #[test]
    fn perfect_csi_mse_decreases_in_alpha() {
        let (s, pins) = perfect_csi(1.0, 0.5);
        let grid: Vec<f64> = (0..30).map(|i| 0.25 * 1.2f64.powi(i)).collect();
        let out = sweep(&s, &pins, Axis::Alpha, &grid, &SolverConfig::default(), SweepOptions::default())
            .unwrap();
        let mses: Vec<f64> = out.iter().map(|p| p.solution.selected().params.mse_x[0][DATA]).collect();
        assert!(mses.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn degenerate_and_reversed_brackets() {
        let (s, pins) = perfect_csi(1.0, 1.0);
        let cfg = SolverConfig::default();
        let obs = Target::MseX(0, DATA);
        let out = locate_transition(&s, &pins, Axis::Alpha, (2.0, 2.0), &cfg, 0.1, 1e-3, obs).unwrap();
        assert!(out.report().is_none());
        assert!(locate_transition(&s, &pins, Axis::Alpha, (3.0, 2.0), &cfg, 0.1, 1e-3, obs).is_err());
    }

    #[test]
    fn smooth_gaussian_curve_has_no_transition() {
        let (s, pins) = perfect_csi(1.0, 0.1);
        let out = locate_transition(
            &s,
            &pins,
            Axis::Alpha,
            (0.05, 4.0),
            &SolverConfig::default(),
            0.1,
            1e-3,
            Target::MseX(0, DATA),
        )
        .unwrap();
        assert!(out.report().is_none(), "{out:?}");
    }

    #[test]
    fn axis_parsing_and_application() {
        let s = Scenario::new(
            vec![0.5, 0.5],
            1.0,
            [1.0, 9.0],
            0.1,
            vec![1.0, 0.1],
            vec![[Prior::known(1.0), Prior::gaussian(1.0)], [Prior::gaussian(1.0), Prior::gaussian(1.0)]],
        )
        .unwrap();
        assert_eq!(Axis::parse("G.1").unwrap(), Axis::Gain(1));
        assert!(Axis::parse("G.x").is_err());
        assert!(Axis::parse("nope").is_err());
        let t = Axis::Beta1.apply(&s, 2.0).unwrap();
        assert_eq!(t.beta, [2.0, 8.0]);
        let t = Axis::Load(1).apply(&s, 0.0).unwrap();
        assert_eq!(t.load, vec![1.0, 0.0]);
        let t = Axis::Gamma(1).apply(&s, 2.0).unwrap();
        assert_eq!(t.symbol_power(1, 1), 2.0);
        assert!(Axis::Gain(5).apply(&s, 1.0).is_err());
        assert!(Axis::Alpha.apply(&s, -1.0).is_err());
    }
}
