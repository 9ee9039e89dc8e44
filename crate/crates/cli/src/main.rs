//! Command-line front end: solve, sweep, locate transitions and run Monte
//! Carlo checks on scenario files or named presets.
//!
//! Exit codes: 0 success, 1 input or runtime error, 2 a fixed point did not
//! converge. Set `RAYON_NUM_THREADS` to bound the worker pool.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mimo_replica::montecarlo::{self, McConfig, McReport, Scheme};
use mimo_replica::scenarios::{self, Modulation, Preset, ScenarioFile, SingleCell, TwoCell};
use mimo_replica::solver::{self, Axis, SweepOptions, SweepPoint};
use mimo_replica::{Execution, Prior, Selection, Solution, SolverConfig, Target};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mimo-replica", version, about = "Replica MSE analysis of joint channel-and-data estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find all fixed points of a scenario and report the selected one.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Solve on a grid of one parameter and write CSV.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverFlags,
        /// Parameter to sweep, e.g. alpha, sigma2, G.1, Gamma.0, k.0.
        #[arg(long)]
        axis: String,
        /// Grid as start:stop:linN or start:stop:logN.
        #[arg(long)]
        range: String,
        /// Seed each point with the previous selected point as an extra start.
        #[arg(long)]
        warm_start: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bisect a bracket for a jump of the selected fixed point.
    Transition {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, default_value = "alpha")]
        axis: String,
        /// Bracket as lo,hi.
        #[arg(long)]
        bracket: String,
        /// Smallest change counted as a jump.
        #[arg(long, default_value_t = 0.1)]
        jump: f64,
        /// Target bracket width.
        #[arg(long, default_value_t = 1e-4)]
        width: f64,
        /// Order parameter to watch, e.g. mseX:0,1 or mseH:0.
        #[arg(long, default_value = "mseX:0,1")]
        observable: String,
    },
    /// Finite-size Monte Carlo of a baseline estimator, written as CSV.
    Mc {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Total number of users.
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Subspace dimension of the SVD-blind scheme (default: users in cell 0).
        #[arg(long)]
        k1: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    file: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
    /// Override a scalar parameter, e.g. --set alpha=2 --set G.1=0.1.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Freeze an order parameter, e.g. --pin mseH:0=0.0.
    #[arg(long = "pin", value_name = "TARGET=VALUE")]
    pins: Vec<String>,
    /// Run grid points and trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// auto, phi, min-mse, or branch:<label>.
    #[arg(long, default_value = "auto")]
    selection: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    /// Single cell, perfect CSI, Gaussian data (alpha = sigma2 = 1).
    Example1,
    /// Single cell joint estimation, Gaussian data (alpha = 1, beta1 = 1, beta = 5, sigma2 = 1).
    Example2Jcd,
    /// Single cell joint estimation, QPSK (beta = 2, beta1 = 1e-4, sigma2 = 0.1).
    QpskTransition,
    /// Two cells, joint estimation of both (alpha = 4, G = [1, 0.1]).
    TwoCell,
    /// Two cells, interference ignored.
    TwoCellConventional,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    PerfectCsi,
    PilotChannel,
    PilotThenLmmse,
    SvdBlind,
}

impl PresetName {
    fn build(self) -> mimo_replica::Result<Preset> {
        match self {
            PresetName::Example1 => scenarios::example1_perfect_csi(1.0, 1.0, 1.0, Prior::gaussian(1.0)),
            PresetName::Example2Jcd => scenarios::example2_jcd(&SingleCell {
                alpha: 1.0,
                beta1: 1.0,
                beta2: 4.0,
                sigma2: 1.0,
                gain: 1.0,
                gamma1: 1.0,
                gamma2: 1.0,
                data: Modulation::Gaussian,
            }),
            PresetName::QpskTransition => scenarios::qpsk_transition(1.0, 0.1),
            PresetName::TwoCell => scenarios::example3_two_cell(&TwoCell::interference_study(4.0, 0.1)),
            PresetName::TwoCellConventional => {
                scenarios::conventional_jcd_two_cell(&TwoCell::interference_study(4.0, 0.1))
            }
        }
    }
}

impl Input {
    fn load(&self) -> Result<Preset> {
        let mut preset = match (&self.file, self.preset) {
            (Some(path), _) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ScenarioFile::parse(&text)
                    .and_then(|f| f.to_preset())
                    .with_context(|| format!("in {}", path.display()))?
            }
            (None, Some(name)) => name.build()?,
            (None, None) => bail!("either --file or --preset is required"),
        };
        for item in &self.overrides {
            let (key, value) = split_assignment(item)?;
            let axis = Axis::parse(key)?;
            preset.scenario = axis.apply(&preset.scenario, parse_number(value)?)?;
        }
        for item in &self.pins {
            let (key, value) = split_assignment(item)?;
            let target: Target = key.parse()?;
            preset.pins.insert(target, parse_number(value)?);
        }
        preset.pins.validate(&preset.scenario)?;
        for warning in &preset.warnings {
            eprintln!("warning: {warning}");
        }
        Ok(preset)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

impl SolverFlags {
    fn config(&self) -> Result<SolverConfig> {
        let selection = match self.selection.as_str() {
            "auto" => Selection::Auto,
            "phi" => Selection::FreeEntropy,
            "min-mse" => Selection::MinTotalMse,
            other => match other.strip_prefix("branch:") {
                Some(label) => Selection::Branch(label.to_string()),
                None => bail!("unknown selection rule `{other}`"),
            },
        };
        let config = SolverConfig {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
            selection,
            ..SolverConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn split_assignment(item: &str) -> Result<(&str, &str)> {
    item.split_once('=').ok_or_else(|| anyhow!("expected KEY=VALUE, got `{item}`"))
}

fn parse_number(text: &str) -> Result<f64> {
    text.trim().parse().map_err(|_| anyhow!("`{text}` is not a number"))
}

/// Parses `start:stop:linN` or `start:stop:logN`.
fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, grid] = parts[..] else {
        bail!("range must look like start:stop:linN or start:stop:logN, got `{spec}`");
    };
    let (start, stop) = (parse_number(start)?, parse_number(stop)?);
    let (log, count) = if let Some(n) = grid.strip_prefix("lin") {
        (false, n)
    } else if let Some(n) = grid.strip_prefix("log") {
        (true, n)
    } else {
        bail!("grid kind must be linN or logN, got `{grid}`");
    };
    let n: usize = count.parse().map_err(|_| anyhow!("`{count}` is not a point count"))?;
    if n == 0 {
        bail!("range `{spec}` has no points");
    }
    if log && !(start > 0.0 && stop > 0.0) {
        bail!("log grids need positive end points");
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    Ok((0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                stop
            } else if log {
                (start.ln() + f * (stop.ln() - start.ln())).exp()
            } else {
                start + f * (stop - start)
            }
        })
        .collect())
}

fn parse_bracket(spec: &str) -> Result<(f64, f64)> {
    let (lo, hi) = spec.split_once(',').ok_or_else(|| anyhow!("bracket must be lo,hi, got `{spec}`"))?;
    Ok((parse_number(lo)?, parse_number(hi)?))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, or to stdout when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    let Some(path) = path else {
        print!("{contents}");
        return Ok(());
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Full round-trip precision.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn solution_json(sol: &Solution) -> serde_json::Value {
    let points: Vec<_> = sol
        .fixed_points
        .iter()
        .enumerate()
        .map(|(i, fp)| {
            json!({
                "selected": i == sol.selected,
                "init_label": fp.init_label,
                "merged_from": fp.merged_from,
                "converged": fp.converged,
                "iterations": fp.iterations,
                "residual": fp.residual,
                "phi": fp.phi,
                "mse_H": fp.params.mse_h,
                "mse_X": fp.params.mse_x,
                "qtilde_H": fp.params.qtilde_h.iter().map(|q| finite_or_string(*q)).collect::<Vec<_>>(),
                "qtilde_X": fp.params.qtilde_x.iter()
                    .map(|p| p.iter().map(|q| finite_or_string(*q)).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "selected": sol.selected, "warning": sol.warning, "fixed_points": points })
}

/// JSON has no infinity; saturated effective SNRs are written as "inf".
fn finite_or_string(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn cmd_solve(input: &Input, flags: &SolverFlags) -> Result<ExitCode> {
    let preset = input.load()?;
    let config = flags.config()?;
    let sol = solver::solve(&preset.scenario, &preset.pins, &config)?;
    let out = json!({
        "scenario": ScenarioFile::from_preset(&preset).ok(),
        "warnings": preset.warnings,
        "solution": solution_json(&sol),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(if sol.all_converged() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn sweep_csv(axis: &Axis, cells: usize, points: &[SweepPoint]) -> String {
    let mut out = String::from("axis,value");
    for c in 0..cells {
        write!(out, ",mse_H_{c}").unwrap();
    }
    for c in 0..cells {
        for t in 0..2 {
            write!(out, ",mse_X_{c}_{t}").unwrap();
        }
    }
    out.push_str(",phi,converged,init_label,n_fixed_points\n");
    for p in points {
        let fp = p.solution.selected();
        write!(out, "{},{}", axis.name(), num(p.value)).unwrap();
        for v in &fp.params.mse_h {
            write!(out, ",{}", num(*v)).unwrap();
        }
        for pair in &fp.params.mse_x {
            for v in pair {
                write!(out, ",{}", num(*v)).unwrap();
            }
        }
        let phi = fp.phi.map(num).unwrap_or_default();
        writeln!(out, ",{phi},{},{},{}", fp.converged, fp.init_label, p.solution.fixed_points.len()).unwrap();
    }
    out
}

fn cmd_sweep(
    input: &Input,
    flags: &SolverFlags,
    axis: &str,
    range: &str,
    warm_start: bool,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let preset = input.load()?;
    let config = flags.config()?;
    let axis = Axis::parse(axis)?;
    let grid = parse_range(range)?;
    let options = SweepOptions { warm_start, execution: input.execution() };
    let points = solver::sweep(&preset.scenario, &preset.pins, axis, &grid, &config, options)?;
    emit(out, &sweep_csv(&axis, preset.scenario.cells(), &points))?;
    let converged = points.iter().all(|p| p.solution.selected().converged);
    Ok(if converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[allow(clippy::too_many_arguments)]
fn cmd_transition(
    input: &Input,
    flags: &SolverFlags,
    axis: &str,
    bracket: &str,
    jump: f64,
    width: f64,
    observable: &str,
) -> Result<ExitCode> {
    let preset = input.load()?;
    let config = flags.config()?;
    let axis = Axis::parse(axis)?;
    let observable: Target = observable.parse()?;
    let outcome = solver::locate_transition(
        &preset.scenario,
        &preset.pins,
        axis,
        parse_bracket(bracket)?,
        &config,
        jump,
        width,
        observable,
    )?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(ExitCode::SUCCESS)
}

fn mc_csv(report: &McReport) -> String {
    let mut out = String::from(
        "scheme,K,N,T_1,T_2,trials,seed,quantity,realized_mean,realized_std_err,\
         posterior_mean,posterior_std_err,replica,ci_finite,degenerate_trials\n",
    );
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for row in &report.rows {
        let target = match row.target {
            Target::MseH(c) => format!("mse_H_{c}"),
            Target::MseX(c, t) => format!("mse_X_{c}_{t}"),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{target},{},{},{},{},{},{},{}",
            report.scheme,
            report.k,
            report.dims.n,
            report.dims.t[0],
            report.dims.t[1],
            report.trials,
            report.seed,
            num(row.realized.mean),
            num(row.realized.std_err),
            opt(row.posterior.map(|s| s.mean)),
            opt(row.posterior.map(|s| s.std_err)),
            opt(row.replica),
            row.realized.ci_is_finite(),
            report.degenerate_trials,
        )
        .unwrap();
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc(
    input: &Input,
    scheme: SchemeArg,
    k: usize,
    trials: usize,
    seed: u64,
    k1: Option<usize>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let preset = input.load()?;
    if !input.pins.is_empty() {
        eprintln!("note: pins do not affect Monte Carlo trials");
    }
    let scheme = match scheme {
        SchemeArg::PerfectCsi => Scheme::PerfectCsiLmmse,
        SchemeArg::PilotChannel => Scheme::PilotMmseChannel,
        SchemeArg::PilotThenLmmse => Scheme::PilotThenLmmseData,
        SchemeArg::SvdBlind => Scheme::SvdBlind { k1 },
    };
    let config = McConfig { k, trials, seed, scheme };
    let report = montecarlo::run(&preset.scenario, &config, input.execution())?;
    emit(out, &mc_csv(&report))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Solve { input, solver } => cmd_solve(input, solver),
        Command::Sweep { input, solver, axis, range, warm_start, out } => {
            cmd_sweep(input, solver, axis, range, *warm_start, out.as_deref())
        }
        Command::Transition { input, solver, axis, bracket, jump, width, observable } => {
            cmd_transition(input, solver, axis, bracket, *jump, *width, observable)
        }
        Command::Mc { input, scheme, k, trials, seed, k1, out } => {
            cmd_mc(input, *scheme, *k, *trials, *seed, *k1, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:3:lin3").unwrap(), vec![1.0, 2.0, 3.0]);
        let g = parse_range("0.5:16:log32").unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!((g[0], g[31]), (0.5, 16.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(parse_range("1:2:lin0").is_err());
        assert!(parse_range("0:2:log4").is_err());
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:cubic3").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        let v = 0.1 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }
}
