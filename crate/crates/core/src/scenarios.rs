//! Named worked examples and the JSON scenario file format.
//!
//! A scenario file looks like
//!
//! ```json
//! {
//!   "cells": 2,
//!   "k": [0.5, 0.5],
//!   "alpha": 4.0,
//!   "beta": 10.0,
//!   "beta1": 1.0,
//!   "sigma2": 0.1,
//!   "G": [1.0, 0.1],
//!   "Gamma": [1.0, 1.0],
//!   "priors": [["known", "gaussian"], ["gaussian", "gaussian"]],
//!   "pins": {"mseH:1": 0.1}
//! }
//! ```
//!
//! `priors[c][t]` is `"known"`, `"gaussian"`, `"qpsk"` (power `Gamma[t]`) or
//! `{"discrete": {"points": [[re, im], ...], "probs": [...]}}`, whose second
//! moment must equal `Gamma[t]`. `pins` maps `mseH:c` / `mseX:c,t` to a
//! frozen value and may be omitted. Unknown keys are rejected.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{DiscretePrior, Prior};
use crate::replica::{Pins, Scenario, Target, DATA, TRAINING};

/// Pilot ratios below this are accepted with a warning: the model no longer
/// represents the ambiguity-removal role of the pilots.
pub const NEGLIGIBLE_PILOT_FLOOR: f64 = 1e-6;

/// Symbol alphabet of a data stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Gaussian,
    Qpsk,
}

impl Modulation {
    pub fn prior(self, power: f64) -> Prior {
        match self {
            Modulation::Gaussian => Prior::gaussian(power),
            Modulation::Qpsk => Prior::qpsk(power),
        }
    }
}

/// A scenario together with its pinned order parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub scenario: Scenario,
    pub pins: Pins,
    pub warnings: Vec<String>,
}

impl Preset {
    fn new(scenario: Scenario, pins: Pins) -> Result<Self> {
        scenario.validate()?;
        pins.validate(&scenario)?;
        let mut warnings = Vec::new();
        let b1 = scenario.beta[TRAINING];
        if b1 > 0.0 && b1 < NEGLIGIBLE_PILOT_FLOOR {
            warnings.push(format!(
                "beta1 = {b1} is below {NEGLIGIBLE_PILOT_FLOOR}; pilot-based ambiguity removal is not modeled"
            ));
        }
        Ok(Preset { scenario, pins, warnings })
    }
}

/// Single cell with a perfectly known channel: no training phase and
/// `mse_H` pinned at zero.
pub fn example1_perfect_csi(alpha: f64, sigma2: f64, gain: f64, prior: Prior) -> Result<Preset> {
    let power = prior.second_moment();
    let s = Scenario::new(
        vec![1.0],
        alpha,
        [0.0, 1.0],
        sigma2,
        vec![gain],
        vec![[Prior::known(power), prior]],
    )?;
    Preset::new(s, Pins::none().with(Target::MseH(0), 0.0))
}

/// Parameters of the single-cell unknown-channel examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleCell {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma2: f64,
    pub gain: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub data: Modulation,
}

impl SingleCell {
    fn scenario(&self, beta: [f64; 2]) -> Result<Scenario> {
        Scenario::new(
            vec![1.0],
            self.alpha,
            beta,
            self.sigma2,
            vec![self.gain],
            vec![[Prior::known(self.gamma1), self.data.prior(self.gamma2)]],
        )
    }
}

/// Two-stage pilot-only estimation: the channel from the pilots alone,
/// then the data with the channel MSE frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotOnly {
    pub mse_h: f64,
    pub mse_x2: f64,
    pub channel_stage: crate::solver::Solution,
    pub data_stage: crate::solver::Solution,
}

pub fn example2_pilot_only(p: &SingleCell, config: &crate::solver::SolverConfig) -> Result<PilotOnly> {
    if p.beta1.is_nan() || p.beta1 <= 0.0 {
        return Err(Error::domain("pilot-only estimation needs beta1 > 0"));
    }
    let channel = p.scenario([p.beta1, 0.0])?;
    let channel_stage = crate::solver::solve(&channel, &Pins::none(), config)?;
    let mse_h = channel_stage.selected().params.mse_h[0];

    let data = p.scenario([p.beta1, p.beta2])?;
    let pins = Pins::none().with(Target::MseH(0), mse_h);
    let data_stage = crate::solver::solve(&data, &pins, config)?;
    let mse_x2 = data_stage.selected().params.mse_x[0][DATA];
    Ok(PilotOnly { mse_h, mse_x2, channel_stage, data_stage })
}

/// Single-cell joint channel-and-data estimation with known pilots.
pub fn example2_jcd(p: &SingleCell) -> Result<Preset> {
    Preset::new(p.scenario([p.beta1, p.beta2])?, Pins::none())
}

/// Setting of the QPSK transition study: `beta = 2`, `beta1 = 1e-4`,
/// unit powers.
pub fn qpsk_transition(alpha: f64, sigma2: f64) -> Result<Preset> {
    example2_jcd(&SingleCell {
        alpha,
        beta1: 1e-4,
        beta2: 2.0 - 1e-4,
        sigma2,
        gain: 1.0,
        gamma1: 1.0,
        gamma2: 1.0,
        data: Modulation::Qpsk,
    })
}

/// Parameters of the two-cell example. Cell 0 is the target cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCell {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma2: f64,
    pub gain: [f64; 2],
    pub load: [f64; 2],
    pub gamma: [f64; 2],
    pub data: [Modulation; 2],
}

impl TwoCell {
    /// Interference-study setting: `beta = 10`, `beta1 = 1`, unit symbol
    /// powers, Gaussian symbols, `G_1 = 1`, UEs split evenly, `sigma2 = 0.1`.
    pub fn interference_study(alpha: f64, interference_gain: f64) -> Self {
        TwoCell {
            alpha,
            beta1: 1.0,
            beta2: 9.0,
            sigma2: 0.1,
            gain: [1.0, interference_gain],
            load: [0.5, 0.5],
            gamma: [1.0, 1.0],
            data: [Modulation::Gaussian; 2],
        }
    }

    fn scenario(&self) -> Result<Scenario> {
        Scenario::new(
            self.load.to_vec(),
            self.alpha,
            [self.beta1, self.beta2],
            self.sigma2,
            self.gain.to_vec(),
            vec![
                [Prior::known(self.gamma[0]), self.data[0].prior(self.gamma[1])],
                // The interfering cell's pilots are unknown at the target BS.
                [self.data[1].prior(self.gamma[0]), self.data[1].prior(self.gamma[1])],
            ],
        )
    }
}

/// Two-cell joint estimation: only the target cell's pilots are known.
pub fn example3_two_cell(p: &TwoCell) -> Result<Preset> {
    Preset::new(p.scenario()?, Pins::none())
}

/// Conventional JCD baseline: the interfering cell is ignored, i.e. its
/// order parameters stay at ignorance so that `delta[1][t] = G_1 Gamma_t`.
pub fn conventional_jcd_two_cell(p: &TwoCell) -> Result<Preset> {
    let s = p.scenario()?;
    let pins = Pins::none()
        .with(Target::MseH(1), s.gain[1])
        .with(Target::MseX(1, TRAINING), s.symbol_power(1, TRAINING))
        .with(Target::MseX(1, DATA), s.symbol_power(1, DATA));
    Preset::new(s, pins)
}

/// One prior entry of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Named(PriorName),
    Discrete { discrete: DiscreteSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorName {
    Known,
    Gaussian,
    Qpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSpec {
    pub points: Vec<[f64; 2]>,
    pub probs: Vec<f64>,
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub cells: usize,
    pub k: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub beta1: f64,
    pub sigma2: f64,
    #[serde(rename = "G")]
    pub gain: Vec<f64>,
    #[serde(rename = "Gamma")]
    pub gamma: [f64; 2],
    pub priors: Vec<[PriorSpec; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pins: BTreeMap<String, f64>,
}

const POWER_MATCH_TOL: f64 = 1e-9;

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ScenarioFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Validates the document and builds the scenario and its pins.
    pub fn to_preset(&self) -> Result<Preset> {
        let field = |name: &str, n: usize| -> Result<()> {
            if n != self.cells {
                return Err(Error::ScenarioFile(format!(
                    "`{name}` has {n} entries but `cells` is {}",
                    self.cells
                )));
            }
            Ok(())
        };
        if self.cells == 0 {
            return Err(Error::ScenarioFile("`cells` must be >= 1, got 0".into()));
        }
        field("k", self.k.len())?;
        field("G", self.gain.len())?;
        field("priors", self.priors.len())?;
        if !(self.beta1 >= 0.0 && self.beta1 <= self.beta) {
            return Err(Error::ScenarioFile(format!(
                "`beta1` must lie in [0, beta = {}], got {}",
                self.beta, self.beta1
            )));
        }
        let mut priors = Vec::with_capacity(self.cells);
        for (c, pair) in self.priors.iter().enumerate() {
            let mut built: [Prior; 2] = [Prior::known(0.0), Prior::known(0.0)];
            for (t, spec) in pair.iter().enumerate() {
                built[t] = self.build_prior(spec, c, t)?;
            }
            priors.push(built);
        }
        let scenario = Scenario::new(
            self.k.clone(),
            self.alpha,
            [self.beta1, self.beta - self.beta1],
            self.sigma2,
            self.gain.clone(),
            priors,
        )?;
        let mut pins = Pins::none();
        for (key, value) in &self.pins {
            let target: Target = key
                .parse()
                .map_err(|e: Error| Error::ScenarioFile(format!("pins: {e}")))?;
            pins.insert(target, *value);
        }
        Preset::new(scenario, pins)
    }

    fn build_prior(&self, spec: &PriorSpec, c: usize, t: usize) -> Result<Prior> {
        let power = self.gamma[t];
        Ok(match spec {
            PriorSpec::Named(PriorName::Known) => Prior::known(power),
            PriorSpec::Named(PriorName::Gaussian) => Prior::gaussian(power),
            PriorSpec::Named(PriorName::Qpsk) => Prior::qpsk(power),
            PriorSpec::Discrete { discrete } => {
                let points = discrete.points.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                let d = DiscretePrior::new(points, discrete.probs.clone())
                    .map_err(|e| Error::ScenarioFile(format!("priors[{c}][{t}]: {e}")))?;
                let prior = Prior::Discrete(d);
                let m = prior.second_moment();
                if (m - power).abs() > POWER_MATCH_TOL {
                    return Err(Error::ScenarioFile(format!(
                        "priors[{c}][{t}]: constellation power {m} differs from Gamma[{t}] = {power}"
                    )));
                }
                prior
            }
        })
    }

    /// Writes a preset back into file form. Fails if the scenario uses
    /// per-cell powers that the file format cannot express.
    pub fn from_preset(p: &Preset) -> Result<Self> {
        let s = &p.scenario;
        let gamma = [s.symbol_power(0, TRAINING), s.symbol_power(0, DATA)];
        let mut priors = Vec::with_capacity(s.cells());
        for (c, pair) in s.priors.iter().enumerate() {
            let mut specs = Vec::with_capacity(2);
            for (t, prior) in pair.iter().enumerate() {
                if (prior.second_moment() - gamma[t]).abs() > POWER_MATCH_TOL {
                    return Err(Error::ScenarioFile(format!(
                        "priors[{c}][{t}] power differs from other cells; not representable"
                    )));
                }
                specs.push(match prior {
                    Prior::Known { .. } => PriorSpec::Named(PriorName::Known),
                    Prior::Gaussian { .. } => PriorSpec::Named(PriorName::Gaussian),
                    Prior::Qpsk { .. } => PriorSpec::Named(PriorName::Qpsk),
                    Prior::Discrete(d) => PriorSpec::Discrete {
                        discrete: DiscreteSpec {
                            points: d.points().iter().map(|z| [z.re, z.im]).collect(),
                            probs: d.probs().to_vec(),
                        },
                    },
                });
            }
            let second = specs.pop().expect("two phases");
            let first = specs.pop().expect("two phases");
            priors.push([first, second]);
        }
        Ok(ScenarioFile {
            cells: s.cells(),
            k: s.load.clone(),
            alpha: s.alpha,
            beta: s.beta_total(),
            beta1: s.beta[TRAINING],
            sigma2: s.sigma2,
            gain: s.gain.clone(),
            gamma,
            priors,
            pins: p.pins.iter().map(|(t, v)| (t.to_string(), v)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverConfig};
    use approx::assert_abs_diff_eq;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn canonical() -> SingleCell {
        SingleCell {
            alpha: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            sigma2: 1.0,
            gain: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            data: Modulation::Gaussian,
        }
    }

    #[test]
    fn example1_canonical() {
        let p = example1_perfect_csi(1.0, 1.0, 1.0, Prior::gaussian(1.0)).unwrap();
        let sol = solve(&p.scenario, &p.pins, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.selected().params.mse_x[0][DATA], GOLDEN, epsilon = 1e-9);
    }

    #[test]
    fn example1_limits() {
        let cfg = SolverConfig::default();
        let p = example1_perfect_csi(1e6, 1.0, 1.0, Prior::gaussian(1.0)).unwrap();
        let m = solve(&p.scenario, &p.pins, &cfg).unwrap().selected().params.mse_x[0][DATA];
        assert_abs_diff_eq!(m / 1e-6, 1.0, epsilon = 1e-5);
        let p = example1_perfect_csi(1.0, 1e9, 1.0, Prior::gaussian(1.0)).unwrap();
        let m = solve(&p.scenario, &p.pins, &cfg).unwrap().selected().params.mse_x[0][DATA];
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn pilot_only_canonical() {
        let r = example2_pilot_only(&canonical(), &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.mse_h, GOLDEN, epsilon = 1e-9);
        assert!(example2_pilot_only(&SingleCell { beta1: 0.0, ..canonical() }, &SolverConfig::default()).is_err());
    }

    #[test]
    fn pilot_only_channel_vanishes_with_many_pilots() {
        let r = example2_pilot_only(&SingleCell { beta1: 1e7, ..canonical() }, &SolverConfig::default()).unwrap();
        assert!(r.mse_h < 1e-6);
    }

    #[test]
    fn pilot_only_data_worse_than_perfect_csi() {
        let cfg = SolverConfig::default();
        for alpha in [0.5, 1.0, 4.0, 16.0] {
            let po = example2_pilot_only(&SingleCell { alpha, ..canonical() }, &cfg).unwrap();
            let pc = example1_perfect_csi(alpha, 1.0, 1.0, Prior::gaussian(1.0)).unwrap();
            let perfect = solve(&pc.scenario, &pc.pins, &cfg).unwrap().selected().params.mse_x[0][DATA];
            assert!(po.mse_x2 > perfect, "alpha={alpha}: {} vs {perfect}", po.mse_x2);
        }
    }

    #[test]
    fn negligible_pilots_warn() {
        let p = example2_jcd(&SingleCell { beta1: 1e-7, ..canonical() }).unwrap();
        assert_eq!(p.warnings.len(), 1);
        let p = qpsk_transition(1.0, 0.1).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(p.scenario.priors[0][DATA], Prior::qpsk(1.0));
    }

    #[test]
    fn conventional_pins_interference_at_ignorance() {
        let p = conventional_jcd_two_cell(&TwoCell::interference_study(4.0, 0.1)).unwrap();
        assert_eq!(p.pins.get(Target::MseH(1)), Some(0.1));
        assert_eq!(p.pins.get(Target::MseX(1, DATA)), Some(1.0));
    }

    #[test]
    fn file_round_trip_and_errors() {
        let p = example3_two_cell(&TwoCell::interference_study(4.0, 0.1)).unwrap();
        let file = ScenarioFile::from_preset(&p).unwrap();
        let back = ScenarioFile::parse(&file.to_json()).unwrap().to_preset().unwrap();
        assert_eq!(back.scenario, p.scenario);

        let err = ScenarioFile::parse(r#"{"cells": 1, "bogus": 2}"#).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let err = ScenarioFile::parse("{\n  \"cells\": ,\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");

        let mut bad = file.clone();
        bad.k = vec![0.7, 0.7];
        let err = bad.to_preset().unwrap_err().to_string();
        assert!(err.contains("1.4"), "{err}");

        let mut bad = file.clone();
        bad.pins.insert("mseH:0".into(), 5.0);
        assert!(bad.to_preset().is_err());

        let mut bad = file;
        bad.priors[1][1] = PriorSpec::Discrete {
            discrete: DiscreteSpec { points: vec![[2.0, 0.0], [-2.0, 0.0]], probs: vec![0.5, 0.5] },
        };
        let err = bad.to_preset().unwrap_err().to_string();
        assert!(err.contains("Gamma[1]"), "{err}");
    }
}
