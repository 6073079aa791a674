//! JSON run configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::convergence::validate_h_list;
use crate::error::Error;
use crate::nonlinearity::{Beta, NonlinearitySpec, Pi};
use crate::operators::{build_bundle, Bc, Grid1D, OperatorBundle, Preset, PresetParams, ProblemPreset};
use crate::stepper::{step_count, InitialData, SolvePath, StepConfig};

/// A number given either as a JSON number, a decimal string (`"0.125"`,
/// `"1e-3"`) or a fraction of two decimals (`"1/256"`). Serialized as a
/// plain JSON number in shortest round-trip form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn parse(s: &str) -> Option<f64> {
        let s = s.trim();
        match s.split_once('/') {
            Some((a, b)) => {
                let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
                (b != 0.0).then(|| a / b)
            }
            None => s.parse().ok(),
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, a decimal string or a fraction \"a/b\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                Num::parse(v)
                    .map(Num)
                    .ok_or_else(|| E::custom(format!("cannot parse {v:?} as a number")))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub sigma: Option<Num>,
    pub c: Option<Num>,
    pub m: Option<Num>,
    pub epsilon: Option<Num>,
    pub gamma: Option<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaConfig {
    Zero,
    Cubic { scale: Num },
    OddPolynomial { coeffs: Vec<Num> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PiConfig {
    Zero,
    Linear { slope: Num },
    ScaledSine { amplitude: Num },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub beta: BetaConfig,
    pub pi: PiConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    SingleMode { k: usize, amplitudes: [Num; 3] },
    RandomSmooth { seed: u64, decay: Num },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolvePathConfig {
    CoupledDirect,
    YosidaRegularized { schedule: Option<Vec<Num>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: Option<Num>,
    pub newton_max_iter: Option<usize>,
    pub solve_path: Option<SolvePathConfig>,
}

/// The configuration file. Omitted optional fields take the defaults of the
/// library; [`RunConfig::resolved`] fills them in explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    pub params: Option<ParamsConfig>,
    pub bc: Bc,
    pub n_interior: usize,
    pub t_final: Num,
    pub h: Option<Num>,
    pub h_list: Option<Vec<Num>>,
    /// Defaults to the preset's own nonlinearity.
    pub nonlinearity: Option<NonlinearityConfig>,
    pub initial: InitialConfig,
    pub solver: Option<SolverConfig>,
    pub output_dir: Option<PathBuf>,
}

/// A field-level configuration error.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        reason: reason.into(),
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { field, reason } => cfg_err(field, reason),
            other => cfg_err("<config>", other.to_string()),
        }
    }
}

/// Everything a subcommand needs, built from a validated [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Problem {
    pub config: RunConfig,
    pub bundle: OperatorBundle,
    pub nonlin: NonlinearitySpec,
    pub initial: InitialData,
    pub step: StepConfig,
    pub t_final: f64,
    pub h_tilde: f64,
    pub c_a1b2: f64,
}

/// Which time-step fields a subcommand requires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepNeed {
    Single,
    List,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| cfg_err("<json>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn preset_params(&self) -> PresetParams {
        let d = PresetParams::default();
        let p = self.params.as_ref();
        let get = |f: fn(&ParamsConfig) -> Option<Num>, def: f64| p.and_then(f).map_or(def, |n| n.0);
        PresetParams {
            sigma: get(|p| p.sigma, d.sigma),
            c: get(|p| p.c, d.c),
            m: get(|p| p.m, d.m),
            epsilon: get(|p| p.epsilon, d.epsilon),
            gamma: get(|p| p.gamma, d.gamma),
        }
    }

    pub fn nonlinearity_spec(&self) -> NonlinearitySpec {
        match &self.nonlinearity {
            None => NonlinearitySpec::preset_default(self.preset, &self.preset_params()),
            Some(c) => NonlinearitySpec {
                beta: match &c.beta {
                    BetaConfig::Zero => Beta::Zero,
                    BetaConfig::Cubic { scale } => Beta::Cubic { scale: scale.0 },
                    BetaConfig::OddPolynomial { coeffs } => Beta::OddPolynomial {
                        coeffs: coeffs.iter().map(|c| c.0).collect(),
                    },
                },
                pi: match &c.pi {
                    PiConfig::Zero => Pi::Zero,
                    PiConfig::Linear { slope } => Pi::Linear { slope: slope.0 },
                    PiConfig::ScaledSine { amplitude } => Pi::ScaledSine { amplitude: amplitude.0 },
                },
            },
        }
    }

    fn step_config(&self, h: f64) -> StepConfig {
        let mut cfg = StepConfig::new(h);
        if let Some(s) = &self.solver {
            if let Some(t) = s.newton_tol {
                cfg.newton_tol = t.0;
            }
            if let Some(m) = s.newton_max_iter {
                cfg.newton_max_iter = m;
            }
            match &s.solve_path {
                None | Some(SolvePathConfig::CoupledDirect) => {}
                Some(SolvePathConfig::YosidaRegularized { schedule: None }) => {
                    cfg.solve_path = SolvePath::default_yosida();
                }
                Some(SolvePathConfig::YosidaRegularized { schedule: Some(l) }) => {
                    cfg.solve_path = SolvePath::YosidaRegularized {
                        schedule: l.iter().map(|x| x.0).collect(),
                    };
                }
            }
        }
        cfg
    }

    /// The configuration with every default written out, as embedded in
    /// output headers. Loading it back yields the same problem.
    pub fn resolved(&self) -> RunConfig {
        let p = self.preset_params();
        let nl = self.nonlinearity_spec();
        let step = self.step_config(self.h.map_or(f64::NAN, |h| h.0));
        let num_beta = match nl.beta {
            Beta::Zero => BetaConfig::Zero,
            Beta::Cubic { scale } => BetaConfig::Cubic { scale: Num(scale) },
            Beta::OddPolynomial { coeffs } => BetaConfig::OddPolynomial {
                coeffs: coeffs.into_iter().map(Num).collect(),
            },
        };
        let num_pi = match nl.pi {
            Pi::Zero => PiConfig::Zero,
            Pi::Linear { slope } => PiConfig::Linear { slope: Num(slope) },
            Pi::ScaledSine { amplitude } => PiConfig::ScaledSine { amplitude: Num(amplitude) },
        };
        RunConfig {
            params: Some(ParamsConfig {
                sigma: Some(Num(p.sigma)),
                c: Some(Num(p.c)),
                m: Some(Num(p.m)),
                epsilon: Some(Num(p.epsilon)),
                gamma: Some(Num(p.gamma)),
            }),
            nonlinearity: Some(NonlinearityConfig { beta: num_beta, pi: num_pi }),
            solver: Some(SolverConfig {
                newton_tol: Some(Num(step.newton_tol)),
                newton_max_iter: Some(step.newton_max_iter),
                solve_path: Some(match step.solve_path {
                    SolvePath::CoupledDirect => SolvePathConfig::CoupledDirect,
                    SolvePath::YosidaRegularized { schedule } => SolvePathConfig::YosidaRegularized {
                        schedule: Some(schedule.into_iter().map(Num).collect()),
                    },
                }),
            }),
            ..self.clone()
        }
    }

    /// Validates every field against the preconditions of the library and
    /// builds the problem. No time stepping happens here.
    pub fn build(&self, need: StepNeed) -> Result<Problem, ConfigError> {
        let grid = Grid1D::new(self.n_interior, self.bc).map_err(|e| cfg_err("n_interior", e.to_string()))?;
        let params = self.preset_params();
        let preset = ProblemPreset::new(self.preset, params, self.bc);
        preset
            .validate()
            .map_err(|e| with_prefix("params", e))?;
        let nonlin = self.nonlinearity_spec();
        nonlin.validate().map_err(|e| with_prefix("nonlinearity", e))?;
        let bundle = build_bundle(&preset, &grid)?;
        let t_final = self.t_final.0;
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(cfg_err("t_final", format!("must be positive, got {t_final}")));
        }
        let h = match need {
            StepNeed::Single => {
                let h = self.h.ok_or_else(|| cfg_err("h", "required by this command"))?.0;
                step_count(t_final, h).map_err(|e| cfg_err("h", e.to_string()))?;
                h
            }
            StepNeed::List => {
                let list: Vec<f64> = self
                    .h_list
                    .as_ref()
                    .ok_or_else(|| cfg_err("h_list", "required by this command"))?
                    .iter()
                    .map(|h| h.0)
                    .collect();
                validate_h_list(&list)?;
                for (i, h) in list.iter().enumerate() {
                    step_count(t_final, *h).map_err(|e| cfg_err(format!("h_list[{i}]"), e.to_string()))?;
                }
                list[0]
            }
        };
        let step = self.step_config(h);
        step.validate().map_err(|e| with_prefix("solver", e))?;
        let initial = match &self.initial {
            InitialConfig::Zero => InitialData::zeros(grid.n()),
            InitialConfig::SingleMode { k, amplitudes } => {
                InitialData::single_mode(&grid, *k, amplitudes.map(|a| a.0))?
            }
            InitialConfig::RandomSmooth { seed, decay } => InitialData::random_smooth(&grid, *seed, decay.0)?,
        };
        if [&initial.theta, &initial.phi, &initial.v]
            .iter()
            .any(|u| u.iter().any(|x| !x.is_finite()))
        {
            return Err(cfg_err("initial", "profile has non-finite values"));
        }
        let sc = bundle.estimate_structural_constants(nonlin.c_lip())?;
        Ok(Problem {
            config: self.resolved(),
            bundle,
            nonlin,
            initial,
            step,
            t_final,
            h_tilde: sc.h_tilde,
            c_a1b2: sc.c_a1b2,
        })
    }

    pub fn h_list(&self) -> Vec<f64> {
        self.h_list.iter().flatten().map(|h| h.0).collect()
    }
}

fn with_prefix(prefix: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { field, reason } => cfg_err(format!("{prefix}.{field}"), reason),
        other => cfg_err(prefix, other.to_string()),
    }
}
