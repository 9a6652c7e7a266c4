//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `beta`, `gamma`, `m1`, `m2` | model parameters | required |
//! | `control` | `none`, `constant` or `saturating` | required |
//! | `u` | constant vaccination rate | required for `constant` |
//! | `p`, `v` | saturating control `x1^p / (v + x1^p)` | `p` required, `v = 1.0` |
//! | `recovery` | `linear` or `power` | `linear` |
//! | `q` | recovery exponent for `power` | required for `power` |
//! | `x1_0`, `x2_0` | initial susceptible / infective counts | required |
//! | `step`, `t_end` | RK4 step and horizon | `0.001`, required |
//! | `sample_every` | keep every n-th step | `1` |
//! | `stop_rule` | `none`, `stop_x1_nonpositive`, `clamp_at_zero` | `stop_x1_nonpositive` |
//! | `seed` | master seed | `0` |
//! | `train_fraction` | train share of the split | `0.7` |
//! | `k` | cluster count, or `auto` | `3` |
//! | `k_candidates` | candidates for `k = auto` | `3,4,5` |
//! | `cluster_features` | `infective` or `both` | `infective` |
//! | `min_cluster_size` | merge clusters smaller than this | `6` |
//! | `eta`, `momentum` | learning rate and momentum | `0.05`, `0.9` |
//! | `target_mse`, `max_epochs` | stopping rule | `1e-3`, `5000` |
//! | `init_scale` | weight init half-width | `0.5` |
//! | `output_activation` | `identity` or `tanh` | `identity` |
//! | `degrees` | polynomial baselines | `1,2` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use episim_core::integrate::{IntegrationConfig, StopRule};
use episim_core::model::{ControlSpec, ModelParams, RecoverySpec, State};
use episim_core::neuralnet::{OutputActivation, TrainConfig};
use episim_core::pipeline::{ClusterFeatures, CooperativeConfig, ExperimentConfig, KChoice};
use thiserror::Error;

/// Vaccination effort used when a saturating control omits `v`.
pub const DEFAULT_VACCINATION_EFFORT: f64 = 1.0;

const KNOWN_KEYS: &[&str] = &[
    "beta",
    "gamma",
    "m1",
    "m2",
    "control",
    "u",
    "p",
    "v",
    "recovery",
    "q",
    "x1_0",
    "x2_0",
    "step",
    "t_end",
    "sample_every",
    "stop_rule",
    "seed",
    "train_fraction",
    "k",
    "k_candidates",
    "cluster_features",
    "min_cluster_size",
    "eta",
    "momentum",
    "target_mse",
    "max_epochs",
    "init_scale",
    "output_activation",
    "degrees",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: `{value}`")]
    Invalid { key: &'static str, value: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Raw key/value pairs in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
        }
        Ok(KeyValues(map))
    }

    fn raw(&self, key: &'static str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::Invalid {
                key,
                value: v.to_string(),
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or(ConfigError::Missing(key))
    }

    fn or<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list(&self, key: &'static str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(v).ok_or_else(|| ConfigError::Invalid {
                key,
                value: v.to_string(),
            }),
        }
    }

    fn invalid(&self, key: &'static str) -> ConfigError {
        ConfigError::Invalid {
            key,
            value: self.raw(key).unwrap_or("").to_string(),
        }
    }
}

/// Comma-separated non-negative integers, e.g. `3,4,5`.
pub fn parse_list(text: &str) -> Option<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<Vec<usize>>>()
        .filter(|v| !v.is_empty())
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let kv = KeyValues::parse(text)?;

    let control = match kv.raw("control").ok_or(ConfigError::Missing("control"))? {
        "none" => ControlSpec::None,
        "constant" => ControlSpec::Constant {
            u: kv.require("u")?,
        },
        "saturating" => ControlSpec::Saturating {
            p: kv.require("p")?,
            v: kv.or("v", DEFAULT_VACCINATION_EFFORT)?,
        },
        _ => return Err(kv.invalid("control")),
    };
    let recovery = match kv.raw("recovery").unwrap_or("linear") {
        "linear" => RecoverySpec::Linear,
        "power" => RecoverySpec::PowerLaw {
            q: kv.require("q")?,
        },
        _ => return Err(kv.invalid("recovery")),
    };
    let params = ModelParams {
        beta: kv.require("beta")?,
        gamma: kv.require("gamma")?,
        m1: kv.require("m1")?,
        m2: kv.require("m2")?,
        control,
        recovery,
    };
    let init = State::new(kv.require("x1_0")?, kv.require("x2_0")?);
    let stop_rule = match kv.raw("stop_rule").unwrap_or("stop_x1_nonpositive") {
        "none" => StopRule::None,
        "stop_x1_nonpositive" => StopRule::StopWhenX1NonPositive,
        "clamp_at_zero" => StopRule::ClampAtZero,
        _ => return Err(kv.invalid("stop_rule")),
    };
    let integration = IntegrationConfig {
        step: kv.or("step", 1e-3)?,
        t_end: kv.require("t_end")?,
        sample_every: kv.or("sample_every", 1)?,
        stop_rule,
    };

    let defaults = CooperativeConfig::default();
    let k = match kv.raw("k") {
        Some("auto") => KChoice::Auto(kv.list("k_candidates", &[3, 4, 5])?),
        Some(_) => KChoice::Fixed(kv.require("k")?),
        None => defaults.k.clone(),
    };
    let features = match kv.raw("cluster_features").unwrap_or("infective") {
        "infective" => ClusterFeatures::Infective,
        "both" => ClusterFeatures::Both,
        _ => return Err(kv.invalid("cluster_features")),
    };
    let output_activation = match kv.raw("output_activation").unwrap_or("identity") {
        "identity" => OutputActivation::Identity,
        "tanh" => OutputActivation::Tanh,
        _ => return Err(kv.invalid("output_activation")),
    };
    let tdef = TrainConfig::default();
    let train = TrainConfig {
        learning_rate: kv.or("eta", tdef.learning_rate)?,
        momentum: kv.or("momentum", tdef.momentum)?,
        max_epochs: kv.or("max_epochs", tdef.max_epochs)?,
        target_mse: kv.or("target_mse", tdef.target_mse)?,
        ..tdef
    };
    let cooperative = CooperativeConfig {
        k,
        features,
        min_cluster_size: kv.or("min_cluster_size", defaults.min_cluster_size)?,
        init_scale: kv.or("init_scale", defaults.init_scale)?,
        output_activation,
        train,
        ..defaults
    };

    let mut config = ExperimentConfig::new(params, init, integration);
    config.seed = kv.or("seed", 0)?;
    config.train_fraction = kv.or("train_fraction", config.train_fraction)?;
    config.cooperative = cooperative;
    config.degrees = kv.list("degrees", &[1, 2])?;
    Ok(config)
}

/// Writes a configuration back out; `parse(&to_string(c)) == c`.
pub fn to_string(config: &ExperimentConfig) -> String {
    let mut s = String::new();
    let p = &config.params;
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("beta", p.beta.to_string());
    kv("gamma", p.gamma.to_string());
    kv("m1", p.m1.to_string());
    kv("m2", p.m2.to_string());
    match p.control {
        ControlSpec::None => kv("control", "none".into()),
        ControlSpec::Constant { u } => {
            kv("control", "constant".into());
            kv("u", u.to_string());
        }
        ControlSpec::Saturating { p, v } => {
            kv("control", "saturating".into());
            kv("p", p.to_string());
            kv("v", v.to_string());
        }
    }
    match p.recovery {
        RecoverySpec::Linear => kv("recovery", "linear".into()),
        RecoverySpec::PowerLaw { q } => {
            kv("recovery", "power".into());
            kv("q", q.to_string());
        }
    }
    kv("x1_0", config.init.x1.to_string());
    kv("x2_0", config.init.x2.to_string());
    let ic = &config.integration;
    kv("step", ic.step.to_string());
    kv("t_end", ic.t_end.to_string());
    kv("sample_every", ic.sample_every.to_string());
    let rule = match ic.stop_rule {
        StopRule::None => "none",
        StopRule::StopWhenX1NonPositive => "stop_x1_nonpositive",
        StopRule::ClampAtZero => "clamp_at_zero",
    };
    kv("stop_rule", rule.into());
    kv("seed", config.seed.to_string());
    kv("train_fraction", config.train_fraction.to_string());
    let c = &config.cooperative;
    match &c.k {
        KChoice::Fixed(k) => kv("k", k.to_string()),
        KChoice::Auto(cands) => {
            kv("k", "auto".into());
            kv("k_candidates", join(cands));
        }
    }
    let features = match c.features {
        ClusterFeatures::Infective => "infective",
        ClusterFeatures::Both => "both",
    };
    kv("cluster_features", features.into());
    kv("min_cluster_size", c.min_cluster_size.to_string());
    kv("eta", c.train.learning_rate.to_string());
    kv("momentum", c.train.momentum.to_string());
    kv("target_mse", c.train.target_mse.to_string());
    kv("max_epochs", c.train.max_epochs.to_string());
    kv("init_scale", c.init_scale.to_string());
    let act = match c.output_activation {
        OutputActivation::Identity => "identity",
        OutputActivation::Tanh => "tanh",
    };
    kv("output_activation", act.into());
    kv("degrees", join(&config.degrees));
    s
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL2: &str = "
        # sublinear model
        beta = 0.01
        gamma = 0.04
        m1 = 0.8
        m2 = 0.7
        control = saturating
        p = 0.4
        recovery = power
        q = 1.2
        x1_0 = 1000
        x2_0 = 10
        t_end = 30
    ";

    #[test]
    fn parses_model2_with_default_effort() {
        let c = parse(MODEL2).unwrap();
        assert_eq!(c.params, ModelParams::model2(DEFAULT_VACCINATION_EFFORT));
        assert_eq!(c.init, State::new(1000.0, 10.0));
        assert_eq!(c.integration.step, 1e-3);
        assert_eq!(c.integration.stop_rule, StopRule::StopWhenX1NonPositive);
        assert_eq!(c.degrees, [1, 2]);
    }

    #[test]
    fn round_trips_through_text() {
        let mut c = parse(MODEL2).unwrap();
        c.cooperative.k = KChoice::Auto(vec![3, 4, 5]);
        c.seed = 99;
        assert_eq!(parse(&to_string(&c)).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse("beta 1"),
            Err(ConfigError::Syntax { line: 1 })
        ));
        assert!(matches!(
            parse("gamma_typo = 1"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse("beta = 1\nbeta = 2"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            parse(&MODEL2.replace("beta = 0.01", "beta = abc")),
            Err(ConfigError::Invalid { key: "beta", .. })
        ));
        assert!(matches!(
            parse(&MODEL2.replace("t_end = 30", "")),
            Err(ConfigError::Missing("t_end"))
        ));
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("3, 4,5"), Some(vec![3, 4, 5]));
        assert_eq!(parse_list(""), None);
        assert_eq!(parse_list("3,x"), None);
    }
}
