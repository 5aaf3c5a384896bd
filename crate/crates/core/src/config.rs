//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # lines starting with '#' or ';' are comments
//! dim = 2
//! runs = 100
//! grid_k = 1            # or: levels = 120
//! delta = 0.0168067226890756
//! privacy = bridge      # bridge | latin | classical | interval
//! criterion = ard:z=1,lambda=1,J=1+2
//! constraint = 0.5 -1 <= 0.5
//! time_budget = 120
//! report = ard:J=1      # repeatable; extra criteria for `evaluate`
//! ```
//!
//! Loading validates every field; `to_canonical` writes back a form that
//! loads to an equal config.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use crate::criteria::CriterionSpec;
use crate::error::{Error, Result};
use crate::grid::{levels_for_delta, GridSpace, LinearConstraints};
use crate::privacy::{PrivacyKind, PrivacySpec};
use crate::psa::PsaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelRule {
    Levels(u32),
    /// `L = floor(2k/delta) + 1`.
    GridK(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrivacyName {
    Bridge,
    Latin,
    Classical,
    Interval,
}

impl PrivacyName {
    fn as_str(self) -> &'static str {
        match self {
            Self::Bridge => "bridge",
            Self::Latin => "latin",
            Self::Classical => "classical",
            Self::Interval => "interval",
        }
    }

    fn needs_delta(self) -> bool {
        matches!(self, Self::Bridge | Self::Interval)
    }
}

impl FromStr for PrivacyName {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "bridge" => Ok(Self::Bridge),
            "latin" | "lhd" => Ok(Self::Latin),
            "classical" => Ok(Self::Classical),
            "interval" => Ok(Self::Interval),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub runs: usize,
    pub level_rule: LevelRule,
    pub delta: Option<f64>,
    pub privacy: PrivacyName,
    pub criterion: CriterionSpec,
    /// Rows `(a, b)` of `a . x <= b`.
    pub constraints: Vec<(Vec<f64>, f64)>,
    pub blind_samples: usize,
    pub candidate_count: usize,
    pub tuning_passes: usize,
    pub exhaustive_threshold: u64,
    /// Seconds.
    pub time_budget: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Trace sampling interval in seconds.
    pub sample_interval: f64,
    pub out_dir: PathBuf,
    pub probe_vertices: bool,
    pub probe_uniform: usize,
    pub report: Vec<CriterionSpec>,
}

fn field_err(field: &str, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {message}"))
}

fn parse_num<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| field_err(field, format!("cannot parse `{value}`")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(field_err(field, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_constraint(value: &str, line: usize) -> Result<(Vec<f64>, f64)> {
    let (lhs, rhs) = value.split_once("<=").ok_or_else(|| Error::Parse {
        line,
        message: "field `constraint`: expected `a1 ... ad <= b`".into(),
    })?;
    let row = lhs
        .split_whitespace()
        .map(|v| parse_num::<f64>("constraint", v))
        .collect::<Result<Vec<_>>>()?;
    Ok((row, parse_num("constraint", rhs.trim())?))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() || content.starts_with(';') {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            entries.push((line, key.trim().to_ascii_lowercase(), value.trim().to_string()));
        }

        const REPEATABLE: [&str; 2] = ["constraint", "report"];
        const KNOWN: [&str; 20] = [
            "dim", "runs", "levels", "grid_k", "delta", "privacy", "criterion", "constraint",
            "blind_samples", "candidate_count", "tuning_passes", "exhaustive_threshold",
            "time_budget", "restarts", "seed", "sample_interval", "out_dir", "probe_vertices",
            "probe_uniform", "report",
        ];
        for (n, (line, key, _)) in entries.iter().enumerate() {
            if !KNOWN.contains(&key.as_str()) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("unknown field `{key}`"),
                });
            }
            if !REPEATABLE.contains(&key.as_str()) && entries[..n].iter().any(|(_, k, _)| k == key) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("field `{key}` given twice"),
                });
            }
        }
        let get = |key: &str| entries.iter().find(|(_, k, _)| k == key).map(|(_, _, v)| v.as_str());
        let required = |key: &str| get(key).ok_or_else(|| field_err(key, "missing"));

        let dim: usize = parse_num("dim", required("dim")?)?;
        if dim == 0 {
            return Err(field_err("dim", "must be at least 1"));
        }
        let runs: usize = parse_num("runs", required("runs")?)?;
        if runs == 0 {
            return Err(field_err("runs", "must be at least 1"));
        }
        let delta = get("delta").map(|v| parse_num::<f64>("delta", v)).transpose()?;
        let level_rule = match (get("levels"), get("grid_k")) {
            (Some(_), Some(_)) => return Err(field_err("levels", "give either `levels` or `grid_k`, not both")),
            (Some(v), None) => LevelRule::Levels(parse_num("levels", v)?),
            (None, Some(v)) => LevelRule::GridK(parse_num("grid_k", v)?),
            (None, None) => return Err(field_err("levels", "missing (or give `grid_k` with `delta`)")),
        };
        let privacy = match get("privacy") {
            Some(v) => v
                .parse::<PrivacyName>()
                .map_err(|_| field_err("privacy", format!("unknown kind `{v}`")))?,
            None if delta.is_some() => PrivacyName::Bridge,
            None => return Err(field_err("privacy", "missing")),
        };
        let criterion = CriterionSpec::parse(required("criterion")?, dim)
            .map_err(|e| field_err("criterion", e))?;
        let constraints = entries
            .iter()
            .filter(|(_, k, _)| k == "constraint")
            .map(|(line, _, v)| parse_constraint(v, *line))
            .collect::<Result<Vec<_>>>()?;
        let report = entries
            .iter()
            .filter(|(_, k, _)| k == "report")
            .map(|(_, _, v)| CriterionSpec::parse(v, dim).map_err(|e| field_err("report", e)))
            .collect::<Result<Vec<_>>>()?;
        let opt = |key: &str| get(key);
        let defaults = DEFAULTS;
        let time_budget = opt("time_budget").map(|v| parse_num::<f64>("time_budget", v)).transpose()?;
        let config = Self {
            dim,
            runs,
            level_rule,
            delta,
            privacy,
            criterion,
            constraints,
            blind_samples: opt("blind_samples").map_or(Ok(defaults.blind_samples), |v| parse_num("blind_samples", v))?,
            candidate_count: opt("candidate_count").map_or(Ok(defaults.candidate_count), |v| parse_num("candidate_count", v))?,
            tuning_passes: opt("tuning_passes").map_or(Ok(defaults.tuning_passes), |v| parse_num("tuning_passes", v))?,
            exhaustive_threshold: opt("exhaustive_threshold")
                .map_or(Ok(defaults.exhaustive_threshold), |v| parse_num("exhaustive_threshold", v))?,
            time_budget,
            restarts: opt("restarts").map_or(Ok(defaults.restarts), |v| parse_num("restarts", v))?,
            seed: opt("seed").map_or(Ok(0), |v| parse_num("seed", v))?,
            sample_interval: opt("sample_interval").map_or(Ok(defaults.sample_interval), |v| parse_num("sample_interval", v))?,
            out_dir: opt("out_dir").map_or_else(|| PathBuf::from(defaults.out_dir), PathBuf::from),
            probe_vertices: opt("probe_vertices").map_or(Ok(false), |v| parse_bool("probe_vertices", v))?,
            probe_uniform: opt("probe_uniform").map_or(Ok(0), |v| parse_num("probe_uniform", v))?,
            report,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks cross-field consistency by building the search configuration.
    pub fn validate(&self) -> Result<()> {
        if self.privacy.needs_delta() && self.delta.is_none() {
            return Err(field_err("delta", format!("required for privacy = {}", self.privacy.as_str())));
        }
        if let Some(t) = self.time_budget {
            if !t.is_finite() || t < 0.0 {
                return Err(field_err("time_budget", format!("must be a non-negative number of seconds, got {t}")));
            }
        }
        if !self.sample_interval.is_finite() || self.sample_interval <= 0.0 {
            return Err(field_err("sample_interval", format!("must be positive, got {}", self.sample_interval)));
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(field_err("out_dir", "must not be empty"));
        }
        self.psa_config()?.validate()
    }

    pub fn levels(&self) -> Result<u32> {
        match self.level_rule {
            LevelRule::Levels(l) => Ok(l),
            LevelRule::GridK(k) => {
                let delta = self.delta.ok_or_else(|| field_err("grid_k", "needs `delta`"))?;
                levels_for_delta(k, delta).map_err(|e| field_err("grid_k", e))
            }
        }
    }

    pub fn space(&self) -> Result<GridSpace> {
        let field = match self.level_rule {
            LevelRule::Levels(_) => "levels",
            LevelRule::GridK(_) => "grid_k",
        };
        let space = GridSpace::new(self.dim, self.levels()?).map_err(|e| field_err(field, e))?;
        if self.constraints.is_empty() {
            return Ok(space);
        }
        let (rows, rhs): (Vec<_>, Vec<_>) = self.constraints.iter().cloned().unzip();
        let c = LinearConstraints::new(rows, rhs).map_err(|e| field_err("constraint", e))?;
        space.with_constraints(c).map_err(|e| field_err("constraint", e))
    }

    pub fn privacy_spec(&self, space: &GridSpace) -> Result<PrivacySpec> {
        let kind = match self.privacy {
            PrivacyName::Classical => PrivacyKind::Classical,
            PrivacyName::Latin => PrivacyKind::Latin,
            PrivacyName::Bridge | PrivacyName::Interval => {
                let delta = self.delta.ok_or_else(|| field_err("delta", "missing"))?;
                let steps = space.delta_to_steps(delta).map_err(|e| field_err("delta", e))?;
                if self.privacy == PrivacyName::Bridge {
                    PrivacyKind::Bridge { steps }
                } else {
                    PrivacyKind::Interval { steps }
                }
            }
        };
        PrivacySpec::new(kind, self.dim).map_err(|e| field_err("privacy", e))
    }

    pub fn psa_config(&self) -> Result<PsaConfig> {
        let space = self.space()?;
        let privacy = self.privacy_spec(&space)?;
        let mut cfg = PsaConfig::new(space, privacy, self.criterion.clone(), self.runs);
        cfg.blind_samples = self.blind_samples;
        cfg.candidate_count = self.candidate_count;
        cfg.tuning_passes = self.tuning_passes;
        cfg.exhaustive_threshold = self.exhaustive_threshold;
        cfg.time_budget = self.time_budget.map(Duration::from_secs_f64);
        cfg.restarts = self.restarts;
        cfg.seed = self.seed;
        Ok(cfg)
    }

    /// Criteria reported by `evaluate`: the search criterion, then `report`
    /// entries not equal to it.
    pub fn report_criteria(&self) -> Vec<CriterionSpec> {
        let mut out = vec![self.criterion.clone()];
        for c in &self.report {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
        out
    }

    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "runs = {}", self.runs);
        match self.level_rule {
            LevelRule::Levels(l) => {
                let _ = writeln!(s, "levels = {l}");
            }
            LevelRule::GridK(k) => {
                let _ = writeln!(s, "grid_k = {k}");
            }
        }
        if let Some(d) = self.delta {
            let _ = writeln!(s, "delta = {d:?}");
        }
        let _ = writeln!(s, "privacy = {}", self.privacy.as_str());
        let _ = writeln!(s, "criterion = {}", self.criterion);
        for (row, b) in &self.constraints {
            let row: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "constraint = {} <= {b:?}", row.join(" "));
        }
        let _ = writeln!(s, "blind_samples = {}", self.blind_samples);
        let _ = writeln!(s, "candidate_count = {}", self.candidate_count);
        let _ = writeln!(s, "tuning_passes = {}", self.tuning_passes);
        let _ = writeln!(s, "exhaustive_threshold = {}", self.exhaustive_threshold);
        if let Some(t) = self.time_budget {
            let _ = writeln!(s, "time_budget = {t:?}");
        }
        let _ = writeln!(s, "restarts = {}", self.restarts);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sample_interval = {:?}", self.sample_interval);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "probe_vertices = {}", self.probe_vertices);
        let _ = writeln!(s, "probe_uniform = {}", self.probe_uniform);
        for r in &self.report {
            let _ = writeln!(s, "report = {r}");
        }
        s
    }
}

struct Defaults {
    blind_samples: usize,
    candidate_count: usize,
    tuning_passes: usize,
    exhaustive_threshold: u64,
    restarts: usize,
    sample_interval: f64,
    out_dir: &'static str,
}

const DEFAULTS: Defaults = Defaults {
    blind_samples: 64,
    candidate_count: 50,
    tuning_passes: 2,
    exhaustive_threshold: 20_000,
    restarts: 1,
    sample_interval: 0.05,
    out_dir: "out",
};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SECTION5: &str = "\
# constrained 2-d run
dim = 2
runs = 100
grid_k = 1
delta = 0.01680672268907563
criterion = ard:z=1,lambda=1,J=1+2
constraint = 0.5 -1 <= 0.5
time_budget = 120
report = ard:J=1
report = ard:J=2
";

    #[test]
    fn loads_constrained_example() {
        let c = ExperimentConfig::parse(SECTION5).unwrap();
        assert_eq!(c.levels().unwrap(), 120);
        assert_eq!(c.privacy, PrivacyName::Bridge);
        let cfg = c.psa_config().unwrap();
        assert_eq!(cfg.privacy, PrivacySpec::bridge(1).unwrap());
        assert_eq!(cfg.space.constraints().unwrap().len(), 1);
        assert_eq!(cfg.time_budget, Some(Duration::from_secs(120)));
        assert_eq!(c.report_criteria().len(), 3);
    }

    #[test]
    fn canonical_round_trip() {
        let c = ExperimentConfig::parse(SECTION5).unwrap();
        let text = c.to_canonical();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
        assert_eq!(ExperimentConfig::parse(&text).unwrap().to_canonical(), text);
    }

    fn err_of(text: &str) -> String {
        ExperimentConfig::parse(text).unwrap_err().to_string()
    }

    #[test]
    fn errors_name_the_field() {
        let base = "dim = 2\nruns = 21\nlevels = 41\ncriterion = d:quadratic\n";
        assert!(err_of(base).contains("privacy"));
        assert!(err_of(&format!("{base}delta = 0.07\n")).contains("delta"));
        assert!(err_of(&format!("{base}privacy = bridge\n")).contains("delta"));
        assert!(err_of(&format!("{base}privacy = hexagon\n")).contains("privacy"));
        let latin = format!("{base}privacy = latin\n");
        assert!(err_of(&latin.replace("runs = 21", "runs = many")).contains("runs"));
        assert!(err_of(&latin.replace("d:quadratic", "d:cubic")).contains("criterion"));
        assert!(err_of(&format!("{base}privacy = latin\nconstraint = 1 <= 0\n")).contains("constraint"));
        assert!(err_of(&format!("{base}privacy = latin\ncolour = red\n")).contains("colour"));
        assert!(err_of(&format!("{base}privacy = latin\nseed = 1\nseed = 2\n")).contains("seed"));
        assert!(err_of(&format!("{base}privacy = latin\nnonsense\n")).contains("line 6"));
        assert!(err_of(&format!("{base}privacy = interval\ndelta = 0.05\n")).contains("privacy"));
        assert!(ExperimentConfig::parse(&format!("{base}delta = 0.05\n")).is_ok());
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            1usize..4,
            1usize..60,
            prop_oneof![Just(PrivacyName::Bridge), Just(PrivacyName::Latin), Just(PrivacyName::Classical)],
            1u32..4,
            proptest::option::of(0.0f64..500.0),
            any::<u64>(),
            prop::collection::vec((-2.0f64..2.0, -1.0f64..1.0), 0..3),
            0usize..3,
        )
            .prop_map(|(dim, runs, privacy, steps, budget, seed, cons, crit)| {
                let levels = 41;
                let criterion = match crit {
                    0 => CriterionSpec::parse("d:linear", dim).unwrap(),
                    1 => CriterionSpec::parse("ard:z=1,lambda=2", dim).unwrap(),
                    _ => CriterionSpec::MaxPro { z: 2.0 },
                };
                ExperimentConfig {
                    dim,
                    runs,
                    level_rule: LevelRule::Levels(levels),
                    delta: (privacy == PrivacyName::Bridge).then(|| f64::from(steps) * 0.05),
                    privacy,
                    criterion,
                    constraints: cons.into_iter().map(|(a, b)| (vec![a; dim], b)).collect(),
                    blind_samples: 64,
                    candidate_count: 50,
                    tuning_passes: 2,
                    exhaustive_threshold: 20_000,
                    time_budget: budget,
                    restarts: 1,
                    seed,
                    sample_interval: 0.05,
                    out_dir: PathBuf::from("out"),
                    probe_vertices: seed % 2 == 0,
                    probe_uniform: (seed % 100) as usize,
                    report: vec![],
                }
            })
    }

    proptest! {
        #[test]
        fn canonical_form_is_stable(c in arb_config()) {
            prop_assume!(c.validate().is_ok());
            let text = c.to_canonical();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_canonical(), text);
        }
    }
}
