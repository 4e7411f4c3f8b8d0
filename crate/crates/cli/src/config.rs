//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use udep_core::processes::IidMarginal;
use udep_core::{KernelId, ProcessModel};

use crate::CliError;

pub const DEFAULT_N_MAX: usize = 1 << 14;
pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "udep-out";
pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_M_MAX: usize = 10;
pub const DEFAULT_FLUCTUATION_GRID: usize = 41;
/// Environment variable overriding the `threads` key.
pub const THREADS_ENV: &str = "UDEP_THREADS";

/// Every accepted key, in manifest order.
pub const KEYS: &[&str] = &[
    "experiment",
    "kernel",
    "model",
    "n_max",
    "n_min",
    "replicates",
    "seed",
    "bandwidth",
    "grid",
    "statistic",
    "m_max",
    "gap",
    "out",
    "threads",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RateTheorem1,
    LilTheorem2,
    HlBahadur,
    Spectrum,
    MomentScan,
    CovarianceDecay,
    VarianceRatio,
    DyadicMax,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::RateTheorem1,
        Experiment::LilTheorem2,
        Experiment::HlBahadur,
        Experiment::Spectrum,
        Experiment::MomentScan,
        Experiment::CovarianceDecay,
        Experiment::VarianceRatio,
        Experiment::DyadicMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RateTheorem1 => "rate_theorem1",
            Experiment::LilTheorem2 => "lil_theorem2",
            Experiment::HlBahadur => "hl_bahadur",
            Experiment::Spectrum => "spectrum",
            Experiment::MomentScan => "moment_scan",
            Experiment::CovarianceDecay => "covariance_decay",
            Experiment::VarianceRatio => "variance_ratio",
            Experiment::DyadicMax => "dyadic_max",
        }
    }

    fn uses_loglog(self) -> bool {
        !matches!(
            self,
            Experiment::Spectrum | Experiment::CovarianceDecay | Experiment::VarianceRatio
        )
    }

    fn min_replicates(self) -> usize {
        match self {
            Experiment::MomentScan => 30,
            Experiment::CovarianceDecay => 100,
            Experiment::VarianceRatio => 1000,
            _ => 1,
        }
    }

    fn default_n_min(self) -> usize {
        match self {
            Experiment::MomentScan => 64,
            _ => 16,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Statistic reported by the `hl_bahadur` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlStatistic {
    /// `sqrt(n / log log n) |R_n|`.
    Remainder,
    /// `sqrt(n / log log n)` times the local fluctuation sup over the window
    /// of radius `2 sqrt(log log n / n)` around 1/2.
    Fluctuation,
    /// `sqrt(n) (H_n - 1/2)`.
    Clt,
}

impl HlStatistic {
    pub fn name(self) -> &'static str {
        match self {
            HlStatistic::Remainder => "remainder",
            HlStatistic::Fluctuation => "fluctuation",
            HlStatistic::Clt => "clt",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kernel: KernelId,
    pub model: ProcessModel,
    pub n_max: usize,
    pub n_min: usize,
    pub replicates: usize,
    pub seed: u64,
    pub bandwidth: Option<usize>,
    pub grid: usize,
    pub statistic: HlStatistic,
    pub m_max: usize,
    pub gap: Option<usize>,
    pub out: PathBuf,
    /// Requested worker count; `None` means available parallelism.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Config lines that reproduce this run (worker count excluded, since
    /// it does not affect any output).
    pub fn to_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("experiment = {}", self.experiment),
            format!("kernel = {}", self.kernel),
            format!("model = {}", self.model),
            format!("n_max = {}", self.n_max),
            format!("n_min = {}", self.n_min),
            format!("replicates = {}", self.replicates),
            format!("seed = {}", self.seed),
        ];
        if let Some(b) = self.bandwidth {
            v.push(format!("bandwidth = {b}"));
        }
        v.push(format!("grid = {}", self.grid));
        v.push(format!("statistic = {}", self.statistic.name()));
        v.push(format!("m_max = {}", self.m_max));
        if let Some(g) = self.gap {
            v.push(format!("gap = {g}"));
        }
        v.push(format!("out = {}", self.out.display()));
        v
    }
}

/// Where a raw value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    CommandLine,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(l) => write!(f, "line {l}"),
            Origin::CommandLine => write!(f, "command line"),
        }
    }
}

/// Unvalidated key/value pairs.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

fn config_error(origin: Option<Origin>, msg: impl fmt::Display) -> CliError {
    match origin {
        Some(o) => CliError::Config(format!("{o}: {msg}")),
        None => CliError::Config(msg.to_string()),
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_error(
                    Some(origin),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(config_error(Some(origin), format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(config_error(
                    Some(origin),
                    format!("key `{key}` has no value"),
                ));
            }
            if let Some((_, Origin::Line(prev))) = raw.entries.get(key) {
                return Err(config_error(
                    Some(origin),
                    format!("duplicate key `{key}` (first set on line {prev})"),
                ));
            }
            raw.entries
                .insert(key.to_string(), (value.to_string(), origin));
        }
        Ok(raw)
    }

    /// Sets a key from the command line, replacing any file value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(config_error(
                Some(Origin::CommandLine),
                format!("unknown key `{key}`"),
            ));
        }
        self.entries
            .insert(key.to_string(), (value.into(), Origin::CommandLine));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, Origin)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), *o))
    }

    fn parsed<T>(
        &self,
        key: &str,
        what: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<(T, Origin)>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, o)) => f(v).map(|t| Some((t, o))).ok_or_else(|| {
                config_error(Some(o), format!("key `{key}` expects {what}, got `{v}`"))
            }),
        }
    }

    /// Applies defaults and checks invariants. `env_threads` is the value of
    /// [`THREADS_ENV`], which wins over the `threads` key.
    pub fn validate(&self, env_threads: Option<&str>) -> Result<ExperimentConfig, CliError> {
        let count = |s: &str| s.parse::<usize>().ok();
        let experiment = self
            .parsed("experiment", "an experiment name", |s| {
                Experiment::ALL.into_iter().find(|e| e.name() == s)
            })?
            .ok_or_else(|| config_error(None, "missing required key `experiment`"))?
            .0;
        let kernel = self
            .parsed("kernel", "gini, cvm or hl_indicator(t)", parse_kernel)?
            .map(|k| k.0);
        let kernel = match (kernel, experiment) {
            (Some(k), _) => k,
            (None, Experiment::HlBahadur) => KernelId::HlIndicator(0.5),
            (None, _) => return Err(config_error(None, "missing required key `kernel`")),
        };
        let (model, model_origin) = match self.get("model") {
            Some((v, o)) => (
                parse_model(v).map_err(|e| config_error(Some(o), e))?,
                Some(o),
            ),
            None => (ProcessModel::iid_uniform(), None),
        };
        let n_max = self.parsed("n_max", "a count", count)?;
        let n_max_origin = n_max.map(|x| x.1);
        let n_max = n_max.map_or(DEFAULT_N_MAX, |x| x.0);
        let n_min = self.parsed("n_min", "a count", count)?;
        let n_min_origin = n_min.map(|x| x.1);
        let n_min = n_min.map_or(experiment.default_n_min(), |x| x.0);
        let reps = self.parsed("replicates", "a count", count)?;
        let reps_origin = reps.map(|x| x.1);
        let replicates = reps.map_or(DEFAULT_REPLICATES, |x| x.0);
        let seed = self
            .parsed("seed", "an unsigned 64-bit integer", |s| {
                s.parse::<u64>().ok()
            })?
            .map_or(DEFAULT_SEED, |x| x.0);
        let bandwidth = self.parsed("bandwidth", "a count", count)?.map(|x| x.0);
        let grid = self.parsed("grid", "a count", count)?;
        let grid_origin = grid.map(|x| x.1);
        let grid = grid.map_or(
            if experiment == Experiment::HlBahadur {
                DEFAULT_FLUCTUATION_GRID
            } else {
                DEFAULT_GRID
            },
            |x| x.0,
        );
        let statistic = self
            .parsed("statistic", "remainder, fluctuation or clt", |s| {
                [
                    HlStatistic::Remainder,
                    HlStatistic::Fluctuation,
                    HlStatistic::Clt,
                ]
                .into_iter()
                .find(|h| h.name() == s)
            })?
            .map_or(HlStatistic::Remainder, |x| x.0);
        let m_max = self.parsed("m_max", "a count", count)?;
        let m_max_origin = m_max.map(|x| x.1);
        let m_max = m_max.map_or(DEFAULT_M_MAX, |x| x.0);
        let gap = self.parsed("gap", "a count", count)?;
        if let Some((0, o)) = gap {
            return Err(config_error(Some(o), "gap must be at least 1"));
        }
        let gap = gap.map(|x| x.0);
        let out = self
            .get("out")
            .map_or_else(|| PathBuf::from(DEFAULT_OUT), |(v, _)| PathBuf::from(v));
        let threads = match env_threads {
            Some(v) => Some(count(v.trim()).filter(|&t| t > 0).ok_or_else(|| {
                config_error(
                    None,
                    format!("{THREADS_ENV} expects a positive count, got `{v}`"),
                )
            })?),
            None => self
                .parsed("threads", "a positive count", |s| {
                    count(s).filter(|&t| t > 0)
                })?
                .map(|x| x.0),
        };

        if replicates < experiment.min_replicates() {
            return Err(config_error(
                reps_origin,
                format!(
                    "replicates = {replicates} is below the minimum {} for {experiment}",
                    experiment.min_replicates()
                ),
            ));
        }
        if experiment.uses_loglog() && n_max < 16 {
            return Err(config_error(
                n_max_origin,
                format!("n_max = {n_max} must be at least 16 for {experiment}"),
            ));
        }
        if experiment.uses_loglog() && !(16..=n_max).contains(&n_min) {
            return Err(config_error(
                n_min_origin,
                format!("n_min = {n_min} must lie in [16, n_max]"),
            ));
        }
        if experiment == Experiment::VarianceRatio && n_max < 2 {
            return Err(config_error(n_max_origin, "n_max must be at least 2"));
        }
        if experiment == Experiment::CovarianceDecay && m_max == 0 {
            return Err(config_error(m_max_origin, "m_max must be at least 1"));
        }
        if experiment == Experiment::Spectrum && grid < 8 {
            return Err(config_error(grid_origin, "grid must be at least 8"));
        }
        if experiment == Experiment::HlBahadur && grid < 2 {
            return Err(config_error(grid_origin, "grid must be at least 2"));
        }
        if experiment != Experiment::Spectrum && !model.has_uniform_marginal() {
            return Err(config_error(
                model_origin,
                format!("model {model} does not have a uniform marginal, required by the analytic kernel parts"),
            ));
        }
        Ok(ExperimentConfig {
            experiment,
            kernel,
            model,
            n_max,
            n_min,
            replicates,
            seed,
            bandwidth,
            grid,
            statistic,
            m_max,
            gap,
            out,
            threads,
        })
    }
}

/// Parses and validates a config document (without environment overrides).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    RawConfig::parse(text)?.validate(None)
}

fn call_args<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

fn real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// `gini`, `cvm`, `hl_indicator(t)` (or `hl(t)`).
pub fn parse_kernel(s: &str) -> Option<KernelId> {
    match s {
        "gini" => Some(KernelId::Gini),
        "cvm" => Some(KernelId::Cvm),
        _ => call_args(s, "hl_indicator")
            .or_else(|| call_args(s, "hl"))
            .and_then(real)
            .map(KernelId::HlIndicator),
    }
}

/// `iid_uniform`, `iid_normal`, `ar1(phi)`, `ar1(phi,sd)`, `ma(m)`,
/// `ma(m;w0,...,wm)`, `doubling`, `doubling(depth)`.
pub fn parse_model(s: &str) -> Result<ProcessModel, String> {
    let bad = || format!("unrecognized model `{s}`");
    match s {
        "iid_uniform" => return Ok(ProcessModel::iid_uniform()),
        "iid_normal" => return Ok(ProcessModel::iid(IidMarginal::StandardNormal)),
        "doubling" => {
            return ProcessModel::doubling(udep_core::processes::DEFAULT_DOUBLING_DEPTH)
                .map_err(|e| e.to_string())
        }
        _ => {}
    }
    if let Some(a) = call_args(s, "ar1") {
        let parts: Vec<&str> = a.split(',').collect();
        let phi = real(parts[0]).ok_or_else(bad)?;
        let sd = match parts.len() {
            1 => 1.0,
            2 => real(parts[1]).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        return ProcessModel::ar1(phi, sd).map_err(|e| e.to_string());
    }
    if let Some(a) = call_args(s, "ma") {
        let (order, weights) = match a.split_once(';') {
            Some((o, w)) => (o, Some(w)),
            None => (a, None),
        };
        let order: usize = order.trim().parse().map_err(|_| bad())?;
        return match weights {
            None => Ok(ProcessModel::ma_equal(order)),
            Some(w) => {
                let ws = w
                    .split(',')
                    .map(real)
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(bad)?;
                if ws.len() != order + 1 {
                    return Err(format!(
                        "ma({order}) needs {} weights, got {}",
                        order + 1,
                        ws.len()
                    ));
                }
                ProcessModel::ma(ws).map_err(|e| e.to_string())
            }
        };
    }
    if let Some(a) = call_args(s, "doubling") {
        let depth: u32 = a.trim().parse().map_err(|_| bad())?;
        return ProcessModel::doubling(depth).map_err(|e| e.to_string());
    }
    Err(bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_rate_config_gets_defaults() {
        let c = parse_config("experiment = rate_theorem1\nkernel = cvm\nmodel = iid_uniform\n")
            .unwrap();
        assert_eq!(c.n_max, 1 << 14);
        assert_eq!(c.replicates, 100);
        assert_eq!(c.kernel, KernelId::Cvm);
    }

    #[test]
    fn zero_replicates_rejected() {
        let e =
            parse_config("experiment = rate_theorem1\nkernel = cvm\nreplicates = 0\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn misspelled_key_named() {
        let e = parse_config("# comment\nexperiment = rate_theorem1\nkernal = cvm\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("kernal") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn type_mismatch_and_duplicates() {
        let e = parse_config("experiment = spectrum\nkernel = cvm\ngrid = many\n").unwrap_err();
        assert!(e.to_string().contains("line 3"));
        let e = parse_config("experiment = spectrum\nkernel = cvm\nkernel = gini\n").unwrap_err();
        assert!(e.to_string().contains("duplicate"));
        assert!(parse_config("experiment = rate_theorem1\nkernel = cvm\nn_max = 8\n").is_err());
        assert!(
            parse_config("experiment = rate_theorem1\nkernel = cvm\nmodel = ar1(0.5)\n").is_err()
        );
        assert!(parse_config("kernel = cvm\n").is_err());
    }

    #[test]
    fn env_threads_override() {
        let raw = RawConfig::parse("experiment = spectrum\nkernel = cvm\nthreads = 3\n").unwrap();
        assert_eq!(raw.validate(None).unwrap().threads, Some(3));
        assert_eq!(raw.validate(Some("2")).unwrap().threads, Some(2));
        assert!(raw.validate(Some("0")).is_err());
    }

    #[test]
    fn kernel_and_model_specs() {
        assert_eq!(parse_kernel("hl(0.3)"), Some(KernelId::HlIndicator(0.3)));
        assert_eq!(
            parse_kernel("hl_indicator(0.5)"),
            Some(KernelId::HlIndicator(0.5))
        );
        assert_eq!(parse_kernel("gin"), None);
        for s in [
            "iid_uniform",
            "iid_normal",
            "ar1(0.5,1)",
            "ma(3)",
            "doubling(40)",
        ] {
            assert_eq!(parse_model(s).unwrap().to_string(), s);
        }
        assert_eq!(
            parse_model("ma(2;1,0.5,0.25)").unwrap().to_string(),
            "ma(2;1,0.5,0.25)"
        );
        assert!(parse_model("ma(2;1,0.5)").is_err());
        assert!(parse_model("ar1(1.5)").is_err());
        assert!(parse_model("doubling(60)").is_err());
    }

    #[test]
    fn manifest_lines_round_trip() {
        let c = parse_config("experiment = covariance_decay\nkernel = hl(0.25)\nmodel = ma(2)\nreplicates = 200\ngap = 3\n").unwrap();
        let again = parse_config(&c.to_lines().join("\n")).unwrap();
        assert_eq!(again.to_lines(), c.to_lines());
    }
}
