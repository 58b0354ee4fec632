//! Flat `key = value` experiment configuration.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::clustering::{KRange, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::interaction::RetailFilter;
use crate::metrics::ValueIdeal;
use crate::recommend::Method;
use crate::similarity::MetricKind;
use crate::synthgen::{Scenario, ScenarioSpec};

/// Where each run's data comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Synthetic(ScenarioSpec),
    Retail {
        path: PathBuf,
        filter: RetailFilter,
        mask_fraction: f64,
    },
}

impl Source {
    /// Short label for result files.
    pub fn label(&self) -> String {
        match self {
            Source::Synthetic(spec) => format!(
                "{}_{}-{}_{}",
                spec.scenario,
                pct(spec.theta.0),
                pct(spec.theta.1),
                pct(spec.beta)
            ),
            Source::Retail { .. } => "retail".into(),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{}", (x * 100.0).round() as i64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: Source,
    pub distances: Vec<MetricKind>,
    pub methods: Vec<Method>,
    /// Recommendation list length.
    pub l: usize,
    pub runs: usize,
    pub k_range: KRange,
    pub restarts: usize,
    pub ndcv_ideal: ValueIdeal,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn synthetic(spec: ScenarioSpec) -> Self {
        ExperimentConfig {
            source: Source::Synthetic(spec),
            distances: MetricKind::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            l: 10,
            runs: 50,
            k_range: KRange::default(),
            restarts: DEFAULT_RESTARTS,
            ndcv_ideal: ValueIdeal::default(),
            base_seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.l == 0 {
            return bad("L must be at least 1");
        }
        if self.distances.is_empty() {
            return bad("no distances selected");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.k_range.min < 2 || self.k_range.min > self.k_range.max {
            return bad("k range must satisfy 2 <= k_min <= k_max");
        }
        match &self.source {
            Source::Synthetic(spec) => spec.validate().map_err(|e| Error::Config(e.to_string())),
            Source::Retail { mask_fraction, .. } => {
                if *mask_fraction > 0.0 && *mask_fraction < 1.0 {
                    Ok(())
                } else {
                    bad("mask_fraction must be in (0, 1)")
                }
            }
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse `key = value` lines. `#` starts a comment; lists are
    /// comma-separated. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            pairs.push((i + 1, k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }

        let source_kind = pairs
            .iter()
            .find(|(_, k, _)| k == "source")
            .map(|(_, _, v)| v.to_ascii_lowercase())
            .unwrap_or_else(|| "synthetic".into());
        let mut spec = ScenarioSpec::new(Scenario::I);
        let mut retail_path: Option<PathBuf> = None;
        let mut filter = RetailFilter::uk_summer_2011();
        let mut mask_fraction = 0.2;
        let mut cfg = ExperimentConfig::synthetic(spec.clone());

        for (line, key, value) in &pairs {
            let ctx = |e: String| Error::Config(format!("line {line}: {key}: {e}"));
            let num = |v: &str| v.parse::<f64>().map_err(|e| ctx(e.to_string()));
            let int = |v: &str| v.parse::<usize>().map_err(|e| ctx(e.to_string()));
            let date = |v: &str| {
                NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|e| ctx(e.to_string()))
            };
            let pair = |v: &str| -> Result<(f64, f64)> {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [a, b] => Ok((num(a)?, num(b)?)),
                    _ => Err(ctx("expected two comma-separated numbers".into())),
                }
            };
            match key.as_str() {
                "source" => {
                    if !matches!(value.to_ascii_lowercase().as_str(), "synthetic" | "retail") {
                        return Err(ctx(format!("unknown source {value:?}")));
                    }
                }
                "scenario" => spec.scenario = value.parse().map_err(|e: Error| ctx(e.to_string()))?,
                "n_per_type" => spec.n_per_type = int(value)?,
                "n_items" | "p" => spec.n_items = int(value)?,
                "max_spend" => spec.max_spend = num(value)?,
                "theta" => spec.theta = pair(value)?,
                "beta" => spec.beta = num(value)?,
                "offpref_fraction" => spec.offpref_fraction = num(value)?,
                "offpref_discount" => spec.offpref_discount = num(value)?,
                "offpref_mode" => spec.offpref_mode = value.parse().map_err(|e: Error| ctx(e.to_string()))?,
                "retail_csv" => retail_path = Some(PathBuf::from(value)),
                "country" => {
                    filter.country = if value.is_empty() || value == "*" { None } else { Some(value.clone()) }
                }
                "start_date" => filter.start = Some(date(value)?),
                "end_date" => filter.end = Some(date(value)?),
                "min_items_per_customer" => filter.min_items_per_customer = int(value)?,
                "mask_fraction" => mask_fraction = num(value)?,
                "distances" => {
                    cfg.distances = list(value, |s| s.parse::<MetricKind>()).map_err(|e| ctx(e.to_string()))?
                }
                "methods" => {
                    cfg.methods = list(value, |s| s.parse::<Method>()).map_err(|e| ctx(e.to_string()))?
                }
                "l" => cfg.l = int(value)?,
                "runs" => cfg.runs = int(value)?,
                "k_range" => {
                    let (lo, hi) = pair(value)?;
                    cfg.k_range = KRange::new(lo as usize, hi as usize);
                }
                "restarts" => cfg.restarts = int(value)?,
                "ndcv_ideal" => cfg.ndcv_ideal = value.parse().map_err(|e: Error| ctx(e.to_string()))?,
                "base_seed" | "seed" => {
                    cfg.base_seed = value.parse().map_err(|e: std::num::ParseIntError| ctx(e.to_string()))?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                _ => return Err(ctx("unknown key".into())),
            }
        }

        cfg.source = if source_kind == "retail" {
            Source::Retail {
                path: retail_path.ok_or_else(|| Error::Config("retail source needs retail_csv".into()))?,
                filter,
                mask_fraction,
            }
        } else {
            Source::Synthetic(spec)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn list<T>(value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = ExperimentConfig::parse("# nothing\n").unwrap();
        assert_eq!(cfg.runs, 50);
        assert_eq!(cfg.l, 10);
        assert_eq!(cfg.k_range, KRange::new(2, 8));
        assert_eq!(cfg.distances.len(), 4);
        assert_eq!(cfg.source, Source::Synthetic(ScenarioSpec::new(Scenario::I)));
    }

    #[test]
    fn full_synthetic_config() {
        let cfg = ExperimentConfig::parse(
            "scenario = III\ntheta = 0.5, 0.75  # low\nbeta=0.99\nruns = 3\n\
             distances = madd, euclidean\nmethods = revenue\nk_range = 2,5\nbase_seed = 9\n\
             output_dir = /tmp/x\nn_per_type = 10\np = 200\n",
        )
        .unwrap();
        let Source::Synthetic(spec) = &cfg.source else { panic!() };
        assert_eq!(spec.scenario, Scenario::III);
        assert_eq!(spec.theta, (0.5, 0.75));
        assert_eq!(spec.n_items, 200);
        assert_eq!(cfg.distances, vec![MetricKind::Madd, MetricKind::Euclidean]);
        assert_eq!(cfg.methods, vec![Method::Revenue]);
        assert_eq!(cfg.base_seed, 9);
        assert_eq!(cfg.source.label(), "III_50-75_99");
    }

    #[test]
    fn retail_config() {
        let cfg = ExperimentConfig::parse(
            "source = retail\nretail_csv = data.csv\nmask_fraction = 0.3\ncountry = *\n",
        )
        .unwrap();
        match cfg.source {
            Source::Retail { path, filter, mask_fraction } => {
                assert_eq!(path, PathBuf::from("data.csv"));
                assert_eq!(filter.country, None);
                assert_eq!(filter.min_items_per_customer, 20);
                assert_eq!(mask_fraction, 0.3);
            }
            _ => panic!("expected retail"),
        }
        assert!(ExperimentConfig::parse("source = retail\n").is_err());
    }

    #[test]
    fn errors_are_config_errors() {
        for text in ["runs = 0", "bogus = 1", "theta = 0.5", "distances = manhattan", "no equals sign", "l = 0"] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text}: {err}");
        }
    }
}
