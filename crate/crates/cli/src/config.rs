//! Run configuration: metric selection, grid, directions and tolerances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use finsler_core::catalog::{get_metric, CatalogEntry};
use finsler_core::classify::Tolerances;
use finsler_core::geometry::{check_positive_definite, ChartDomain, ExprField, MetricSpec, DEFAULT_DELTA};
use finsler_core::phi::{PhiConfig, PhiFamily};
use finsler_core::sampling::{box_grid, directions, domain_grid, DEFAULT_DIRECTIONS, DEFAULT_PER_AXIS};
use finsler_core::spray::SprayRoute;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA: u32 = 1;
pub const MIN_DIRECTIONS: usize = 4;

/// Problems with the user's configuration; these exit with status 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("unsupported schema {0}, expected {SCHEMA}")]
    Schema(u32),
    #[error("{0}")]
    Metric(#[from] finsler_core::Error),
    #[error("bad --param `{0}`, expected name=value")]
    Param(String),
    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub metric: MetricSelector,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub route: SprayRoute,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_directions() -> usize {
    DEFAULT_DIRECTIONS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSelector {
    Catalog {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Custom(CustomMetric),
}

/// Inline metric: `a_ij` and `b_i` in `x1..xn` and `p1..p9`, plus φ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMetric {
    #[serde(default = "custom_name")]
    pub name: String,
    pub a: Vec<Vec<String>>,
    pub b: Vec<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    pub phi: PhiConfig,
    pub domain: ChartDomain,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn custom_name() -> String {
    "custom".into()
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub per_axis: usize,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            per_axis: DEFAULT_PER_AXIS,
            lo: None,
            hi: None,
        }
    }
}

impl RunConfig {
    pub fn for_catalog(name: &str, params: BTreeMap<String, f64>) -> Self {
        RunConfig {
            schema: SCHEMA,
            metric: MetricSelector::Catalog {
                name: name.to_string(),
                params,
            },
            grid: GridConfig::default(),
            directions: DEFAULT_DIRECTIONS,
            tolerances: Tolerances::default(),
            route: SprayRoute::default(),
            output: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Invalid {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if cfg.schema != SCHEMA {
            return Err(ConfigError::Schema(cfg.schema));
        }
        Ok(cfg)
    }
}

/// Parses repeated `name=value` flags.
pub fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, ConfigError> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Param(kv.clone()))?;
            let v: f64 = v.trim().parse().map_err(|_| ConfigError::Param(kv.clone()))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// A validated configuration ready to run.
pub struct Resolved {
    pub name: String,
    pub description: String,
    pub params: BTreeMap<String, f64>,
    pub metric: MetricSpec,
    pub phi: PhiFamily,
    pub grid: Vec<Vec<f64>>,
    pub dirs: Vec<Vec<f64>>,
    pub tolerances: Tolerances,
    pub route: SprayRoute,
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

fn build_custom(c: &CustomMetric) -> Result<(MetricSpec, PhiFamily), ConfigError> {
    let field = ExprField::parse(&c.a, &c.b, &c.params)?;
    let mut m = MetricSpec::new(Arc::new(field), c.domain.clone())?;
    if !(0.0..1.0).contains(&c.delta) {
        return Err(invalid("metric.custom.delta", "must lie in [0, 1)"));
    }
    m.delta = c.delta;
    let phi = c.phi.build()?;
    Ok((m, phi))
}

/// Whether `p` keeps at least the stencil margin from the domain boundary.
fn inside_with_margin(domain: &ChartDomain, p: &[f64]) -> bool {
    let margin = domain.margin();
    let eps = 1e-12;
    match domain {
        ChartDomain::Box { lo, hi } => p
            .iter()
            .zip(lo.iter().zip(hi))
            .all(|(v, (l, h))| *v >= l + margin - eps && *v <= h - margin + eps),
        ChartDomain::Disc { center, radius } => {
            let d: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
            d <= radius - margin + eps
        }
    }
}

pub fn resolve(cfg: &RunConfig) -> Result<Resolved, ConfigError> {
    let (name, description, params, metric, phi) = match &cfg.metric {
        MetricSelector::Catalog { name, params } => {
            let CatalogEntry {
                name,
                description,
                params,
                metric,
                phi,
            } = get_metric(name, params)?;
            (name.to_string(), description.to_string(), params, metric, phi)
        }
        MetricSelector::Custom(c) => {
            let (m, phi) = build_custom(c)?;
            let params = c
                .params
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("p{}", i + 1), *v))
                .collect();
            (c.name.clone(), "inline custom metric".to_string(), params, m, phi)
        }
    };
    if cfg.directions < MIN_DIRECTIONS {
        return Err(invalid("directions", format!("must be at least {MIN_DIRECTIONS}")));
    }
    if cfg.grid.per_axis == 0 {
        return Err(invalid("grid.per_axis", "must be positive"));
    }
    let n = metric.n;
    let grid = match (&cfg.grid.lo, &cfg.grid.hi) {
        (None, None) => domain_grid(&metric.domain, cfg.grid.per_axis)?,
        (Some(lo), Some(hi)) => {
            if lo.len() != n || hi.len() != n {
                return Err(invalid("grid", format!("lo and hi need {n} components")));
            }
            if lo.iter().zip(hi).any(|(l, h)| l > h) {
                return Err(invalid("grid", "lo exceeds hi"));
            }
            let g = box_grid(lo, hi, cfg.grid.per_axis);
            if let Some(p) = g.iter().find(|p| !inside_with_margin(&metric.domain, p)) {
                return Err(invalid(
                    "grid",
                    format!("point {p:?} is outside the chart domain shrunk by the stencil margin"),
                ));
            }
            g
        }
        _ => return Err(invalid("grid", "lo and hi must be given together")),
    };
    check_positive_definite(&metric, &grid)?;
    let dirs = directions(n, cfg.directions)?;
    for (field, v) in [
        ("tolerances.tensor", cfg.tolerances.tensor),
        ("tolerances.s", cfg.tolerances.s),
        ("tolerances.dual", cfg.tolerances.dual),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(field, "must be positive"));
        }
    }
    Ok(Resolved {
        name,
        description,
        params,
        metric,
        phi,
        grid,
        dirs,
        tolerances: cfg.tolerances,
        route: cfg.route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected_with_paths() {
        let err = RunConfig::from_json(r#"{"schema": 1, "metric": {"catalog": {"name": "mw", "parms": {}}}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("metric.catalog"), "{err}");
        let err = RunConfig::from_json(r#"{"schema": 1, "metric": {"catalog": {"name": "mw"}}, "tolerances": {"tensr": 1}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("tolerances"), "{err}");
    }

    #[test]
    fn schema_is_checked() {
        let err = RunConfig::from_json(r#"{"schema": 2, "metric": {"catalog": {"name": "mw"}}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema(2)));
    }

    #[test]
    fn tolerances_override_per_field() {
        let cfg =
            RunConfig::from_json(r#"{"schema": 1, "metric": {"catalog": {"name": "mw"}}, "tolerances": {"s": 1e-3}}"#)
                .unwrap();
        assert_eq!(cfg.tolerances.s, 1e-3);
        assert_eq!(cfg.tolerances.tensor, Tolerances::default().tensor);
    }

    #[test]
    fn params_parse() {
        let p = parse_params(&["eps=0.25".into(), " k = 2 ".into()]).unwrap();
        assert_eq!(p["eps"], 0.25);
        assert_eq!(p["k"], 2.0);
        assert!(parse_params(&["eps".into()]).is_err());
        assert!(parse_params(&["eps=x".into()]).is_err());
    }

    #[test]
    fn grid_outside_domain_is_rejected() {
        let mut cfg = RunConfig::for_catalog("fish_tank", BTreeMap::new());
        cfg.grid.lo = Some(vec![-0.9, -0.9]);
        cfg.grid.hi = Some(vec![0.9, 0.9]);
        assert!(matches!(resolve(&cfg), Err(ConfigError::Invalid { .. })));
        cfg.directions = 3;
        cfg.grid = GridConfig::default();
        assert!(matches!(resolve(&cfg), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn custom_metric_resolves() {
        let cfg = RunConfig::from_json(
            r#"{"schema": 1, "metric": {"custom": {
                "a": [["1", "0"], ["0", "1"]], "b": ["p1", "0"], "params": [0.5],
                "phi": {"variant": "randers"},
                "domain": {"box": {"lo": [-1, -1], "hi": [1, 1]}}}}}"#,
        )
        .unwrap();
        let r = resolve(&cfg).unwrap();
        assert_eq!(r.grid.len(), 25);
        assert_eq!(r.params["p1"], 0.5);
    }
}
