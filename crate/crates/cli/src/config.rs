//! Experiment configuration: one TOML (or JSON) document per experiment.
//!
//! ```toml
//! schema_version = 1
//! kind = "certify"
//! seed = 7
//!
//! [map]
//! gallery = "ex2-piecewise"
//!
//! [sampling]
//! grid_step = 1e-3
//!
//! [[conditions]]
//! condition = "enriched-almost"
//! b = 1.0
//! theta = 1.0
//! L = 3.0
//! expect = "certified"
//! ```
//!
//! See `configs/` for every experiment kind.

use std::path::{Path, PathBuf};

use fpkit_core::contract::{Condition, EnrichedAlmostParams, ParamGrid, SamplingPlan, Verdict};
use fpkit_core::iterate::{History, StoppingRule};
use fpkit_core::space::{AffinePiece, Domain, MapKind, Piecewise1d, GALLERY_IDS};
use fpkit_core::vip::VipProblem;
use fpkit_core::{ConvexSet, MapDescriptor, Point};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::reproduce::SUITES;
use crate::table::TableFormat;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Certify,
    Search,
    Iterate,
    Sweep,
    Vip,
    ReproducePaper,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Certify => "certify",
            ExperimentKind::Search => "search",
            ExperimentKind::Iterate => "iterate",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Vip => "vip",
            ExperimentKind::ReproducePaper => "reproduce-paper",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    /// Seed for every randomized step; required whenever one is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingPlan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ParamGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<IterationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vip: Option<VipSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<ReproduceSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: TableFormat,
    /// Record wall time in the report. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

/// A map given by gallery id, affine coefficients or piecewise-affine pieces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<AffinePiece>>,
    /// Where the map is defined; omitted means all of ℝⁿ (affine maps only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<ConvexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl MapSpec {
    pub fn gallery(id: &str) -> Self {
        MapSpec {
            gallery: Some(id.to_string()),
            ..Default::default()
        }
    }

    pub fn affine(matrix: Vec<Vec<f64>>, offset: Vec<f64>, domain: Option<ConvexSet>) -> Self {
        MapSpec {
            matrix: Some(matrix),
            offset: Some(offset),
            domain,
            ..Default::default()
        }
    }

    pub fn build(&self, field: &str) -> Result<MapDescriptor> {
        let f = |name: &str| format!("{field}.{name}");
        let affine = self.matrix.is_some() || self.offset.is_some();
        let piecewise = self.breakpoints.is_some() || self.pieces.is_some();
        let map =
            match self.gallery.as_deref() {
                Some("affine") | None if affine => {
                    if piecewise {
                        return Err(CliError::config(
                            field,
                            "give either affine or piecewise data, not both",
                        ));
                    }
                    let matrix = self.matrix.clone().ok_or_else(|| {
                        CliError::config(f("matrix"), "missing for an affine map")
                    })?;
                    let offset = self.offset.clone().ok_or_else(|| {
                        CliError::config(f("offset"), "missing for an affine map")
                    })?;
                    let domain = match &self.domain {
                        Some(s) => Domain::Set(s.clone()),
                        None => Domain::Whole { dim: offset.len() },
                    };
                    MapDescriptor::from_parts(MapKind::Affine { matrix, offset }, domain)
                        .map_err(CliError::at(field))?
                }
                None if piecewise => {
                    let bp = self.breakpoints.clone().ok_or_else(|| {
                        CliError::config(f("breakpoints"), "missing for a piecewise map")
                    })?;
                    let pieces = self.pieces.clone().ok_or_else(|| {
                        CliError::config(f("pieces"), "missing for a piecewise map")
                    })?;
                    let pw = Piecewise1d::new(bp, pieces).map_err(CliError::at(field))?;
                    let domain = match &self.domain {
                        Some(s) => Domain::Set(s.clone()),
                        None => {
                            let (lo, hi) = pw.interval();
                            Domain::Set(ConvexSet::interval(lo, hi).map_err(CliError::at(field))?)
                        }
                    };
                    MapDescriptor::from_parts(MapKind::Piecewise(pw), domain)
                        .map_err(CliError::at(field))?
                }
                Some(id) => {
                    if affine || piecewise || self.domain.is_some() {
                        return Err(CliError::config(
                            field,
                            format!("gallery map {id:?} takes no coefficients or domain"),
                        ));
                    }
                    if !GALLERY_IDS.contains(&id) {
                        return Err(CliError::config(
                            f("gallery"),
                            format!("unknown id {id:?} (known: {})", GALLERY_IDS.join(", ")),
                        ));
                    }
                    MapDescriptor::gallery(id).map_err(CliError::at(&f("gallery")))?
                }
                None => {
                    return Err(CliError::config(
                        field,
                        "needs `gallery`, `matrix`/`offset`, or `breakpoints`/`pieces`",
                    ))
                }
            };
        Ok(match &self.label {
            Some(l) => map.with_label(l.clone()),
            None => map,
        })
    }
}

/// One condition to check, optionally with the verdict it must produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    #[serde(flatten)]
    pub condition: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Verdict>,
    /// For enriched almost conditions: also check the reduced condition on
    /// the averaged map and require the verdicts to agree.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reduced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Picard,
    #[default]
    Krasnoselskij,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationSpec {
    #[serde(default)]
    pub method: Method,
    /// Averaging weight; defaults to `1/(b+1)` when `params` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Known enriched parameters; supply the canonical `λ` and `δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EnrichedAlmostParams>,
    /// Known contraction factor of the iterated map (overrides `params`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub starts: Vec<Point>,
    #[serde(default)]
    pub rule: StoppingRule,
    #[serde(default)]
    pub history: History,
    /// Fixed point the runs must converge to (within `expect_tol`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_limit: Option<Point>,
    #[serde(default = "default_expect_tol")]
    pub expect_tol: f64,
}

fn default_expect_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub starts: Vec<Point>,
    #[serde(default)]
    pub rule: StoppingRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VipSpec {
    pub operator: MapSpec,
    pub set: ConvexSet,
    pub gamma: f64,
    /// Averaging weight; when absent, `params` must certify the composite
    /// operator and `λ = 1/(b+1)` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EnrichedAlmostParams>,
    pub starts: Vec<Point>,
    #[serde(default)]
    pub rule: StoppingRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_solution: Option<Point>,
}

impl VipSpec {
    pub fn problem(&self) -> Result<VipProblem> {
        let g = self.operator.build("vip.operator")?;
        VipProblem::new(g, self.set.clone(), self.gamma).map_err(CliError::at("vip"))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceSpec {
    /// Suites to run; empty means all.
    #[serde(default)]
    pub suites: Vec<String>,
}

/// Encoding of a config document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Toml,
    Json,
}

impl Encoding {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Encoding::Json,
            _ => Encoding::Toml,
        }
    }
}

/// Parse and validate a config document.
pub fn parse_config(text: &str, encoding: Encoding) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = match encoding {
        Encoding::Toml => {
            let de = toml::Deserializer::parse(text)
                .map_err(|e| CliError::config("<document>", e.to_string().trim_end()))?;
            serde_path_to_error::deserialize(de).map_err(path_error)?
        }
        Encoding::Json => {
            let mut de = serde_json::Deserializer::from_str(text);
            let cfg = serde_path_to_error::deserialize(&mut de).map_err(path_error)?;
            de.end()
                .map_err(|e| CliError::config("<document>", e.to_string()))?;
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn path_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    let field = if path == "." {
        "<document>".to_string()
    } else {
        path
    };
    CliError::config(field, e.inner().to_string().trim_end())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, Encoding::from_path(path))
}

fn require<'a, T>(v: &'a Option<T>, field: &str, kind: ExperimentKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::config(field, format!("required for kind = {:?}", kind.as_str())))
}

fn check_starts(starts: &[Point], field: &str) -> Result<()> {
    if starts.is_empty() {
        return Err(CliError::config(field, "needs at least one start point"));
    }
    Ok(())
}

fn check_rule(rule: &StoppingRule, field: &str) -> Result<()> {
    rule.validate().map_err(CliError::at(field))
}

fn check_lambda(lambda: f64, field: &str) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(CliError::config(
            field,
            format!("must lie in (0, 1], got {lambda}"),
        ))
    }
}

impl ExperimentConfig {
    /// A reproduce-paper config running the given suites (all when empty).
    pub fn reproduce(suites: Vec<String>, seed: u64) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kind: ExperimentKind::ReproducePaper,
            seed: Some(seed),
            name: None,
            output: OutputSpec::default(),
            map: None,
            sampling: None,
            conditions: Vec::new(),
            grid: None,
            iteration: None,
            sweep: None,
            vip: None,
            reproduce: Some(ReproduceSpec { suites }),
        }
    }

    /// The sampling plan with the top-level seed filled in.
    pub fn sampling_plan(&self) -> Option<SamplingPlan> {
        self.sampling.clone().map(|mut p| {
            if p.seed.is_none() {
                p.seed = self.seed;
            }
            p
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if let Some(m) = &self.map {
            m.build("map")?;
        }
        if let Some(plan) = self.sampling_plan() {
            if plan.random_pairs > 0 && plan.seed.is_none() {
                return Err(CliError::config(
                    "seed",
                    "random sampling needs a seed (top-level `seed` or `sampling.seed`)",
                ));
            }
            plan.validate().map_err(CliError::at("sampling"))?;
        }
        let kind = self.kind;
        match kind {
            ExperimentKind::Certify => {
                require(&self.map, "map", kind)?;
                require(&self.sampling, "sampling", kind)?;
                if self.conditions.is_empty() {
                    return Err(CliError::config(
                        "conditions",
                        "at least one condition is required",
                    ));
                }
            }
            ExperimentKind::Search => {
                require(&self.map, "map", kind)?;
                require(&self.sampling, "sampling", kind)?;
                require(&self.grid, "grid", kind)?
                    .validate()
                    .map_err(CliError::at("grid"))?;
            }
            ExperimentKind::Iterate => {
                require(&self.map, "map", kind)?;
                let it = require(&self.iteration, "iteration", kind)?;
                check_starts(&it.starts, "iteration.starts")?;
                check_rule(&it.rule, "iteration.rule")?;
                if let Some(l) = it.lambda {
                    check_lambda(l, "iteration.lambda")?;
                }
                if let Some(d) = it.delta {
                    if !(d > 0.0 && d < 1.0) {
                        return Err(CliError::config(
                            "iteration.delta",
                            format!("must lie in (0, 1), got {d}"),
                        ));
                    }
                }
                if !(it.expect_tol.is_finite() && it.expect_tol >= 0.0) {
                    return Err(CliError::config(
                        "iteration.expect_tol",
                        "must be finite and ≥ 0",
                    ));
                }
                if it.method == Method::Krasnoselskij && it.lambda.is_none() && it.params.is_none()
                {
                    return Err(CliError::config(
                        "iteration.lambda",
                        "krasnoselskij needs `lambda` or `params`",
                    ));
                }
            }
            ExperimentKind::Sweep => {
                require(&self.map, "map", kind)?;
                let sw = require(&self.sweep, "sweep", kind)?;
                check_starts(&sw.starts, "sweep.starts")?;
                check_rule(&sw.rule, "sweep.rule")?;
                if sw.lambdas.is_empty() {
                    return Err(CliError::config(
                        "sweep.lambdas",
                        "needs at least one value",
                    ));
                }
                for (i, &l) in sw.lambdas.iter().enumerate() {
                    check_lambda(l, &format!("sweep.lambdas[{i}]"))?;
                }
            }
            ExperimentKind::Vip => {
                let v = require(&self.vip, "vip", kind)?;
                v.problem()?;
                check_starts(&v.starts, "vip.starts")?;
                check_rule(&v.rule, "vip.rule")?;
                if let Some(l) = v.lambda {
                    check_lambda(l, "vip.lambda")?;
                }
                if v.lambda.is_none() && v.params.is_none() {
                    return Err(CliError::config(
                        "vip.lambda",
                        "give `lambda`, or `params` certifying the composite operator",
                    ));
                }
            }
            ExperimentKind::ReproducePaper => {
                for (i, s) in self.reproduce.iter().flat_map(|r| &r.suites).enumerate() {
                    if !SUITES.contains(&s.as_str()) {
                        return Err(CliError::config(
                            format!("reproduce.suites[{i}]"),
                            format!("unknown suite {s:?} (known: {})", SUITES.join(", ")),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: CliError) -> String {
        match e {
            CliError::Config { field, .. } => field,
            other => panic!("not a config error: {other}"),
        }
    }

    const CERTIFY: &str = r#"
schema_version = 1
kind = "certify"

[map]
gallery = "ex2-piecewise"

[sampling]
grid_step = 0.01

[[conditions]]
condition = "enriched-almost"
b = 1.0
theta = 1.0
L = 3.0
expect = "certified"
"#;

    #[test]
    fn parses_toml() {
        let cfg = parse_config(CERTIFY, Encoding::Toml).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Certify);
        assert_eq!(cfg.conditions[0].expect, Some(Verdict::Certified));
        assert!(matches!(
            cfg.conditions[0].condition,
            Condition::EnrichedAlmost(_)
        ));
    }

    #[test]
    fn json_is_the_same_schema() {
        let cfg = parse_config(CERTIFY, Encoding::Toml).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&json, Encoding::Json).unwrap(), cfg);
    }

    #[test]
    fn unknown_gallery_id() {
        let text = CERTIFY.replace("ex2-piecewise", "nope");
        assert_eq!(
            field_of(parse_config(&text, Encoding::Toml).unwrap_err()),
            "map.gallery"
        );
    }

    #[test]
    fn random_sampling_needs_seed() {
        let text = CERTIFY.replace("grid_step = 0.01", "random_pairs = 10");
        assert_eq!(
            field_of(parse_config(&text, Encoding::Toml).unwrap_err()),
            "seed"
        );
        let seeded = text.replace("kind = \"certify\"", "kind = \"certify\"\nseed = 3");
        assert!(parse_config(&seeded, Encoding::Toml).is_ok());
    }

    #[test]
    fn field_paths_in_errors() {
        let text = CERTIFY.replace("grid_step = 0.01", "grid_stp = 0.01");
        let e = parse_config(&text, Encoding::Toml).unwrap_err();
        assert_eq!(field_of(e), "sampling.grid_stp");
        let text = CERTIFY.replace("theta = 1.0", "theta = 5.0");
        let e = parse_config(&text, Encoding::Toml).unwrap_err();
        assert!(field_of(e).starts_with("conditions"));
        let text = CERTIFY.replace("schema_version = 1", "schema_version = 9");
        assert_eq!(
            field_of(parse_config(&text, Encoding::Toml).unwrap_err()),
            "schema_version"
        );
    }

    #[test]
    fn numeric_ranges_have_field_paths() {
        let base = "schema_version = 1\nkind = \"sweep\"\n[map]\ngallery = \"identity-01\"\n[sweep]\nstarts = [[0.5]]\n";
        let text = format!("{base}lambdas = [0.5, nan]\n");
        assert_eq!(
            field_of(parse_config(&text, Encoding::Toml).unwrap_err()),
            "sweep.lambdas[1]"
        );
        let it = "schema_version = 1\nkind = \"iterate\"\n[map]\ngallery = \"identity-01\"\n[iteration]\nstarts = [[0.5]]\n";
        for (extra, field) in [
            ("lambda = 1.5", "iteration.lambda"),
            ("lambda = 0.5\ndelta = 1.0", "iteration.delta"),
            ("lambda = 0.5\nexpect_tol = nan", "iteration.expect_tol"),
        ] {
            let text = format!("{it}{extra}\n");
            assert_eq!(
                field_of(parse_config(&text, Encoding::Toml).unwrap_err()),
                field
            );
        }
    }

    #[test]
    fn kind_sections_are_required() {
        let text = "schema_version = 1\nkind = \"iterate\"\n[map]\ngallery = \"identity-01\"\n";
        assert_eq!(
            field_of(parse_config(text, Encoding::Toml).unwrap_err()),
            "iteration"
        );
        let text =
            "schema_version = 1\nkind = \"reproduce-paper\"\n[reproduce]\nsuites = [\"x\"]\n";
        assert_eq!(
            field_of(parse_config(text, Encoding::Toml).unwrap_err()),
            "reproduce.suites[0]"
        );
    }

    #[test]
    fn map_specs() {
        let m = MapSpec::affine(vec![vec![0.5]], vec![0.0], None)
            .build("map")
            .unwrap();
        assert!(matches!(m.domain(), Domain::Whole { dim: 1 }));
        let bad = MapSpec {
            gallery: Some("identity-01".into()),
            offset: Some(vec![1.0]),
            ..Default::default()
        };
        assert!(bad.build("map").is_err());
        assert!(MapSpec::default().build("map").is_err());
    }
}
