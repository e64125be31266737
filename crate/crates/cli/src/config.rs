//! Run configuration: strict JSON with every referenced file resolved
//! relative to the config's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdopt::dual::{Order, SupportInterval};
use sdopt::problems::{Orientation, Portfolio, PortfolioSpec, Problem, ReferenceCoupling, Transport, TransportSpec};
use sdopt::scenario::{
    build_gaussian_mixture, build_smoothed_empirical, load_scenarios_csv, random_gaussian_mixture, CovarianceFactor,
    MixtureMode, RandomMixtureParams, RandomSeed, ScenarioSource,
};
use sdopt::solver::SolverConfig;

use crate::CliError;

/// Sample sizes accepted for the LP baseline.
pub const SDLP_SAMPLE_SIZES: [usize; 5] = [32, 64, 128, 256, 512];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub constraint: ConstraintConfig,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub baselines: BaselinesConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub generate: Option<GenerateConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Portfolio(PortfolioConfig),
    Transport(TransportConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub assets: usize,
    pub scenarios: SourceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub regions: usize,
    pub warehouses: usize,
    pub costs: CostConfig,
    /// Demand per region.
    pub demand: SourceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    /// `regions × warehouses` rows.
    Matrix(Vec<Vec<f64>>),
    /// CSV with one row per region.
    Csv(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub order: Order,
    /// Must match the problem family when given.
    #[serde(default)]
    pub orientation: Option<Orientation>,
    pub reference: ReferenceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// Reference portfolio evaluated on the same scenarios; equal weights by default.
    Coupled {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Reference samples from their own source.
    Independent(SourceConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Csv {
        path: PathBuf,
    },
    GaussianMixture {
        modes: Vec<ModeConfig>,
    },
    RandomMixture(RandomMixtureConfig),
    SmoothedEmpirical {
        path: PathBuf,
        bandwidth: Bandwidth,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default = "one")]
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Lower-triangular Cholesky factor rows, zero-padded on the right when
    /// shorter than the dimension; identity when omitted.
    #[serde(default)]
    pub factor: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMixtureConfig {
    pub dim: usize,
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default)]
    pub poisson_mean: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    /// Fixes the mixture parameters; run seeds only drive sampling.
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Scalar(f64),
    PerDimension(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default = "default_holdout")]
    pub samples: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    /// Held-out scenarios; defaults to the problem's scenario source.
    #[serde(default)]
    pub scenarios: Option<SourceConfig>,
    /// Held-out reference samples; defaults to the constraint's reference source.
    #[serde(default)]
    pub reference: Option<SourceConfig>,
}

fn default_holdout() -> usize {
    2000
}

fn default_grid() -> usize {
    sdopt::metrics::DEFAULT_GRID_POINTS
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            samples: default_holdout(),
            grid_points: default_grid(),
            interval: None,
            scenarios: None,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselinesConfig {
    #[serde(default)]
    pub greedy: bool,
    /// Scenarios the greedy portfolio ranks asset means on.
    #[serde(default = "default_greedy_samples")]
    pub greedy_samples: usize,
    #[serde(default)]
    pub sdlp: Option<SdlpConfig>,
}

fn default_greedy_samples() -> usize {
    512
}

impl Default for BaselinesConfig {
    fn default() -> Self {
        Self {
            greedy: false,
            greedy_samples: default_greedy_samples(),
            sdlp: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdlpConfig {
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_baseline_report")]
    pub baseline_report: String,
    /// Trace files are written as `<trace>_seed<seed>.csv`.
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_evaluation")]
    pub evaluation: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_baseline_report() -> String {
    "baseline.json".into()
}

fn default_trace() -> String {
    "trace".into()
}

fn default_evaluation() -> String {
    "evaluation.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            report: default_report(),
            baseline_report: default_baseline_report(),
            trace: default_trace(),
            evaluation: default_evaluation(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub samples: usize,
    #[serde(default)]
    pub source: GenerateTarget,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerateTarget {
    #[default]
    Scenarios,
    Reference,
}

/// Formats a deserialization path as a JSON pointer.
fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses config text; errors carry a JSON pointer to the offending value.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| CliError::Config(format!("at {}: {}", json_pointer(e.path()), e.inner())))?;
    de.end().map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.seeds.is_empty() {
            return bad("at /seeds: seed list is empty".into());
        }
        let expected = match &self.problem {
            ProblemConfig::Portfolio(_) => Orientation::DecisionDominates,
            ProblemConfig::Transport(_) => Orientation::ReferenceDominates,
        };
        if let Some(o) = self.constraint.orientation {
            if o != expected {
                return bad(format!("at /constraint/orientation: this problem requires {expected:?}"));
            }
        }
        if let (ProblemConfig::Transport(_), ReferenceConfig::Coupled { .. }) = (&self.problem, &self.constraint.reference) {
            return bad("at /constraint/reference: transport needs an independent supply source".into());
        }
        if let Some(s) = &self.solver {
            s.validate().map_err(|e| CliError::Config(format!("at /solver: {e}")))?;
        }
        if self.evaluation.samples == 0 {
            return bad("at /evaluation/samples: must be at least 1".into());
        }
        if self.evaluation.grid_points < 2 {
            return bad("at /evaluation/grid_points: must be at least 2".into());
        }
        if let Some([a, b]) = self.evaluation.interval {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return bad("at /evaluation/interval: needs finite a < b".into());
            }
        }
        if self.baselines.greedy_samples == 0 {
            return bad("at /baselines/greedy_samples: must be at least 1".into());
        }
        if let Some(sdlp) = &self.baselines.sdlp {
            if let ProblemConfig::Transport(_) = self.problem {
                return bad("at /baselines/sdlp: sdlp unsupported for reference-dominates orientation".into());
            }
            if !SDLP_SAMPLE_SIZES.contains(&sdlp.samples) {
                return bad(format!("at /baselines/sdlp/samples: must be one of {SDLP_SAMPLE_SIZES:?}"));
            }
        }
        if let Some(g) = &self.generate {
            if g.samples == 0 {
                return bad("at /generate/samples: must be at least 1".into());
            }
            if g.source == GenerateTarget::Reference {
                if let ReferenceConfig::Coupled { .. } = self.constraint.reference {
                    return bad("at /generate/source: coupled references have no source of their own".into());
                }
            }
        }
        Ok(())
    }
}

/// A config with every file loaded and every source built.
pub struct Resolved {
    pub config: RunConfig,
    pub problem: Box<dyn Problem + Send + Sync>,
    pub kind: ProblemKind,
    pub scenarios: ScenarioSource,
    pub reference: Option<ScenarioSource>,
    pub eval_scenarios: ScenarioSource,
    pub eval_reference: Option<ScenarioSource>,
    pub interval: Option<SupportInterval>,
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    Portfolio(PortfolioSpec),
    Transport(TransportSpec),
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Portfolio(_) => "portfolio",
            Self::Transport(_) => "transport",
        }
    }
}

pub fn load_config(path: &Path) -> Result<Resolved, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(config, base)
}

fn source_error(at: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("at {at}: {e}"))
}

fn build_source(cfg: &SourceConfig, base: &Path, at: &str) -> Result<ScenarioSource, CliError> {
    let err = |e: sdopt::scenario::ScenarioError| source_error(at, e);
    Ok(match cfg {
        SourceConfig::Csv { path } => ScenarioSource::CsvBacked(load_scenarios_csv(base.join(path)).map_err(err)?),
        SourceConfig::GaussianMixture { modes } => {
            let mut built = Vec::with_capacity(modes.len());
            for m in modes {
                let factor = match &m.factor {
                    Some(rows) => {
                        let n = m.mean.len();
                        let padded: Vec<Vec<f64>> = rows
                            .iter()
                            .map(|r| r.iter().copied().chain(std::iter::repeat(0.0)).take(n.max(r.len())).collect())
                            .collect();
                        CovarianceFactor::from_rows(&padded).map_err(err)?
                    }
                    None => CovarianceFactor::identity(m.mean.len()),
                };
                built.push(MixtureMode {
                    weight: m.weight,
                    mean: m.mean.clone(),
                    factor,
                });
            }
            ScenarioSource::GaussianMixture(build_gaussian_mixture(built).map_err(err)?)
        }
        SourceConfig::RandomMixture(r) => {
            let mut params = RandomMixtureParams::new(r.dim);
            if let Some(m) = r.modes {
                params.modes = m;
            }
            if let Some(p) = r.poisson_mean {
                params.poisson_mean = p;
            }
            if let Some(s) = r.scale {
                params.scale = s;
            }
            ScenarioSource::GaussianMixture(random_gaussian_mixture(&params, RandomSeed(r.seed)).map_err(err)?)
        }
        SourceConfig::SmoothedEmpirical { path, bandwidth } => {
            let base_rows = load_scenarios_csv(base.join(path)).map_err(err)?;
            let bw = match bandwidth {
                Bandwidth::Scalar(h) => vec![*h; base_rows.dim()],
                Bandwidth::PerDimension(v) => v.clone(),
            };
            ScenarioSource::SmoothedEmpirical(build_smoothed_empirical(base_rows, bw).map_err(err)?)
        }
    })
}

fn expect_dim(source: &ScenarioSource, allowed: &[usize], at: &str) -> Result<(), CliError> {
    if allowed.contains(&source.dim()) {
        Ok(())
    } else {
        Err(source_error(at, format!("source has {} columns, expected {:?}", source.dim(), allowed)))
    }
}

fn resolve(config: RunConfig, base: &Path) -> Result<Resolved, CliError> {
    let order = config.constraint.order;
    let (problem, kind, scenarios, reference): (Box<dyn Problem + Send + Sync>, _, _, _) = match &config.problem {
        ProblemConfig::Portfolio(p) => {
            let spec = match &config.constraint.reference {
                ReferenceConfig::Coupled { weights: Some(w) } => PortfolioSpec::with_reference(p.assets, w.clone()),
                _ => PortfolioSpec::new(p.assets),
            }
            .map_err(|e| source_error("/problem/portfolio", e))?;
            let scenarios = build_source(&p.scenarios, base, "/problem/portfolio/scenarios")?;
            expect_dim(&scenarios, &[p.assets], "/problem/portfolio/scenarios")?;
            let (coupling, reference) = match &config.constraint.reference {
                ReferenceConfig::Coupled { .. } => (ReferenceCoupling::Coupled, None),
                ReferenceConfig::Independent(src) => {
                    let r = build_source(src, base, "/constraint/reference/independent")?;
                    expect_dim(&r, &[1, p.assets], "/constraint/reference/independent")?;
                    (ReferenceCoupling::Independent, Some(r))
                }
            };
            let problem = Portfolio::new(spec.clone(), order, coupling);
            (Box::new(problem) as _, ProblemKind::Portfolio(spec), scenarios, reference)
        }
        ProblemConfig::Transport(t) => {
            let rows = match &t.costs {
                CostConfig::Matrix(rows) => rows.clone(),
                CostConfig::Csv(path) => {
                    let batch = load_scenarios_csv(base.join(path)).map_err(|e| source_error("/problem/transport/costs", e))?;
                    batch.rows().map(|r| r.to_vec()).collect()
                }
            };
            let spec = TransportSpec::from_rows(&rows).map_err(|e| source_error("/problem/transport/costs", e))?;
            if spec.regions() != t.regions || spec.warehouses() != t.warehouses {
                return Err(source_error(
                    "/problem/transport/costs",
                    format!(
                        "cost matrix is {}x{}, expected {}x{}",
                        spec.regions(),
                        spec.warehouses(),
                        t.regions,
                        t.warehouses
                    ),
                ));
            }
            let demand = build_source(&t.demand, base, "/problem/transport/demand")?;
            expect_dim(&demand, &[t.regions], "/problem/transport/demand")?;
            let supply = match &config.constraint.reference {
                ReferenceConfig::Independent(src) => build_source(src, base, "/constraint/reference/independent")?,
                ReferenceConfig::Coupled { .. } => unreachable!("rejected by validation"),
            };
            expect_dim(&supply, &[t.warehouses], "/constraint/reference/independent")?;
            let problem = Transport::new(spec.clone(), order);
            (Box::new(problem) as _, ProblemKind::Transport(spec), demand, Some(supply))
        }
    };
    let eval_scenarios = match &config.evaluation.scenarios {
        Some(src) => {
            let s = build_source(src, base, "/evaluation/scenarios")?;
            expect_dim(&s, &[scenarios.dim()], "/evaluation/scenarios")?;
            s
        }
        None => scenarios.clone(),
    };
    let eval_reference = match (&config.evaluation.reference, &reference) {
        (Some(src), Some(r)) => {
            let s = build_source(src, base, "/evaluation/reference")?;
            expect_dim(&s, &[r.dim()], "/evaluation/reference")?;
            Some(s)
        }
        (Some(_), None) => {
            return Err(CliError::Config(
                "at /evaluation/reference: coupled references take no separate source".into(),
            ))
        }
        (None, r) => r.clone(),
    };
    let interval = config
        .evaluation
        .interval
        .map(|[a, b]| SupportInterval::new(a, b))
        .transpose()
        .map_err(|e| source_error("/evaluation/interval", e))?;
    Ok(Resolved {
        config,
        problem,
        kind,
        scenarios,
        reference,
        eval_scenarios,
        eval_reference,
        interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": {"portfolio": {"assets": 2, "scenarios": {"gaussian_mixture": {"modes": [{"mean": [0.05, 0.1]}]}}}},
        "constraint": {"order": 2, "reference": {"coupled": {}}}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seeds, vec![1]);
        assert_eq!(c.evaluation.samples, 2000);
        assert_eq!(c.output.report, "report.json");
        assert!(c.solver.is_none());
    }

    #[test]
    fn unknown_field_is_named_with_pointer() {
        let text = MINIMAL.replace(r#""order": 2"#, r#""order": 2, "ordr": 1"#);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("ordr"), "{err}");
        assert!(err.contains("/constraint"), "{err}");
    }

    #[test]
    fn nested_pointer_reaches_the_offending_value() {
        let text = MINIMAL.replace(r#"[0.05, 0.1]"#, r#"[0.05, "x"]"#);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("/problem/portfolio/scenarios/gaussian_mixture/modes/0/mean/1"), "{err}");
    }

    #[test]
    fn order_three_is_rejected() {
        let text = MINIMAL.replace(r#""order": 2"#, r#""order": 3"#);
        assert!(matches!(parse_config(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn wrong_orientation_is_rejected() {
        let text = MINIMAL.replace(r#""order": 2"#, r#""order": 2, "orientation": "reference_dominates""#);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("/constraint/orientation"), "{err}");
    }

    #[test]
    fn sdlp_sample_size_must_come_from_the_sweep() {
        let body = MINIMAL.trim_end().strip_suffix('}').unwrap();
        let text = format!(r#"{body}, "baselines": {{"sdlp": {{"samples": 100}}}}}}"#);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("/baselines/sdlp/samples"), "{err}");
    }

    #[test]
    fn equal_weight_reference_dimension_follows_assets() {
        let resolved = resolve(parse_config(MINIMAL).unwrap(), Path::new(".")).unwrap();
        assert_eq!(resolved.problem.decision_dim(), 2);
        assert!(resolved.reference.is_none());
    }
}
