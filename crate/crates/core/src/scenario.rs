//! Scenario data: CSV ingestion, synthetic generators and seeded sampling.
//!
//! Every random draw in the crate goes through a [`SampleStream`], which wraps
//! a ChaCha8 generator. ChaCha is a counter-based stream cipher with a
//! published algorithm, so a `(seed, stream id)` pair yields the same sequence
//! on every platform. Independent consumers (training scenarios, references,
//! held-out evaluation, initial jitter) use distinct stream ids of one seed.

use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot open {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no data rows")]
    NoData { path: PathBuf },
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: {value:?} is not a number")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}, column {column}: value is not finite")]
    NonFinite { row: usize, column: usize },
    #[error("scenario batch needs at least one row")]
    EmptyBatch,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid mixture weights: {0}")]
    Weights(String),
    #[error("covariance factor must be lower triangular with finite entries")]
    Factor,
    #[error("bandwidth must be finite and non-negative")]
    Bandwidth,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

/// An `n × dim` block of scenario samples, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBatch {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl ScenarioBatch {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self, ScenarioError> {
        if dim == 0 || data.is_empty() {
            return Err(ScenarioError::EmptyBatch);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(ScenarioError::Dimension(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(ScenarioError::NonFinite {
                row: pos / dim + 1,
                column: pos % dim + 1,
            });
        }
        let n = data.len() / dim;
        Ok(Self { data, n, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ScenarioError> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(ScenarioError::Ragged {
                    row: i + 1,
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dim)
    }

    /// A one-column batch.
    pub fn from_column(values: Vec<f64>) -> Result<Self, ScenarioError> {
        Self::new(values, 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.dim];
        for r in self.rows() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.n as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }
}

/// Reads a comma-separated scenario file.
///
/// The first row is a header iff any of its cells fails to parse as a number.
/// Row numbers in errors count physical records from 1, header included.
pub fn load_scenarios_csv(path: impl AsRef<Path>) -> Result<ScenarioBatch, ScenarioError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_scenarios_csv(file, path)
}

fn read_scenarios_csv<R: io::Read>(reader: R, path: &Path) -> Result<ScenarioBatch, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut dim = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| ScenarioError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let row = idx + 1;
        if idx == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(ScenarioError::Ragged {
                    row,
                    expected: d,
                    found: record.len(),
                })
            }
            Some(_) => {}
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| ScenarioError::NonNumeric {
                row,
                column: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(ScenarioError::NonFinite { row, column: c + 1 });
            }
            data.push(v);
        }
    }
    match dim {
        Some(d) if !data.is_empty() => ScenarioBatch::new(data, d),
        _ => Err(ScenarioError::NoData {
            path: path.to_path_buf(),
        }),
    }
}

/// Writes a batch as headerless CSV using shortest round-trip float formatting.
pub fn write_scenarios_csv<W: io::Write>(batch: &ScenarioBatch, mut out: W) -> io::Result<()> {
    for r in batch.rows() {
        let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Seed for a family of independent sample streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    /// Opens stream `id` of this seed. Distinct ids never share output.
    pub fn stream(self, id: u64) -> SampleStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(id);
        SampleStream { rng, cursor: 0 }
    }
}

/// Private sampling state. Not shared between threads; each worker opens its own.
#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha8Rng,
    cursor: usize,
}

impl SampleStream {
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Lower-triangular `L` with covariance `Σ = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceFactor {
    dim: usize,
    /// Row-major `dim × dim`; entries above the diagonal are zero.
    entries: Vec<f64>,
}

impl CovarianceFactor {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self, ScenarioError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(ScenarioError::Dimension(format!(
                "factor of dimension {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                let v = entries[i * dim + j];
                if !v.is_finite() || (j > i && v != 0.0) {
                    return Err(ScenarioError::Factor);
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ScenarioError> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(ScenarioError::Dimension("covariance factor must be square".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mut cov = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] = (0..=i.min(j)).map(|k| self.get(i, k) * self.get(j, k)).sum();
            }
        }
        cov
    }

    fn apply_into(&self, noise: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.entries[i * d..i * d + i + 1];
            out[i] += row.iter().zip(noise).map(|(l, e)| l * e).sum::<f64>();
        }
    }
}

/// Random lower-triangular factor with positive diagonal, so `L·Lᵀ` is positive definite.
///
/// Diagonal entries are `scale·(0.5 + U[0,1))`, off-diagonals `0.3·scale·N(0,1)`.
pub fn random_pd_factor(dim: usize, scale: f64, seed: RandomSeed) -> Result<CovarianceFactor, ScenarioError> {
    if dim == 0 {
        return Err(ScenarioError::Parameter("factor dimension must be >= 1".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ScenarioError::Parameter("factor scale must be > 0".into()));
    }
    let mut stream = seed.stream(STREAM_FACTOR);
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..i {
            entries[i * dim + j] = 0.3 * scale * stream.standard_normal();
        }
        entries[i * dim + i] = scale * (0.5 + stream.rng.random::<f64>());
    }
    CovarianceFactor::new(dim, entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureMode {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub factor: CovarianceFactor,
}

/// Finite mixture of multivariate Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    modes: Vec<MixtureMode>,
    cumulative: Vec<f64>,
    dim: usize,
}

impl GaussianMixture {
    pub fn modes(&self) -> &[MixtureMode] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for mode in &self.modes {
            for (acc, v) in m.iter_mut().zip(&mode.mean) {
                *acc += mode.weight * v;
            }
        }
        m
    }

    /// Analytic covariance `Σ_w w·(Σ_w + μ_w μ_wᵀ) − μ μᵀ`, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mu = self.mean();
        let mut cov = vec![0.0; d * d];
        for mode in &self.modes {
            let c = mode.factor.covariance();
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += mode.weight * (c[i * d + j] + mode.mean[i] * mode.mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= mu[i] * mu[j];
            }
        }
        cov
    }

    fn pick_mode(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| self.modes.iter().rposition(|m| m.weight > 0.0).unwrap_or(0))
    }

    fn sample_into(&self, stream: &mut SampleStream, noise: &mut [f64], out: &mut [f64]) {
        let u: f64 = stream.rng.random();
        let mode = &self.modes[self.pick_mode(u)];
        for e in noise.iter_mut() {
            *e = stream.standard_normal();
        }
        out.copy_from_slice(&mode.mean);
        mode.factor.apply_into(noise, out);
    }
}

/// Builds a mixture; weights are normalized to sum to one.
pub fn build_gaussian_mixture(modes: Vec<MixtureMode>) -> Result<GaussianMixture, ScenarioError> {
    let first = modes
        .first()
        .ok_or_else(|| ScenarioError::Weights("mixture needs at least one mode".into()))?;
    let dim = first.mean.len();
    if dim == 0 {
        return Err(ScenarioError::Dimension("mixture mean must be non-empty".into()));
    }
    for (i, m) in modes.iter().enumerate() {
        if m.mean.len() != dim || m.factor.dim() != dim {
            return Err(ScenarioError::Dimension(format!(
                "mode {i}: mean has {} entries and factor dimension {}, expected {dim}",
                m.mean.len(),
                m.factor.dim()
            )));
        }
        if !(m.weight.is_finite() && m.weight >= 0.0) {
            return Err(ScenarioError::Weights(format!("mode {i}: weight {} is negative", m.weight)));
        }
        if m.mean.iter().any(|v| !v.is_finite()) {
            return Err(ScenarioError::Parameter(format!("mode {i}: mean is not finite")));
        }
    }
    let total: f64 = modes.iter().map(|m| m.weight).sum();
    if total <= 0.0 {
        return Err(ScenarioError::Weights("all weights are zero".into()));
    }
    let mut modes = modes;
    let mut acc = 0.0;
    let mut cumulative = Vec::with_capacity(modes.len());
    for m in &mut modes {
        m.weight /= total;
        acc += m.weight;
        cumulative.push(acc);
    }
    Ok(GaussianMixture {
        modes,
        cumulative,
        dim,
    })
}

/// Parameters for a randomly placed mixture: means drawn per coordinate from a
/// Poisson law, covariances from [`random_pd_factor`], equal mode weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMixtureParams {
    pub dim: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_poisson_mean")]
    pub poisson_mean: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_modes() -> usize {
    3
}

fn default_poisson_mean() -> f64 {
    10.0
}

fn default_scale() -> f64 {
    1.0
}

impl RandomMixtureParams {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            modes: default_modes(),
            poisson_mean: default_poisson_mean(),
            scale: default_scale(),
        }
    }
}

pub fn random_gaussian_mixture(params: &RandomMixtureParams, seed: RandomSeed) -> Result<GaussianMixture, ScenarioError> {
    if params.dim == 0 || params.modes == 0 {
        return Err(ScenarioError::Parameter("mixture needs dim >= 1 and modes >= 1".into()));
    }
    let poisson = Poisson::new(params.poisson_mean)
        .map_err(|e| ScenarioError::Parameter(format!("poisson mean: {e}")))?;
    let mut stream = seed.stream(STREAM_MIXTURE);
    let mut modes = Vec::with_capacity(params.modes);
    for k in 0..params.modes {
        let mean: Vec<f64> = (0..params.dim).map(|_| poisson.sample(&mut stream.rng)).collect();
        let factor_seed = RandomSeed(seed.0.wrapping_add(k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let factor = random_pd_factor(params.dim, params.scale, factor_seed)?;
        modes.push(MixtureMode {
            weight: 1.0,
            mean,
            factor,
        });
    }
    build_gaussian_mixture(modes)
}

/// Base rows resampled uniformly with independent per-dimension Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedEmpirical {
    base: ScenarioBatch,
    bandwidth: Vec<f64>,
}

impl SmoothedEmpirical {
    pub fn base(&self) -> &ScenarioBatch {
        &self.base
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }
}

pub fn build_smoothed_empirical(base: ScenarioBatch, bandwidth: Vec<f64>) -> Result<SmoothedEmpirical, ScenarioError> {
    if base.is_empty() {
        return Err(ScenarioError::EmptyBatch);
    }
    if bandwidth.len() != base.dim() {
        return Err(ScenarioError::Dimension(format!(
            "{} bandwidths for {} columns",
            bandwidth.len(),
            base.dim()
        )));
    }
    if bandwidth.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(ScenarioError::Bandwidth);
    }
    Ok(SmoothedEmpirical { base, bandwidth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    CsvBacked,
    GaussianMixture,
    SmoothedEmpirical,
}

/// Something scenario batches can be drawn from. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioSource {
    /// Fixed rows replayed in order, wrapping around at the end.
    CsvBacked(ScenarioBatch),
    GaussianMixture(GaussianMixture),
    SmoothedEmpirical(SmoothedEmpirical),
}

impl ScenarioSource {
    pub fn kind(&self) -> SourceKind {
        match self {
            Self::CsvBacked(_) => SourceKind::CsvBacked,
            Self::GaussianMixture(_) => SourceKind::GaussianMixture,
            Self::SmoothedEmpirical(_) => SourceKind::SmoothedEmpirical,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::CsvBacked(b) => b.dim(),
            Self::GaussianMixture(m) => m.dim(),
            Self::SmoothedEmpirical(s) => s.base.dim(),
        }
    }
}

/// Draws `n` rows, advancing `stream`.
pub fn sample_batch(source: &ScenarioSource, n: usize, stream: &mut SampleStream) -> Result<ScenarioBatch, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::ZeroSamples);
    }
    let dim = source.dim();
    let mut data = vec![0.0; n * dim];
    match source {
        ScenarioSource::CsvBacked(base) => {
            for out in data.chunks_exact_mut(dim) {
                out.copy_from_slice(base.row(stream.cursor));
                stream.cursor = (stream.cursor + 1) % base.len();
            }
        }
        ScenarioSource::GaussianMixture(mix) => {
            let mut noise = vec![0.0; dim];
            for out in data.chunks_exact_mut(dim) {
                mix.sample_into(stream, &mut noise, out);
            }
        }
        ScenarioSource::SmoothedEmpirical(s) => {
            for out in data.chunks_exact_mut(dim) {
                let idx = stream.rng.random_range(0..s.base.len());
                out.copy_from_slice(s.base.row(idx));
                for (v, &bw) in out.iter_mut().zip(&s.bandwidth) {
                    if bw > 0.0 {
                        *v += bw * stream.standard_normal();
                    }
                }
            }
        }
    }
    ScenarioBatch::new(data, dim)
}

/// Stream ids reserved for the different consumers of one seed.
pub const STREAM_SCENARIOS: u64 = 0;
pub const STREAM_REFERENCE: u64 = 1;
pub const STREAM_EVALUATION: u64 = 2;
pub const STREAM_EVALUATION_REFERENCE: u64 = 3;
pub const STREAM_INIT: u64 = 4;
pub const STREAM_GENERATE: u64 = 5;
const STREAM_FACTOR: u64 = 6;
const STREAM_MIXTURE: u64 = 7;
