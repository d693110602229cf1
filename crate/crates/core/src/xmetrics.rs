//! Retrieval math over embedding batches: scaled cosine similarity, the
//! symmetric contrastive loss, recall@k, score ensembling and relative
//! similarity.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("shapes do not match")]
    DimensionMismatch,
    #[error("row {0} has zero norm")]
    ZeroNormVector(usize),
    #[error("values must be finite")]
    NonFinite,
    #[error("input is empty")]
    EmptyInput,
    #[error("k = {0} is outside [1, candidates]")]
    BadK(usize),
    #[error("mean ground-truth similarity is zero")]
    ZeroDenominator,
    #[error("scale cap must be positive and temperature finite")]
    BadConfig,
}

/// N rows of D-dimensional embeddings, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingBatch {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<EmbeddingBatch, MetricError> {
        if rows == 0 || dim == 0 {
            return Err(MetricError::EmptyInput);
        }
        if data.len() != rows * dim {
            return Err(MetricError::DimensionMismatch);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(EmbeddingBatch { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<EmbeddingBatch, MetricError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(MetricError::DimensionMismatch);
        }
        EmbeddingBatch::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Temperature and cap for the similarity scale `min(e^tau, scale_cap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub tau: f64,
    pub scale_cap: f64,
}

impl MetricConfig {
    pub const DEFAULT_CAP: f64 = 100.0;

    pub fn new(tau: f64, scale_cap: f64) -> Result<MetricConfig, MetricError> {
        if !tau.is_finite() || !(scale_cap > 0.0) {
            return Err(MetricError::BadConfig);
        }
        Ok(MetricConfig { tau, scale_cap })
    }

    /// Configure by the multiplicative scale itself rather than its log.
    pub fn from_scale(scale: f64, scale_cap: f64) -> Result<MetricConfig, MetricError> {
        if !(scale > 0.0) {
            return Err(MetricError::BadConfig);
        }
        MetricConfig::new(libm::log(scale), scale_cap)
    }

    /// Temperature 0.07 with the scale taken as its reciprocal, capped at 100.
    pub fn temperature_default() -> MetricConfig {
        MetricConfig { tau: libm::log(1.0 / 0.07), scale_cap: Self::DEFAULT_CAP }
    }

    pub fn scale(&self) -> f64 {
        libm::exp(self.tau).min(self.scale_cap)
    }
}

/// Dense score grid: row = query, column = candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, scores: Vec<f64>) -> Result<SimilarityMatrix, MetricError> {
        if rows == 0 || cols == 0 {
            return Err(MetricError::EmptyInput);
        }
        if scores.len() != rows * cols {
            return Err(MetricError::DimensionMismatch);
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(SimilarityMatrix { rows, cols, scores })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<SimilarityMatrix, MetricError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MetricError::DimensionMismatch);
        }
        SimilarityMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// `scores[i][j] = cos(P_i, Q_j) * scale`.
pub fn pairwise_scores(p: &EmbeddingBatch, q: &EmbeddingBatch, cfg: &MetricConfig) -> Result<SimilarityMatrix, MetricError> {
    if p.dim != q.dim {
        return Err(MetricError::DimensionMismatch);
    }
    let norms = |b: &EmbeddingBatch| -> Result<Vec<f64>, MetricError> {
        (0..b.rows)
            .map(|i| {
                let n = norm(b.row(i));
                if n > 0.0 {
                    Ok(n)
                } else {
                    Err(MetricError::ZeroNormVector(i))
                }
            })
            .collect()
    };
    let (np, nq) = (norms(p)?, norms(q)?);
    let scale = cfg.scale();
    let mut scores = Vec::with_capacity(p.rows * q.rows);
    for i in 0..p.rows {
        for j in 0..q.rows {
            let dot: f64 = p.row(i).iter().zip(q.row(j)).map(|(a, b)| a * b).sum();
            scores.push(dot / (np[i] * nq[j]) * scale);
        }
    }
    SimilarityMatrix::new(p.rows, q.rows, scores)
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    m + libm::log(xs.map(|x| libm::exp(x - m)).sum::<f64>())
}

/// Symmetric cross-entropy over matched pairs: the mean of the row-wise and
/// column-wise log-softmax of the diagonal, negated.
pub fn contrastive_loss(p: &EmbeddingBatch, q: &EmbeddingBatch, cfg: &MetricConfig) -> Result<f64, MetricError> {
    if p.rows != q.rows {
        return Err(MetricError::DimensionMismatch);
    }
    let s = pairwise_scores(p, q, cfg)?;
    let n = s.rows;
    let mut total = 0.0;
    for i in 0..n {
        let row = log_sum_exp((0..n).map(|j| s.get(i, j)));
        let col = log_sum_exp((0..n).map(|j| s.get(j, i)));
        total += 2.0 * s.get(i, i) - row - col;
    }
    Ok(-total / (2.0 * n as f64))
}

/// Zero-based rank of candidate `i` in row `i`; ties go to the lower column.
pub fn true_match_rank(s: &SimilarityMatrix, i: usize) -> usize {
    let t = s.get(i, i);
    s.row(i).iter().enumerate().filter(|&(j, &v)| v > t || (v == t && j < i)).count()
}

/// Fraction of rows whose true match (column = row) ranks within the top k.
pub fn recall_at_k(s: &SimilarityMatrix, ks: &[usize]) -> Result<Vec<f64>, MetricError> {
    if s.rows != s.cols {
        return Err(MetricError::DimensionMismatch);
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > s.cols) {
        return Err(MetricError::BadK(k));
    }
    let ranks: Vec<usize> = (0..s.rows).map(|i| true_match_rank(s, i)).collect();
    Ok(ks.iter().map(|&k| ranks.iter().filter(|&&r| r < k).count() as f64 / s.rows as f64).collect())
}

/// Elementwise sum of two score matrices.
pub fn ensemble_scores(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<SimilarityMatrix, MetricError> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(MetricError::DimensionMismatch);
    }
    let scores = a.scores.iter().zip(&b.scores).map(|(x, y)| x + y).collect();
    SimilarityMatrix::new(a.rows, a.cols, scores)
}

/// Mean input-output similarity over mean input-ground-truth similarity.
pub fn relative_similarity(sim_in_out: &[f64], sim_in_gt: &[f64]) -> Result<f64, MetricError> {
    if sim_in_out.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if sim_in_out.len() != sim_in_gt.len() {
        return Err(MetricError::DimensionMismatch);
    }
    let (a, b): (f64, f64) = (sim_in_out.iter().sum(), sim_in_gt.iter().sum());
    if b == 0.0 {
        return Err(MetricError::ZeroDenominator);
    }
    Ok(a / b)
}
