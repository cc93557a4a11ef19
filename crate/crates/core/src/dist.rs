//! Discrete distributions over one or two variables and the structural
//! transforms between them: marginals, decorrelation (replacing a joint with
//! the product of its marginals), conditioning on the first variable and
//! recomposition, and convex mixtures.
//!
//! Storage is dense and row-major. Row index `i` is a state of variable A,
//! column index `j` a state of variable B.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sum::compensated_sum;

/// Strict-mode inputs must already total 1 within this band.
pub const NORMALIZATION_BAND: f64 = 1e-6;

/// Entries in `[-NEGATIVE_CLAMP, 0)` are treated as floating-point dust and
/// clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("distribution has no entries")]
    EmptyShape,
    #[error("row {} has {found} entries, expected {expected}", .row + 1)]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("negative mass {value} at row {}, column {}", .row + 1, .col + 1)]
    NegativeMass { row: usize, col: usize, value: f64 },
    #[error("non-finite entry {value} at row {}, column {}", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("all entries are zero")]
    ZeroTotal,
    #[error("total mass {total} is not within 1e-6 of 1 (use renormalize mode to rescale)")]
    NotNormalized { total: f64 },
    #[error("probability {0} outside [0, 1]")]
    InvalidProb(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("shape mismatch: expected {expected} states, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("mixture needs at least one distribution")]
    EmptyMixture,
    #[error("mixture weight {value} at index {index} is negative or non-finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("mixture weights sum to zero")]
    ZeroTotalWeight,
    #[error("conditional row {row} is undefined but carries base mass {mass}")]
    MissingConditional { row: usize, mass: f64 },
}

/// How constructors treat an input whose total is not exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    /// Total must lie within [`NORMALIZATION_BAND`] of 1; it is then divided out.
    #[default]
    Strict,
    /// Any positive total is divided out.
    Renormalize,
}

/// A single probability mass in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Prob(f64);

impl Prob {
    pub fn new(value: f64) -> Result<Self, DistError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(DistError::InvalidProb(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Clamp dust, check signs, and divide out the total. `cols` only affects
/// the coordinates reported in errors.
fn normalize_in_place(data: &mut [f64], cols: usize, mode: NormalizeMode) -> Result<(), DistError> {
    if data.is_empty() {
        return Err(DistError::EmptyShape);
    }
    for (idx, x) in data.iter_mut().enumerate() {
        let (row, col) = (idx / cols, idx % cols);
        if !x.is_finite() {
            return Err(DistError::NonFinite { row, col, value: *x });
        }
        if *x < -NEGATIVE_CLAMP {
            return Err(DistError::NegativeMass { row, col, value: *x });
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total = compensated_sum(data.iter().copied());
    if total <= 0.0 {
        return Err(DistError::ZeroTotal);
    }
    if mode == NormalizeMode::Strict && (total - 1.0).abs() > NORMALIZATION_BAND {
        return Err(DistError::NotNormalized { total });
    }
    if total != 1.0 {
        for x in data.iter_mut() {
            *x /= total;
        }
    }
    Ok(())
}

/// A probability vector over the states of one variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginal {
    w: Vec<f64>,
}

impl Marginal {
    pub fn new(w: Vec<f64>, mode: NormalizeMode) -> Result<Self, DistError> {
        let mut w = w;
        let cols = w.len().max(1);
        normalize_in_place(&mut w, cols, mode)?;
        Ok(Marginal { w })
    }

    /// Entries already known to be nonnegative and to sum to 1 up to rounding.
    pub(crate) fn from_normalized(w: Vec<f64>) -> Self {
        debug_assert!(!w.is_empty());
        debug_assert!(w.iter().all(|&x| x >= 0.0));
        Marginal { w }
    }

    pub fn uniform(k: usize) -> Result<Self, DistError> {
        if k == 0 {
            return Err(DistError::EmptyShape);
        }
        Ok(Marginal::from_normalized(vec![1.0 / k as f64; k]))
    }

    /// Point mass on `state`.
    pub fn delta(k: usize, state: usize) -> Result<Self, DistError> {
        if state >= k {
            return Err(DistError::ShapeMismatch {
                expected: k,
                found: state + 1,
            });
        }
        let mut w = vec![0.0; k];
        w[state] = 1.0;
        Ok(Marginal::from_normalized(w))
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn prob(&self, i: usize) -> Prob {
        Prob(self.w[i])
    }

    /// Weighted average `Σ_k (w_k / Σw) · dists[k]`.
    pub fn mixture(dists: &[Marginal], weights: &MixtureWeights) -> Result<Marginal, DistError> {
        let first = dists.first().ok_or(DistError::EmptyMixture)?;
        if weights.len() != dists.len() {
            return Err(DistError::ShapeMismatch {
                expected: dists.len(),
                found: weights.len(),
            });
        }
        let k = first.len();
        if let Some(bad) = dists.iter().find(|d| d.len() != k) {
            return Err(DistError::ShapeMismatch {
                expected: k,
                found: bad.len(),
            });
        }
        let wbar = weights.normalized();
        let mut w: Vec<f64> = (0..k)
            .map(|s| compensated_sum(dists.iter().zip(&wbar).map(|(d, &wk)| wk * d.w[s])))
            .collect();
        // Normalized weights can sum to 1 + ulp; dividing by the mixed total
        // keeps every entry <= 1.
        let total = compensated_sum(w.iter().copied());
        if total != 1.0 {
            for x in &mut w {
                *x /= total;
            }
        }
        Ok(Marginal::from_normalized(w))
    }
}

/// Nonnegative mixture weights with a positive total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureWeights {
    w: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, DistError> {
        if w.is_empty() {
            return Err(DistError::EmptyMixture);
        }
        if let Some((index, &value)) = w
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0)
        {
            return Err(DistError::InvalidWeight { index, value });
        }
        if compensated_sum(w.iter().copied()) <= 0.0 {
            return Err(DistError::ZeroTotalWeight);
        }
        Ok(MixtureWeights { w })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.w
    }

    /// Weights divided by their total.
    pub fn normalized(&self) -> Vec<f64> {
        let total = compensated_sum(self.w.iter().copied());
        self.w.iter().map(|x| x / total).collect()
    }
}

impl From<&Marginal> for MixtureWeights {
    fn from(m: &Marginal) -> Self {
        MixtureWeights { w: m.w.clone() }
    }
}

/// A joint distribution `p_ij` over `rows` states of A and `cols` states of B.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDist {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl JointDist {
    /// Build from a list of rows.
    pub fn new(matrix: &[Vec<f64>], mode: NormalizeMode) -> Result<Self, DistError> {
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.is_empty() || cols == 0 {
            return Err(DistError::EmptyShape);
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != cols {
                return Err(DistError::RaggedRow {
                    row,
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        let data = matrix.iter().flatten().copied().collect();
        Self::from_row_major(matrix.len(), cols, data, mode)
    }

    pub fn from_row_major(
        rows: usize,
        cols: usize,
        mut data: Vec<f64>,
        mode: NormalizeMode,
    ) -> Result<Self, DistError> {
        if rows == 0 || cols == 0 {
            return Err(DistError::EmptyShape);
        }
        if data.len() != rows * cols {
            return Err(DistError::ShapeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        normalize_in_place(&mut data, cols, mode)?;
        Ok(JointDist { rows, cols, p: data })
    }

    /// Outer product `P_i Q_j`.
    pub fn product(a: &Marginal, b: &Marginal) -> JointDist {
        let p = a
            .w
            .iter()
            .flat_map(|&pa| b.w.iter().map(move |&qb| pa * qb))
            .collect();
        JointDist {
            rows: a.len(),
            cols: b.len(),
            p,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.cols + j]
    }

    pub fn prob(&self, i: usize, j: usize) -> Prob {
        Prob(self.get(i, j))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.cols..(i + 1) * self.cols]
    }

    /// All entries in row-major order.
    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// `P_i = Σ_j p_ij`.
    pub fn marginal_a(&self) -> Marginal {
        let w = (0..self.rows)
            .map(|i| compensated_sum(self.row(i).iter().copied()))
            .collect();
        Marginal::from_normalized(w)
    }

    /// `Q_j = Σ_i p_ij`.
    pub fn marginal_b(&self) -> Marginal {
        let w = (0..self.cols)
            .map(|j| compensated_sum((0..self.rows).map(|i| self.get(i, j))))
            .collect();
        Marginal::from_normalized(w)
    }

    /// Replace the joint with the product of its marginals, destroying any
    /// dependence between A and B while keeping both marginals.
    pub fn decorrelate(&self) -> JointDist {
        JointDist::product(&self.marginal_a(), &self.marginal_b())
    }

    /// Largest entrywise deviation from the product of the marginals.
    pub fn product_deviation(&self) -> f64 {
        let pi = self.decorrelate();
        self.max_abs_diff(&pi)
    }

    /// True iff `max_ij |p_ij - P_i Q_j| <= tol`.
    pub fn is_product(&self, tol: f64) -> Result<bool, DistError> {
        if !(tol > 0.0) {
            return Err(DistError::NonPositiveTolerance(tol));
        }
        Ok(self.product_deviation() <= tol)
    }

    /// Entrywise max |a - b|; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &JointDist) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Split into `P_i` and the conditional rows `ζ^(i)_j = p_ij / P_i`.
    /// Rows with zero base mass are left undefined.
    pub fn condition_on_a(&self) -> ConditionalFamily {
        let base = self.marginal_a();
        let rows = (0..self.rows)
            .map(|i| {
                let pi = base.w[i];
                (pi > 0.0).then(|| {
                    Marginal::from_normalized(self.row(i).iter().map(|x| x / pi).collect())
                })
            })
            .collect();
        ConditionalFamily {
            base,
            rows,
            cols: self.cols,
        }
    }
}

/// `P_i` plus one conditional distribution over B per state of A.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFamily {
    base: Marginal,
    rows: Vec<Option<Marginal>>,
    cols: usize,
}

impl ConditionalFamily {
    /// `rows[i]` may be `None` only where `base` has zero mass.
    pub fn new(base: Marginal, rows: Vec<Option<Marginal>>) -> Result<Self, DistError> {
        if rows.len() != base.len() {
            return Err(DistError::ShapeMismatch {
                expected: base.len(),
                found: rows.len(),
            });
        }
        let cols = rows
            .iter()
            .flatten()
            .map(Marginal::len)
            .next()
            .ok_or(DistError::EmptyShape)?;
        for (i, r) in rows.iter().enumerate() {
            match r {
                Some(m) if m.len() != cols => {
                    return Err(DistError::ShapeMismatch {
                        expected: cols,
                        found: m.len(),
                    })
                }
                None if base.w[i] > 0.0 => {
                    return Err(DistError::MissingConditional {
                        row: i,
                        mass: base.w[i],
                    })
                }
                _ => {}
            }
        }
        Ok(ConditionalFamily { base, rows, cols })
    }

    pub fn base(&self) -> &Marginal {
        &self.base
    }

    pub fn rows(&self) -> &[Option<Marginal>] {
        &self.rows
    }

    pub fn defined_mask(&self) -> Vec<bool> {
        self.rows.iter().map(Option::is_some).collect()
    }

    /// Defined rows paired with their base weight.
    pub fn defined_rows(&self) -> impl Iterator<Item = (f64, &Marginal)> + '_ {
        self.rows
            .iter()
            .zip(&self.base.w)
            .filter_map(|(r, &w)| r.as_ref().map(|m| (w, m)))
    }

    /// `p_ij = P_i ζ^(i)_j`; undefined rows contribute zeros.
    pub fn recompose(&self) -> JointDist {
        let mut p = Vec::with_capacity(self.rows.len() * self.cols);
        for (row, &w) in self.rows.iter().zip(&self.base.w) {
            match row {
                Some(m) => p.extend(m.w.iter().map(|z| w * z)),
                None => p.extend(std::iter::repeat_n(0.0, self.cols)),
            }
        }
        JointDist {
            rows: self.rows.len(),
            cols: self.cols,
            p,
        }
    }
}
