//! Deterministic sparse binary sensing matrices and their analyzers.
//!
//! The construction places, for each polynomial Q of degree <= r over GF(p),
//! a column holding ones exactly on the graph of Q: row (x, Q(x)) for every
//! field element x. Two such matrices composed with a Kronecker product give
//! the measurement matrix; mutual coherence, the Welch bound, and brute-force
//! RIP constants certify it.
//!
//! Matrices are stored as per-row sorted column indices and scale factors are
//! carried symbolically, so coherence and RIP maximization run on exact
//! integer inner products.

use nalgebra::DMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldPoly, GfError};

/// Cap on `n_rows * n_cols` for constructed matrices.
pub const SIZE_CAP_ENTRIES: u64 = 1 << 26;

/// Cap on the number of column subsets the RIP brute force will enumerate.
pub const RIP_SUBSET_CAP: u64 = 2_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("matrix of {n_rows} x {n_cols} exceeds the size cap")]
    SizeOverflow { n_rows: u64, n_cols: u64 },
    #[error("column {0} is all-zero")]
    ZeroColumn(usize),
    #[error("Welch bound requires n > m >= 1, got m={m}, n={n}")]
    InvalidDims { m: usize, n: usize },
    #[error("{subsets} column subsets exceed the enumeration cap {cap}")]
    TooLarge { subsets: u128, cap: u64 },
    #[error("scaling inconsistent with the matrix: {0}")]
    ScalingMismatch(String),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// 0/1 matrix stored by per-row sorted column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    row_support: Vec<Vec<u32>>,
}

impl SparseBinaryMatrix {
    /// Builds a matrix from explicit row supports, validating that every row
    /// is strictly increasing and within range.
    pub fn from_row_support(
        n_rows: usize,
        n_cols: usize,
        row_support: Vec<Vec<u32>>,
    ) -> Result<Self, SensingError> {
        if row_support.len() != n_rows {
            return Err(SensingError::InvalidParams(format!(
                "expected {n_rows} rows, got {}",
                row_support.len()
            )));
        }
        for (i, row) in row_support.iter().enumerate() {
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(SensingError::InvalidParams(format!(
                        "row {i} support is not strictly increasing"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last as usize >= n_cols {
                    return Err(SensingError::InvalidParams(format!(
                        "row {i} index {last} out of range for {n_cols} columns"
                    )));
                }
            }
        }
        Ok(SparseBinaryMatrix {
            n_rows,
            n_cols,
            row_support,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row_support(&self) -> &[Vec<u32>] {
        &self.row_support
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.row_support[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.row_support[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.row_support.iter().map(Vec::len).sum()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_support.iter().map(Vec::len).collect()
    }

    /// Per-column sorted row indices (the transpose's row support).
    pub fn col_support(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (i, row) in self.row_support.iter().enumerate() {
            for &j in row {
                cols[j as usize].push(i as u32);
            }
        }
        cols
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0usize; self.n_cols];
        for row in &self.row_support {
            for &j in row {
                w[j as usize] += 1;
            }
        }
        w
    }

    /// Column-normalized view: each column j carries the scale 1/sqrt(w_j).
    /// All-zero columns get scale 0 so they can never win a correlation.
    pub fn column_normalized(&self) -> ColumnView {
        let supports = self.col_support();
        let scales = supports
            .iter()
            .map(|s| {
                if s.is_empty() {
                    0.0
                } else {
                    1.0 / (s.len() as f64).sqrt()
                }
            })
            .collect();
        ColumnView {
            n_rows: self.n_rows,
            supports,
            scales,
        }
    }
}

/// Column-major view of a binary matrix with per-column normalization
/// factors; this is the input the sparse recovery runs on.
#[derive(Debug, Clone)]
pub struct ColumnView {
    n_rows: usize,
    supports: Vec<Vec<u32>>,
    scales: Vec<f64>,
}

impl ColumnView {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.supports.len()
    }

    pub fn support(&self, j: usize) -> &[u32] {
        &self.supports[j]
    }

    pub fn scale(&self, j: usize) -> f64 {
        self.scales[j]
    }
}

/// Parameters of one polynomial-graph matrix: p a prime power, 1 <= r < p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeVoreParams {
    pub p: u64,
    pub r: u32,
}

impl DeVoreParams {
    pub fn new(p: u64, r: u32) -> Result<Self, SensingError> {
        if r < 1 || u64::from(r) >= p {
            return Err(SensingError::InvalidParams(format!(
                "need 1 <= r < p, got p={p}, r={r}"
            )));
        }
        Ok(DeVoreParams { p, r })
    }

    /// Ones per column of the constructed matrix.
    pub fn column_weight(&self) -> u64 {
        self.p
    }

    /// Ones per row of the constructed matrix.
    pub fn row_weight(&self) -> u64 {
        self.p.pow(self.r)
    }
}

/// Normalization bookkeeping for a Kronecker sensing matrix: z1, z2 are the
/// ones per row of the two factors (beams per measurement), p1, p2 the ones
/// per column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingScaling {
    pub z1: u64,
    pub z2: u64,
    pub p1: u64,
    pub p2: u64,
}

impl SensingScaling {
    pub fn new(z1: u64, z2: u64, p1: u64, p2: u64) -> Self {
        SensingScaling { z1, z2, p1, p2 }
    }

    pub fn for_devore_pair(d1: &DeVoreParams, d2: &DeVoreParams) -> Self {
        SensingScaling {
            z1: d1.row_weight(),
            z2: d2.row_weight(),
            p1: d1.column_weight(),
            p2: d2.column_weight(),
        }
    }

    /// S = row_scale * S_b has unit-norm rows.
    pub fn row_scale(&self) -> f64 {
        1.0 / ((self.z1 * self.z2) as f64).sqrt()
    }

    /// S_C = col_scale * S_b has unit-norm columns.
    pub fn col_scale(&self) -> f64 {
        1.0 / ((self.p1 * self.p2) as f64).sqrt()
    }

    /// Factor mapping recovered column-normalized coefficients back to the
    /// virtual channel scale: h_v = solution_rescale * h_tilde.
    pub fn solution_rescale(&self) -> f64 {
        ((self.z1 * self.z2) as f64 / (self.p1 * self.p2) as f64).sqrt()
    }
}

/// Coherence and RIP certificate summary for a sensing matrix.
#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub mu: f64,
    pub welch_lower_bound: f64,
    pub rip_order_guarantee: u64,
    pub rip_constant_bound: f64,
}

/// JSON export of a constructed Kronecker sensing matrix. Field order is the
/// wire format; do not reorder.
#[derive(Debug, Serialize)]
pub struct MatrixExport {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_support: Vec<Vec<u32>>,
    pub p1: u64,
    pub r1: u32,
    pub p2: u64,
    pub r2: u32,
    pub row_scale: f64,
    pub col_scale: f64,
}

pub fn matrix_export(
    s_b: &SparseBinaryMatrix,
    d1: &DeVoreParams,
    d2: &DeVoreParams,
) -> MatrixExport {
    let scaling = SensingScaling::for_devore_pair(d1, d2);
    MatrixExport {
        n_rows: s_b.n_rows(),
        n_cols: s_b.n_cols(),
        row_support: s_b.row_support().to_vec(),
        p1: d1.p,
        r1: d1.r,
        p2: d2.p,
        r2: d2.r,
        row_scale: scaling.row_scale(),
        col_scale: scaling.col_scale(),
    }
}

/// Constructs the p^2 x p^{r+1} polynomial-graph matrix. Column j is the
/// j-th polynomial in canonical enumeration; it holds a 1 in row
/// (x_idx * p + y_idx) for every field element x with Q(x) = y.
pub fn devore_matrix(params: &DeVoreParams) -> Result<SparseBinaryMatrix, SensingError> {
    let field = Field::new(params.p)?;
    let p = params.p;
    let n_rows = p
        .checked_mul(p)
        .ok_or(SensingError::SizeOverflow { n_rows: 0, n_cols: 0 })?;
    let n_cols = p
        .checked_pow(params.r + 1)
        .ok_or(SensingError::SizeOverflow { n_rows, n_cols: 0 })?;
    if n_rows.checked_mul(n_cols).map_or(true, |e| e > SIZE_CAP_ENTRIES) {
        return Err(SensingError::SizeOverflow { n_rows, n_cols });
    }

    let elements: Vec<_> = field.elements().collect();
    let mut row_support = vec![Vec::with_capacity(params.row_weight() as usize); n_rows as usize];
    for j in 0..n_cols {
        let poly = FieldPoly::from_index(&field, params.r, j);
        for (x_idx, &x) in elements.iter().enumerate() {
            let y = field.eval_poly(&poly, x);
            let row = x_idx as u64 * p + y.code();
            row_support[row as usize].push(j as u32);
        }
    }
    // Columns were visited in increasing order, so each row is sorted.
    SparseBinaryMatrix::from_row_support(n_rows as usize, n_cols as usize, row_support)
}

/// Kronecker product on the row-support representation: row t = i * rows(V) + j
/// is the outer combination of row i of U and row j of V.
pub fn kron_rows(
    u: &SparseBinaryMatrix,
    v: &SparseBinaryMatrix,
) -> Result<SparseBinaryMatrix, SensingError> {
    let n_rows = (u.n_rows as u64)
        .checked_mul(v.n_rows as u64)
        .ok_or(SensingError::SizeOverflow { n_rows: u64::MAX, n_cols: 0 })?;
    let n_cols = (u.n_cols as u64)
        .checked_mul(v.n_cols as u64)
        .ok_or(SensingError::SizeOverflow { n_rows, n_cols: u64::MAX })?;
    if n_rows.checked_mul(n_cols).map_or(true, |e| e > SIZE_CAP_ENTRIES) {
        return Err(SensingError::SizeOverflow { n_rows, n_cols });
    }
    let v_cols = v.n_cols as u32;
    let mut row_support = Vec::with_capacity((n_rows) as usize);
    for u_row in &u.row_support {
        for v_row in &v.row_support {
            let mut row = Vec::with_capacity(u_row.len() * v_row.len());
            for &a in u_row {
                let base = a * v_cols;
                for &b in v_row {
                    row.push(base + b);
                }
            }
            row_support.push(row);
        }
    }
    SparseBinaryMatrix::from_row_support(n_rows as usize, n_cols as usize, row_support)
}

/// Number of shared ones between two sorted support lists.
fn intersection_count(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Normalized inner product candidate: value s / sqrt(wprod), compared
/// exactly via s^2 * wprod cross-multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frac {
    s: u64,
    wprod: u64,
}

impl Frac {
    const ZERO: Frac = Frac { s: 0, wprod: 1 };

    fn gt(self, other: Frac) -> bool {
        let lhs = (self.s as u128 * self.s as u128) * other.wprod as u128;
        let rhs = (other.s as u128 * other.s as u128) * self.wprod as u128;
        lhs > rhs
    }

    fn max(self, other: Frac) -> Frac {
        if other.gt(self) {
            other
        } else {
            self
        }
    }

    fn value(self) -> f64 {
        self.s as f64 / (self.wprod as f64).sqrt()
    }
}

fn validate_no_zero_columns(weights: &[usize]) -> Result<(), SensingError> {
    if let Some(j) = weights.iter().position(|&w| w == 0) {
        return Err(SensingError::ZeroColumn(j));
    }
    Ok(())
}

fn coherence_best_for(cols: &[Vec<u32>], i: usize) -> Frac {
    let mut best = Frac::ZERO;
    for j in (i + 1)..cols.len() {
        let s = intersection_count(&cols[i], &cols[j]);
        if s > 0 {
            best = best.max(Frac {
                s,
                wprod: (cols[i].len() * cols[j].len()) as u64,
            });
        }
    }
    best
}

/// Mutual coherence: max over distinct column pairs of
/// |<m_i, m_j>| / (||m_i|| * ||m_j||), computed on exact integer counts.
pub fn coherence(m: &SparseBinaryMatrix) -> Result<f64, SensingError> {
    let cols = m.col_support();
    validate_no_zero_columns(&m.col_weights())?;
    #[cfg(feature = "parallel")]
    let best = (0..cols.len().saturating_sub(1))
        .into_par_iter()
        .map(|i| coherence_best_for(&cols, i))
        .reduce(|| Frac::ZERO, Frac::max);
    #[cfg(not(feature = "parallel"))]
    let best = (0..cols.len().saturating_sub(1))
        .map(|i| coherence_best_for(&cols, i))
        .fold(Frac::ZERO, Frac::max);
    Ok(best.value())
}

/// Sequential implementation of [`coherence`]; same result, used by the
/// benchmark suite as the baseline.
pub fn coherence_serial(m: &SparseBinaryMatrix) -> Result<f64, SensingError> {
    let cols = m.col_support();
    validate_no_zero_columns(&m.col_weights())?;
    let best = (0..cols.len().saturating_sub(1))
        .map(|i| coherence_best_for(&cols, i))
        .fold(Frac::ZERO, Frac::max);
    Ok(best.value())
}

/// Welch lower bound sqrt((n - m) / (m (n - 1))) on the coherence of an
/// m x n matrix.
pub fn welch_bound(m: usize, n: usize) -> Result<f64, SensingError> {
    if m < 1 || n <= m {
        return Err(SensingError::InvalidDims { m, n });
    }
    Ok(((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt())
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Brute-force RIP constant of order L on the column-normalized view:
/// delta_L = max over L-column subsets T of max(1 - sigma_min(M_T)^2,
/// sigma_max(M_T)^2 - 1), exact by exhaustive enumeration.
pub fn rip_constant_bruteforce(m: &SparseBinaryMatrix, order: usize) -> Result<f64, SensingError> {
    if order < 1 || order > m.n_cols() {
        return Err(SensingError::InvalidParams(format!(
            "RIP order must be in 1..={}, got {order}",
            m.n_cols()
        )));
    }
    let subsets = binomial(m.n_cols() as u64, order as u64);
    if subsets > RIP_SUBSET_CAP as u128 {
        return Err(SensingError::TooLarge {
            subsets,
            cap: RIP_SUBSET_CAP,
        });
    }
    let cols = m.col_support();
    validate_no_zero_columns(&m.col_weights())?;

    // Singleton subsets: normalized columns have unit norm by construction,
    // so both singular-value deviations vanish identically.
    if order == 1 {
        return Ok(0.0);
    }

    // Pairs: the 2x2 Gram [[1, g], [g, 1]] has eigenvalues 1 -+ g, so the
    // subset's deviation is exactly |g|. Maximize over exact fractions.
    if order == 2 {
        #[cfg(feature = "parallel")]
        let best = (0..cols.len() - 1)
            .into_par_iter()
            .map(|i| coherence_best_for(&cols, i))
            .reduce(|| Frac::ZERO, Frac::max);
        #[cfg(not(feature = "parallel"))]
        let best = (0..cols.len() - 1)
            .map(|i| coherence_best_for(&cols, i))
            .fold(Frac::ZERO, Frac::max);
        return Ok(best.value());
    }

    // Larger subsets: eigen-decompose the normalized Gram of each subset.
    let n = cols.len();
    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        gram[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let s = intersection_count(&cols[i], &cols[j]);
            let g = s as f64 / ((cols[i].len() * cols[j].len()) as f64).sqrt();
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let delta_from_first = |first: usize| -> f64 {
        let mut idx: Vec<usize> = (first..first + order).collect();
        let mut worst: f64 = 0.0;
        loop {
            let sub = DMatrix::from_fn(order, order, |a, b| gram[idx[a] * n + idx[b]]);
            let eig = sub.symmetric_eigenvalues();
            let lam_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let lam_max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((1.0 - lam_min).max(lam_max - 1.0));
            // Advance the tail (positions 1..order) lexicographically.
            let mut t = order - 1;
            loop {
                if idx[t] + 1 <= n - (order - t) {
                    idx[t] += 1;
                    for u in (t + 1)..order {
                        idx[u] = idx[u - 1] + 1;
                    }
                    break;
                }
                if t == 1 {
                    return worst;
                }
                t -= 1;
            }
        }
    };
    let firsts = 0..=(n - order);
    #[cfg(feature = "parallel")]
    let delta = firsts
        .into_par_iter()
        .map(delta_from_first)
        .reduce(|| 0.0, f64::max);
    #[cfg(not(feature = "parallel"))]
    let delta = firsts.map(delta_from_first).fold(0.0, f64::max);
    Ok(delta)
}

/// Row- and column-normalization factors of Eq-style scaled views, after
/// validating the scaling against the actual row/column weights.
pub fn normalize_views(
    s_b: &SparseBinaryMatrix,
    scaling: &SensingScaling,
) -> Result<(f64, f64), SensingError> {
    let row_w = (scaling.z1 * scaling.z2) as usize;
    let col_w = (scaling.p1 * scaling.p2) as usize;
    if let Some(i) = s_b.row_weights().iter().position(|&w| w != row_w) {
        return Err(SensingError::ScalingMismatch(format!(
            "row {i} has weight {}, expected z1*z2 = {row_w}",
            s_b.row_support[i].len()
        )));
    }
    if let Some(j) = s_b.col_weights().iter().position(|&w| w != col_w) {
        return Err(SensingError::ScalingMismatch(format!(
            "column {j} has weight inconsistent with p1*p2 = {col_w}"
        )));
    }
    Ok((scaling.row_scale(), scaling.col_scale()))
}

fn isqrt(v: u64) -> u64 {
    let mut x = (v as f64).sqrt() as u64;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

/// Full analyzer summary: measured coherence, Welch bound (0 for square or
/// tall matrices, where the bound is vacuous), the largest recovery order
/// the coherence certifies, and its RIP constant bound.
pub fn coherence_report(m: &SparseBinaryMatrix) -> Result<CoherenceReport, SensingError> {
    let cols = m.col_support();
    validate_no_zero_columns(&m.col_weights())?;
    #[cfg(feature = "parallel")]
    let best = (0..cols.len().saturating_sub(1))
        .into_par_iter()
        .map(|i| coherence_best_for(&cols, i))
        .reduce(|| Frac::ZERO, Frac::max);
    #[cfg(not(feature = "parallel"))]
    let best = (0..cols.len().saturating_sub(1))
        .map(|i| coherence_best_for(&cols, i))
        .fold(Frac::ZERO, Frac::max);
    let mu = best.value();
    let welch = if m.n_cols() > m.n_rows() {
        welch_bound(m.n_rows(), m.n_cols())?
    } else {
        0.0
    };
    let rip_order_guarantee = if best.s == 0 {
        m.n_cols() as u64
    } else {
        let w = isqrt(best.wprod);
        if w * w == best.wprod {
            // mu = s / w exactly; the guaranteed order is floor(1 / mu).
            w / best.s
        } else {
            (1.0 / mu).floor() as u64
        }
    };
    let rip_constant_bound = rip_order_guarantee.saturating_sub(1) as f64 * mu;
    Ok(CoherenceReport {
        mu,
        welch_lower_bound: welch,
        rip_order_guarantee,
        rip_constant_bound,
    })
}
