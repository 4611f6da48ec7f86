//! Gram data of an event sequence: probabilities `P(A_i)` and the matrix of
//! pairwise intersection probabilities `P(A_i ∩ A_j)`, plus the matrix
//! primitives used by the bounds (entry sums, spectral PSD test, block-split
//! inequality).
//!
//! Indices passed to [`GramSource`] are zero-based. Counts (`n`) always mean
//! "the first `n` events".

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for the PSD test.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Absolute slack used for the entry-wise consistency checks (diagonal,
/// range, Fréchet bounds). Model-built Gram entries are sums of masses and
/// pick up rounding of this order.
pub const ENTRY_TOL: f64 = 1e-12;

/// Random-access view of Gram data. Implemented by the dense [`GramData`]
/// and by model-backed virtual sources that never materialize `M`.
pub trait GramSource {
    /// Number of events available.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `P(A_i)`.
    fn prob(&self, i: usize) -> f64;

    /// `P(A_i ∩ A_j)`; must be symmetric in `(i, j)` and equal `prob(i)` on the diagonal.
    fn joint(&self, i: usize, j: usize) -> f64;
}

impl<G: GramSource + ?Sized> GramSource for &G {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn prob(&self, i: usize) -> f64 {
        (**self).prob(i)
    }
    fn joint(&self, i: usize, j: usize) -> f64 {
        (**self).joint(i, j)
    }
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Dense Gram data with the intersection matrix stored as a packed lower
/// triangle, so symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    p: Vec<f64>,
    lower: Vec<f64>,
}

/// A broken [`GramData`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Diagonal {
        i: usize,
        p: f64,
        m: f64,
    },
    OutOfRange {
        i: usize,
        j: usize,
        value: f64,
    },
    FrechetUpper {
        i: usize,
        j: usize,
        m: f64,
        bound: f64,
    },
    FrechetLower {
        i: usize,
        j: usize,
        m: f64,
        bound: f64,
    },
    NotPsd {
        min_eigenvalue: f64,
        threshold: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // reported with 1-based event indices
        match *self {
            Violation::Diagonal { i, p, m } => {
                write!(f, "diagonal: M_{0}{0} = {m} but p_{0} = {p}", i + 1)
            }
            Violation::OutOfRange { i, j, value } => {
                write!(
                    f,
                    "range: entry ({}, {}) = {value} outside [0, 1]",
                    i + 1,
                    j + 1
                )
            }
            Violation::FrechetUpper { i, j, m, bound } => write!(
                f,
                "Fréchet upper: M_{},{} = {m} > min(p_i, p_j) = {bound}",
                i + 1,
                j + 1
            ),
            Violation::FrechetLower { i, j, m, bound } => write!(
                f,
                "Fréchet lower: M_{},{} = {m} < max(0, p_i + p_j - 1) = {bound}",
                i + 1,
                j + 1
            ),
            Violation::NotPsd {
                min_eigenvalue,
                threshold,
            } => write!(
                f,
                "PSD: smallest eigenvalue {min_eigenvalue:e} below -{threshold:e}"
            ),
        }
    }
}

impl GramData {
    /// Builds Gram data from probabilities and a packed lower triangle
    /// (row-major, `lower[i*(i+1)/2 + j]` for `j <= i`), checking every
    /// invariant including PSD at [`DEFAULT_PSD_TOL`].
    pub fn new(p: Vec<f64>, lower: Vec<f64>) -> Result<Self> {
        let g = Self::from_raw(p, lower)?;
        g.ensure_valid(DEFAULT_PSD_TOL)?;
        Ok(g)
    }

    /// Shape and finiteness checks only. Use [`GramData::violations`] to
    /// inspect the probabilistic invariants.
    pub fn from_raw(p: Vec<f64>, lower: Vec<f64>) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(Error::InvalidGram("no events".into()));
        }
        if lower.len() != n * (n + 1) / 2 {
            return Err(Error::InvalidGram(format!(
                "packed triangle has {} entries, expected {}",
                lower.len(),
                n * (n + 1) / 2
            )));
        }
        if let Some(i) = p.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("p_{}", i + 1),
            });
        }
        if let Some(k) = lower.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("packed entry {k}"),
            });
        }
        Ok(Self { p, lower })
    }

    /// Builds from a full symmetric matrix; the diagonal must equal `p`.
    pub fn from_matrix(p: Vec<f64>, m: &DMatrix<f64>) -> Result<Self> {
        let n = p.len();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::InvalidGram(format!(
                "matrix is {}x{} but there are {n} probabilities",
                m.nrows(),
                m.ncols()
            )));
        }
        ensure_symmetric(m)?;
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(m[(i, j)]);
            }
        }
        Self::new(p, lower)
    }

    /// Materializes the first `n` events of any source.
    pub fn from_source<G: GramSource + ?Sized>(src: &G, n: usize) -> Result<Self> {
        if n > src.len() {
            return Err(Error::HorizonExceeded {
                requested: n,
                available: src.len(),
            });
        }
        let p: Vec<f64> = (0..n).map(|i| src.prob(i)).collect();
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..i {
                lower.push(src.joint(i, j));
            }
            lower.push(p[i]);
        }
        Self::from_raw(p, lower)
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// Full `n x n` matrix of the first `n` events.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let n = n.min(self.p.len());
        DMatrix::from_fn(n, n, |i, j| self.lower[packed_index(i, j)])
    }

    /// Leading `n`-event block.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n > self.p.len() {
            return Err(Error::HorizonExceeded {
                requested: n,
                available: self.p.len(),
            });
        }
        Ok(Self {
            p: self.p[..n].to_vec(),
            lower: self.lower[..n * (n + 1) / 2].to_vec(),
        })
    }

    /// Every broken invariant; an empty vector means the data is valid.
    pub fn violations(&self, psd_tol: f64) -> Vec<Violation> {
        let n = self.p.len();
        let mut out = Vec::new();
        for i in 0..n {
            let m = self.lower[packed_index(i, i)];
            if (m - self.p[i]).abs() > ENTRY_TOL {
                out.push(Violation::Diagonal { i, p: self.p[i], m });
            }
            if !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(&self.p[i]) {
                out.push(Violation::OutOfRange {
                    i,
                    j: i,
                    value: self.p[i],
                });
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = self.lower[packed_index(i, j)];
                if !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(&m) {
                    out.push(Violation::OutOfRange {
                        i: j,
                        j: i,
                        value: m,
                    });
                }
                let (pi, pj) = (self.p[i], self.p[j]);
                let upper = pi.min(pj);
                if m > upper + ENTRY_TOL {
                    out.push(Violation::FrechetUpper {
                        i: j,
                        j: i,
                        m,
                        bound: upper,
                    });
                }
                let lower = (pi + pj - 1.0).max(0.0);
                if m < lower - ENTRY_TOL {
                    out.push(Violation::FrechetLower {
                        i: j,
                        j: i,
                        m,
                        bound: lower,
                    });
                }
            }
        }
        // symmetric by construction, so the spectral test cannot fail on symmetry
        if let Ok(PsdVerdict::Fail {
            min_eigenvalue,
            threshold,
        }) = check_psd(&self.matrix(n), psd_tol)
        {
            out.push(Violation::NotPsd {
                min_eigenvalue,
                threshold,
            });
        }
        out
    }

    pub fn ensure_valid(&self, psd_tol: f64) -> Result<()> {
        let v = self.violations(psd_tol);
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::InvalidGram(msg.join("; ")))
        }
    }

    /// PSD verdict for the full matrix.
    pub fn check_psd(&self, tol: f64) -> PsdVerdict {
        check_psd(&self.matrix(self.p.len()), tol).expect("packed storage is symmetric")
    }

    /// Writes the CSV report: header `i,j,p_i,p_j,m_ij`, one row per
    /// upper-triangle entry in row-major order, 1-based indices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.p.len();
        for i in 0..n {
            for j in i..n {
                w.serialize(CsvRow {
                    i: i + 1,
                    j: j + 1,
                    p_i: self.p[i],
                    p_j: self.p[j],
                    m_ij: self.lower[packed_index(i, j)],
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV format written by [`GramData::write_csv`]. Only shape
    /// and consistency of the `p` columns are checked here.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let rows: Vec<CsvRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        let n = rows.iter().map(|r| r.j).max().unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidGram("empty Gram CSV".into()));
        }
        let mut p: Vec<Option<f64>> = vec![None; n];
        let mut lower: Vec<Option<f64>> = vec![None; n * (n + 1) / 2];
        for (line, r) in rows.iter().enumerate() {
            let row_no = line + 2;
            if r.i == 0 || r.i > r.j {
                return Err(Error::InvalidGram(format!(
                    "row {row_no}: ({}, {}) is not an upper-triangle index pair",
                    r.i, r.j
                )));
            }
            for (idx, val) in [(r.i - 1, r.p_i), (r.j - 1, r.p_j)] {
                match p[idx] {
                    Some(prev) if prev != val => {
                        return Err(Error::InvalidGram(format!(
                            "row {row_no}: p_{} = {val} conflicts with earlier value {prev}",
                            idx + 1
                        )))
                    }
                    _ => p[idx] = Some(val),
                }
            }
            let k = packed_index(r.i - 1, r.j - 1);
            if lower[k].replace(r.m_ij).is_some() {
                return Err(Error::InvalidGram(format!(
                    "row {row_no}: duplicate entry ({}, {})",
                    r.i, r.j
                )));
            }
        }
        let p: Vec<f64> = p
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::InvalidGram(format!("missing p_{}", i + 1))))
            .collect::<Result<_>>()?;
        let mut packed = Vec::with_capacity(lower.len());
        for i in 0..n {
            for j in 0..=i {
                packed.push(lower[packed_index(i, j)].ok_or_else(|| {
                    Error::InvalidGram(format!("missing entry ({}, {})", j + 1, i + 1))
                })?);
            }
        }
        Self::from_raw(p, packed)
    }
}

impl GramSource for GramData {
    fn len(&self) -> usize {
        self.p.len()
    }
    fn prob(&self, i: usize) -> f64 {
        self.p[i]
    }
    fn joint(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    i: usize,
    j: usize,
    p_i: f64,
    p_j: f64,
    m_ij: f64,
}

/// Sum of all entries.
pub fn gamma(e: &DMatrix<f64>) -> f64 {
    e.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsdVerdict {
    Pass { min_eigenvalue: f64 },
    Fail { min_eigenvalue: f64, threshold: f64 },
}

impl PsdVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, PsdVerdict::Pass { .. })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            PsdVerdict::Pass { min_eigenvalue } | PsdVerdict::Fail { min_eigenvalue, .. } => {
                min_eigenvalue
            }
        }
    }
}

fn ensure_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff != 0.0 || !m[(i, j)].is_finite() {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
        if !m[(i, i)].is_finite() {
            return Err(Error::NonFinite {
                location: format!("({i}, {i})"),
            });
        }
    }
    Ok(())
}

/// Spectral PSD test: passes iff the smallest eigenvalue is at least
/// `-tol * max(1, max |M_ij|)`.
pub fn check_psd(m: &DMatrix<f64>, tol: f64) -> Result<PsdVerdict> {
    ensure_symmetric(m)?;
    if m.nrows() == 0 {
        return Ok(PsdVerdict::Pass {
            min_eigenvalue: 0.0,
        });
    }
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let threshold = tol * scale;
    let min_eigenvalue = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(if min_eigenvalue >= -threshold {
        PsdVerdict::Pass { min_eigenvalue }
    } else {
        PsdVerdict::Fail {
            min_eigenvalue,
            threshold,
        }
    })
}

/// Block split of a symmetric matrix after the first `split` rows/columns:
/// returns `(Γ(C)², Γ(A)·Γ(B))` where `A` is the leading block, `B` the
/// trailing block and `C` the off-diagonal block.
pub fn partition_inequality(e: &DMatrix<f64>, split: usize) -> Result<(f64, f64)> {
    if !e.is_square() {
        return Err(Error::NotSquare {
            rows: e.nrows(),
            cols: e.ncols(),
        });
    }
    let size = e.nrows();
    if split == 0 || split >= size {
        return Err(Error::SplitOutOfRange { split, size });
    }
    let rest = size - split;
    let a = gamma(&e.view((0, 0), (split, split)).into_owned());
    let b = gamma(&e.view((split, split), (rest, rest)).into_owned());
    let c = gamma(&e.view((0, split), (split, rest)).into_owned());
    Ok((c * c, a * b))
}

/// [`partition_inequality`] for every split `1..size`, in `O(size²)` total
/// via a 2-D prefix-sum table. Entry `k` corresponds to split `k + 1`.
pub fn partition_profile(e: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    if !e.is_square() {
        return Err(Error::NotSquare {
            rows: e.nrows(),
            cols: e.ncols(),
        });
    }
    let n = e.nrows();
    // pre[i][j] = sum of e[..i, ..j]
    let mut pre = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            pre[i + 1][j + 1] = e[(i, j)] + pre[i][j + 1] + pre[i + 1][j] - pre[i][j];
        }
    }
    let total = pre[n][n];
    Ok((1..n)
        .map(|m| {
            let a = pre[m][m];
            let c = pre[m][n] - a;
            let b = total - pre[m][n] - pre[n][m] + a;
            (c * c, a * b)
        })
        .collect())
}
