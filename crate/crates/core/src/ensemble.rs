//! Input state ensembles, their Gram matrices, and the linear-independence
//! check that decides whether unambiguous discrimination is possible at all.
//!
//! States are stored in the multirail basis: amplitude `k` of a state is the
//! coefficient of a single photon in mode `k`. Inner products are
//! conjugate-linear in the left argument.

use crate::document::EnsembleDocument;
use crate::error::{Error, Result};
use crate::linalg::{inner, CMatrix, CVector};
use num_complex::Complex64;

/// Unit-norm invariant for stored states and the prior sum.
pub const UNIT_TOL: f64 = 1e-12;
/// Inputs within this distance of unit norm (or unit prior sum) are rescaled
/// instead of rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Singular values at or below this count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// `n` linearly independent unit vectors in `C^n` with prior probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    states: Vec<CVector>,
    priors: Vec<f64>,
}

impl StateEnsemble {
    /// Validates and canonicalizes. `priors = None` means uniform.
    pub fn new(states: Vec<CVector>, priors: Option<Vec<f64>>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::Malformed("ensemble has no states".into()));
        }
        let mut normalized = Vec::with_capacity(n);
        for (i, s) in states.into_iter().enumerate() {
            if s.len() != n {
                return Err(Error::Dimension {
                    field: format!("states[{i}]"),
                    expected: n,
                    found: s.len(),
                });
            }
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Malformed(format!("states[{i}] has a non-finite amplitude")));
            }
            let norm = s.norm();
            let dev = (norm - 1.0).abs();
            if dev <= UNIT_TOL {
                normalized.push(s);
            } else if dev <= RENORMALIZE_TOL {
                normalized.push(s.unscale(norm));
            } else {
                return Err(Error::Normalization { index: i, norm });
            }
        }

        let priors = match priors {
            None => vec![1.0 / n as f64; n],
            Some(p) => canonical_priors(p, n)?,
        };

        let report = check_independence(&normalized);
        if !report.independent {
            return Err(Error::DependentStates {
                rank: report.rank,
                n,
                min_singular: report.min_singular_value,
            });
        }
        Ok(Self { states: normalized, priors })
    }

    /// Convenience constructor for real amplitudes.
    pub fn from_real(states: &[Vec<f64>], priors: Option<Vec<f64>>) -> Result<Self> {
        let states = states
            .iter()
            .map(|s| CVector::from_iterator(s.len(), s.iter().map(|&x| Complex64::new(x, 0.0))))
            .collect();
        Self::new(states, priors)
    }

    /// Number of states, which is also the dimension of the space they span.
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &CVector {
        &self.states[i]
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// True when all priors agree to within `tol`.
    pub fn has_equal_priors(&self, tol: f64) -> bool {
        let first = self.priors[0];
        self.priors.iter().all(|p| (p - first).abs() <= tol)
    }

    pub fn gram(&self) -> GramMatrix {
        gram(self)
    }

    pub fn to_document(&self) -> EnsembleDocument {
        EnsembleDocument::from(self)
    }
}

fn canonical_priors(p: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if p.len() != n {
        return Err(Error::Dimension {
            field: "priors".into(),
            expected: n,
            found: p.len(),
        });
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidPriors(format!("priors[{i}] = {v} is not a probability")));
    }
    let sum: f64 = p.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev <= UNIT_TOL {
        Ok(p)
    } else if dev <= RENORMALIZE_TOL {
        Ok(p.into_iter().map(|v| v / sum).collect())
    } else {
        Err(Error::InvalidPriors(format!("priors sum to {sum}, not 1")))
    }
}

/// Reads an ensemble from its JSON document.
pub fn parse_ensemble(document: &str) -> Result<StateEnsemble> {
    let doc: EnsembleDocument =
        serde_json::from_str(document).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.try_into()
}

/// The Gram matrix `O_ij = <psi_i|psi_j>` of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(CMatrix);

impl GramMatrix {
    /// Wraps a matrix after checking it is Hermitian with unit diagonal.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                field: "gram".into(),
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let herm = crate::linalg::hermiticity_defect(&m);
        if herm > UNIT_TOL {
            return Err(Error::InvalidParameters(format!(
                "Gram matrix is not Hermitian (defect {herm:e})"
            )));
        }
        if let Some(i) = (0..m.nrows()).find(|&i| (m[(i, i)] - Complex64::new(1.0, 0.0)).norm() > UNIT_TOL) {
            return Err(Error::InvalidParameters(format!(
                "Gram diagonal entry {i} is {} instead of 1",
                m[(i, i)]
            )));
        }
        Ok(Self(m))
    }

    /// Real symmetric Gram matrix from its strict upper triangle, row by row.
    /// For three states this is `[O12, O13, O23]`.
    pub fn from_real_overlaps(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::Dimension {
                field: "overlaps".into(),
                expected: n * (n - 1) / 2,
                found: upper.len(),
            });
        }
        let mut m = CMatrix::identity(n, n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = Complex64::new(*it.next().unwrap(), 0.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self::from_matrix(m)
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.0.clone().determinant().re
    }
}

/// `O_ij = <psi_i|psi_j>`.
pub fn gram(ensemble: &StateEnsemble) -> GramMatrix {
    let n = ensemble.dimension();
    let states = ensemble.states();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(1.0, 0.0);
        for j in i + 1..n {
            let o = inner(&states[i], &states[j]);
            m[(i, j)] = o;
            m[(j, i)] = o.conj();
        }
    }
    GramMatrix(m)
}

/// Numerical rank of a set of stacked vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub min_singular_value: f64,
    /// `rank == n` at [`RANK_TOL`].
    pub independent: bool,
}

/// Rank of the matrix whose columns are `states`, via SVD.
pub fn check_independence(states: &[CVector]) -> RankReport {
    let n = states.len();
    if n == 0 {
        return RankReport { rank: 0, min_singular_value: 0.0, independent: false };
    }
    let rows = states.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut m = CMatrix::zeros(rows, n);
    for (j, s) in states.iter().enumerate() {
        m.view_mut((0, j), (s.len(), 1)).copy_from(s);
    }
    let sv = m.singular_values();
    let rank = sv.iter().filter(|&&s| s > RANK_TOL).count();
    // A tall-thin or short-wide stack has fewer singular values than states.
    let min_singular_value = if sv.len() < n {
        0.0
    } else {
        sv.iter().copied().fold(f64::INFINITY, f64::min)
    };
    RankReport { rank, min_singular_value, independent: rank == n }
}
