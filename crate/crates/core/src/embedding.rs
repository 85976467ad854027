//! Failure vectors, extended output states and their unitary completion.
//!
//! Input `i` is the state `ψ_i` padded with `m` zeros. Its image is
//! `√p_i·e_i ⊕ φ_i`: a click on port `i` identifies the state, a click on
//! any of the last `m` ports is the inconclusive outcome. The failure
//! vectors `φ_i` reproduce `C` as their Gram matrix, which is exactly what
//! makes the input and output inner products agree.

use nalgebra::Cholesky;

use crate::discrimination::{DiscriminationSolution, FailureMatrix, PSD_TOL};
use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_rank, inner, max_abs_diff, pad, unitarity_defect, CMatrix, CVector};

/// Tolerance on `⟨φ_k|φ_j⟩ = C_kj` and on the unitary invariants.
pub const EMBED_TOL: f64 = 1e-10;
/// Pivoting stops once the remaining diagonal drops below this fraction of
/// the largest diagonal entry of `C`.
pub const PIVOT_REL_TOL: f64 = 1e-9;
/// Gram–Schmidt drops a candidate whose residual norm is below this.
const COMPLEMENT_TOL: f64 = 1e-6;

/// Vectors `φ_i ∈ C^m` with `⟨φ_k|φ_j⟩ = C_kj`.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureVectors {
    /// `m × n`; column `j` is `φ_j`.
    factor: CMatrix,
}

impl FailureVectors {
    pub fn dimension(&self) -> usize {
        self.factor.nrows()
    }

    pub fn len(&self) -> usize {
        self.factor.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.ncols() == 0
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.factor.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<CVector> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    /// The factor `A` with `C = A^H A`.
    pub fn factor(&self) -> &CMatrix {
        &self.factor
    }

    pub fn gram(&self) -> CMatrix {
        self.factor.adjoint() * &self.factor
    }
}

/// Factors `C = A^H A` with `A` of shape `m × n`.
///
/// Uses Cholesky with diagonal pivoting (largest remaining diagonal, lowest
/// index on ties), so the pivot entries are real and positive. If that does
/// not reproduce `C` at rank `m`, falls back to the eigendecomposition
/// `A = Λ^{1/2} V^H` with the first nonzero entry of each row made real and
/// positive.
pub fn failure_vectors(c: &FailureMatrix, m: usize) -> Result<FailureVectors> {
    let lambda = c.min_eigenvalue();
    if lambda < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: lambda });
    }
    let numerical = c.rank();
    if numerical != m {
        return Err(Error::RankMismatch { declared: m, numerical });
    }
    let entries = c.entries();
    let fits = |a: &CMatrix| max_abs_diff(&(a.adjoint() * a), entries) <= EMBED_TOL;
    if let Some(a) = pivoted_cholesky(entries, m).filter(|a| fits(a)) {
        return Ok(FailureVectors { factor: a });
    }
    let a = spectral_factor(entries, m);
    let deviation = max_abs_diff(&(a.adjoint() * &a), entries);
    if deviation > EMBED_TOL {
        return Err(Error::InnerProductMismatch { deviation });
    }
    Ok(FailureVectors { factor: a })
}

fn pivoted_cholesky(cm: &CMatrix, m: usize) -> Option<CMatrix> {
    let n = cm.nrows();
    let mut work = cm.clone();
    let mut a = CMatrix::zeros(m, n);
    let mut remaining: Vec<usize> = (0..n).collect();
    let scale = (0..n).map(|i| cm[(i, i)].re).fold(0.0, f64::max);
    for k in 0..m {
        let (slot, &p) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| work[(i, i)].re.total_cmp(&work[(j, j)].re).then(j.cmp(&i)))?;
        let d = work[(p, p)].re;
        if d <= PIVOT_REL_TOL * scale {
            return None;
        }
        remaining.remove(slot);
        let r = d.sqrt();
        a[(k, p)] = c(r);
        for &j in &remaining {
            a[(k, j)] = work[(p, j)] / r;
        }
        for &i in &remaining {
            for &j in &remaining {
                let update = a[(k, i)].conj() * a[(k, j)];
                work[(i, j)] -= update;
            }
        }
    }
    let rest = remaining.iter().map(|&i| work[(i, i)].re).fold(0.0, f64::max);
    (rest <= PIVOT_REL_TOL * scale.max(f64::MIN_POSITIVE)).then_some(a)
}

fn spectral_factor(cm: &CMatrix, m: usize) -> CMatrix {
    let n = cm.nrows();
    let eig = cm.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let mut a = CMatrix::zeros(m, n);
    for (k, &idx) in order.iter().take(m).enumerate() {
        let scale = eig.eigenvalues[idx].max(0.0).sqrt();
        let v = eig.eigenvectors.column(idx);
        let mut row: Vec<_> = v.iter().map(|z| z.conj() * scale).collect();
        if let Some(first) = row.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = first.conj() / first.norm();
            row.iter_mut().for_each(|z| *z *= phase);
        }
        for (j, z) in row.into_iter().enumerate() {
            a[(k, j)] = z;
        }
    }
    a
}

/// `√(1 - q_i)·e_i ⊕ φ_i` for every state.
pub fn assemble_output_states(solution: &DiscriminationSolution, phi: &FailureVectors) -> Result<Vec<CVector>> {
    let q = solution.q();
    let n = q.len();
    if phi.len() != n {
        return Err(Error::Dimension {
            field: "failure vectors".into(),
            expected: n,
            found: phi.len(),
        });
    }
    let m = phi.dimension();
    (0..n)
        .map(|i| {
            let mut out = CVector::zeros(n + m);
            out[i] = c((1.0 - q[i]).max(0.0).sqrt());
            out.rows_mut(n, m).copy_from(&phi.factor.column(i));
            let norm = out.norm();
            if (norm - 1.0).abs() > EMBED_TOL {
                return Err(Error::Normalization { index: i, norm });
            }
            Ok(out)
        })
        .collect()
}

/// The multiport matrix `M` together with the states it was built to map.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedUnitary {
    matrix: CMatrix,
    inputs: Vec<CVector>,
    outputs: Vec<CVector>,
}

impl ExtendedUnitary {
    /// Validates a matrix read from elsewhere against its declared action.
    pub fn from_parts(matrix: CMatrix, inputs: Vec<CVector>, outputs: Vec<CVector>) -> Result<Self> {
        Self::from_parts_with(matrix, inputs, outputs, EMBED_TOL)
    }

    pub fn from_parts_with(matrix: CMatrix, inputs: Vec<CVector>, outputs: Vec<CVector>, tol: f64) -> Result<Self> {
        let big_n = matrix.nrows();
        if matrix.ncols() != big_n {
            return Err(Error::Dimension {
                field: "matrix columns".into(),
                expected: big_n,
                found: matrix.ncols(),
            });
        }
        if inputs.len() != outputs.len() || inputs.len() > big_n {
            return Err(Error::Dimension {
                field: "outputs".into(),
                expected: inputs.len(),
                found: outputs.len(),
            });
        }
        for v in inputs.iter().chain(&outputs) {
            if v.len() != big_n {
                return Err(Error::Dimension {
                    field: "state length".into(),
                    expected: big_n,
                    found: v.len(),
                });
            }
        }
        let deviation = unitarity_defect(&matrix);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        let deviation = inputs
            .iter()
            .zip(&outputs)
            .map(|(x, y)| (&matrix * x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if deviation > tol {
            return Err(Error::InnerProductMismatch { deviation });
        }
        Ok(Self { matrix, inputs, outputs })
    }

    /// `N = n + m`.
    pub fn ports(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of states `n`.
    pub fn states(&self) -> usize {
        self.inputs.len()
    }

    /// Failure-space dimension `m`.
    pub fn ancillas(&self) -> usize {
        self.ports() - self.states()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn inputs(&self) -> &[CVector] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[CVector] {
        &self.outputs
    }
}

/// Orthonormal basis of the complement of `span(vectors)`, built by
/// Gram–Schmidt over `e_1, …, e_N` in index order.
fn complement(vectors: &[CVector], big_n: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    let orthogonalize = |v: CVector, basis: &mut Vec<CVector>| -> Option<CVector> {
        let mut v = v;
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = inner(b, &v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        (norm > COMPLEMENT_TOL).then(|| v / c(norm))
    };
    for v in vectors {
        if let Some(u) = orthogonalize(v.clone(), &mut basis) {
            basis.push(u);
        }
    }
    let span = basis.len();
    for k in 0..big_n {
        if basis.len() == big_n {
            break;
        }
        let mut e = CVector::zeros(big_n);
        e[k] = c(1.0);
        if let Some(u) = orthogonalize(e, &mut basis) {
            basis.push(u);
        }
    }
    basis.split_off(span)
}

/// Builds a unitary `M` with `M·x_i = y_i`.
///
/// The complement of the inputs is sent to the complement of the outputs,
/// the `k`-th Gram–Schmidt vector of one to the `k`-th of the other.
pub fn complete_unitary(inputs: &[CVector], outputs: &[CVector]) -> Result<ExtendedUnitary> {
    let n = inputs.len();
    if outputs.len() != n {
        return Err(Error::Dimension {
            field: "outputs".into(),
            expected: n,
            found: outputs.len(),
        });
    }
    let big_n = inputs.first().map_or(0, |v| v.len());
    for v in inputs.iter().chain(outputs) {
        if v.len() != big_n {
            return Err(Error::Dimension {
                field: "state length".into(),
                expected: big_n,
                found: v.len(),
            });
        }
    }
    let x = CMatrix::from_columns(inputs);
    let y = CMatrix::from_columns(outputs);
    let gx = x.adjoint() * &x;
    let deviation = max_abs_diff(&gx, &(y.adjoint() * &y));
    if deviation > EMBED_TOL {
        return Err(Error::InnerProductMismatch { deviation });
    }
    let a = complement(inputs, big_n);
    let s = complement(outputs, big_n);
    if a.len() + n != big_n || s.len() + n != big_n {
        return Err(Error::InnerProductMismatch { deviation: f64::NAN });
    }
    let mut matrix = CMatrix::zeros(big_n, big_n);
    if n > 0 {
        let chol = Cholesky::new(gx).ok_or(Error::DependentStates {
            rank: hermitian_rank(&(x.adjoint() * &x), 1e-10),
            n,
            min_singular: 0.0,
        })?;
        matrix += &y * chol.solve(&x.adjoint());
    }
    for (ak, sk) in a.iter().zip(&s) {
        matrix += sk * ak.adjoint();
    }
    if unitarity_defect(&matrix) > 1e-13 {
        matrix = polar(&matrix);
    }
    ExtendedUnitary::from_parts(matrix, inputs.to_vec(), outputs.to_vec())
}

/// Nearest unitary: `U V^H` from the SVD.
fn polar(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return m.clone();
    };
    u * v_t
}

/// Runs the embedding stage for a solved ensemble: failure vectors, output
/// states and the completed unitary.
pub fn synthesize(ensemble: &StateEnsemble, solution: &DiscriminationSolution) -> Result<ExtendedUnitary> {
    let c = solution.failure_matrix(&ensemble.gram());
    let phi = failure_vectors(&c, solution.rank)?;
    let outputs = assemble_output_states(solution, &phi)?;
    let big_n = ensemble.dimension() + phi.dimension();
    let inputs: Vec<CVector> = ensemble.states().iter().map(|v| pad(v, big_n)).collect();
    complete_unitary(&inputs, &outputs)
}
