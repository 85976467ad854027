//! Optimal failure probabilities for unambiguous discrimination.
//!
//! For failure probabilities `q` the matrix `C(q) = O - diag(1 - q)` is the
//! Gram matrix of the failure states. A strategy exists iff `C(q)` is
//! positive semidefinite, and at the optimum it is also singular. Every solver
//! here returns a point on that boundary inside the unit cube.
//!
//! Because `C(q + t·1) = C(q) + t·I`, shifting every `q_i` by the same amount
//! shifts every eigenvalue by that amount. [`boundary_project`] uses this to
//! move any point onto the boundary in one step, and the numeric solver
//! searches over those projected points.

mod numeric;
mod three_state;
mod two_state;

pub use numeric::solve_numeric;
pub use three_state::{solve_three_state, solve_three_state_two_overlap};
pub use two_state::solve_two_state;

use serde::{Deserialize, Serialize};

use crate::ensemble::GramMatrix;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_rank, min_eigenvalue, CMatrix};

/// `C` is PSD when its smallest eigenvalue is at least `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;
/// A PSD `C` is singular when `|lambda_min| <= SINGULAR_TOL`.
pub const SINGULAR_TOL: f64 = 1e-9;
/// Relative eigenvalue cut used to count the failure-space dimension.
pub const RANK_REL_TOL: f64 = 1e-9;
/// Slack allowed on the unit cube before a coordinate is rejected. Values
/// inside the slack are clamped.
pub const CUBE_TOL: f64 = 1e-12;

/// Failure probabilities `q_i`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureAssignment(Vec<f64>);

impl FailureAssignment {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        let mut q = q;
        for (index, v) in q.iter_mut().enumerate() {
            if !v.is_finite() || *v < -CUBE_TOL || *v > 1.0 + CUBE_TOL {
                return Err(Error::InvalidAssignment { index, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self(q))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn q(&self) -> &[f64] {
        &self.0
    }

    /// `p_i = 1 - q_i`.
    pub fn success(&self) -> Vec<f64> {
        self.0.iter().map(|q| 1.0 - q).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `C_kj = O_kj - p_j δ_jk` together with its smallest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureMatrix {
    entries: CMatrix,
    min_eigenvalue: f64,
}

impl FailureMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of eigenvalues above `RANK_REL_TOL · lambda_max`.
    pub fn rank(&self) -> usize {
        hermitian_rank(&self.entries, RANK_REL_TOL)
    }

    /// Wraps an arbitrary Hermitian matrix, e.g. one read back from disk.
    pub fn from_entries(entries: CMatrix) -> Self {
        let min_eigenvalue = min_eigenvalue(&entries);
        Self { entries, min_eigenvalue }
    }
}

fn raw_failure_matrix(gram: &GramMatrix, q: &[f64]) -> CMatrix {
    let mut c = gram.entries().clone();
    for (i, qi) in q.iter().enumerate() {
        c[(i, i)] -= 1.0 - qi;
    }
    c
}

/// `C = O - diag(1 - q)`.
pub fn failure_matrix(gram: &GramMatrix, q: &FailureAssignment) -> Result<FailureMatrix> {
    if gram.dimension() != q.len() {
        return Err(Error::Dimension {
            field: "q".into(),
            expected: gram.dimension(),
            found: q.len(),
        });
    }
    Ok(FailureMatrix::from_entries(raw_failure_matrix(gram, q.q())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub psd: bool,
    pub singular: bool,
    pub min_eigenvalue: f64,
}

/// PSD and singularity flags of `C(q)` at the default tolerances.
pub fn feasibility(gram: &GramMatrix, q: &FailureAssignment) -> Result<Feasibility> {
    feasibility_with(gram, q, PSD_TOL)
}

pub fn feasibility_with(gram: &GramMatrix, q: &FailureAssignment, psd_tol: f64) -> Result<Feasibility> {
    let c = failure_matrix(gram, q)?;
    let lambda = c.min_eigenvalue();
    let psd = lambda >= -psd_tol;
    Ok(Feasibility {
        psd,
        singular: psd && lambda.abs() <= SINGULAR_TOL,
        min_eigenvalue: lambda,
    })
}

/// Moves `q` along the all-ones direction onto the PSD boundary.
///
/// Fails when the shifted point leaves the unit cube; the caller then has to
/// search the faces of the cube instead.
pub fn boundary_project(gram: &GramMatrix, q: &FailureAssignment) -> Result<FailureAssignment> {
    let c = failure_matrix(gram, q)?;
    let mut shift = -c.min_eigenvalue();
    let mut projected: Vec<f64> = q.q().iter().map(|v| v + shift).collect();
    // One correction step absorbs eigensolver rounding.
    let residual = min_eigenvalue(&raw_failure_matrix(gram, &projected));
    if residual != 0.0 {
        projected.iter_mut().for_each(|v| *v -= residual);
        shift -= residual;
    }
    for (index, &value) in projected.iter().enumerate() {
        if !(-CUBE_TOL..=1.0 + CUBE_TOL).contains(&value) {
            return Err(Error::ProjectionOutsideCube { index, value, shift });
        }
    }
    FailureAssignment::new(projected)
}

/// Which solver produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverMethod {
    #[serde(rename = "analytic-2")]
    Analytic2,
    #[serde(rename = "analytic-3")]
    Analytic3,
    #[serde(rename = "analytic-3-two-overlap")]
    Analytic3TwoOverlap,
    #[serde(rename = "numeric")]
    Numeric,
    /// Three-state optimum found on a face of the unit cube.
    #[serde(rename = "boundary")]
    Boundary,
}

/// An optimal (or best-found) discrimination strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationSolution {
    pub assignment: FailureAssignment,
    /// Average failure probability `Q = Σ η_i q_i`.
    pub failure: f64,
    /// `P = 1 - Q`.
    pub success: f64,
    /// Rank of `C` at the optimum: the failure-space dimension `m`.
    pub rank: usize,
    /// Common value of the 2×2 principal minors, three-state solvers only.
    pub delta: Option<f64>,
    pub method: SolverMethod,
    pub lambda_min: f64,
}

impl DiscriminationSolution {
    pub fn q(&self) -> &[f64] {
        self.assignment.q()
    }

    pub fn failure_matrix(&self, gram: &GramMatrix) -> FailureMatrix {
        FailureMatrix::from_entries(raw_failure_matrix(gram, self.q()))
    }
}

/// Checks a candidate and packages it. Rejects points that are off the cube
/// or off the PSD boundary.
pub(crate) fn finalize(
    gram: &GramMatrix,
    priors: &[f64],
    q: Vec<f64>,
    method: SolverMethod,
    delta: Option<f64>,
) -> Result<DiscriminationSolution> {
    let assignment = FailureAssignment::new(q)?;
    let c = failure_matrix(gram, &assignment)?;
    let lambda_min = c.min_eigenvalue();
    if !(-PSD_TOL..=SINGULAR_TOL).contains(&lambda_min) {
        return Err(Error::Infeasible(format!(
            "candidate q = {:?} is not on the PSD boundary (lambda_min = {lambda_min:e})",
            assignment.q()
        )));
    }
    let failure: f64 = priors.iter().zip(assignment.q()).map(|(eta, q)| eta * q).sum();
    Ok(DiscriminationSolution {
        rank: c.rank(),
        assignment,
        failure,
        success: 1.0 - failure,
        delta,
        method,
        lambda_min,
    })
}

pub(crate) fn check_priors(gram: &GramMatrix, priors: &[f64]) -> Result<()> {
    if priors.len() != gram.dimension() {
        return Err(Error::Dimension {
            field: "priors".into(),
            expected: gram.dimension(),
            found: priors.len(),
        });
    }
    let sum: f64 = priors.iter().sum();
    if priors.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidPriors(format!("{priors:?} is not a probability vector")));
    }
    Ok(())
}

/// Solver choice for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverSelector {
    /// Closed forms where they exist, the numeric search otherwise.
    #[default]
    Auto,
    /// Closed forms only; fails for ensembles without one.
    Analytic,
    Numeric,
}

/// Equal-prior tolerance used when routing three-state problems.
const EQUAL_PRIOR_TOL: f64 = 1e-12;

pub fn solve(gram: &GramMatrix, priors: &[f64], selector: SolverSelector) -> Result<DiscriminationSolution> {
    check_priors(gram, priors)?;
    let n = gram.dimension();
    let equal = priors.iter().all(|p| (p - priors[0]).abs() <= EQUAL_PRIOR_TOL);
    match (selector, n) {
        (SolverSelector::Numeric, _) => solve_numeric(gram, priors),
        (_, 2) => solve_two_state(gram, priors),
        (_, 3) if equal => solve_three_state(gram, priors),
        (SolverSelector::Analytic, _) => Err(Error::InvalidParameters(format!(
            "no closed-form solver for {n} states with these priors"
        ))),
        (SolverSelector::Auto, _) => solve_numeric(gram, priors),
    }
}
