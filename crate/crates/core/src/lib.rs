//! Optimal unambiguous discrimination of linearly independent pure states,
//! and the single-photon linear-optical networks that perform it.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ensemble`]: states, priors and their Gram matrix.
//! 2. [`discrimination`]: the failure probabilities `q_i` that minimize the
//!    average failure while keeping `C = O - diag(1 - q)` positive
//!    semidefinite.
//! 3. [`embedding`] and [`reck`]: a unitary on `n + m` modes that maps each
//!    state to its identification port or to the `m` failure ports, and its
//!    factorization into couplers and phase shifters.
//! 4. [`photonics`]: exact and sampled detector statistics.
//!
//! ```
//! use unambig::prelude::*;
//!
//! let ensemble = StateEnsemble::from_real(&[vec![1.0, 0.0], vec![0.6, 0.8]], None)?;
//! let solution = solve(&ensemble.gram(), ensemble.priors(), SolverSelector::Auto)?;
//! assert!((solution.success - 0.4).abs() < 1e-12);
//!
//! let unitary = synthesize(&ensemble, &solution)?;
//! let plan = factorize(unitary.matrix(), FactorizeMode::FullSweep)?;
//! let dist = outcome_distribution(&reconstruct(&plan), &ensemble)?;
//! assert!(dist.error_probability() < 1e-12);
//! # Ok::<(), unambig::Error>(())
//! ```

pub mod discrimination;
pub mod document;
pub mod embedding;
pub mod ensemble;
mod error;
pub mod linalg;
pub mod photonics;
pub mod reck;

pub use error::{Error, Result};

/// The names most programs need.
pub mod prelude {
    pub use crate::discrimination::{
        boundary_project, failure_matrix, feasibility, solve, solve_numeric, solve_three_state,
        solve_three_state_two_overlap, solve_two_state, DiscriminationSolution, FailureAssignment, SolverMethod,
        SolverSelector,
    };
    pub use crate::embedding::{
        assemble_output_states, complete_unitary, failure_vectors, synthesize, ExtendedUnitary, FailureVectors,
    };
    pub use crate::ensemble::{check_independence, gram, parse_ensemble, GramMatrix, StateEnsemble};
    pub use crate::linalg::{CMatrix, CVector};
    pub use crate::photonics::{
        cascade_distribution, outcome_distribution, propagate, sample_shots, CascadePlan, OutcomeDistribution,
        PhotonState,
    };
    pub use crate::reck::{element_matrix, factorize, reconstruct, FactorizeMode, NetworkPlan, OpticalElement};
    pub use crate::{Error, Result};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/discrimination.md")]
    mod discrimination {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/reck.md")]
    mod reck {}
    #[doc = include_str!("../../../book/src/photonics.md")]
    mod photonics {}
}
