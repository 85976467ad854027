use super::{check_priors, finalize, DiscriminationSolution, SolverMethod};
use crate::ensemble::GramMatrix;
use crate::error::{Error, Result};

/// Two states with arbitrary priors.
///
/// The boundary is the hyperbola `q1 q2 = |O12|^2`; the weighted failure is
/// minimized at `q1 = |O12| sqrt(η2/η1)` unless that leaves the unit square,
/// in which case the nearer corner of the feasible arc wins.
pub fn solve_two_state(gram: &GramMatrix, priors: &[f64]) -> Result<DiscriminationSolution> {
    if gram.dimension() != 2 {
        return Err(Error::Dimension {
            field: "gram".into(),
            expected: 2,
            found: gram.dimension(),
        });
    }
    check_priors(gram, priors)?;
    let g2 = gram.get(0, 1).norm_sqr();
    let (x, y) = min_on_hyperbola(g2, priors[0], priors[1], 1.0, 1.0)
        .ok_or_else(|| Error::Infeasible(format!("|O12|^2 = {g2} exceeds 1")))?;
    finalize(gram, priors, vec![x, y], SolverMethod::Analytic2, None)
}

/// Minimizes `wx·x + wy·y` over `x·y = g2`, `0 <= x <= xmax`, `0 <= y <= ymax`.
pub(crate) fn min_on_hyperbola(g2: f64, wx: f64, wy: f64, xmax: f64, ymax: f64) -> Option<(f64, f64)> {
    if g2 <= 0.0 {
        return Some((0.0, 0.0));
    }
    if g2 > xmax * ymax * (1.0 + 1e-12) {
        return None;
    }
    let lo = g2 / ymax;
    let x = if wx > 0.0 {
        (g2 * wy / wx).sqrt()
    } else if wy > 0.0 {
        xmax
    } else {
        g2.sqrt()
    };
    let x = x.clamp(lo.min(xmax), xmax);
    Some((x, (g2 / x).min(ymax)))
}
