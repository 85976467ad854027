use super::two_state::min_on_hyperbola;
use super::{check_priors, finalize, DiscriminationSolution, SolverMethod, CUBE_TOL};
use crate::ensemble::GramMatrix;
use crate::error::{Error, Result};

const GRID: usize = 4096;
const ZERO_RESIDUAL: f64 = 1e-14;
const TANGENT_RESIDUAL: f64 = 1e-12;
const DELTA_TOL: f64 = 1e-13;
const TIE_TOL: f64 = 1e-10;

/// Three states with equal priors.
///
/// Interior candidates come from the stationarity family
/// `q_i q_j - |O_ij|^2 = δ` for all pairs, with `δ` a root of `det C` in
/// `[0, 1]`. Candidates on the faces of the unit cube are solved in closed
/// form as well, and the smallest feasible failure probability wins. Unequal
/// priors are handed to [`super::solve_numeric`].
pub fn solve_three_state(gram: &GramMatrix, priors: &[f64]) -> Result<DiscriminationSolution> {
    if gram.dimension() != 3 {
        return Err(Error::Dimension {
            field: "gram".into(),
            expected: 3,
            found: gram.dimension(),
        });
    }
    check_priors(gram, priors)?;
    if priors.iter().any(|p| (p - priors[0]).abs() > 1e-12) {
        return super::solve_numeric(gram, priors);
    }

    let mut best: Option<(DiscriminationSolution, u8)> = None;
    let mut offer = |s: DiscriminationSolution, rank: u8| {
        let better = match &best {
            None => true,
            Some((b, brank)) => {
                if s.failure < b.failure - TIE_TOL {
                    true
                } else if s.failure > b.failure + TIE_TOL {
                    false
                } else {
                    (rank, s.delta.unwrap_or(f64::INFINITY))
                        < (*brank, b.delta.unwrap_or(f64::INFINITY))
                }
            }
        };
        if better {
            best = Some((s, rank));
        }
    };

    for (delta, q) in stationary_points(gram) {
        if let Some(q) = into_cube(&q) {
            if let Ok(s) = finalize(gram, priors, q.to_vec(), SolverMethod::Analytic3, Some(delta)) {
                offer(s, 0);
            }
        }
    }
    for q in face_candidates(gram) {
        if let Ok(s) = finalize(gram, priors, q.to_vec(), SolverMethod::Boundary, None) {
            offer(s, 1);
        }
    }
    match best {
        Some((s, _)) => Ok(s),
        None => super::solve_numeric(gram, priors),
    }
}

fn squared_overlaps(gram: &GramMatrix) -> [f64; 3] {
    [
        gram.get(0, 1).norm_sqr(),
        gram.get(0, 2).norm_sqr(),
        gram.get(1, 2).norm_sqr(),
    ]
}

/// `q(δ)` on the stationarity family.
pub(crate) fn family_point(overlaps: [f64; 3], delta: f64) -> [f64; 3] {
    let [a, b, c] = overlaps.map(|v| v + delta);
    [(a * b / c).sqrt(), (a * c / b).sqrt(), (b * c / a).sqrt()]
}

/// `det C` along the family.
fn family_determinant(gram: &GramMatrix, overlaps: [f64; 3], delta: f64) -> f64 {
    let [q1, q2, q3] = family_point(overlaps, delta);
    let [a, b, c] = overlaps;
    let cyclic = (gram.get(0, 1) * gram.get(1, 2) * gram.get(0, 2).conj()).re;
    q1 * q2 * q3 - q1 * c - q2 * b - q3 * a + 2.0 * cyclic
}

/// All roots of `det C(q(δ))` on `[0, 1]`, with their `q`.
fn stationary_points(gram: &GramMatrix) -> Vec<(f64, [f64; 3])> {
    let overlaps = squared_overlaps(gram);
    let f = |d: f64| family_determinant(gram, overlaps, d);
    let grid: Vec<(f64, f64)> = (0..=GRID)
        .map(|k| {
            let d = k as f64 / GRID as f64;
            (d, f(d))
        })
        .collect();

    let mut roots: Vec<f64> = Vec::new();
    for (k, &(d, v)) in grid.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        if v.abs() <= ZERO_RESIDUAL {
            roots.push(d);
            continue;
        }
        if let Some(&(dn, vn)) = grid.get(k + 1) {
            if vn.is_finite() && vn.abs() > ZERO_RESIDUAL && v.signum() != vn.signum() {
                roots.push(bisect(&f, d, dn, v));
            }
        }
        // A tangential root shows up as a local minimum of |f| without a sign change.
        if k > 0 && k < GRID {
            let (dp, vp) = grid[k - 1];
            let (dn, vn) = grid[k + 1];
            if vp.is_finite()
                && vn.is_finite()
                && vp.signum() == v.signum()
                && vn.signum() == v.signum()
                && v.abs() < vp.abs()
                && v.abs() < vn.abs()
            {
                let d0 = golden_min(|x| f(x).abs(), dp, dn);
                if f(d0).abs() <= TANGENT_RESIDUAL {
                    roots.push(d0);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    roots
        .into_iter()
        .map(|d| (d, family_point(overlaps, d)))
        .filter(|(_, q)| q.iter().all(|v| v.is_finite()))
        .collect()
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let slo = flo.signum();
    while hi - lo > DELTA_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > DELTA_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn into_cube(q: &[f64; 3]) -> Option<[f64; 3]> {
    q.iter()
        .all(|v| (-CUBE_TOL..=1.0 + CUBE_TOL).contains(v))
        .then(|| q.map(|v| v.clamp(0.0, 1.0)))
}

/// Optima restricted to each face `q_i = 1` and `q_i = 0` of the cube.
fn face_candidates(gram: &GramMatrix) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 0..3 {
        let (j, k) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let oij = gram.get(i, j);
        let oik = gram.get(i, k);
        // q_i = 1: the Schur complement of C_ii = 1 leaves a two-state problem
        // in x = q_j - |O_ij|^2, y = q_k - |O_ik|^2.
        let g2 = (gram.get(j, k) - oij.conj() * oik).norm_sqr();
        let (xmax, ymax) = (1.0 - oij.norm_sqr(), 1.0 - oik.norm_sqr());
        if let Some((x, y)) = min_on_hyperbola(g2, 1.0, 1.0, xmax, ymax) {
            let mut q = [0.0; 3];
            q[i] = 1.0;
            q[j] = x + oij.norm_sqr();
            q[k] = y + oik.norm_sqr();
            out.push(q);
        }
        // q_i = 0 forces row i of C to vanish.
        if oij.norm() <= CUBE_TOL && oik.norm() <= CUBE_TOL {
            if let Some((x, y)) = min_on_hyperbola(gram.get(j, k).norm_sqr(), 1.0, 1.0, 1.0, 1.0) {
                let mut q = [0.0; 3];
                q[j] = x;
                q[k] = y;
                out.push(q);
            }
        }
    }
    out
}

/// Closed form for real overlaps `O12 = O13 = s1`, `O23 = s2`.
///
/// For `β = s1/s2 < 2` the optimum is the rank-one point
/// `(s1²/s2, s2, s2)`; from `β >= 2` on it is `(2 s1, s1 - s2, s1 - s2)` with
/// `δ = s1² - 2 s1 s2`.
pub fn solve_three_state_two_overlap(s1: f64, s2: f64) -> Result<DiscriminationSolution> {
    if !(s1.is_finite() && s2.is_finite()) || !(0.0..1.0).contains(&s1) || !(0.0..1.0).contains(&s2) {
        return Err(Error::InvalidParameters(format!("need 0 <= s1, s2 < 1, got s1 = {s1}, s2 = {s2}")));
    }
    if s2 < 2.0 * s1 * s1 - 1.0 - 1e-12 {
        return Err(Error::InvalidParameters(format!(
            "s1 = {s1}, s2 = {s2} do not describe a valid Gram matrix"
        )));
    }
    let (q, delta) = if s1 == 0.0 && s2 == 0.0 {
        ([0.0; 3], 0.0)
    } else if s2 == 0.0 {
        return Err(Error::InvalidParameters(
            "s2 = 0 with s1 > 0 has no closed form here; use the numeric solver".into(),
        ));
    } else if s1 / s2 < 2.0 {
        ([s1 * s1 / s2, s2, s2], 0.0)
    } else {
        ([2.0 * s1, s1 - s2, s1 - s2], s1 * s1 - 2.0 * s1 * s2)
    };
    if q.iter().any(|v| *v > 1.0 + CUBE_TOL) {
        return Err(Error::InvalidParameters(format!(
            "closed form leaves the unit cube at s1 = {s1}, s2 = {s2}: q = {q:?}"
        )));
    }
    let gram = GramMatrix::from_real_overlaps(3, &[s1, s1, s2])?;
    finalize(
        &gram,
        &[1.0 / 3.0; 3],
        q.to_vec(),
        SolverMethod::Analytic3TwoOverlap,
        Some(delta),
    )
}
