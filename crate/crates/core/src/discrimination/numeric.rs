use nalgebra::Cholesky;
use rayon::prelude::*;

use super::{check_priors, finalize, DiscriminationSolution, SolverMethod, CUBE_TOL};
use crate::ensemble::GramMatrix;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix};

const PENALTY: f64 = 10.0;
const MIN_STARTS: usize = 8;
const ORTHOGONAL_TOL: f64 = 1e-12;
/// Exhaustive face enumeration is used up to this many states.
const ENUMERATE_UP_TO: usize = 4;
/// Coordinates this close to a face are pinned to it by the greedy search.
const PIN_TOL: f64 = 1e-7;

/// General solver: minimizes `Σ η_i q'_i` over boundary points
/// `q' = q + t(q)·1` with `t(q) = -λ_min(C(q))`.
///
/// The search space is `q = (z, 0)`, `z ∈ R^{n-1}`, since the uniform shift
/// already spans the remaining direction. Points whose projection leaves the
/// cube are penalized. The faces of the cube are handled by fixing
/// coordinates to 0 or 1 and solving the reduced problem on the rest: every
/// face for up to four states, a greedy descent onto violated faces beyond.
pub fn solve_numeric(gram: &GramMatrix, priors: &[f64]) -> Result<DiscriminationSolution> {
    check_priors(gram, priors)?;
    let n = gram.dimension();
    let mut best: Option<DiscriminationSolution> = None;
    let consider = |best: &mut Option<DiscriminationSolution>, q: Vec<f64>| {
        if let Ok(s) = finalize(gram, priors, q, SolverMethod::Numeric, None) {
            if best.as_ref().is_none_or(|b| s.failure < b.failure - 1e-12) {
                *best = Some(s);
            }
        }
    };

    if n <= ENUMERATE_UP_TO {
        for code in 0..3usize.pow(n as u32) {
            let mut fix = vec![Fix::Free; n];
            let mut c = code;
            for f in fix.iter_mut() {
                *f = [Fix::Free, Fix::Zero, Fix::One][c % 3];
                c /= 3;
            }
            if let Some(sub) = Subproblem::new(gram, priors, &fix) {
                if let Some(found) = sub.solve() {
                    if found.in_cube {
                        consider(&mut best, sub.expand(&found.q));
                    }
                }
            }
        }
    } else {
        let mut fix = vec![Fix::Free; n];
        for _ in 0..=n {
            let Some(sub) = Subproblem::new(gram, priors, &fix) else { break };
            let Some(found) = sub.solve() else { break };
            if found.in_cube {
                consider(&mut best, sub.expand(&found.q));
                break;
            }
            let mut changed = false;
            for (&i, &v) in sub.free.iter().zip(&found.q) {
                if v > 1.0 - PIN_TOL {
                    fix[i] = Fix::One;
                    changed = true;
                } else if v < PIN_TOL && row_is_orthogonal(gram, i) {
                    fix[i] = Fix::Zero;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // All-ones is always feasible (C = O is PD); its face is the last resort.
        if best.is_none() {
            for i in 0..n {
                let mut fix = vec![Fix::One; n];
                fix[i] = Fix::Free;
                if let Some(sub) = Subproblem::new(gram, priors, &fix) {
                    if let Some(found) = sub.solve().filter(|f| f.in_cube) {
                        consider(&mut best, sub.expand(&found.q));
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("numeric search found no boundary point in the unit cube".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    Zero,
    One,
}

fn row_is_orthogonal(gram: &GramMatrix, i: usize) -> bool {
    (0..gram.dimension()).all(|j| j == i || gram.get(i, j).norm() <= ORTHOGONAL_TOL)
}

/// The problem left on the free coordinates once the others are fixed.
///
/// With `q_F = 1`, the block `C_FF = O_FF` is positive definite, so `C ⪰ 0`
/// iff the Schur complement `K_SS + diag(q_S) - O_SF O_FF^{-1} O_FS ⪰ 0`.
/// With `q_Z = 0` the row of `C` must vanish, which needs orthogonality.
struct Subproblem {
    n: usize,
    free: Vec<usize>,
    ones: Vec<usize>,
    /// `K'` such that the reduced constraint is `K' + diag(q_S) ⪰ 0`.
    offset: CMatrix,
    weights: Vec<f64>,
}

struct Found {
    q: Vec<f64>,
    in_cube: bool,
}

impl Subproblem {
    fn new(gram: &GramMatrix, priors: &[f64], fix: &[Fix]) -> Option<Self> {
        let n = gram.dimension();
        let pick = |want: Fix| -> Vec<usize> { (0..n).filter(|&i| fix[i] == want).collect() };
        let (free, zeros, ones) = (pick(Fix::Free), pick(Fix::Zero), pick(Fix::One));
        if !zeros.iter().all(|&i| row_is_orthogonal(gram, i)) {
            return None;
        }
        let o = gram.entries();
        let mut offset = o.select_rows(&free).select_columns(&free);
        for d in 0..free.len() {
            offset[(d, d)] -= 1.0;
        }
        if !ones.is_empty() && !free.is_empty() {
            let off = o.select_rows(&free).select_columns(&ones);
            let chol = Cholesky::new(o.select_rows(&ones).select_columns(&ones))?;
            let solved = chol.solve(&off.adjoint());
            offset -= &off * solved;
        }
        let weights = free.iter().map(|&i| priors[i]).collect();
        Some(Self { n, free, ones, offset, weights })
    }

    fn expand(&self, q_free: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n];
        for &i in &self.ones {
            q[i] = 1.0;
        }
        for (&i, &v) in self.free.iter().zip(q_free) {
            q[i] = v;
        }
        q
    }

    /// Projects `(z, 0)` onto the boundary and scores it.
    fn evaluate(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let k = self.free.len();
        let mut m = self.offset.clone();
        for (d, zd) in z.iter().enumerate() {
            m[(d, d)] += *zd;
        }
        let t = -min_eigenvalue(&m);
        let q: Vec<f64> = (0..k).map(|d| z.get(d).copied().unwrap_or(0.0) + t).collect();
        let violation: f64 = q.iter().map(|v| (v - 1.0).max(0.0) + (-v).max(0.0)).sum();
        let cost: f64 = self.weights.iter().zip(&q).map(|(w, v)| w * v).sum();
        (cost + PENALTY * violation, q)
    }

    fn solve(&self) -> Option<Found> {
        let k = self.free.len();
        let q = match k {
            0 => Vec::new(),
            1 => vec![(-self.offset[(0, 0)].re).max(0.0)],
            _ => {
                let starts = multistarts(k - 1);
                let results: Vec<(Vec<f64>, f64)> = starts
                    .par_iter()
                    .map(|z0| minimize(|z| self.evaluate(z).0, z0))
                    .collect();
                let (z, _) = results
                    .into_iter()
                    .enumerate()
                    .min_by(|(i, a), (j, b)| a.1.total_cmp(&b.1).then(i.cmp(j)))
                    .map(|(_, r)| r)?;
                self.evaluate(&z).1
            }
        };
        let in_cube = q.iter().all(|v| (-CUBE_TOL..=1.0 + CUBE_TOL).contains(v));
        let q = if in_cube { q.iter().map(|v| v.clamp(0.0, 1.0)).collect() } else { q };
        Some(Found { q, in_cube })
    }
}

/// Origin, `±0.25` along each axis, then Halton points in `[-1, 1]^d`.
fn multistarts(d: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let mut starts = vec![vec![0.0; d]];
    for j in 0..d {
        for sign in [1.0, -1.0] {
            let mut z = vec![0.0; d];
            z[j] = 0.25 * sign;
            starts.push(z);
        }
    }
    let mut index = 1;
    while starts.len() < MIN_STARTS.max(2 * d + 1) {
        starts.push(
            (0..d)
                .map(|j| 2.0 * radical_inverse(index, PRIMES[j % PRIMES.len()]) - 1.0)
                .collect(),
        );
        index += 1;
    }
    starts
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Nelder–Mead with restarts from the incumbent until no further progress.
fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = 0.25;
    for _ in 0..12 {
        let (xn, fxn) = nelder_mead(&f, &x, step);
        let gained = fx - fxn;
        if fxn <= fx {
            x = xn;
            fx = fxn;
        }
        if gained <= 1e-15 * (1.0 + fx.abs()) {
            if step < 1e-6 {
                break;
            }
            step *= 0.1;
        }
    }
    (x, fx)
}

fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for j in 0..d {
        let mut x = x0.to_vec();
        x[j] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let point = |c: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(toward).map(|(a, b)| a + t * (b - a)).collect()
    };
    for _ in 0..400 * (d + 1) {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= 1e-16 * (1.0 + best.abs()) && diameter <= 1e-12 {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let xw = simplex[d].0.clone();
        let xr = point(&centroid, &xw, -1.0);
        let fr = f(&xr);
        if fr < best {
            let xe = point(&centroid, &xw, -2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = point(&centroid, &xr, 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &xw, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst) {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = point(&x0, &entry.0, 0.5);
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
