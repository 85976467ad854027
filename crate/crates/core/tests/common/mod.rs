//! Golden data and independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unambig::prelude::*;
use unambig::reck::Provenance;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, rows[0].len(), |i, j| c(rows[i][j]))
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn unitarity(m: &CMatrix) -> f64 {
    max_diff(&(m.adjoint() * m), &CMatrix::identity(m.nrows(), m.ncols()))
}

pub fn equal_priors(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

// ---------------------------------------------------------------- ensembles

/// Three states with every pairwise overlap equal to `s`.
pub fn case1(s: f64) -> StateEnsemble {
    let a = (1.0 - s).sqrt();
    let b = (1.0 + 2.0 * s).sqrt() / 3f64.sqrt();
    StateEnsemble::from_real(
        &[
            vec![(2.0f64 / 3.0).sqrt() * a, b, 0.0],
            vec![-a / 6f64.sqrt(), b, a / 2f64.sqrt()],
            vec![-a / 6f64.sqrt(), b, -a / 2f64.sqrt()],
        ],
        None,
    )
    .unwrap()
}

pub fn case2() -> StateEnsemble {
    let r = 1.0 / 3f64.sqrt();
    StateEnsemble::from_real(&[vec![1.0, 0.0, 0.0], vec![r, r, r], vec![r, r, -r]], None).unwrap()
}

pub fn case3() -> StateEnsemble {
    let t = 1.0 / 3.0;
    StateEnsemble::from_real(
        &[vec![1.0, 0.0, 0.0], vec![t, 2.0 * t, 2.0 * t], vec![t, 2.0 * t, -2.0 * t]],
        None,
    )
    .unwrap()
}

pub fn basis(n: usize) -> StateEnsemble {
    let states: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    StateEnsemble::from_real(&states, None).unwrap()
}

// ---------------------------------------------------------------- matrices

/// The four-port matrix for the equal-overlap family.
pub fn m4(s: f64) -> CMatrix {
    let d = 2.0 * s + 1.0;
    let a = ((1.0 - s) / (3.0 * d)).sqrt();
    let b = (s / d).sqrt();
    let r6 = 1.0 / 6f64.sqrt();
    let r2 = 1.0 / 2f64.sqrt();
    real_matrix(&[
        &[(2.0f64 / 3.0).sqrt(), a, 0.0, b],
        &[-r6, a, r2, b],
        &[-r6, a, -r2, b],
        &[0.0, (3.0 * s / d).sqrt(), 0.0, -((1.0 - s) / d).sqrt()],
    ])
}

fn coupler(p: usize, q: usize, omega: f64) -> OpticalElement {
    OpticalElement::Coupler { p, q, omega, phi: 0.0 }
}

/// `M(4) = T12 · T13 · T23 · T24`, listed in propagation order.
pub fn equal_overlap_plan(s: f64) -> NetworkPlan {
    let elements = vec![
        coupler(2, 4, ((3.0 * s).sqrt() / (1.0 + 2.0 * s).sqrt()).acos()),
        coupler(2, 3, -(-(2.0f64 / 5.0).sqrt()).acos()),
        coupler(1, 3, (-1.0 / 6f64.sqrt()).acos()),
        coupler(1, 2, (-1.0 / 5f64.sqrt()).acos()),
    ];
    NetworkPlan::new(4, Provenance::External, elements).unwrap()
}

pub fn sacrificed_state_matrix() -> CMatrix {
    let h = 0.5f64.sqrt();
    real_matrix(&[
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, h, h, 0.0],
        &[0.0, h, -h, 0.0],
        &[1.0, 0.0, 0.0, 0.0],
    ])
}

pub fn two_dimensional_failure_matrix() -> CMatrix {
    let r3 = 3f64.sqrt();
    let r7 = 7f64.sqrt();
    let r2 = 2f64.sqrt();
    let r6 = 6f64.sqrt();
    real_matrix(&[
        &[1.0 / r3, -1.0 / (2.0 * r3), 0.0, -(7.0f64 / 12.0).sqrt(), 0.0],
        &[0.0, r7 / 4.0, r7 / 4.0, -0.25, 0.25],
        &[0.0, r7 / 4.0, -r7 / 4.0, -0.25, -0.25],
        &[(2.0f64 / 3.0).sqrt(), 1.0 / (2.0 * r6), 0.0, (7.0f64 / 24.0).sqrt(), 0.0],
        &[0.0, 0.0, 1.0 / (2.0 * r2), 0.0, -(7.0f64 / 8.0).sqrt()],
    ])
}

/// `M = T14 · T23 · T24 · T35`, listed in propagation order.
pub fn two_dimensional_failure_plan() -> NetworkPlan {
    let k = 1.0 / (2.0 * 2f64.sqrt());
    let elements = vec![
        coupler(3, 5, k.acos()),
        coupler(2, 4, (-k).acos()),
        coupler(2, 3, std::f64::consts::FRAC_PI_4),
        coupler(1, 4, (2.0f64 / 3.0).sqrt().acos()),
    ];
    NetworkPlan::new(5, Provenance::External, elements).unwrap()
}

/// Second-stage network on the two failure ports of the case-3 multiport.
pub fn m3() -> CMatrix {
    let (r6, r2, r3) = (1.0 / 6f64.sqrt(), 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt());
    real_matrix(&[
        &[r6, r2, -r3],
        &[r6, -r2, -r3],
        &[(2.0f64 / 3.0).sqrt(), 0.0, r3],
    ])
}

// ---------------------------------------------------------------- random data

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box–Muller.
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Haar-like random unitary: modified Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

pub fn random_real_orthogonal(n: usize, rng: &mut impl Rng) -> CMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    CMatrix::from_fn(n, n, |i, j| c(cols[j][i]))
}

/// Random unit vectors; retried until comfortably independent.
pub fn random_ensemble(n: usize, complex: bool, rng: &mut impl Rng) -> StateEnsemble {
    loop {
        let states: Vec<CVector> = (0..n)
            .map(|_| {
                let v = CVector::from_fn(n, |_, _| {
                    Complex64::new(gaussian(rng), if complex { gaussian(rng) } else { 0.0 })
                });
                let norm = v.norm();
                v / c(norm)
            })
            .collect();
        if check_independence(&states).min_singular_value > 0.05 {
            return StateEnsemble::new(states, None).unwrap();
        }
    }
}

/// Random Hermitian PSD matrix of the given rank.
pub fn random_psd(n: usize, rank: usize, rng: &mut impl Rng) -> CMatrix {
    let a = CMatrix::from_fn(rank, n, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    a.adjoint() * a
}

// ---------------------------------------------------------------- oracles

/// Brute-force the two-state hyperbola on a `step` grid in `q1`.
pub fn hyperbola_oracle(overlap: f64, priors: [f64; 2], step: f64) -> f64 {
    let g2 = overlap * overlap;
    let mut best = f64::INFINITY;
    let mut q1 = g2;
    while q1 <= 1.0 + 1e-12 {
        let q2 = if q1 > 0.0 { g2 / q1 } else { 0.0 };
        if q2 <= 1.0 {
            best = best.min(priors[0] * q1 + priors[1] * q2);
        }
        q1 += step;
    }
    // The right end of the arc is always a candidate.
    best.min(priors[0] + priors[1] * g2)
}

/// Smallest eigenvalue of a real symmetric 3×3 matrix by the trigonometric
/// closed form.
pub fn sym3_min_eigenvalue(a: [[f64; 3]; 3]) -> f64 {
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let tr = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if off == 0.0 {
        return a[0][0].min(a[1][1]).min(a[2][2]);
    }
    let p2 = (a[0][0] - tr).powi(2) + (a[1][1] - tr).powi(2) + (a[2][2] - tr).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let mut b = a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - if i == j { tr } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    tr + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

/// Grid oracle for three states with real overlaps `[o12, o13, o23]` and
/// equal priors.
///
/// Each of the `points³` grid points is moved along `(1, 1, 1)` onto the
/// singular boundary and kept when it lies in the cube with
/// `|det C| < 1e-6` and non-negative principal minors. A second grid of the
/// same size is then laid over `±3` cells around the best first-level point.
pub fn three_state_grid_oracle(o: [f64; 3], points: usize) -> f64 {
    let level = |lo: [f64; 3], hi: [f64; 3]| -> (f64, [f64; 3]) {
        let mut best = (f64::INFINITY, [0.0; 3]);
        let axis = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (points - 1) as f64;
        for i in 0..points {
            let x = axis(0, i);
            for j in 0..points {
                let y = axis(1, j);
                for k in 0..points {
                    let z = axis(2, k);
                    let lambda = sym3_min_eigenvalue([[x, o[0], o[1]], [o[0], y, o[2]], [o[1], o[2], z]]);
                    let q = [x - lambda, y - lambda, z - lambda];
                    if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        continue;
                    }
                    let minors2 = [
                        q[0] * q[1] - o[0] * o[0],
                        q[0] * q[2] - o[1] * o[1],
                        q[1] * q[2] - o[2] * o[2],
                    ];
                    let det = q[0] * q[1] * q[2] + 2.0 * o[0] * o[1] * o[2]
                        - q[0] * o[2] * o[2]
                        - q[1] * o[1] * o[1]
                        - q[2] * o[0] * o[0];
                    if det.abs() >= 1e-6 || minors2.iter().any(|m| *m < -1e-12) {
                        continue;
                    }
                    let value = (q[0] + q[1] + q[2]) / 3.0;
                    if value < best.0 {
                        best = (value, [x, y, z]);
                    }
                }
            }
        }
        best
    };
    let (coarse, at) = level([0.0; 3], [1.0; 3]);
    if !coarse.is_finite() {
        return coarse;
    }
    let h = 3.0 / (points - 1) as f64;
    let lo = at.map(|v| (v - h).max(0.0));
    let hi = at.map(|v| (v + h).min(1.0));
    let (fine, _) = level(lo, hi);
    coarse.min(fine)
}

/// Real pairwise overlaps `[O12, O13, O23]`.
pub fn real_overlaps(e: &StateEnsemble) -> [f64; 3] {
    let g = e.gram();
    [g.get(0, 1).re, g.get(0, 2).re, g.get(1, 2).re]
}
