//! Triangular beamsplitter meshes.
//!
//! A coupler on ports `(p, q)` acts on those two modes as
//!
//! ```text
//! [ e^{iφ} sin ω   e^{iφ} cos ω ]
//! [      cos ω        -sin ω    ]
//! ```
//!
//! and a phase element multiplies mode `p` by `e^{-iα}`. Plans list their
//! elements in the order light meets them, so the plan's matrix is
//! `E_K ··· E_2 E_1`. Ports are numbered from 1.
//!
//! [`factorize`] zeroes the upper triangle of a working matrix row by row,
//! right-multiplying by one coupler per entry. The full sweep does this on
//! `M` itself and finishes with output phases. The transpose shortcut works
//! on `M^T`, stops after the `n` rows that carry the input states, takes the
//! identity as the untouched `m × m` block, and conjugates the product.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_real, unitarity_defect, wrap_angle, CMatrix, ZERO};

/// Entries smaller than this need no coupler.
pub const SKIP_TOL: f64 = 1e-12;
/// A zeroed entry larger than this means the elimination broke down.
pub const ELIMINATION_TOL: f64 = 1e-9;
/// [`factorize`] refuses matrices further than this from unitary.
pub const INPUT_UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OpticalElement {
    Coupler { p: usize, q: usize, omega: f64, phi: f64 },
    Phase { p: usize, alpha: f64 },
}

impl OpticalElement {
    /// The 2×2 block of a coupler.
    pub fn coupler_block(omega: f64, phi: f64) -> [[Complex64; 2]; 2] {
        let e = Complex64::from_polar(1.0, phi);
        let (s, c) = omega.sin_cos();
        [[e * s, e * c], [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)]]
    }

    fn check(&self, ports: usize) -> Result<()> {
        let (p, q, angles) = match *self {
            Self::Coupler { p, q, omega, phi } => (p, Some(q), [omega, phi]),
            Self::Phase { p, alpha } => (p, None, [alpha, 0.0]),
        };
        for port in std::iter::once(p).chain(q) {
            if port == 0 || port > ports {
                return Err(Error::PortOutOfRange { port, ports });
            }
        }
        if let Some(q) = q {
            if p >= q {
                return Err(Error::Malformed(format!("coupler ports must satisfy p < q, got ({p}, {q})")));
            }
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Malformed("element angles must be finite".into()));
        }
        Ok(())
    }

    /// Left-multiplies `m` by this element in place.
    fn apply_left(&self, m: &mut CMatrix) {
        match *self {
            Self::Coupler { p, q, omega, phi } => {
                let b = Self::coupler_block(omega, phi);
                let (p, q) = (p - 1, q - 1);
                for j in 0..m.ncols() {
                    let (x, y) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = b[0][0] * x + b[0][1] * y;
                    m[(q, j)] = b[1][0] * x + b[1][1] * y;
                }
            }
            Self::Phase { p, alpha } => {
                let e = Complex64::from_polar(1.0, -alpha);
                m.row_mut(p - 1).iter_mut().for_each(|z| *z *= e);
            }
        }
    }

    /// Right-multiplies `m` by this element in place.
    fn apply_right(&self, m: &mut CMatrix) {
        match *self {
            Self::Coupler { p, q, omega, phi } => {
                let b = Self::coupler_block(omega, phi);
                let (p, q) = (p - 1, q - 1);
                for i in 0..m.nrows() {
                    let (x, y) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = x * b[0][0] + y * b[1][0];
                    m[(i, q)] = x * b[0][1] + y * b[1][1];
                }
            }
            Self::Phase { p, alpha } => {
                let e = Complex64::from_polar(1.0, -alpha);
                m.column_mut(p - 1).iter_mut().for_each(|z| *z *= e);
            }
        }
    }
}

/// The `N × N` matrix of a single element.
pub fn element_matrix(e: &OpticalElement, ports: usize) -> Result<CMatrix> {
    e.check(ports)?;
    let mut m = CMatrix::identity(ports, ports);
    e.apply_left(&mut m);
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FullSweep,
    TransposeShortcut,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkPlan {
    ports: usize,
    provenance: Provenance,
    elements: Vec<OpticalElement>,
}

impl NetworkPlan {
    pub fn new(ports: usize, provenance: Provenance, elements: Vec<OpticalElement>) -> Result<Self> {
        for e in &elements {
            e.check(ports)?;
        }
        Ok(Self { ports, provenance, elements })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Elements in propagation order.
    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn couplers(&self) -> impl Iterator<Item = &OpticalElement> {
        self.elements.iter().filter(|e| matches!(e, OpticalElement::Coupler { .. }))
    }

    pub fn phases(&self) -> impl Iterator<Item = &OpticalElement> {
        self.elements.iter().filter(|e| matches!(e, OpticalElement::Phase { .. }))
    }
}

/// `E_K ··· E_1`.
pub fn reconstruct(plan: &NetworkPlan) -> CMatrix {
    let mut m = CMatrix::identity(plan.ports, plan.ports);
    for e in &plan.elements {
        e.apply_left(&mut m);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorizeMode {
    FullSweep,
    /// Only the first `states` columns of `M` are realized exactly; the rest
    /// follow from taking the identity as the untouched block.
    TransposeShortcut { states: usize },
}

/// Coupler on `(p, q)` (0-based) that zeroes `w[(row, q)]` when applied on the right.
fn eliminating_coupler(w: &CMatrix, row: usize, p: usize, q: usize, real: bool) -> Option<OpticalElement> {
    let (a, b) = (w[(row, p)], w[(row, q)]);
    if b.norm() < SKIP_TOL {
        return None;
    }
    let (omega, phi) = if real {
        (wrap_angle(a.re.atan2(b.re)), 0.0)
    } else if a.norm() == 0.0 {
        (0.0, 0.0)
    } else {
        (a.norm().atan2(b.norm()), wrap_angle(b.arg() - a.arg()))
    };
    Some(OpticalElement::Coupler {
        p: p + 1,
        q: q + 1,
        omega,
        phi,
    })
}

/// Zeroes the strict upper triangle of rows `0..rows` of `w`, returning the
/// couplers in the order they were applied on the right.
fn eliminate(w: &mut CMatrix, rows: usize, real: bool) -> Result<Vec<OpticalElement>> {
    let n = w.nrows();
    let mut applied = Vec::new();
    for k in 0..rows {
        for q in k + 1..n {
            if let Some(t) = eliminating_coupler(w, k, k, q, real) {
                t.apply_right(w);
                applied.push(t);
            }
            let residual = w[(k, q)].norm();
            if residual > ELIMINATION_TOL {
                return Err(Error::Elimination { row: k + 1, col: q + 1, residual });
            }
            w[(k, q)] = ZERO;
        }
        for j in k + 1..n {
            let residual = w[(j, k)].norm();
            if residual > ELIMINATION_TOL {
                return Err(Error::Elimination { row: j + 1, col: k + 1, residual });
            }
            w[(j, k)] = ZERO;
        }
    }
    Ok(applied)
}

/// Phase element with `e^{-iα} = d`, or `None` when `d` is 1.
fn phase_for(p: usize, d: Complex64, real: bool) -> Option<OpticalElement> {
    let alpha = if real {
        if d.re >= 0.0 {
            0.0
        } else {
            std::f64::consts::PI
        }
    } else {
        wrap_angle(-d.arg())
    };
    (alpha.abs() > SKIP_TOL).then_some(OpticalElement::Phase { p: p + 1, alpha })
}

pub fn factorize(m: &CMatrix, mode: FactorizeMode) -> Result<NetworkPlan> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension {
            field: "matrix columns".into(),
            expected: n,
            found: m.ncols(),
        });
    }
    let deviation = unitarity_defect(m);
    if deviation > INPUT_UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let real = is_real(m, 1e-14);
    let mut w = if real { m.map(|z| Complex64::new(z.re, 0.0)) } else { m.clone() };
    match mode {
        FactorizeMode::FullSweep => {
            // M^H T_1 ··· T_L = D, so M = T_1 ··· T_L D^H.
            w.adjoint_mut();
            let applied = eliminate(&mut w, n.saturating_sub(1), real)?;
            let mut elements: Vec<OpticalElement> =
                (0..n).filter_map(|k| phase_for(k, w[(k, k)].conj(), real)).collect();
            elements.extend(applied.into_iter().rev());
            NetworkPlan::new(n, Provenance::FullSweep, elements)
        }
        FactorizeMode::TransposeShortcut { states } => {
            if states > n {
                return Err(Error::Dimension {
                    field: "states".into(),
                    expected: n,
                    found: states,
                });
            }
            // M^T T_1 ··· T_L = D' ⊕ W_m; with W_m := I this gives
            // M = conj(T_1 ··· T_L) D' on the first `states` columns.
            w.transpose_mut();
            let applied = eliminate(&mut w, states, real)?;
            let mut elements: Vec<OpticalElement> = (0..states)
                .filter_map(|k| phase_for(k, w[(k, k)], real))
                .collect();
            elements.extend(applied.iter().rev().map(|t| match *t {
                OpticalElement::Coupler { p, q, omega, phi } => OpticalElement::Coupler {
                    p,
                    q,
                    omega,
                    phi: if phi == 0.0 { 0.0 } else { wrap_angle(-phi) },
                },
                other => other,
            }));
            NetworkPlan::new(n, Provenance::TransposeShortcut, elements)
        }
    }
}

/// Text rendering of a plan: one line per port, one column per element in
/// propagation order, followed by the element parameters.
pub fn render_diagram(plan: &NetworkPlan) -> String {
    let n = plan.ports;
    let mut lines: Vec<String> = (1..=n).map(|p| format!("{p:>3} ──")).collect();
    for e in &plan.elements {
        for (i, line) in lines.iter_mut().enumerate() {
            let port = i + 1;
            let cell = match *e {
                OpticalElement::Coupler { p, q, .. } if port == p || port == q => "─X─",
                OpticalElement::Coupler { p, q, .. } if port > p && port < q => "─┼─",
                OpticalElement::Phase { p, .. } if port == p => "─P─",
                _ => "───",
            };
            line.push_str(cell);
        }
    }
    let mut out = String::new();
    let couplers = plan.couplers().count();
    let phases = plan.phases().count();
    let provenance = match plan.provenance {
        Provenance::FullSweep => "full-sweep",
        Provenance::TransposeShortcut => "transpose-shortcut",
        Provenance::External => "external",
    };
    let _ = writeln!(out, "{n}-port network ({provenance}): {couplers} couplers, {phases} phases");
    let _ = writeln!(out, "light travels left to right\n");
    for line in lines {
        let _ = writeln!(out, "{line}──");
    }
    if !plan.elements.is_empty() {
        out.push('\n');
    }
    for (k, e) in plan.elements.iter().enumerate() {
        let _ = match *e {
            OpticalElement::Coupler { p, q, omega, phi } => {
                writeln!(out, "{:>3}. T({p},{q})  omega = {omega:+.12}  phi = {phi:+.12}", k + 1)
            }
            OpticalElement::Phase { p, alpha } => writeln!(out, "{:>3}. P({p})    alpha = {alpha:+.12}", k + 1),
        };
    }
    out
}
