//! Single-photon propagation through a multiport.
//!
//! A photon in mode `j` with amplitude `c_j` leaves the multiport with
//! amplitudes `d = M·c`, and an ideal detector on port `k` clicks with
//! probability `|d_k|^2`. Ports `1..=n` identify a state, the remaining
//! `m` ports are inconclusive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{pad, CMatrix, CVector};

/// Shots drawn per RNG substream.
pub const BATCH: u64 = 1 << 16;

/// Amplitudes over the modes of a multiport; may be sub-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState {
    amplitudes: CVector,
}

impl PhotonState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm_squared();
        if !norm.is_finite() || norm > 1.0 + 1e-12 {
            return Err(Error::Normalization {
                index: 0,
                norm: norm.sqrt(),
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn modes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// `d = M·c`.
pub fn propagate(m: &CMatrix, input: &PhotonState) -> Result<PhotonState> {
    if m.ncols() != input.modes() {
        return Err(Error::Dimension {
            field: "photon state".into(),
            expected: m.ncols(),
            found: input.modes(),
        });
    }
    Ok(PhotonState {
        amplitudes: m * input.amplitudes(),
    })
}

/// Detector statistics for each input state.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    per_input: Vec<Vec<f64>>,
    priors: Vec<f64>,
}

impl OutcomeDistribution {
    /// `per_input[i][k]` is the probability of a click on port `k + 1` given state `i + 1`.
    pub fn per_input(&self) -> &[Vec<f64>] {
        &self.per_input
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn states(&self) -> usize {
        self.per_input.len()
    }

    pub fn ports(&self) -> usize {
        self.per_input.first().map_or(0, Vec::len)
    }

    /// `p_i`: probability that state `i` is identified.
    pub fn identified(&self) -> Vec<f64> {
        self.per_input.iter().enumerate().map(|(i, row)| row[i]).collect()
    }

    /// `q_i`: probability of an inconclusive click for state `i`.
    pub fn inconclusive(&self) -> Vec<f64> {
        let n = self.states();
        self.per_input.iter().map(|row| row[n..].iter().sum()).collect()
    }

    /// Largest probability of naming the wrong state.
    pub fn error_probability(&self) -> f64 {
        let n = self.states();
        self.per_input
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row[..n].iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, p)| *p))
            .fold(0.0, f64::max)
    }

    pub fn success(&self) -> f64 {
        self.priors.iter().zip(self.identified()).map(|(eta, p)| eta * p).sum()
    }

    pub fn failure(&self) -> f64 {
        self.priors.iter().zip(self.inconclusive()).map(|(eta, q)| eta * q).sum()
    }
}

fn padded_inputs(m: &CMatrix, ensemble: &StateEnsemble) -> Result<Vec<CVector>> {
    let (big_n, n) = (m.nrows(), ensemble.dimension());
    if m.ncols() != big_n || n > big_n {
        return Err(Error::Dimension {
            field: "multiport".into(),
            expected: big_n.max(n),
            found: m.ncols(),
        });
    }
    Ok(ensemble.states().iter().map(|v| pad(v, big_n)).collect())
}

/// Exact click probabilities `|(M·ψ_i)_k|^2`.
pub fn outcome_distribution(m: &CMatrix, ensemble: &StateEnsemble) -> Result<OutcomeDistribution> {
    let per_input = padded_inputs(m, ensemble)?
        .iter()
        .map(|c| (m * c).iter().map(|z| z.norm_sqr()).collect())
        .collect();
    Ok(OutcomeDistribution {
        per_input,
        priors: ensemble.priors().to_vec(),
    })
}

/// Which state each shot prepares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputSelection {
    /// Drawn from the ensemble priors.
    #[default]
    Priors,
    /// Always state `i` (0-based).
    Forced(usize),
}

/// `counts[i][k]`: shots that prepared state `i + 1` and clicked port `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    pub shots: u64,
    pub seed: u64,
    pub counts: Vec<Vec<u64>>,
}

impl ShotCounts {
    fn empty(states: usize, ports: usize, seed: u64) -> Self {
        Self {
            shots: 0,
            seed,
            counts: vec![vec![0; ports]; states],
        }
    }

    /// Adds another tally of the same shape. Addition is associative and
    /// commutative, so batches can be merged in any order.
    pub fn merge(mut self, other: &Self) -> Self {
        self.shots += other.shots;
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(orow) {
                *a += b;
            }
        }
        self
    }

    /// Fraction of shots with an inconclusive click.
    pub fn failure_fraction(&self) -> f64 {
        let n = self.counts.len();
        let failed: u64 = self.counts.iter().map(|row| row[n..].iter().sum::<u64>()).sum();
        failed as f64 / self.shots as f64
    }

    pub fn success_fraction(&self) -> f64 {
        let hits: u64 = self.counts.iter().enumerate().map(|(i, row)| row[i]).sum();
        hits as f64 / self.shots as f64
    }
}

fn cdf(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, v| {
            *acc += v.max(0.0);
            Some(*acc)
        })
        .collect()
}

/// Index of the first bucket whose cumulative weight exceeds `u·total`,
/// never a bucket of zero weight.
fn draw(cdf: &[f64], weights: &[f64], u: f64) -> usize {
    let target = u * cdf.last().copied().unwrap_or(0.0);
    cdf.iter()
        .zip(weights)
        .position(|(c, w)| *c > target && *w > 0.0)
        .or_else(|| weights.iter().rposition(|w| *w > 0.0))
        .unwrap_or(0)
}

/// Samples `shots` single-photon experiments from an exact distribution.
///
/// Shots are split into batches of [`BATCH`]; batch `b` uses ChaCha8 seeded
/// with `seed` on stream `b`, so the counts do not depend on how batches are
/// spread over threads.
pub fn sample_distribution(dist: &OutcomeDistribution, shots: u64, seed: u64, input: InputSelection) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::InvalidParameters("shots must be at least 1".into()));
    }
    let (n, ports) = (dist.states(), dist.ports());
    if let InputSelection::Forced(i) = input {
        if i >= n {
            return Err(Error::PortOutOfRange { port: i + 1, ports: n });
        }
    }
    let prior_cdf = cdf(&dist.priors);
    let row_cdfs: Vec<Vec<f64>> = dist.per_input.iter().map(|r| cdf(r)).collect();
    let batches = shots.div_ceil(BATCH);
    let tally = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let size = BATCH.min(shots - b * BATCH);
            let mut local = ShotCounts::empty(n, ports, seed);
            local.shots = size;
            for _ in 0..size {
                let i = match input {
                    InputSelection::Priors => draw(&prior_cdf, &dist.priors, rng.random::<f64>()),
                    InputSelection::Forced(i) => i,
                };
                let k = draw(&row_cdfs[i], &dist.per_input[i], rng.random::<f64>());
                local.counts[i][k] += 1;
            }
            local
        })
        .reduce(|| ShotCounts::empty(n, ports, seed), |a, b| a.merge(&b));
    Ok(tally)
}

/// Exact distribution followed by [`sample_distribution`] with prior-drawn inputs.
pub fn sample_shots(m: &CMatrix, ensemble: &StateEnsemble, shots: u64, seed: u64) -> Result<ShotCounts> {
    sample_distribution(&outcome_distribution(m, ensemble)?, shots, seed, InputSelection::Priors)
}

/// A second multiport fed by some inconclusive ports of the first.
///
/// Stage-2 input `k` receives stage-1 port `failure_ports[k]`; stage-2
/// inputs beyond the wired ones see vacuum. Ports are numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadePlan {
    stage1: CMatrix,
    states: usize,
    failure_ports: Vec<usize>,
    stage2: CMatrix,
    labels: Vec<String>,
}

impl CascadePlan {
    /// `labels` name the stage-2 detectors; they default to `A`, `B`, `C`, …
    pub fn new(
        stage1: CMatrix,
        states: usize,
        failure_ports: Vec<usize>,
        stage2: CMatrix,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n1, n2) = (stage1.nrows(), stage2.nrows());
        if stage1.ncols() != n1 || stage2.ncols() != n2 {
            return Err(Error::Wiring("both stages must be square".into()));
        }
        if states > n1 {
            return Err(Error::Wiring(format!("{states} states do not fit a {n1}-port first stage")));
        }
        if failure_ports.len() > n2 {
            return Err(Error::Wiring(format!(
                "{} failure ports cannot feed a {n2}-port second stage",
                failure_ports.len()
            )));
        }
        for (k, &p) in failure_ports.iter().enumerate() {
            if p <= states || p > n1 {
                return Err(Error::Wiring(format!(
                    "port {p} is not an inconclusive port of the first stage (expected {}..={n1})",
                    states + 1
                )));
            }
            if failure_ports[..k].contains(&p) {
                return Err(Error::Wiring(format!("port {p} is wired twice")));
            }
        }
        let labels = match labels {
            Some(l) if l.len() != n2 => {
                return Err(Error::Wiring(format!("{} labels for {n2} second-stage ports", l.len())));
            }
            Some(l) => l,
            None => (0..n2).map(default_label).collect(),
        };
        Ok(Self {
            stage1,
            states,
            failure_ports,
            stage2,
            labels,
        })
    }

    pub fn failure_ports(&self) -> &[usize] {
        &self.failure_ports
    }

    /// Stage-1 ports that go straight to a detector, in port order.
    fn open_ports(&self) -> Vec<usize> {
        (1..=self.stage1.nrows()).filter(|p| !self.failure_ports.contains(p)).collect()
    }

    /// Outcome labels: open stage-1 ports by number, then stage-2 detectors.
    pub fn labels(&self) -> Vec<String> {
        self.open_ports()
            .iter()
            .map(|p| p.to_string())
            .chain(self.labels.iter().cloned())
            .collect()
    }

    /// The whole cascade as one unitary on `N1 + N2 - F` modes.
    ///
    /// Inputs are the stage-1 modes followed by the unwired stage-2 inputs;
    /// outputs are ordered as in [`Self::labels`].
    pub fn composed_unitary(&self) -> CMatrix {
        let (n1, n2, f) = (self.stage1.nrows(), self.stage2.nrows(), self.failure_ports.len());
        let total = n1 + n2 - f;
        let mut first = CMatrix::identity(total, total);
        first.view_mut((0, 0), (n1, n1)).copy_from(&self.stage1);
        // Route stage-1 outputs and the extra vacuum modes onto the output layout.
        let open = self.open_ports();
        let mut route = CMatrix::zeros(total, total);
        for (slot, &p) in open.iter().enumerate() {
            route[(slot, p - 1)] = crate::linalg::ONE;
        }
        let base = open.len();
        for (k, &p) in self.failure_ports.iter().enumerate() {
            route[(base + k, p - 1)] = crate::linalg::ONE;
        }
        for k in f..n2 {
            route[(base + k, n1 + k - f)] = crate::linalg::ONE;
        }
        let mut second = CMatrix::identity(total, total);
        second.view_mut((base, base), (n2, n2)).copy_from(&self.stage2);
        second * route * first
    }
}

fn default_label(k: usize) -> String {
    let mut k = k;
    let mut s = String::new();
    loop {
        s.insert(0, (b'A' + (k % 26) as u8) as char);
        if k < 26 {
            break;
        }
        k = k / 26 - 1;
    }
    s
}

/// Joint click probabilities over the open stage-1 ports and the stage-2 detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    labels: Vec<String>,
    per_input: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn per_input(&self) -> &[Vec<f64>] {
        &self.per_input
    }

    /// Probability of outcome `label` for state `i` (0-based).
    pub fn probability(&self, i: usize, label: &str) -> Option<f64> {
        let k = self.labels.iter().position(|l| l == label)?;
        self.per_input.get(i).map(|row| row[k])
    }
}

/// Feeds the unrenormalized stage-1 failure amplitudes into stage 2.
pub fn cascade_distribution(plan: &CascadePlan, ensemble: &StateEnsemble) -> Result<JointDistribution> {
    if ensemble.dimension() != plan.states {
        return Err(Error::Wiring(format!(
            "cascade built for {} states, ensemble has {}",
            plan.states,
            ensemble.dimension()
        )));
    }
    let open = plan.open_ports();
    let n2 = plan.stage2.nrows();
    let per_input = padded_inputs(&plan.stage1, ensemble)?
        .iter()
        .map(|c| {
            let d = &plan.stage1 * c;
            let mut x = CVector::zeros(n2);
            for (k, &p) in plan.failure_ports.iter().enumerate() {
                x[k] = d[p - 1];
            }
            let y = &plan.stage2 * x;
            open.iter()
                .map(|p| d[p - 1].norm_sqr())
                .chain(y.iter().map(|z| z.norm_sqr()))
                .collect()
        })
        .collect();
    Ok(JointDistribution {
        labels: plan.labels(),
        per_input,
    })
}

/// The same joint distribution computed through [`CascadePlan::composed_unitary`].
pub fn cascade_distribution_composed(plan: &CascadePlan, ensemble: &StateEnsemble) -> Result<JointDistribution> {
    let u = plan.composed_unitary();
    let dist = outcome_distribution(&u, ensemble)?;
    Ok(JointDistribution {
        labels: plan.labels(),
        per_input: dist.per_input,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use approx::assert_abs_diff_eq;

    fn basis(n: usize) -> StateEnsemble {
        let states: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        StateEnsemble::from_real(&states, None).unwrap()
    }

    #[test]
    fn identity_propagation() {
        let v = CVector::from_vec(vec![c(0.6), c(0.8)]);
        let out = propagate(&CMatrix::identity(2, 2), &PhotonState::new(v.clone()).unwrap()).unwrap();
        assert_eq!(out.amplitudes(), &v);
        assert!(propagate(&CMatrix::identity(3, 3), &PhotonState::new(v).unwrap()).is_err());
    }

    #[test]
    fn overnormalized_states_are_rejected() {
        assert!(PhotonState::new(CVector::from_vec(vec![c(1.0), c(0.1)])).is_err());
    }

    #[test]
    fn forced_input_on_identity_always_clicks_its_port() {
        let e = basis(3);
        let dist = outcome_distribution(&CMatrix::identity(3, 3), &e).unwrap();
        let counts = sample_distribution(&dist, 1000, 7, InputSelection::Forced(0)).unwrap();
        assert_eq!(counts.counts[0], vec![1000, 0, 0]);
        assert_eq!(counts.counts[1], vec![0, 0, 0]);
    }

    #[test]
    fn sampling_is_deterministic_across_batches() {
        let e = basis(2);
        let dist = outcome_distribution(&CMatrix::identity(2, 2), &e).unwrap();
        let shots = 3 * BATCH + 17;
        let a = sample_distribution(&dist, shots, 99, InputSelection::Priors).unwrap();
        let b = sample_distribution(&dist, shots, 99, InputSelection::Priors).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shots, shots);
        assert_eq!(a.counts.iter().flatten().sum::<u64>(), shots);
        let c = sample_distribution(&dist, shots, 100, InputSelection::Priors).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_shots_is_an_error() {
        let dist = outcome_distribution(&CMatrix::identity(2, 2), &basis(2)).unwrap();
        assert!(sample_distribution(&dist, 0, 1, InputSelection::Priors).is_err());
    }

    #[test]
    fn labels_continue_past_z() {
        assert_eq!(default_label(0), "A");
        assert_eq!(default_label(25), "Z");
        assert_eq!(default_label(26), "AA");
    }

    #[test]
    fn identity_second_stage_changes_nothing() {
        let e = basis(2);
        let stage1 = CMatrix::identity(3, 3);
        let plan = CascadePlan::new(stage1.clone(), 2, vec![3], CMatrix::identity(1, 1), None).unwrap();
        let joint = cascade_distribution(&plan, &e).unwrap();
        let plain = outcome_distribution(&stage1, &e).unwrap();
        assert_eq!(joint.labels(), ["1", "2", "A"]);
        assert_eq!(joint.per_input(), plain.per_input());
    }

    #[test]
    fn wiring_errors() {
        let s1 = CMatrix::identity(4, 4);
        assert!(CascadePlan::new(s1.clone(), 3, vec![2], CMatrix::identity(2, 2), None).is_err());
        assert!(CascadePlan::new(s1.clone(), 2, vec![3, 3], CMatrix::identity(2, 2), None).is_err());
        assert!(CascadePlan::new(s1.clone(), 2, vec![3, 4], CMatrix::identity(1, 1), None).is_err());
        assert!(CascadePlan::new(s1, 2, vec![3], CMatrix::identity(2, 2), Some(vec!["X".into()])).is_err());
    }

    #[test]
    fn rows_sum_to_one() {
        let h = 0.5f64.sqrt();
        let m = CMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)]);
        let dist = outcome_distribution(&m, &basis(2)).unwrap();
        for row in dist.per_input() {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        }
    }
}
