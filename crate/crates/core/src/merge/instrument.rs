use crate::entropy::entropy_of_spectrum;
use crate::error::{Error, Result};
use crate::qlin::linalg::{hermitian_eigenvalues, kron, row_major, CMatrix, CVector, ZERO};
use crate::qlin::norms::{hermitian_trace_distance, hs_norm};
use crate::qlin::random::haar_unitary;
use crate::qlin::{DensityOperator, PureState, SubsystemLayout, UhlmannTarget};
use crate::rng::LabRng;

/// Label of Alice's measured output register.
pub const A1: &str = "A1";
/// Label of Bob's half of the produced maximally entangled state.
pub const B1: &str = "B1";
/// Bob's copy of Alice's original system after decoding.
pub const B_PRIME: &str = "B'";

/// Probabilities below this are folded into the dropped mass.
pub const DROP_PROB: f64 = 1e-14;

/// Random measurement `P_j = Q_j U`: one Haar unitary followed by fixed rank-`L`
/// row blocks, plus a remainder block of rank `L' < L`.
#[derive(Clone, Debug)]
pub struct Instrument {
    unitary: CMatrix,
    l: usize,
    blocks: usize,
    remainder: usize,
}

impl Instrument {
    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn rank(&self) -> usize {
        self.l
    }

    /// `N`, the number of full-rank outcomes.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// `L'`, the rank of the remainder outcome (0 if there is none).
    pub fn remainder(&self) -> usize {
        self.remainder
    }

    pub fn outcome_count(&self) -> usize {
        self.blocks + usize::from(self.remainder > 0)
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `L x d` Kraus operator for outcome `j`; index `N` is the remainder, padded
    /// with zero rows.
    pub fn element(&self, j: usize) -> CMatrix {
        let d = self.dim();
        let start = j * self.l;
        let rows = if j < self.blocks { self.l } else { self.remainder };
        let mut p = CMatrix::from_element(self.l, d, ZERO);
        p.rows_mut(0, rows).copy_from(&self.unitary.rows(start, rows));
        p
    }

    pub fn elements(&self) -> Vec<CMatrix> {
        (0..self.outcome_count()).map(|j| self.element(j)).collect()
    }

    /// Largest entrywise deviation of `sum_j P_j^H P_j` from the identity.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        for p in self.elements() {
            sum += p.adjoint() * p;
        }
        (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn build_instrument(d_a: usize, l: usize, rng: &mut LabRng) -> Result<Instrument> {
    if l == 0 || l > d_a {
        return Err(Error::InvalidParameter(format!("need 1 <= L <= d_A, got L={l}, d_A={d_a}")));
    }
    let unitary = haar_unitary(d_a, rng)?;
    let blocks = d_a / l;
    Ok(Instrument { unitary, l, blocks, remainder: d_a - blocks * l })
}

/// Post-measurement state `|Psi^j>` on `A1` followed by the unmeasured labels.
#[derive(Clone, Debug)]
pub struct MergeOutcome {
    pub index: usize,
    pub probability: f64,
    pub state: PureState,
    pub is_remainder: bool,
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcomes: Vec<MergeOutcome>,
    /// Total probability of outcomes below the drop threshold.
    pub dropped_mass: f64,
}

impl Measurement {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum::<f64>() + self.dropped_mass
    }
}

/// Applies every instrument element to the `a_label` factor of `psi`.
pub fn post_measurement(psi: &PureState, a_label: &str, inst: &Instrument) -> Result<Measurement> {
    let (m, rows, cols) = psi.matrix_view(&[a_label])?;
    if rows.total_dim() != inst.dim() {
        return Err(Error::DimensionMismatch(format!(
            "instrument on dimension {} applied to {a_label} of dimension {}",
            inst.dim(),
            rows.total_dim()
        )));
    }
    let layout = SubsystemLayout::single(A1, inst.rank())?.concat(&cols)?;
    let mut outcomes = Vec::with_capacity(inst.outcome_count());
    let mut dropped_mass = 0.0;
    for j in 0..inst.outcome_count() {
        let out = inst.element(j) * &m;
        let v = CVector::from_vec(row_major(&out));
        let p = v.norm_squared();
        if p < DROP_PROB {
            dropped_mass += p;
            continue;
        }
        outcomes.push(MergeOutcome {
            index: j,
            probability: p,
            state: PureState::normalized(v, layout.clone())?,
            is_remainder: j >= inst.blocks(),
        });
    }
    Ok(Measurement { outcomes, dropped_mass })
}

/// `tau_{A1} (x) rho_R` with `tau = I / L`.
fn product_reference(l: usize, rho_r: &DensityOperator) -> CMatrix {
    kron(&(CMatrix::identity(l, l) / crate::qlin::linalg::c(l as f64, 0.0)), rho_r.matrix())
}

fn a1_r_marginal(outcome: &MergeOutcome, r_label: &str) -> Result<DensityOperator> {
    outcome.state.reduced(&[A1, r_label])
}

/// `Q_e = sum_j p_j || rho^j_{A1 R} - tau (x) rho_R ||_1`, remainder included.
///
/// Dropped outcomes are charged the maximal distance 2.
pub fn quantum_error(meas: &Measurement, l: usize, rho_r: &DensityOperator, r_label: &str) -> Result<f64> {
    let reference = product_reference(l, rho_r);
    let mut qe = 2.0 * meas.dropped_mass;
    for o in &meas.outcomes {
        let rho = a1_r_marginal(o, r_label)?;
        if rho.dim() != reference.nrows() {
            return Err(Error::DimensionMismatch(format!("{} vs reference of dimension {}", rho.layout(), reference.nrows())));
        }
        qe += o.probability * hermitian_trace_distance(rho.matrix(), &reference);
    }
    Ok(qe)
}

/// `sum_j p_j S(rho^j_{A1 R})`: entanglement between Bob and Alice plus reference
/// after decoding.
pub fn output_entanglement(meas: &Measurement, r_label: &str) -> Result<f64> {
    let mut e = 0.0;
    for o in &meas.outcomes {
        let rho = a1_r_marginal(o, r_label)?;
        e += o.probability * entropy_of_spectrum(&hermitian_eigenvalues(rho.matrix()));
    }
    Ok(e)
}

/// `2 sqrt(L d_R / D) + 2 L / d_A`.
pub fn qe_bound(l: usize, d_a: usize, d_r: usize, collision_dim: f64) -> f64 {
    2.0 * (l as f64 * d_r as f64 / collision_dim).sqrt() + 2.0 * l as f64 / d_a as f64
}

/// `Phi_L` on `A1 B1` tensored with `psi` whose Alice factor is renamed `B'`.
pub fn merge_target(psi: &PureState, a_label: &str, l: usize) -> Result<PureState> {
    let phi = PureState::maximally_entangled(A1, B1, l)?;
    phi.tensor(&psi.relabeled(a_label, B_PRIME)?)
}

/// Per-outcome fidelity after the optimal decoder on Bob's side.
///
/// `psi` is the pre-measurement state; Bob's factors are everything except Alice
/// and `r_label`.
pub fn decode_outcomes(meas: &Measurement, psi: &PureState, a_label: &str, r_label: &str, l: usize) -> Result<Vec<f64>> {
    let target = UhlmannTarget::new(&merge_target(psi, a_label, l)?, &[A1, r_label])?;
    meas.outcomes.iter().map(|o| target.decoded_fidelity(&o.state))
        .collect()
}

/// Outcome of the Monte Carlo test of the rank-`L` concentration bound.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RankLCheck {
    pub mc_mean: f64,
    pub stderr: f64,
    pub bound: f64,
    pub samples: usize,
    pub holds: bool,
}

/// Mean of `|| omega - (L/d) tau (x) rho_R ||_2^2` over Haar `P` against `L^2 / (d^2 D)`,
/// where `D = 1 / Tr rho_AR^2` (equal to the inverse purity of a purifying system).
pub fn rank_l_average_check(
    rho_ar: &DensityOperator,
    a_label: &str,
    l: usize,
    samples: usize,
    rng: &mut LabRng,
) -> Result<RankLCheck> {
    if samples < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 samples, got {samples}")));
    }
    let rest = rho_ar.layout().complement(&[a_label])?;
    let mut order = vec![a_label.to_string()];
    order.extend(rest.iter().cloned());
    let rho = rho_ar.permuted(&order)?;
    let d = rho.layout().dim_of(a_label)?;
    if l == 0 || l > d {
        return Err(Error::InvalidParameter(format!("need 1 <= L <= d_A, got L={l}, d_A={d}")));
    }
    let d_r = rho.dim() / d;
    let rho_r = if rest.is_empty() { None } else { Some(rho.partial_trace(&rest)?) };
    let rho_r_mat = rho_r.map(|r| r.matrix().clone()).unwrap_or_else(|| CMatrix::identity(1, 1));
    let scale = crate::qlin::linalg::c(1.0 / d as f64, 0.0);
    let reference = kron(&CMatrix::identity(l, l), &rho_r_mat) * scale;
    let id_r = CMatrix::identity(d_r, d_r);

    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_unitary(d, rng)?;
        let p = kron(&u.rows(0, l).into_owned(), &id_r);
        let omega = &p * rho.matrix() * p.adjoint();
        let h = hs_norm(&(omega - &reference));
        values.push(h * h);
    }
    let (mean, stderr) = mean_stderr(&values);
    let bound = (l * l) as f64 / (d * d) as f64 * rho.purity();
    Ok(RankLCheck { mc_mean: mean, stderr, bound, samples, holds: mean <= bound + 3.0 * stderr })
}

/// Sample mean and standard error (0 for fewer than two samples).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
