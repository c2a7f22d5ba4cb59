use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{entropy_of_spectrum, EntropyReport};
use crate::error::{Error, Result};
use crate::qlin::{PureState, SubsystemLayout};
use crate::rng::substream;

use super::instrument::{
    build_instrument, decode_outcomes, mean_stderr, output_entanglement, post_measurement, qe_bound, quantum_error,
};

/// Default limit on `(d_A d_B d_R)^n K^2`.
pub const DEFAULT_CAP: usize = 1 << 16;

/// Slack per copy in the entanglement ledger.
pub const LEDGER_SLACK_PER_COPY: f64 = 0.05;

/// Labels of the merged state: Alice, Bob and the reference.
pub const ALICE: &str = "A";
pub const BOB: &str = "B";
pub const REFERENCE: &str = "R";

#[derive(Clone, Debug)]
pub struct MergeConfig {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Restrict to the typical subspaces with this `delta` before merging.
    pub typical_delta: Option<f64>,
    pub cap: usize,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self { n: 1, l: 1, k: 1, trials: 1, seed: 0, typical_delta: None, cap: DEFAULT_CAP }
    }
}

/// Checks that `psi` has exactly the labels `A`, `B`, `R` and returns it in that order.
pub fn canonical_abr(psi: &PureState) -> Result<PureState> {
    let labels = psi.layout().labels();
    if labels.len() != 3 || ![ALICE, BOB, REFERENCE].iter().all(|l| labels.contains(l)) {
        return Err(Error::InvalidParameter(format!("merging needs a state on A, B, R; got {}", psi.layout())));
    }
    psi.permuted(&[ALICE, BOB, REFERENCE])
}

/// `n` copies of `psi` (plus `Phi_K` on `A0 B0` when `K > 1`) grouped into composite
/// `A`, `B`, `R` factors.
pub fn merge_frame(psi: &PureState, n: usize, k: usize) -> Result<PureState> {
    let psi = canonical_abr(psi)?;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let mut state = psi.tensor_power(n)?;
    let copies = |x: &str| (1..=n).map(|i| format!("{x}_{i}")).collect::<Vec<_>>();
    let (mut a, mut b, r) = (copies(ALICE), copies(BOB), copies(REFERENCE));
    if k > 1 {
        state = state.tensor(&PureState::maximally_entangled("A0", "B0", k)?)?;
        a.push("A0".into());
        b.push("B0".into());
    }
    state.regroup(&[(ALICE, a), (BOB, b), (REFERENCE, r)])
}

fn check_cap(psi: &PureState, n: usize, k: usize, cap: usize) -> Result<usize> {
    let d = psi.dim();
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| d.checked_pow(n))
        .and_then(|x| x.checked_mul(k))
        .and_then(|x| x.checked_mul(k))
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::CapExceeded { requested: total, cap });
    }
    Ok(total)
}

/// Per-trial measurements of one merging run.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub q_e: f64,
    pub fidelity: f64,
    pub e_out: f64,
    pub dropped_mass: f64,
    pub outcomes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MergeReport {
    pub q_e: f64,
    pub q_e_bound: f64,
    pub mean_fidelity: f64,
    pub ebits_in: f64,
    pub ebits_out: f64,
    pub cbits: f64,
    pub trials: usize,
    pub seed: u64,
    pub q_e_stderr: f64,
    pub fidelity_stderr: f64,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub d_a: usize,
    pub d_b: usize,
    pub d_r: usize,
    /// Inverse purity of Bob's merged-frame marginal.
    #[serde(rename = "D")]
    pub collision_dim: f64,
    pub typical_delta: Option<f64>,
    /// `S` of Bob's merged-frame marginal (`n S(B) + log K` without truncation).
    pub e_in: f64,
    pub per_trial: Vec<TrialRecord>,
}

impl MergeReport {
    /// `1 - F <= 2 sqrt(Q_e)` in every trial (with 1e-6 slack).
    pub fn fidelity_chain_holds(&self) -> bool {
        self.per_trial.iter().all(|t| 1.0 - t.fidelity <= 2.0 * t.q_e.sqrt() + 1e-6)
            && 1.0 - self.mean_fidelity <= 2.0 * self.q_e.sqrt() + 1e-6
    }

    /// Mean `Q_e` within three standard errors of the analytic bound.
    pub fn qe_bound_holds(&self) -> bool {
        self.q_e <= self.q_e_bound + 3.0 * self.q_e_stderr
    }

    pub fn e_out_max(&self) -> f64 {
        self.per_trial.iter().map(|t| t.e_out).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Simulates random-measurement merging of `n` copies of `psi` over `trials`
/// independent instruments.
pub fn run_merging(psi: &PureState, cfg: &MergeConfig) -> Result<MergeReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let psi = canonical_abr(psi)?;
    check_cap(&psi, cfg.n, cfg.k, cfg.cap)?;
    let frame = match cfg.typical_delta {
        None => merge_frame(&psi, cfg.n, cfg.k)?,
        Some(delta) => {
            let ts = crate::typ::truncate(&psi, cfg.n, delta, cfg.cap)?;
            merge_frame(ts.compressed(), 1, cfg.k)?
        }
    };
    let layout = frame.layout().clone();
    let (d_a, d_b, d_r) = (layout.dim_of(ALICE)?, layout.dim_of(BOB)?, layout.dim_of(REFERENCE)?);
    if cfg.l == 0 || cfg.l > d_a {
        return Err(Error::InvalidParameter(format!("need 1 <= L <= d_A = {d_a}, got L = {}", cfg.l)));
    }
    let rho_b = frame.reduced(&[BOB])?;
    let rho_r = frame.reduced(&[REFERENCE])?;
    let collision_dim = 1.0 / rho_b.purity();
    let e_in = entropy_of_spectrum(&rho_b.eigenvalues());

    let per_trial: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialRecord> {
            let mut rng = substream(cfg.seed, t as u64);
            let inst = build_instrument(d_a, cfg.l, &mut rng)?;
            let meas = post_measurement(&frame, ALICE, &inst)?;
            let q_e = quantum_error(&meas, cfg.l, &rho_r, REFERENCE)?;
            let fids = decode_outcomes(&meas, &frame, ALICE, REFERENCE, cfg.l)?;
            let fidelity = meas.outcomes.iter().zip(&fids).map(|(o, f)| o.probability * f).sum();
            let e_out = output_entanglement(&meas, REFERENCE)?;
            Ok(TrialRecord { q_e, fidelity, e_out, dropped_mass: meas.dropped_mass, outcomes: meas.outcomes.len() })
        })
        .collect::<Result<_>>()?;

    let qes: Vec<f64> = per_trial.iter().map(|t| t.q_e).collect();
    let fids: Vec<f64> = per_trial.iter().map(|t| t.fidelity).collect();
    let (q_e, q_e_stderr) = mean_stderr(&qes);
    let (mean_fidelity, fidelity_stderr) = mean_stderr(&fids);
    let blocks = d_a / cfg.l;
    Ok(MergeReport {
        q_e,
        q_e_bound: qe_bound(cfg.l, d_a, d_r, collision_dim),
        mean_fidelity,
        ebits_in: (cfg.k as f64).log2(),
        ebits_out: (cfg.l as f64).log2(),
        cbits: ((blocks + 1) as f64).log2(),
        trials: cfg.trials,
        seed: cfg.seed,
        q_e_stderr,
        fidelity_stderr,
        n: cfg.n,
        l: cfg.l,
        k: cfg.k,
        d_a,
        d_b,
        d_r,
        collision_dim,
        typical_delta: cfg.typical_delta,
        e_in,
        per_trial,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerCheck {
    /// `n S(B) + log K`.
    pub e_in: f64,
    pub e_out_max: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `E_out <= n S(B) + log K + 0.05 n` for every trial of the report.
pub fn entanglement_ledger_check(report: &MergeReport, psi: &PureState, n: usize) -> Result<LedgerCheck> {
    let psi = canonical_abr(psi)?;
    let s_b = EntropyReport::of_pure(&psi)?.entropy(&[BOB])?;
    let e_in = n as f64 * s_b + report.ebits_in;
    let slack = LEDGER_SLACK_PER_COPY * n as f64;
    let e_out_max = report.e_out_max();
    Ok(LedgerCheck { e_in, e_out_max, slack, holds: report.per_trial.iter().all(|t| t.e_out <= e_in + slack) })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalCost {
    pub cbits_rate: f64,
    /// `I(A:R)` of one copy.
    pub iar: f64,
    pub gap: f64,
    pub note: &'static str,
}

/// Compares the bits sent per copy with `I(A:R)`; the optimal rate is only
/// reached asymptotically, so nothing is asserted.
pub fn classical_cost_check(report: &MergeReport, psi: &PureState) -> Result<ClassicalCost> {
    let psi = canonical_abr(psi)?;
    let iar = EntropyReport::of_pure(&psi)?.mutual(&[ALICE], &[REFERENCE])?;
    let cbits_rate = report.cbits / report.n as f64;
    Ok(ClassicalCost { cbits_rate, iar, gap: cbits_rate - iar, note: "asymptotic optimality; gap reported only" })
}

/// `|0>` on a one-dimensional reference, for states without one.
pub fn trivial_reference() -> PureState {
    PureState::basis(SubsystemLayout::single(REFERENCE, 1).expect("valid layout"), 0).expect("valid basis state")
}
