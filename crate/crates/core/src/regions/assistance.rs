use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::pure_marginal_entropy;
use crate::error::{Error, Result};
use crate::merge::{
    build_instrument, canonical_abr, mean_stderr, merge_frame, post_measurement, qe_bound, ALICE, BOB, DEFAULT_CAP,
    DROP_PROB, REFERENCE,
};
use crate::qlin::linalg::{hermitian_eigen, row_major, CMatrix, CVector};
use crate::qlin::norms::hermitian_trace_distance;
use crate::qlin::random::haar_unitary;
use crate::qlin::{DensityOperator, PureState};
use crate::rng::{substream, LabRng};
use crate::typ::TypicalProjector;

/// Cut values closer than this to the minimum are reported as near-ties.
pub const NEAR_TIE: f64 = 1e-6;

/// Purity below `1 - PURITY_TOL` counts as a mixed state.
pub const PURITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct CutValue {
    /// Helpers on `A`'s side.
    pub with_a: Vec<String>,
    /// `S(A T)`.
    pub s_a_side: f64,
    /// `S(B T-bar)`.
    pub s_b_side: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinCut {
    pub a: String,
    pub b: String,
    pub value: f64,
    /// Lexicographically smallest minimizing helper set on `A`'s side.
    pub cut: Vec<String>,
    /// All helper sets whose value is within `NEAR_TIE` of the minimum.
    pub near_ties: Vec<Vec<String>>,
    pub cuts: Vec<CutValue>,
}

fn helpers_of(psi: &PureState, a: &str, b: &str) -> Result<Vec<String>> {
    if a == b {
        return Err(Error::InvalidParameter("the two nodes must differ".into()));
    }
    psi.layout().positions(&[a, b])?;
    Ok(psi.layout().labels().into_iter().filter(|l| *l != a && *l != b).map(String::from).collect())
}

/// `min_T min{S(A T), S(B T-bar)}` over all splits of the helpers.
pub fn min_cut_assistance(psi: &PureState, a: &str, b: &str) -> Result<MinCut> {
    let helpers = helpers_of(psi, a, b)?;
    let h = helpers.len();
    if h > 20 {
        return Err(Error::InvalidParameter(format!("{h} helpers is too many cuts")));
    }
    let cuts: Vec<CutValue> = (0..1usize << h)
        .into_par_iter()
        .map(|mask| -> Result<CutValue> {
            let (mut side_a, mut side_b) = (vec![a.to_string()], vec![b.to_string()]);
            let mut with_a = Vec::new();
            for (i, l) in helpers.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    side_a.push(l.clone());
                    with_a.push(l.clone());
                } else {
                    side_b.push(l.clone());
                }
            }
            let s_a_side = pure_marginal_entropy(psi, &side_a)?;
            let s_b_side = pure_marginal_entropy(psi, &side_b)?;
            Ok(CutValue { with_a, s_a_side, s_b_side, value: s_a_side.min(s_b_side) })
        })
        .collect::<Result<_>>()?;
    let value = cuts.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let mut near_ties: Vec<Vec<String>> =
        cuts.iter().filter(|c| c.value - value <= NEAR_TIE).map(|c| c.with_a.clone()).collect();
    near_ties.sort();
    let cut = cuts
        .iter()
        .filter(|c| c.value - value <= 1e-12)
        .map(|c| c.with_a.clone())
        .min()
        .expect("at least one cut");
    Ok(MinCut { a: a.into(), b: b.into(), value, cut, near_ties, cuts })
}

/// As [`min_cut_assistance`] for a density operator, which must be pure.
pub fn min_cut_assistance_density(rho: &DensityOperator, a: &str, b: &str) -> Result<MinCut> {
    let purity = rho.purity();
    if purity < 1.0 - PURITY_TOL {
        return Err(Error::MixedState(purity));
    }
    let (_, vecs) = hermitian_eigen(rho.matrix());
    let top = vecs.column(vecs.ncols() - 1).into_owned();
    min_cut_assistance(&PureState::normalized(top, rho.layout().clone())?, a, b)
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Restrict to typical subspaces with this `delta` first.
    pub typical_delta: Option<f64>,
    pub cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { n: 1, trials: 20, seed: 0, typical_delta: None, cap: DEFAULT_CAP }
    }
}

fn check_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.n == 0 || cfg.trials == 0 {
        return Err(Error::InvalidParameter("n and trials must be at least 1".into()));
    }
    Ok(())
}

fn check_cap(dim: usize, n: usize, cap: usize) -> Result<usize> {
    let total = u32::try_from(n).ok().and_then(|k| dim.checked_pow(k)).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::CapExceeded { requested: total, cap });
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    /// Mean over bases of `sum_j p_j || rho^j_R - rho_R ||_1`.
    pub mc_mean_error: f64,
    pub stderr: f64,
    /// `2 sqrt(d_R / D) + 2 / d_A`.
    pub bound: f64,
    /// Mean within three standard errors of the bound.
    pub holds: bool,
    pub n: usize,
    pub d_a: usize,
    pub d_b: usize,
    pub d_r: usize,
    #[serde(rename = "D")]
    pub collision_dim: f64,
    /// `S(R) < S(B)` for one copy; the covering regime.
    pub regime_ok: bool,
    pub warning: Option<String>,
    pub per_trial: Vec<f64>,
}

/// Random rank-one basis measurement on Alice's (possibly truncated) `n`-copy
/// space, and how far it moves the reference marginal.
pub fn covering_experiment(psi: &PureState, cfg: &ExperimentConfig) -> Result<CoveringReport> {
    check_config(cfg)?;
    let psi = canonical_abr(psi)?;
    check_cap(psi.dim(), cfg.n, cfg.cap)?;
    let s_r = pure_marginal_entropy(&psi, &[REFERENCE])?;
    let s_b = pure_marginal_entropy(&psi, &[BOB])?;
    let regime_ok = s_r < s_b;
    let frame = match cfg.typical_delta {
        None => merge_frame(&psi, cfg.n, 1)?,
        Some(delta) => crate::typ::truncate(&psi, cfg.n, delta, cfg.cap)?.compressed().clone(),
    };
    let layout = frame.layout();
    let (d_a, d_b, d_r) = (layout.dim_of(ALICE)?, layout.dim_of(BOB)?, layout.dim_of(REFERENCE)?);
    let rho_r = frame.reduced(&[REFERENCE])?;
    let collision_dim = 1.0 / frame.reduced(&[BOB])?.purity();
    let per_trial: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = substream(cfg.seed, t as u64);
            let inst = build_instrument(d_a, 1, &mut rng)?;
            let meas = post_measurement(&frame, ALICE, &inst)?;
            let mut err = 2.0 * meas.dropped_mass;
            for o in &meas.outcomes {
                let rj = o.state.reduced(&[REFERENCE])?;
                err += o.probability * hermitian_trace_distance(rj.matrix(), rho_r.matrix());
            }
            Ok(err)
        })
        .collect::<Result<_>>()?;
    let (mc_mean_error, stderr) = mean_stderr(&per_trial);
    let bound = qe_bound(1, d_a, d_r, collision_dim);
    let warning = (!regime_ok).then(|| format!("S(R) = {s_r:.4} is not below S(B) = {s_b:.4}; the bound need not be small"));
    Ok(CoveringReport {
        mc_mean_error,
        stderr,
        bound,
        holds: mc_mean_error <= bound + 3.0 * stderr,
        n: cfg.n,
        d_a,
        d_b,
        d_r,
        collision_dim,
        regime_ok,
        warning,
        per_trial,
    })
}

/// `n` copies with every label's copies grouped under the original label.
fn grouped_power(psi: &PureState, n: usize) -> Result<PureState> {
    if n == 1 {
        return Ok(psi.clone());
    }
    let power = psi.tensor_power(n)?;
    let labels = psi.layout().labels();
    let groups: Vec<(&str, Vec<String>)> =
        labels.iter().map(|l| (*l, (1..=n).map(|k| format!("{l}_{k}")).collect())).collect();
    power.regroup(&groups)
}

/// Complete measurement of `label`: rows of `basis` are the measured vectors.
fn measure(branches: Vec<(f64, PureState)>, label: &str, basis: &CMatrix) -> Result<Vec<(f64, PureState)>> {
    let mut out = Vec::new();
    for (p, state) in branches {
        let (m, _, cols) = state.matrix_view(&[label])?;
        let post = basis * m;
        for j in 0..post.nrows() {
            let v = CVector::from_vec(row_major(&post.rows(j, 1).into_owned()));
            let q = v.norm_squared();
            if p * q < DROP_PROB {
                continue;
            }
            out.push((p * q, PureState::normalized(v, cols.clone())?));
        }
    }
    Ok(out)
}

/// Haar basis of the whole space, or one Haar basis inside the typical subspace of
/// the helper's marginal and one inside its complement.
fn helper_basis(
    psi: &PureState,
    label: &str,
    n: usize,
    delta: Option<f64>,
    rng: &mut LabRng,
) -> Result<CMatrix> {
    let d = psi.layout().dim_of(label)?;
    let dn = check_cap(d, n, usize::MAX)?;
    let Some(delta) = delta else {
        return haar_unitary(dn, rng);
    };
    let (vals, vecs) = hermitian_eigen(psi.reduced(&[label])?.matrix());
    let order: Vec<usize> = (0..d).rev().collect();
    let mut p: Vec<f64> = order.iter().map(|&k| vals[k].max(0.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let single = CMatrix::from_fn(d, d, |r, k| vecs[(r, order[k])]);
    let mut eig = CMatrix::identity(1, 1);
    for _ in 0..n {
        eig = eig.kronecker(&single);
    }
    let tp = TypicalProjector::new(&p, n, delta)?;
    let mut seq = vec![0usize; n];
    let (mut typical, mut rest) = (Vec::new(), Vec::new());
    for idx in 0..dn {
        let mut x = idx;
        for s in seq.iter_mut().rev() {
            *s = x % d;
            x /= d;
        }
        if tp.contains(&seq) {
            typical.push(idx);
        } else {
            rest.push(idx);
        }
    }
    let mut basis = CMatrix::zeros(dn, dn);
    let mut row = 0;
    for block in [&typical, &rest] {
        if block.is_empty() {
            continue;
        }
        let k = block.len();
        let h = haar_unitary(k, rng)?;
        let sub = CMatrix::from_fn(dn, k, |r, c| eig[(r, block[c])]);
        basis.rows_mut(row, k).copy_from(&(h * sub.adjoint()));
        row += k;
    }
    Ok(basis)
}

#[derive(Clone, Debug, Serialize)]
pub struct AssistanceReport {
    pub a: String,
    pub b: String,
    pub order: Vec<String>,
    pub n: usize,
    pub trials: usize,
    /// Outcome-averaged `S(A)` after all helpers measured, per copy.
    pub per_copy: f64,
    pub stderr: f64,
    /// Min-cut value of one copy.
    pub min_cut: f64,
    pub gap: f64,
    /// `per_copy <= min_cut + 3 stderr`.
    pub within_min_cut: bool,
    pub typical_delta: Option<f64>,
    pub per_trial: Vec<f64>,
}

/// Helpers by descending single-copy entropy, layout order among equals.
pub fn default_helper_order(psi: &PureState, a: &str, b: &str) -> Result<Vec<String>> {
    let helpers = helpers_of(psi, a, b)?;
    let mut scored = Vec::with_capacity(helpers.len());
    for (i, h) in helpers.into_iter().enumerate() {
        scored.push((pure_marginal_entropy(psi, &[&h])?, i, h));
    }
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    Ok(scored.into_iter().map(|(_, _, h)| h).collect())
}

fn run_assistance(
    psi: &PureState,
    a: &str,
    b: &str,
    order: &[String],
    cfg: &ExperimentConfig,
    simultaneous: bool,
) -> Result<AssistanceReport> {
    check_config(cfg)?;
    let helpers = helpers_of(psi, a, b)?;
    if order.len() != helpers.len() || !helpers.iter().all(|h| order.contains(h)) {
        return Err(Error::InvalidParameter(format!("order {order:?} is not a permutation of the helpers {helpers:?}")));
    }
    check_cap(psi.dim(), cfg.n, cfg.cap)?;
    let branches = order.iter().try_fold(1usize, |acc, h| -> Result<usize> {
        let d = check_cap(psi.layout().dim_of(h)?, cfg.n, usize::MAX)?;
        Ok(acc.saturating_mul(d))
    })?;
    if branches > cfg.cap {
        return Err(Error::CapExceeded { requested: branches, cap: cfg.cap });
    }
    let min_cut = min_cut_assistance(psi, a, b)?.value;
    let frame = grouped_power(psi, cfg.n)?;
    let n = cfg.n;
    let per_trial: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = substream(cfg.seed, t as u64);
            let bases = order
                .iter()
                .map(|h| helper_basis(psi, h, n, cfg.typical_delta, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let mut states = vec![(1.0, frame.clone())];
            if simultaneous && !order.is_empty() {
                let joint = bases.iter().skip(1).fold(bases[0].clone(), |acc, m| acc.kronecker(m));
                let mut groups = vec![("H", order.to_vec())];
                groups.extend([(a, vec![a.to_string()]), (b, vec![b.to_string()])]);
                let grouped = frame.regroup(&groups)?;
                states = measure(vec![(1.0, grouped)], "H", &joint)?;
            } else {
                for (h, basis) in order.iter().zip(&bases) {
                    states = measure(states, h, basis)?;
                }
            }
            let mut s = 0.0;
            let mut mass = 0.0;
            for (p, st) in &states {
                s += p * pure_marginal_entropy(st, &[a])?;
                mass += p;
            }
            Ok(s / mass / n as f64)
        })
        .collect::<Result<_>>()?;
    let (per_copy, stderr) = mean_stderr(&per_trial);
    Ok(AssistanceReport {
        a: a.into(),
        b: b.into(),
        order: order.to_vec(),
        n,
        trials: cfg.trials,
        per_copy,
        stderr,
        min_cut,
        gap: min_cut - per_copy,
        within_min_cut: per_copy <= min_cut + 3.0 * stderr,
        typical_delta: if simultaneous { None } else { cfg.typical_delta },
        per_trial,
    })
}

/// Helpers measure one after another in random bases (inside their typical
/// subspaces when `typical_delta` is set); decoding is left to the end and does
/// not change the `A:B` entropy.
pub fn assistance_protocol(
    psi: &PureState,
    a: &str,
    b: &str,
    order: Option<&[String]>,
    cfg: &ExperimentConfig,
) -> Result<AssistanceReport> {
    let order = match order {
        Some(o) => o.to_vec(),
        None => default_helper_order(psi, a, b)?,
    };
    run_assistance(psi, a, b, &order, cfg, false)
}

/// All helpers measure at once, each in its own Haar basis of the full `n`-copy
/// space. Reports data only.
pub fn simultaneous_assistance_experiment(
    psi: &PureState,
    a: &str,
    b: &str,
    cfg: &ExperimentConfig,
) -> Result<AssistanceReport> {
    let order = helpers_of(psi, a, b)?;
    let cfg = ExperimentConfig { typical_delta: None, ..cfg.clone() };
    run_assistance(psi, a, b, &order, &cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::random::random_pure_state;
    use crate::qlin::SubsystemLayout;
    use crate::rng::seeded;

    fn epr_pair() -> PureState {
        PureState::maximally_entangled("A", "C", 2)
            .unwrap()
            .tensor(&PureState::maximally_entangled("D", "B", 2).unwrap())
            .unwrap()
            .permuted(&["A", "B", "C", "D"])
            .unwrap()
    }

    #[test]
    fn ghz_min_cut_is_one() {
        let ghz = PureState::ghz(&["A", "B", "C"], 2).unwrap();
        let mc = min_cut_assistance(&ghz, "A", "B").unwrap();
        assert!((mc.value - 1.0).abs() < 1e-12);
        assert_eq!(mc.cut, Vec::<String>::new());
        assert_eq!(mc.near_ties.len(), 2);
    }

    #[test]
    fn product_min_cut_is_zero() {
        let zero = PureState::basis(SubsystemLayout::new([("A", 2), ("B", 2), ("C", 2), ("D", 2)]).unwrap(), 0).unwrap();
        assert!(min_cut_assistance(&zero, "A", "B").unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn disjoint_pairs_enumerate_all_cuts() {
        let psi = PureState::maximally_entangled("A", "B", 2)
            .unwrap()
            .tensor(&PureState::maximally_entangled("C", "D", 2).unwrap())
            .unwrap();
        let mc = min_cut_assistance(&psi, "A", "B").unwrap();
        assert!((mc.value - 1.0).abs() < 1e-9);
        assert_eq!(mc.cuts.len(), 4);
        // helpers entangled with one node only cannot help
        let mc = min_cut_assistance(&epr_pair(), "A", "B").unwrap();
        assert!(mc.value.abs() < 1e-9);
        assert_eq!(mc.cut, vec!["C".to_string()]);
    }

    #[test]
    fn cut_sides_agree_for_pure_states() {
        let mut rng = seeded(1);
        let lay = SubsystemLayout::new([("A", 2), ("B", 2), ("C", 2), ("D", 3)]).unwrap();
        for _ in 0..5 {
            let psi = random_pure_state(lay.clone(), &mut rng).unwrap();
            for c in min_cut_assistance(&psi, "A", "B").unwrap().cuts {
                assert!((c.s_a_side - c.s_b_side).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mixed_states_are_rejected() {
        let rho = DensityOperator::maximally_mixed(SubsystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap());
        assert!(matches!(min_cut_assistance_density(&rho, "A", "B"), Err(Error::MixedState(_))));
        let ghz = PureState::ghz(&["A", "B", "C"], 2).unwrap().density();
        assert!((min_cut_assistance_density(&ghz, "A", "B").unwrap().value - 1.0).abs() < 1e-9);
    }

    fn abr(a: usize, b: usize, r: usize) -> SubsystemLayout {
        SubsystemLayout::new([("A", a), ("B", b), ("R", r)]).unwrap()
    }

    #[test]
    fn covering_without_reference_is_exact() {
        let mut rng = seeded(2);
        let psi = random_pure_state(abr(3, 3, 1), &mut rng).unwrap();
        let rep = covering_experiment(&psi, &ExperimentConfig { trials: 5, ..Default::default() }).unwrap();
        assert!(rep.mc_mean_error.abs() < 1e-12);
    }

    #[test]
    fn covering_bound_on_random_states() {
        let mut rng = seeded(3);
        for s in 0..3 {
            let psi = random_pure_state(abr(8, 8, 2), &mut rng).unwrap();
            let rep = covering_experiment(&psi, &ExperimentConfig { trials: 30, seed: s, ..Default::default() }).unwrap();
            assert!(rep.holds, "{} > {}", rep.mc_mean_error, rep.bound);
            assert!(rep.regime_ok);
        }
    }

    #[test]
    fn covering_improves_with_copies() {
        let mut rng = seeded(4);
        let psi = random_pure_state(abr(4, 4, 2), &mut rng).unwrap();
        let one = covering_experiment(&psi, &ExperimentConfig { n: 1, trials: 40, ..Default::default() }).unwrap();
        let two = covering_experiment(&psi, &ExperimentConfig { n: 2, trials: 40, ..Default::default() }).unwrap();
        assert!(two.mc_mean_error < one.mc_mean_error);
    }

    #[test]
    fn ghz_assistance_approaches_min_cut() {
        let ghz = PureState::ghz(&["A", "B", "C"], 2).unwrap();
        let cfg = ExperimentConfig { n: 4, trials: 20, seed: 5, ..Default::default() };
        let rep = assistance_protocol(&ghz, "A", "B", None, &cfg).unwrap();
        assert!((rep.per_copy - 1.0).abs() < 0.15, "{}", rep.per_copy);
        assert!(rep.within_min_cut);
    }

    #[test]
    fn no_helpers_keeps_entanglement() {
        let mut rng = seeded(6);
        let psi = random_pure_state(SubsystemLayout::new([("A", 3), ("B", 3)]).unwrap(), &mut rng).unwrap();
        let rep = assistance_protocol(&psi, "A", "B", None, &ExperimentConfig { trials: 2, ..Default::default() })
            .unwrap();
        let s = pure_marginal_entropy(&psi, &["A"]).unwrap();
        assert!((rep.per_copy - s).abs() < 1e-12);
    }

    #[test]
    fn product_helpers_change_nothing() {
        let mut rng = seeded(7);
        let ab = random_pure_state(SubsystemLayout::new([("A", 2), ("B", 2)]).unwrap(), &mut rng).unwrap();
        let cd = random_pure_state(SubsystemLayout::new([("C", 2), ("D", 2)]).unwrap(), &mut rng).unwrap();
        let psi = ab.tensor(&cd).unwrap();
        let cfg = ExperimentConfig { n: 2, trials: 3, ..Default::default() };
        let s = pure_marginal_entropy(&ab, &["A"]).unwrap();
        let rep = assistance_protocol(&psi, "A", "B", None, &cfg).unwrap();
        assert!((rep.per_copy - s).abs() < 1e-9);
        let sim = simultaneous_assistance_experiment(&psi, "A", "B", &cfg).unwrap();
        assert!((sim.per_copy - s).abs() < 1e-9);
        assert!((sim.gap).abs() < 1e-9);
    }

    #[test]
    fn simultaneous_matches_sequential_without_truncation() {
        let ghz = PureState::ghz(&["A", "B", "C", "D"], 2).unwrap();
        let order = vec!["C".to_string(), "D".to_string()];
        let cfg = ExperimentConfig { n: 2, trials: 4, seed: 8, ..Default::default() };
        let seq = assistance_protocol(&ghz, "A", "B", Some(&order), &cfg).unwrap();
        let sim = simultaneous_assistance_experiment(&ghz, "A", "B", &cfg).unwrap();
        for (x, y) in seq.per_trial.iter().zip(&sim.per_trial) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn typical_restriction_gives_valid_measurement() {
        let mut rng = seeded(9);
        let psi = random_pure_state(SubsystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap(), &mut rng).unwrap();
        let basis = helper_basis(&psi, "C", 3, Some(0.2), &mut rng).unwrap();
        let defect = (basis.adjoint() * &basis - CMatrix::identity(8, 8)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(defect < 1e-12);
        let cfg = ExperimentConfig { n: 3, trials: 4, typical_delta: Some(0.2), ..Default::default() };
        let rep = assistance_protocol(&psi, "A", "B", None, &cfg).unwrap();
        assert!(rep.within_min_cut);
    }

    #[test]
    fn default_order_is_by_descending_entropy() {
        let c = PureState::maximally_entangled("C", "B", 2).unwrap();
        let psi = c
            .tensor(&PureState::basis(SubsystemLayout::new([("A", 2), ("D", 2)]).unwrap(), 0).unwrap())
            .unwrap();
        assert_eq!(default_helper_order(&psi, "A", "B").unwrap(), vec!["C".to_string(), "D".to_string()]);
    }
}
