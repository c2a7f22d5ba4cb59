//! Seeded invariant suites behind `selftest`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{
    chain_rule_check, fannes_check, gentle_measurement_check, strong_subadditivity_check, CHECK_TOL,
};
use crate::error::Result;
use crate::merge::{
    rank_l_average_check, max_entry_gap, run_merging, trivial_reference, twirl_analytic, twirl_monte_carlo,
    MergeConfig,
};
use crate::qlin::linalg::{c, CMatrix};
use crate::qlin::norms::{hermitian_trace_distance, norm_dim_inequality};
use crate::qlin::random::{haar_unitary, random_density, random_pure_state};
use crate::qlin::{fuchs_van_de_graaf_check, DensityOperator, PureState, SubsystemLayout};
use crate::regions::{
    assistance_protocol, distributed_compression_region, mac_rates, min_cut_assistance, ExperimentConfig,
};
use crate::rng::{substream, LabRng};
use crate::typ::typical_projector;

/// Instances per inequality suite.
pub const SUITE_INSTANCES: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    /// Instances that returned an error instead of a verdict.
    pub errors: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestSummary {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

/// Runs `check` on `instances` independent streams; the suite index keeps streams
/// of different suites apart.
fn run_suite<F>(name: &str, suite: u64, seed: u64, instances: usize, check: F) -> SuiteResult
where
    F: Fn(&mut LabRng) -> Result<bool> + Sync,
{
    let verdicts: Vec<Result<bool>> = (0..instances as u64)
        .into_par_iter()
        .map(|i| check(&mut substream(seed, suite << 32 | i)))
        .collect();
    let errors = verdicts.iter().filter(|v| v.is_err()).count();
    let violations = verdicts.iter().filter(|v| matches!(v, Ok(false))).count();
    SuiteResult { name: name.into(), instances, violations, errors, passed: violations == 0 && errors == 0 }
}

fn dims(rng: &mut LabRng, k: usize) -> Vec<usize> {
    (0..k).map(|_| rng.random_range(2..=3)).collect()
}

fn layout(labels: &[&str], dims: &[usize]) -> Result<SubsystemLayout> {
    SubsystemLayout::new(labels.iter().copied().zip(dims.iter().copied()))
}

fn random_state(labels: &[&str], rng: &mut LabRng) -> Result<DensityOperator> {
    let lay = layout(labels, &dims(rng, labels.len()))?;
    let rank = rng.random_range(1..=lay.total_dim());
    random_density(lay, rank, rng)
}

/// A second state near `rho` half of the time, an unrelated one otherwise.
fn partner(rho: &DensityOperator, rng: &mut LabRng) -> Result<DensityOperator> {
    let rank = rng.random_range(1..=rho.dim());
    let other = random_density(rho.layout().clone(), rank, rng)?;
    if rng.random_bool(0.5) {
        let t: f64 = rng.random_range(0.0..0.05);
        let m = rho.matrix() * c(1.0 - t, 0.0) + other.matrix() * c(t, 0.0);
        DensityOperator::new(m, rho.layout().clone())
    } else {
        Ok(other)
    }
}

fn ssa(rng: &mut LabRng) -> Result<bool> {
    let rho = random_state(&["A", "B", "C"], rng)?;
    strong_subadditivity_check(&rho, &["A"], &["B"], &["C"])
}

fn fvdg(rng: &mut LabRng) -> Result<bool> {
    let rho = random_state(&["A", "B"], rng)?;
    fuchs_van_de_graaf_check(&rho, &partner(&rho, rng)?)
}

fn fannes(rng: &mut LabRng) -> Result<bool> {
    let rho = random_state(&["A", "B"], rng)?;
    fannes_check(&rho, &partner(&rho, rng)?)
}

fn gentle(rng: &mut LabRng) -> Result<bool> {
    let rho = random_state(&["A", "B"], rng)?;
    let d = rho.dim();
    let u = haar_unitary(d, rng)?;
    // eigenvalues of X pushed towards 1 so that small-epsilon cases are common
    let lam = CMatrix::from_diagonal(&crate::qlin::linalg::CVector::from_iterator(
        d,
        (0..d).map(|_| c(1.0 - rng.random::<f64>().powi(4), 0.0)),
    ));
    let x = &u * lam * u.adjoint();
    let x = (&x + x.adjoint()) * c(0.5, 0.0);
    gentle_measurement_check(&rho, &x)
}

fn norm_dim(rng: &mut LabRng) -> Result<bool> {
    let d = rng.random_range(2..=9);
    let k = rng.random_range(1..=d);
    let u = haar_unitary(d, rng)?;
    let mut diag = crate::qlin::linalg::CVector::zeros(d);
    for i in 0..k {
        diag[i] = c(rng.random_range(-1.0..1.0), 0.0);
    }
    let x = &u * CMatrix::from_diagonal(&diag) * u.adjoint();
    Ok(norm_dim_inequality(&x, k))
}

fn chain(rng: &mut LabRng) -> Result<bool> {
    let rho = random_state(&["A1", "A2", "B"], rng)?;
    chain_rule_check(&rho, &["A1"], &["A2"], &["B"])
}

/// The six entropy and norm inequality suites.
pub fn inequality_suites(seed: u64, instances: usize) -> Vec<SuiteResult> {
    vec![
        run_suite("strong_subadditivity", 1, seed, instances, ssa),
        run_suite("fuchs_van_de_graaf", 2, seed, instances, fvdg),
        run_suite("fannes", 3, seed, instances, fannes),
        run_suite("gentle_measurement", 4, seed, instances, gentle),
        run_suite("norm_dimension", 5, seed, instances, norm_dim),
        run_suite("chain_rule", 6, seed, instances, chain),
    ]
}

fn twirl_suite(seed: u64) -> SuiteResult {
    let cases: Vec<(usize, usize)> = (2..=4).flat_map(|d| (1..=d).map(move |l| (d, l))).collect();
    let verdicts: Vec<Result<bool>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(d, l))| {
            let mut rng = substream(seed, 7 << 32 | i as u64);
            let mc = twirl_monte_carlo(d, l, 2000, &mut rng)?;
            Ok(max_entry_gap(&mc, &twirl_analytic(d, l)?) <= 0.02)
        })
        .collect();
    tally("twirl", verdicts)
}

fn tally(name: &str, verdicts: Vec<Result<bool>>) -> SuiteResult {
    let errors = verdicts.iter().filter(|v| v.is_err()).count();
    let violations = verdicts.iter().filter(|v| matches!(v, Ok(false))).count();
    SuiteResult {
        name: name.into(),
        instances: verdicts.len(),
        violations,
        errors,
        passed: violations == 0 && errors == 0,
    }
}

fn rank_l(rng: &mut LabRng) -> Result<bool> {
    let d_a = if rng.random_bool(0.5) { 4 } else { 8 };
    let l = [1, 2, 4][rng.random_range(0..3)];
    let lay = SubsystemLayout::new([("A", d_a), ("R", 2)])?;
    let rank = rng.random_range(1..=lay.total_dim());
    let rho = random_density(lay, rank, rng)?;
    Ok(rank_l_average_check(&rho, "A", l, 200, rng)?.holds)
}

fn merge_chain(rng: &mut LabRng) -> Result<bool> {
    let lay = SubsystemLayout::new([("A", 4), ("B", 2), ("R", 2)])?;
    let psi = random_pure_state(lay, rng)?;
    let l = rng.random_range(1..=4);
    let cfg = MergeConfig { l, trials: 8, seed: rng.random(), ..Default::default() };
    let rep = run_merging(&psi, &cfg)?;
    Ok(rep.fidelity_chain_holds() && rep.qe_bound_holds())
}

fn typicality() -> SuiteResult {
    let verdict = typical_projector(&[0.2, 0.8], 20, 0.1).and_then(|tp| tp.certify()).map(|c| c.all());
    tally("typicality_certificate", vec![verdict])
}

fn compression(rng: &mut LabRng) -> Result<bool> {
    let rho = random_state(&["A", "B", "C"], rng)?;
    let reg = distributed_compression_region(&rho, &["A", "B", "C"])?;
    let total = crate::entropy::marginal_entropy(&rho, &["A", "B", "C"])?;
    Ok(reg.corners_feasible() && reg.corners.iter().all(|c| (c.rates.iter().sum::<f64>() - total).abs() <= CHECK_TOL))
}

fn min_cut_symmetry(rng: &mut LabRng) -> Result<bool> {
    let lay = layout(&["A", "B", "C", "D"], &dims(rng, 4))?;
    let psi = random_pure_state(lay, rng)?;
    let mc = min_cut_assistance(&psi, "A", "B")?;
    Ok(mc.cuts.iter().all(|c| (c.s_a_side - c.s_b_side).abs() <= CHECK_TOL))
}

fn mac_conditioning(rng: &mut LabRng) -> Result<bool> {
    let pa = random_pure_state(SubsystemLayout::new([("A", 2), ("A'", 2)])?, rng)?;
    let pb = random_pure_state(SubsystemLayout::new([("B", 2), ("B'", 2)])?, rng)?;
    let inp = SubsystemLayout::new([("A'", 2), ("B'", 2)])?;
    let v = crate::qlin::random::haar_isometry(8, 4, rng)?;
    let ops = (0..2).map(|e| CMatrix::from_fn(4, 4, |o, i| v[(o * 2 + e, i)])).collect();
    let ch = crate::qlin::KrausChannel::new(ops, inp, SubsystemLayout::single("C", 4)?)?;
    let reg = mac_rates(&ch, &pa, &pb)?;
    let sum = reg.inequalities[2].bound;
    // I(A>BC) >= I(A>C) and both corners on the sum face
    Ok(reg.inequalities[0].bound >= reg.corners[1].rates[0] - CHECK_TOL
        && reg.corners.iter().all(|c| (c.rates.iter().sum::<f64>() - sum).abs() <= CHECK_TOL))
}

fn assistance(rng: &mut LabRng) -> Result<bool> {
    let lay = SubsystemLayout::new([("A", 2), ("B", 2), ("C", 2)])?;
    let psi = random_pure_state(lay, rng)?;
    let cfg = ExperimentConfig { n: 2, trials: 4, seed: rng.random(), ..Default::default() };
    Ok(assistance_protocol(&psi, "A", "B", None, &cfg)?.within_min_cut)
}

fn uhlmann(rng: &mut LabRng) -> Result<bool> {
    let lay = SubsystemLayout::new([("X", 3), ("Y", 2)])?;
    let a = random_pure_state(lay.clone(), rng)?;
    let b = random_pure_state(lay, rng)?;
    let dec = crate::qlin::uhlmann_decoder(&a, &b, &["X"])?;
    let f = crate::qlin::fidelity(&a.reduced(&["X"])?, &b.reduced(&["X"])?)?;
    Ok((dec.fidelity() - f).abs() <= 1e-8)
}

fn epr_merge(seed: u64) -> SuiteResult {
    let run = || -> Result<bool> {
        let psi = PureState::maximally_entangled("A", "B", 2)?.tensor(&trivial_reference())?;
        let rep = run_merging(&psi, &MergeConfig { n: 2, l: 2, trials: 4, seed, ..Default::default() })?;
        Ok(rep.mean_fidelity > 1.0 - 1e-9 && rep.ebits_out == 1.0)
    };
    tally("epr_merge", vec![run()])
}

fn pure_trace_distance_consistency(rng: &mut LabRng) -> Result<bool> {
    let lay = SubsystemLayout::single("X", rng.random_range(2..=6))?;
    let a = random_pure_state(lay.clone(), rng)?;
    let b = random_pure_state(lay, rng)?;
    let full = hermitian_trace_distance(a.density().matrix(), b.density().matrix());
    Ok((full - crate::qlin::norms::pure_trace_distance(a.amplitudes(), b.amplitudes())).abs() <= 1e-7)
}

/// Every invariant suite, deterministic in `seed`.
pub fn selftest(seed: u64) -> SelftestSummary {
    let mut suites = inequality_suites(seed, SUITE_INSTANCES);
    suites.push(twirl_suite(seed));
    suites.push(run_suite("rank_l_average", 8, seed, 20, rank_l));
    suites.push(run_suite("merge_bound_chain", 9, seed, 20, merge_chain));
    suites.push(epr_merge(seed));
    suites.push(typicality());
    suites.push(run_suite("compression_corners", 10, seed, 100, compression));
    suites.push(run_suite("min_cut_symmetry", 11, seed, 50, min_cut_symmetry));
    suites.push(run_suite("mac_conditioning", 12, seed, 100, mac_conditioning));
    suites.push(run_suite("assistance_below_min_cut", 13, seed, 20, assistance));
    suites.push(run_suite("uhlmann_decoder", 14, seed, 100, uhlmann));
    suites.push(run_suite("pure_trace_distance", 15, seed, 200, pure_trace_distance_consistency));
    let passed = suites.iter().all(|s| s.passed);
    SelftestSummary { seed, suites, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequality_suites_are_clean() {
        for s in inequality_suites(3, 200) {
            assert!(s.passed, "{s:?}");
            assert_eq!(s.instances, 200);
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = serde_json::to_string(&inequality_suites(5, 50)).unwrap();
        let b = serde_json::to_string(&inequality_suites(5, 50)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn a_broken_check_is_counted() {
        let r = run_suite("always_false", 99, 0, 10, |_| Ok(false));
        assert_eq!(r.violations, 10);
        assert!(!r.passed);
    }
}
