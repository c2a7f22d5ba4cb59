//! Acceptance criteria, one line each.
//!
//! Runs without the libtest harness so the report reads top to bottom. The process
//! fails if any asserted criterion fails; criterion 5 is reported but not asserted
//! (see README).

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use statemerge::entropy::pure_marginal_entropy;
use statemerge::harness::{inequality_suites, SUITE_INSTANCES};
use statemerge::merge::{
    entanglement_ledger_check, rank_l_average_check, max_entry_gap, run_merging, trivial_reference, twirl_analytic,
    twirl_monte_carlo, MergeConfig, MergeReport,
};
use statemerge::presets::{build, Preset};
use statemerge::qlin::{random_density, random_pure_state, KrausChannel, PureState, SubsystemLayout};
use statemerge::regions::{covering_experiment, distributed_compression_region_pure, mac_rates, min_cut_assistance, ExperimentConfig};
use statemerge::rng::{seeded, substream};
use statemerge::typ::typical_projector;
use statemerge::Result;

const TWIRL_TOL: f64 = 0.02;
const EXACT_TOL: f64 = 1e-9;
const SUM_TOL: f64 = 1e-12;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed<F: FnOnce() -> Result<Outcome>>(limit: Option<Duration>, f: F) -> Outcome {
    let start = Instant::now();
    let out = match f() {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let took = start.elapsed();
    match limit {
        Some(max) if took > max => outcome(false, format!("{}; took {took:.1?} > {max:?}", out.detail)),
        Some(_) => outcome(out.passed, format!("{}; {took:.1?}", out.detail)),
        None => out,
    }
}

fn twirl() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for d in 2..=4 {
        for l in 1..=d {
            let mut rng = substream(1, (d * 16 + l) as u64);
            let mc = twirl_monte_carlo(d, l, 2000, &mut rng)?;
            worst = worst.max(max_entry_gap(&mc, &twirl_analytic(d, l)?));
            rows += 1;
        }
    }
    Ok(outcome(worst <= TWIRL_TOL, format!("{rows} (d, L) pairs, max gap {worst:.4} (tol {TWIRL_TOL})")))
}

fn rank_l() -> Result<Outcome> {
    let mut cases = 0;
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..50u64 {
        for (k, &d_a) in [4usize, 8].iter().enumerate() {
            let mut rng = substream(seed, k as u64);
            let lay = SubsystemLayout::new([("A", d_a), ("R", 2)])?;
            let rank = 1 + (seed as usize) % lay.total_dim();
            let rho = random_density(lay, rank, &mut rng)?;
            for l in [1, 2, 4] {
                let check = rank_l_average_check(&rho, "A", l, 500, &mut rng)?;
                cases += 1;
                failures += usize::from(!check.holds);
                worst_ratio = worst_ratio.max(check.mc_mean / check.bound);
            }
        }
    }
    Ok(outcome(
        failures == 0,
        format!("{cases} cases, {failures} above bound + 3 stderr, max mean/bound {worst_ratio:.3}"),
    ))
}

fn epr_pair() -> Result<PureState> {
    PureState::maximally_entangled("A", "B", 2)?.tensor(&trivial_reference())
}

fn merge_chain(rep: &MergeReport) -> Outcome {
    let chain = rep.mean_fidelity >= 1.0 - 2.0 * rep.q_e.sqrt();
    let qe = rep.q_e <= rep.q_e_bound + 3.0 * rep.q_e_stderr;
    let fid = rep.mean_fidelity >= 0.9;
    let bound_value = (rep.q_e_bound - 0.625).abs() < 1e-12;
    outcome(
        chain && qe && fid && bound_value,
        format!(
            "{} trials, F {:.6}, Q_e {:.2e} +- {:.1e} vs bound {:.4}",
            rep.trials, rep.mean_fidelity, rep.q_e, rep.q_e_stderr, rep.q_e_bound
        ),
    )
}

fn negative_information(rep: &MergeReport) -> Outcome {
    let per_copy = rep.ebits_out / rep.n as f64;
    let passed = rep.ebits_out == 2.0 && rep.ebits_in == 0.0 && (per_copy - 1.0 / 3.0).abs() < 1e-12;
    outcome(passed, format!("ebits in {}, out {}, per copy {per_copy:.4}", rep.ebits_in, rep.ebits_out))
}

fn positive_information(reports: &mut Vec<(PureState, MergeReport)>) -> Result<Outcome> {
    let psi = build(Preset::EprAr, None, &mut seeded(0))?;
    let mut best = (0, f64::NEG_INFINITY);
    for l in [1, 2, 4] {
        let rep = run_merging(&psi, &MergeConfig { n: 2, k: 4, l, trials: 50, seed: 5, ..Default::default() })?;
        if rep.mean_fidelity > best.1 {
            best = (l, rep.mean_fidelity);
        }
        reports.push((psi.clone(), rep));
    }
    Ok(outcome(best.1 >= 0.9, format!("best F {:.4} at L={} over L in {{1,2,4}}, need >= 0.9", best.1, best.0)))
}

fn ledger(reports: &[(PureState, MergeReport)]) -> Result<Outcome> {
    let mut violations = 0;
    let mut trials = 0;
    for (psi, rep) in reports {
        let check = entanglement_ledger_check(rep, psi, rep.n)?;
        violations += usize::from(!check.holds);
        trials += rep.trials;
    }
    Ok(outcome(violations == 0, format!("{} runs, {trials} trials, {violations} violating runs", reports.len())))
}

fn random_merges(reports: &mut Vec<(PureState, MergeReport)>) -> Result<()> {
    for seed in 0..20u64 {
        let mut rng = substream(seed, 77);
        let psi = random_pure_state(SubsystemLayout::new([("A", 2), ("B", 2), ("R", 2)])?, &mut rng)?;
        let l = 1 + (seed as usize) % 2;
        let rep = run_merging(&psi, &MergeConfig { n: 2, l, trials: 5, seed, ..Default::default() })?;
        reports.push((psi, rep));
    }
    Ok(())
}

fn covering() -> Result<Outcome> {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = substream(seed, 99);
        let psi = random_pure_state(SubsystemLayout::new([("A", 8), ("B", 8), ("R", 2)])?, &mut rng)?;
        let rep = covering_experiment(&psi, &ExperimentConfig { trials: 20, seed, ..Default::default() })?;
        failures += usize::from(!rep.holds);
        worst = worst.max(rep.mc_mean_error / rep.bound);
    }
    Ok(outcome(failures == 0, format!("20 states, {failures} above bound + 3 stderr, max mean/bound {worst:.3}")))
}

fn typicality() -> Result<Outcome> {
    let cert = typical_projector(&[0.2, 0.8], 20, 0.1)?.certify()?;
    Ok(outcome(
        cert.all(),
        format!(
            "rank {}, weight {:.4} (n=10: {:.4}), C1..C6 = {} {} {} {} {} {}",
            cert.rank,
            cert.weight,
            cert.weight_half_n,
            cert.c1_weight_trend,
            cert.c2_dominated,
            cert.c3_upper_window,
            cert.c4_lower_window,
            cert.c5_rank_upper,
            cert.c6_rank_lower
        ),
    ))
}

fn inequalities() -> Outcome {
    let suites = inequality_suites(9, SUITE_INSTANCES);
    let bad: Vec<String> =
        suites.iter().filter(|s| !s.passed).map(|s| format!("{}: {}+{}", s.name, s.violations, s.errors)).collect();
    let names: Vec<&str> = suites.iter().map(|s| s.name.as_str()).collect();
    outcome(
        bad.is_empty() && suites.iter().all(|s| s.instances == SUITE_INSTANCES),
        if bad.is_empty() { format!("{} x {SUITE_INSTANCES} clean: {}", suites.len(), names.join(", ")) } else { bad.join("; ") },
    )
}

fn close(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
    (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol
}

fn regions() -> Result<Outcome> {
    let psi = build(Preset::PureAb, None, &mut seeded(3))?;
    let (s_a, s_b) = (pure_marginal_entropy(&psi, &["A"])?, pure_marginal_entropy(&psi, &["B"])?);
    let reg = distributed_compression_region_pure(&psi, &["A", "B"])?;
    let pts: Vec<(f64, f64)> = reg.corners.iter().map(|c| (c.rates[0], c.rates[1])).collect();
    let want = [(s_a, -s_a), (-s_b, s_b)];
    let corners_ok =
        pts.len() == 2 && want.iter().all(|w| pts.iter().any(|p| close(*p, *w, EXACT_TOL)));

    let ghz = PureState::ghz(&["A", "B", "C"], 2)?;
    let cut = min_cut_assistance(&ghz, "A", "B")?.value;
    let ghz_ok = (cut - 1.0).abs() <= SUM_TOL;

    let pa = PureState::maximally_entangled("A", "A'", 2)?;
    let pb = PureState::maximally_entangled("B", "B'", 2)?;
    let channel = KrausChannel::identity(
        SubsystemLayout::new([("A'", 2), ("B'", 2)])?,
        SubsystemLayout::new([("C1", 2), ("C2", 2)])?,
    )?;
    let mac = mac_rates(&channel, &pa, &pb)?;
    let sum = mac.inequalities[2].bound;
    let mac_ok = mac.corners.len() == 2
        && mac.corners.iter().all(|c| close((c.rates[0], c.rates[1]), (1.0, 1.0), EXACT_TOL))
        && mac.corners.iter().all(|c| (c.rates.iter().sum::<f64>() - sum).abs() <= SUM_TOL);

    Ok(outcome(
        corners_ok && ghz_ok && mac_ok,
        format!(
            "compression corners {pts:.6?} vs S(A)={s_a:.6}, S(B)={s_b:.6}; GHZ3 min cut {cut}; MAC corners {:?}, sum bound {sum}",
            mac.corners.iter().map(|c| c.rates.clone()).collect::<Vec<_>>()
        ),
    ))
}

fn determinism() -> Result<Outcome> {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_statemerge"))
            .args(["selftest", "--seed", "7"])
            .env_remove("STATEMERGE_SEED")
            .output()
            .map_err(|e| statemerge::Error::InvalidParameter(format!("cannot run binary: {e}")))
    };
    let (a, b) = (run()?, run()?);
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    Ok(outcome(
        same && a.status.success() && b.status.success(),
        format!("{} bytes, identical {same}, exit codes {:?} {:?}", a.stdout.len(), a.status.code(), b.status.code()),
    ))
}

fn main() -> ExitCode {
    let mut merges = Vec::new();
    let mut results: Vec<(usize, &str, Outcome, bool)> = Vec::new();

    results.push((1, "twirl formula", timed(Some(Duration::from_secs(30)), twirl), true));
    results.push((2, "rank-L concentration bound", timed(Some(Duration::from_secs(120)), rank_l), true));

    let epr = timed(Some(Duration::from_secs(300)), || {
        let psi = epr_pair()?;
        let rep = run_merging(&psi, &MergeConfig { n: 6, l: 4, trials: 50, seed: 1, ..Default::default() })?;
        let out = merge_chain(&rep);
        merges.push((psi, rep));
        Ok(out)
    });
    results.push((3, "one-shot merging bound chain", epr, true));
    let neg = match merges.first() {
        Some((_, rep)) => negative_information(rep),
        None => outcome(false, "no EPR run".into()),
    };
    results.push((4, "negative partial information", neg, true));
    results.push((5, "positive partial information", timed(None, || positive_information(&mut merges)), false));
    let led = timed(None, || {
        random_merges(&mut merges)?;
        ledger(&merges)
    });
    results.push((6, "entanglement ledger", led, true));
    results.push((7, "covering", timed(None, covering), true));
    results.push((8, "typicality", timed(Some(Duration::from_secs(10)), typicality), true));
    results.push((9, "inequality suites", inequalities(), true));
    results.push((10, "rate regions", timed(None, regions), true));
    results.push((11, "determinism", timed(None, determinism), true));

    let mut failed = false;
    for (id, name, out, asserted) in &results {
        let tag = if out.passed { "PASS" } else { "FAIL" };
        let note = if *asserted || out.passed { "" } else { " [not asserted]" };
        println!("{tag} {id:>2} {name}: {}{note}", out.detail);
        failed |= *asserted && !out.passed;
    }
    let passed = results.iter().filter(|r| r.2.passed).count();
    println!("{passed}/{} criteria pass", results.len());
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
