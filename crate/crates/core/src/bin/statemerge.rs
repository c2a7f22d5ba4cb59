//! Command line front end: one subcommand per experiment, JSON or CSV output.
//!
//! Exit codes: 0 all checks pass, 2 a checked property is violated, 3 a resource
//! cap was hit, 4 bad input.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use statemerge::harness::selftest;
use statemerge::merge::{
    classical_cost_check, entanglement_ledger_check, max_entry_gap, run_merging, twirl_analytic, twirl_monte_carlo,
    ClassicalCost, LedgerCheck, MergeConfig, MergeReport, DEFAULT_CAP,
};
use statemerge::presets::{build, AmplitudeFile, Preset};
use statemerge::qlin::linalg::trace;
use statemerge::qlin::random::{haar_isometry, random_pure_state};
use statemerge::qlin::{KrausChannel, PureState, SubsystemLayout};
use statemerge::regions::{
    assistance_protocol, covering_experiment, distributed_compression_region_pure, mac_rates, min_cut_assistance,
    side_info_search, AssistanceReport, ExperimentConfig, MinCut, RateRegion,
};
use statemerge::rng::{seeded, substream};
use statemerge::typ::{typical_projector, Certificate, Mode};
use statemerge::Error;

#[derive(Parser, Debug)]
#[command(name = "statemerge", version, about = "Seeded quantum state merging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random-measurement merging with decoding and entanglement ledgers.
    Merge(Common),
    /// Monte Carlo twirl against the closed form, one row per (d, L).
    Twirl(Common),
    /// Distributed compression region of the chosen parties.
    Region(Common),
    /// Min-cut and sequential/simultaneous entanglement of assistance.
    Assist(Common),
    /// Multiple-access channel rate region.
    Mac(Common),
    /// Typical projector and its certificate.
    Typ(Common),
    /// Covering by a random rank-one measurement.
    Covering(Common),
    /// Heuristic search for side-information rates.
    SideInfo(Common),
    /// Every invariant suite.
    Selftest(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Channel {
    Identity,
    Constant,
    Random,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, env = "STATEMERGE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Rank of the measurement outcomes, or `max` for `d_A`.
    #[arg(long = "L", default_value = "1")]
    l: String,
    #[arg(long = "K", default_value_t = 1)]
    k: usize,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// epr, epr-ar, product, pure-ab, ghz3, ghz4 or random.
    #[arg(long, default_value = "epr")]
    state: String,
    /// Amplitude file; overrides --state.
    #[arg(long)]
    amplitudes: Option<PathBuf>,
    /// Comma-separated probabilities.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Comma-separated party labels.
    #[arg(long, value_delimiter = ',')]
    parties: Option<Vec<String>>,
    /// Helper order for `assist`.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "identity")]
    channel: Channel,
    /// Monte Carlo samples for `twirl`.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Lab(Error),
    Input(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lab(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => Failure::Io(e),
            other => Failure::Io(io::Error::other(format!("{other:?}"))),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        match e.io_error_kind() {
            Some(kind) => Failure::Io(io::Error::new(kind, e)),
            None => Failure::Io(io::Error::other(e)),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Merge(c) => cmd_merge(c),
        Command::Twirl(c) => cmd_twirl(c),
        Command::Region(c) => cmd_region(c),
        Command::Assist(c) => cmd_assist(c),
        Command::Mac(c) => cmd_mac(c),
        Command::Typ(c) => cmd_typ(c),
        Command::Covering(c) => cmd_covering(c),
        Command::SideInfo(c) => cmd_side_info(c),
        Command::Selftest(c) => cmd_selftest(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Lab(e)) if e.is_resource() => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        // reader went away (e.g. `| head`)
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}

fn sink(c: &Common) -> Result<Box<dyn Write>, Failure> {
    Ok(match &c.output {
        Some(path) => Box::new(io::BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(c: &Common, value: &T) -> Result<(), Failure> {
    let mut out = sink(c)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(c: &Common, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(c)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn emit<J: Serialize, R: Serialize>(c: &Common, json: &J, rows: &[R]) -> Result<(), Failure> {
    match c.format {
        Format::Json => write_json(c, json),
        Format::Csv => write_rows(c, rows),
    }
}

fn state(c: &Common) -> Result<PureState, Failure> {
    if let Some(path) = &c.amplitudes {
        let text = std::fs::read_to_string(path)?;
        let file: AmplitudeFile =
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        return Ok(file.into_state()?);
    }
    let preset: Preset = c.state.parse()?;
    Ok(build(preset, c.dims.as_deref(), &mut seeded(c.seed))?)
}

fn trials(c: &Common, default: usize) -> Result<usize, Failure> {
    match c.trials {
        Some(0) => Err(Failure::Input("--trials must be at least 1".into())),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

fn parties(c: &Common, default: &[&str]) -> Vec<String> {
    c.parties.clone().unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect())
}

/// Renames a third label to `R` when the state has `A`, `B` and one other label.
fn as_abr(psi: PureState) -> Result<PureState, Failure> {
    let labels: Vec<String> = psi.layout().labels().iter().map(|s| s.to_string()).collect();
    if labels.len() == 3 && !labels.iter().any(|l| l == "R") {
        if let Some(other) = labels.iter().find(|l| *l != "A" && *l != "B") {
            return Ok(psi.relabeled(other, "R")?);
        }
    }
    Ok(psi)
}

#[derive(Serialize)]
struct MergeOutput {
    #[serde(flatten)]
    report: MergeReport,
    fidelity_chain_holds: bool,
    qe_bound_holds: bool,
    ledger: LedgerCheck,
    classical_cost: ClassicalCost,
}

#[derive(Serialize)]
struct MergeRow {
    q_e: f64,
    q_e_bound: f64,
    mean_fidelity: f64,
    ebits_in: f64,
    ebits_out: f64,
    cbits: f64,
    trials: usize,
    seed: u64,
    q_e_stderr: f64,
    fidelity_stderr: f64,
    n: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "K")]
    k: usize,
    d_a: usize,
    d_b: usize,
    d_r: usize,
    #[serde(rename = "D")]
    collision_dim: f64,
    fidelity_chain_holds: bool,
    qe_bound_holds: bool,
    ledger_holds: bool,
}

fn cmd_merge(c: &Common) -> Outcome {
    let psi = as_abr(state(c)?)?;
    let frame_d_a = |psi: &PureState| -> Result<usize, Failure> {
        let d = psi.layout().dim_of("A")?;
        Ok(match c.delta {
            None => d.pow(c.n as u32),
            Some(delta) => statemerge::typ::truncate(psi, c.n, delta, c.cap)?.compressed().layout().dim_of("A")?,
        } * c.k)
    };
    let l = match c.l.as_str() {
        "max" => frame_d_a(&psi)?,
        s => s.parse().map_err(|_| Failure::Input(format!("--L must be a number or `max`, got `{s}`")))?,
    };
    let cfg = MergeConfig { n: c.n, l, k: c.k, trials: trials(c, 50)?, seed: c.seed, typical_delta: c.delta, cap: c.cap };
    let report = run_merging(&psi, &cfg)?;
    let ledger = entanglement_ledger_check(&report, &psi, c.n)?;
    let classical_cost = classical_cost_check(&report, &psi)?;
    let out = MergeOutput {
        fidelity_chain_holds: report.fidelity_chain_holds(),
        qe_bound_holds: report.qe_bound_holds(),
        report,
        ledger,
        classical_cost,
    };
    let ok = out.fidelity_chain_holds && out.qe_bound_holds && out.ledger.holds;
    let r = &out.report;
    let row = MergeRow {
        q_e: r.q_e,
        q_e_bound: r.q_e_bound,
        mean_fidelity: r.mean_fidelity,
        ebits_in: r.ebits_in,
        ebits_out: r.ebits_out,
        cbits: r.cbits,
        trials: r.trials,
        seed: r.seed,
        q_e_stderr: r.q_e_stderr,
        fidelity_stderr: r.fidelity_stderr,
        n: r.n,
        l: r.l,
        k: r.k,
        d_a: r.d_a,
        d_b: r.d_b,
        d_r: r.d_r,
        collision_dim: r.collision_dim,
        fidelity_chain_holds: out.fidelity_chain_holds,
        qe_bound_holds: out.qe_bound_holds,
        ledger_holds: out.ledger.holds,
    };
    emit(c, &out, &[row])?;
    Ok(ok)
}

#[derive(Serialize)]
struct TwirlRow {
    d: usize,
    #[serde(rename = "L")]
    l: usize,
    samples: usize,
    max_gap: f64,
    trace_analytic: f64,
    trace_monte_carlo: f64,
    passed: bool,
}

/// Entrywise tolerance of the twirl comparison.
const TWIRL_TOL: f64 = 0.02;

fn cmd_twirl(c: &Common) -> Outcome {
    let ds = c.dims.clone().unwrap_or_else(|| vec![2, 3, 4]);
    let mut cases = Vec::new();
    for &d in &ds {
        let ls: Vec<usize> = match c.l.as_str() {
            "max" => vec![d],
            _ => (1..=d).collect(),
        };
        cases.extend(ls.into_iter().map(|l| (d, l)));
    }
    let mut rows = Vec::with_capacity(cases.len());
    for (i, (d, l)) in cases.into_iter().enumerate() {
        let mut rng = substream(c.seed, i as u64);
        let mc = twirl_monte_carlo(d, l, c.samples, &mut rng)?;
        let exact = twirl_analytic(d, l)?;
        let max_gap = max_entry_gap(&mc, &exact);
        rows.push(TwirlRow {
            d,
            l,
            samples: c.samples,
            max_gap,
            trace_analytic: trace(&exact).re,
            trace_monte_carlo: trace(&mc).re,
            passed: max_gap <= TWIRL_TOL,
        });
    }
    let ok = rows.iter().all(|r| r.passed);
    emit(c, &rows, &rows)?;
    Ok(ok)
}

fn write_region(c: &Common, reg: &RateRegion) -> Outcome {
    match c.format {
        Format::Json => write_json(c, reg)?,
        Format::Csv if reg.parties.len() == 2 => reg.write_polygon_csv(sink(c)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(c)?);
            let mut header: Vec<String> = reg.parties.iter().map(|p| format!("R_{p}")).collect();
            header.push("orderings".into());
            w.write_record(&header)?;
            for corner in &reg.corners {
                let mut rec: Vec<String> = corner.rates.iter().map(|r| r.to_string()).collect();
                rec.push(corner.orderings.iter().map(|o| o.join("")).collect::<Vec<_>>().join(" "));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    Ok(reg.corners_feasible())
}

fn cmd_region(c: &Common) -> Outcome {
    let psi = state(c)?;
    let names = parties(c, &["A", "B"]);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let reg = distributed_compression_region_pure(&psi, &refs)?;
    write_region(c, &reg)
}

fn cmd_mac(c: &Common) -> Outcome {
    let mut rng = seeded(c.seed);
    let d = match c.dims.as_deref() {
        None => 2,
        Some([d]) if *d >= 2 => *d,
        Some(other) => return Err(Failure::Input(format!("mac takes one input dimension, got {other:?}"))),
    };
    let (pa, pb) = match c.state.as_str() {
        "random" => (
            random_pure_state(SubsystemLayout::new([("A", d), ("A'", d)])?, &mut rng)?,
            random_pure_state(SubsystemLayout::new([("B", d), ("B'", d)])?, &mut rng)?,
        ),
        _ => (PureState::maximally_entangled("A", "A'", d)?, PureState::maximally_entangled("B", "B'", d)?),
    };
    let inp = SubsystemLayout::new([("A'", d), ("B'", d)])?;
    let channel = match c.channel {
        Channel::Identity => KrausChannel::identity(inp, SubsystemLayout::new([("C1", d), ("C2", d)])?)?,
        Channel::Constant => KrausChannel::replacement(inp, SubsystemLayout::single("C", d)?)?,
        Channel::Random => {
            let env = 2;
            let v = haar_isometry(d * d * env, d * d, &mut rng)?;
            let ops = (0..env)
                .map(|e| statemerge::qlin::CMatrix::from_fn(d * d, d * d, |o, i| v[(o * env + e, i)]))
                .collect();
            KrausChannel::new(ops, inp, SubsystemLayout::single("C", d * d)?)?
        }
    };
    let reg = mac_rates(&channel, &pa, &pb)?;
    write_region(c, &reg)
}

#[derive(Serialize)]
struct AssistOutput {
    min_cut: MinCut,
    sequential: AssistanceReport,
    simultaneous: AssistanceReport,
}

#[derive(Serialize)]
struct AssistRow {
    a: String,
    b: String,
    n: usize,
    trials: usize,
    min_cut: f64,
    min_cut_side: String,
    sequential_per_copy: f64,
    sequential_stderr: f64,
    sequential_gap: f64,
    simultaneous_per_copy: f64,
    simultaneous_stderr: f64,
    simultaneous_gap: f64,
    within_min_cut: bool,
}

fn cmd_assist(c: &Common) -> Outcome {
    let psi = state(c)?;
    let names = parties(c, &["A", "B"]);
    let [a, b] = names.as_slice() else {
        return Err(Failure::Input(format!("assist needs exactly two parties, got {names:?}")));
    };
    let cfg = ExperimentConfig { n: c.n, trials: trials(c, 20)?, seed: c.seed, typical_delta: c.delta, cap: c.cap };
    let min_cut = min_cut_assistance(&psi, a, b)?;
    let sequential = assistance_protocol(&psi, a, b, c.order.as_deref(), &cfg)?;
    let simultaneous = statemerge::regions::simultaneous_assistance_experiment(&psi, a, b, &cfg)?;
    let row = AssistRow {
        a: a.clone(),
        b: b.clone(),
        n: c.n,
        trials: cfg.trials,
        min_cut: min_cut.value,
        min_cut_side: min_cut.cut.join(""),
        sequential_per_copy: sequential.per_copy,
        sequential_stderr: sequential.stderr,
        sequential_gap: sequential.gap,
        simultaneous_per_copy: simultaneous.per_copy,
        simultaneous_stderr: simultaneous.stderr,
        simultaneous_gap: simultaneous.gap,
        within_min_cut: sequential.within_min_cut,
    };
    let ok = sequential.within_min_cut;
    emit(c, &AssistOutput { min_cut, sequential, simultaneous }, &[row])?;
    Ok(ok)
}

#[derive(Serialize)]
struct TypOutput {
    p: Vec<f64>,
    n: usize,
    delta: f64,
    entropy: f64,
    mode: Mode,
    rank: u128,
    weight: f64,
    certificate: Certificate,
    certified: bool,
}

#[derive(Serialize)]
struct TypRow {
    n: usize,
    delta: f64,
    entropy: f64,
    rank: u128,
    weight: f64,
    c1: bool,
    c2: bool,
    c3: bool,
    c4: bool,
    c5: bool,
    c6: bool,
}

fn cmd_typ(c: &Common) -> Outcome {
    let p = c.p.clone().unwrap_or_else(|| vec![0.2, 0.8]);
    let delta = c.delta.unwrap_or(statemerge::typ::DEFAULT_DELTA);
    let tp = typical_projector(&p, c.n, delta)?;
    let certificate = tp.certify()?;
    let row = TypRow {
        n: c.n,
        delta,
        entropy: tp.entropy(),
        rank: tp.rank(),
        weight: tp.weight(),
        c1: certificate.c1_weight_trend,
        c2: certificate.c2_dominated,
        c3: certificate.c3_upper_window,
        c4: certificate.c4_lower_window,
        c5: certificate.c5_rank_upper,
        c6: certificate.c6_rank_lower,
    };
    let out = TypOutput {
        p,
        n: c.n,
        delta,
        entropy: tp.entropy(),
        mode: tp.mode(),
        rank: tp.rank(),
        weight: tp.weight(),
        certified: certificate.all(),
        certificate,
    };
    emit(c, &out, &[row])?;
    Ok(out.certified)
}

#[derive(Serialize)]
struct CoveringRow {
    n: usize,
    trials: usize,
    mc_mean_error: f64,
    stderr: f64,
    bound: f64,
    holds: bool,
    regime_ok: bool,
}

fn cmd_covering(c: &Common) -> Outcome {
    let psi = as_abr(state(c)?)?;
    let cfg = ExperimentConfig { n: c.n, trials: trials(c, 20)?, seed: c.seed, typical_delta: c.delta, cap: c.cap };
    let rep = covering_experiment(&psi, &cfg)?;
    let row = CoveringRow {
        n: rep.n,
        trials: cfg.trials,
        mc_mean_error: rep.mc_mean_error,
        stderr: rep.stderr,
        bound: rep.bound,
        holds: rep.holds,
        regime_ok: rep.regime_ok,
    };
    emit(c, &rep, &[row])?;
    Ok(rep.holds)
}

#[derive(Serialize)]
struct SideInfoRow {
    r_a: f64,
    r_b: f64,
    identity_r_a: f64,
    identity_r_b: f64,
    trivial_r_a: f64,
    trivial_r_b: f64,
    evaluations: usize,
    heuristic: bool,
}

fn cmd_side_info(c: &Common) -> Outcome {
    let psi = as_abr(state(c)?)?;
    let d_u = match c.l.as_str() {
        "max" => psi.layout().dim_of("B")?,
        s => s.parse().map_err(|_| Failure::Input(format!("--L (dim U) must be a number or `max`, got `{s}`")))?,
    };
    let found = side_info_search(&psi, d_u, trials(c, 4)?, &mut seeded(c.seed))?;
    let row = SideInfoRow {
        r_a: found.best.r_a,
        r_b: found.best.r_b,
        identity_r_a: found.identity_baseline.r_a,
        identity_r_b: found.identity_baseline.r_b,
        trivial_r_a: found.trivial_baseline.r_a,
        trivial_r_b: found.trivial_baseline.r_b,
        evaluations: found.evaluations,
        heuristic: found.heuristic,
    };
    emit(c, &found, &[row])?;
    Ok(true)
}

fn cmd_selftest(c: &Common) -> Outcome {
    let summary = selftest(c.seed);
    emit(c, &summary, &summary.suites)?;
    Ok(summary.passed)
}
