use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrs_cli::acceptance::{self, Outcome, Scale};
use qrs_cli::input::{labels, read_channel, read_state, InputError};
use qrs_cli::report::{tol, Report, Tolerance};
use qrs_cli::Exit;
use qrs_core::entropics::{self, entropy_report};
use qrs_core::ki::{ki_decompose, ki_entropies, ki_reconstruct, KiConfig};
use qrs_core::protocol::{random_protocol, run_protocol, FIDELITY_ROUNDOFF};
use qrs_core::rates::{
    assisted_rate, entanglement_of_purification, oracle_identity_assisted, oracle_identity_unassisted, unassisted_rate,
    OptimizerConfig, RateKind, RateQuery, RateResult, RestartTrace, CERTIFY_SLACK, ZERO_GAMMA_FLOOR,
};
use qrs_core::tensor::json::{layout_to_json, ChannelJson, JsonLayout};
use qrs_core::SystemLabel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "qrs",
    version,
    about = "Channel-simulation rates, Koashi-Imoto decompositions and protocol checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certified upper bounds on the assisted or unassisted simulation rate.
    Rate {
        #[command(subcommand)]
        kind: RateCmd,
    },
    /// Certified upper bound on the entanglement of purification.
    Eop(EopArgs),
    /// Koashi-Imoto decomposition of a bipartite state.
    Ki(KiArgs),
    /// Entropy of a subsystem, optionally conditional or mutual.
    Entropy(EntropyArgs),
    /// Fidelity and trace distance between two states.
    Fidelity(FidelityArgs),
    /// Protocol checks.
    Verify {
        #[command(subcommand)]
        check: VerifyCmd,
    },
    /// Runs the acceptance suite and prints a pass/fail table.
    Selftest(SelftestArgs),
}

#[derive(Subcommand)]
enum RateCmd {
    /// Entanglement-assisted rate a(ρ, γ).
    Assisted(RateArgs),
    /// Unassisted rate u(ρ, γ).
    Unassisted(RateArgs),
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Decoupling inequality on seeded random near-perfect protocols.
    Decoupling(DecouplingArgs),
}

#[derive(Args)]
struct OptimizerArgs {
    /// Independent optimizer restarts.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Master seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective convergence tolerance in bits.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap per penalty stage.
    #[arg(long, default_value_t = 400)]
    max_iterations: usize,
    /// Include wall-clock time in the report, which makes it run-dependent.
    #[arg(long)]
    timing: bool,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            seed: self.seed,
            tolerance: self.tol,
            max_iterations: self.max_iterations,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Args)]
struct RateArgs {
    /// Source state ρ^{AR} (JSON state file).
    #[arg(long)]
    state: PathBuf,
    /// Channel A → BK (JSON channel file); its input labels name A.
    #[arg(long)]
    channel: PathBuf,
    /// Infidelity budget γ in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Number of copies m (1 to 3).
    #[arg(long, default_value_t = 1)]
    copies: usize,
    /// Comma-separated channel outputs held by Bob; default the first.
    #[arg(long)]
    bob: Option<String>,
    /// Environment dimension |E|; default |A|·|B|·|K|.
    #[arg(long)]
    dim_e: Option<usize>,
    /// Dimension of E′ for the unassisted rate; default |E|.
    #[arg(long)]
    dim_eprime: Option<usize>,
    #[command(flatten)]
    opt: OptimizerArgs,
}

#[derive(Args)]
struct EopArgs {
    /// Bipartite state σ^{XY} (JSON state file).
    #[arg(long)]
    state: PathBuf,
    /// Comma-separated factors forming X; the rest form Y. Default the first.
    #[arg(long)]
    x: Option<String>,
    /// Largest dimension of the kept part of the purifier; default the
    /// state dimension.
    #[arg(long)]
    ancilla: Option<usize>,
    #[command(flatten)]
    opt: OptimizerArgs,
}

#[derive(Args)]
struct KiArgs {
    /// Bipartite state ρ^{AR} (JSON state file).
    #[arg(long)]
    state: PathBuf,
    /// Comma-separated factors forming A; default the first.
    #[arg(long)]
    a: Option<String>,
    /// Seed for the random algebra elements.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eigenvalue splitting below which blocks merge.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    state: PathBuf,
    /// Comma-separated factors X; default all.
    #[arg(long)]
    of: Option<String>,
    /// Also report S(X|Y) for these comma-separated factors Y.
    #[arg(long)]
    given: Option<String>,
    /// Also report I(X:Z) for these comma-separated factors Z.
    #[arg(long)]
    with: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FidelityArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    other: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecouplingArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of protocols to simulate.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Perturbation strength of the random protocols.
    #[arg(long, default_value_t = 0.3)]
    strength: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Smaller instance counts at unchanged tolerances.
    #[arg(long)]
    quick: bool,
    /// Run only these comma-separated criterion numbers.
    #[arg(long)]
    only: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: Exit,
    message: String,
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure {
            code: Exit::Malformed,
            message: e.to_string(),
        }
    }
}

impl From<qrs_core::Error> for Failure {
    fn from(e: qrs_core::Error) -> Self {
        Failure {
            code: Exit::Malformed,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: Exit::Malformed,
            message: format!("writing report: {e}"),
        }
    }
}

type CmdResult = Result<Exit, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Rate {
            kind: RateCmd::Assisted(a),
        } => rate(RateKind::Assisted, a),
        Cmd::Rate {
            kind: RateCmd::Unassisted(a),
        } => rate(RateKind::Unassisted, a),
        Cmd::Eop(a) => eop(a),
        Cmd::Ki(a) => ki(a),
        Cmd::Entropy(a) => entropy(a),
        Cmd::Fidelity(a) => fidelity(a),
        Cmd::Verify {
            check: VerifyCmd::Decoupling(a),
        } => decoupling(a),
        Cmd::Selftest(a) => selftest(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

fn label_list(list: &Option<String>) -> Option<Vec<String>> {
    list.as_deref().map(labels).filter(|l| !l.is_empty())
}

fn first_label(layout: &qrs_core::SystemLayout) -> Vec<String> {
    layout.labels().take(1).map(SystemLabel::to_string).collect()
}

#[derive(Serialize)]
struct RateReport {
    kind: RateKind,
    /// Upper bound in bits per copy.
    value: f64,
    bound: String,
    copies: usize,
    gamma: f64,
    internal_gamma: f64,
    /// Note on how γ = 0 is handled, present only then.
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_relaxation: Option<String>,
    fidelity: f64,
    constraint_residual: f64,
    certified: bool,
    fallback: bool,
    channels: Vec<ChannelJson>,
    restarts: Vec<RestartTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_seconds: Option<f64>,
}

fn rate_report(r: &RateResult, timing: bool) -> RateReport {
    let gamma_relaxation = (r.gamma == 0.0 && r.kind != RateKind::EntanglementOfPurification).then(|| {
        format!("gamma = 0 is optimized at internal_gamma and accepted at fidelity >= 1 - {ZERO_GAMMA_FLOOR:e}")
    });
    let bound = match r.kind {
        RateKind::EntanglementOfPurification => "single-copy upper bound".to_string(),
        _ => format!("{}-copy upper bound", r.copies),
    };
    RateReport {
        kind: r.kind,
        value: r.value,
        bound,
        copies: r.copies,
        gamma: r.gamma,
        internal_gamma: r.internal_gamma,
        gamma_relaxation,
        fidelity: r.fidelity,
        constraint_residual: r.constraint_residual,
        certified: !r.fallback,
        fallback: r.fallback,
        channels: r.channels.iter().map(ChannelJson::from_channel).collect(),
        restarts: r.restarts.clone(),
        wall_clock_seconds: timing.then_some(r.wall_clock_seconds),
    }
}

fn optimizer_tolerances(cfg: &OptimizerConfig) -> Vec<Tolerance> {
    vec![
        tol("objective_tolerance", cfg.tolerance),
        tol("certify_slack", CERTIFY_SLACK),
        tol("zero_gamma_floor", ZERO_GAMMA_FLOOR),
        tol("zero_gamma_target", cfg.zero_gamma_target),
        tol("penalty_initial", cfg.penalty_initial),
        tol("penalty_growth", cfg.penalty_growth),
    ]
}

fn rate(kind: RateKind, a: RateArgs) -> CmdResult {
    let (source, s_rec) = read_state(&a.state, "state")?;
    let (channel, c_rec) = read_channel(&a.channel)?;
    let mut cfg = a.opt.config();
    cfg.dim_e = a.dim_e;
    cfg.dim_eprime = a.dim_eprime;
    let mut query = RateQuery::new(source, channel, a.gamma)?
        .with_copies(a.copies)?
        .with_optimizer(cfg.clone())?;
    if let Some(bob) = label_list(&a.bob) {
        query = query.with_bob(&bob)?;
    }
    let result = match kind {
        RateKind::Assisted => assisted_rate(&query)?,
        _ => unassisted_rate(&query)?,
    };
    let command = match kind {
        RateKind::Assisted => "rate assisted",
        _ => "rate unassisted",
    };
    let report = Report::new(
        command,
        Some(a.opt.seed),
        vec![s_rec, c_rec],
        optimizer_tolerances(&cfg),
        rate_report(&result, a.opt.timing),
    );
    report.emit(a.opt.out.as_deref())?;
    Ok(if result.fallback { Exit::Fallback } else { Exit::Success })
}

fn eop(a: EopArgs) -> CmdResult {
    let (state, rec) = read_state(&a.state, "state")?;
    let x = label_list(&a.x).unwrap_or_else(|| first_label(state.layout()));
    let ancilla = a.ancilla.unwrap_or(state.dim());
    let cfg = a.opt.config();
    let result = entanglement_of_purification(&state, &x, ancilla, &cfg)?;
    let mut tolerances = optimizer_tolerances(&cfg);
    tolerances.retain(|t| t.name == "objective_tolerance");
    tolerances.push(tol("ancilla_bound", ancilla as f64));
    let report = Report::new(
        "eop",
        Some(a.opt.seed),
        vec![rec],
        tolerances,
        rate_report(&result, a.opt.timing),
    );
    report.emit(a.opt.out.as_deref())?;
    Ok(if result.fallback { Exit::Fallback } else { Exit::Success })
}

#[derive(Serialize)]
struct BlockReport {
    probability: f64,
    dim_n: usize,
    dim_q: usize,
}

#[derive(Serialize)]
struct KiReport {
    a: JsonLayout,
    r: JsonLayout,
    blocks: Vec<BlockReport>,
    null_dim: usize,
    s_c: f64,
    s_cq: f64,
    s_cnq: f64,
    /// S(CQ) − ½S(C): the assisted rate of the identity channel.
    assisted_identity_rate: f64,
    /// S(CQ): the unassisted rate of the identity channel.
    unassisted_identity_rate: f64,
    reconstruction_distance: f64,
    attempts: usize,
    near_degenerate_merges: usize,
}

fn ki(a: KiArgs) -> CmdResult {
    let (state, rec) = read_state(&a.state, "state")?;
    let a_labels = label_list(&a.a).unwrap_or_else(|| first_label(state.layout()));
    let cfg = KiConfig {
        tolerance: a.tol,
        seed: a.seed,
        ..KiConfig::default()
    };
    let dec = ki_decompose(&state, &a_labels, &cfg)?;
    let ent = ki_entropies(&dec)?;
    let back = ki_reconstruct(&dec)?;
    let order: Vec<String> = back.layout().labels().map(SystemLabel::to_string).collect();
    let distance = entropics::trace_distance(&back, &state.permute(&order)?)?;
    let result = KiReport {
        a: layout_to_json(&dec.a_layout),
        r: layout_to_json(&dec.r_layout),
        blocks: dec
            .blocks
            .iter()
            .map(|b| BlockReport {
                probability: b.probability,
                dim_n: b.dim_n,
                dim_q: b.dim_q,
            })
            .collect(),
        null_dim: dec.null_dim,
        s_c: ent.s_c,
        s_cq: ent.s_cq,
        s_cnq: ent.s_cnq,
        assisted_identity_rate: oracle_identity_assisted(&state, &a_labels)?,
        unassisted_identity_rate: oracle_identity_unassisted(&state, &a_labels)?,
        reconstruction_distance: distance,
        attempts: dec.diagnostics.attempts,
        near_degenerate_merges: dec.diagnostics.near_degenerate_merges,
    };
    let tolerances = vec![
        tol("block_tolerance", cfg.tolerance),
        tol("support_cutoff", cfg.support_cutoff),
    ];
    Report::new("ki", Some(a.seed), vec![rec], tolerances, result).emit(a.out.as_deref())?;
    Ok(Exit::Success)
}

#[derive(Serialize)]
struct EntropyOut {
    of: Vec<String>,
    entropy: f64,
    spectrum: Vec<f64>,
    clamped_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    given: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditional_entropy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    with: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mutual_information: Option<f64>,
}

fn entropy(a: EntropyArgs) -> CmdResult {
    let (state, rec) = read_state(&a.state, "state")?;
    let of = label_list(&a.of).unwrap_or_else(|| state.layout().labels().map(SystemLabel::to_string).collect());
    let rep = entropy_report(&state, &of)?;
    let given = label_list(&a.given);
    let with = label_list(&a.with);
    let conditional_entropy = given
        .as_ref()
        .map(|g| entropics::conditional_entropy(&state, &of, g))
        .transpose()?;
    let mutual_information = with
        .as_ref()
        .map(|w| entropics::mutual_information(&state, &of, w))
        .transpose()?;
    let result = EntropyOut {
        of,
        entropy: rep.value,
        spectrum: rep.spectrum,
        clamped_mass: rep.clamped_mass,
        given,
        conditional_entropy,
        with,
        mutual_information,
    };
    Report::new("entropy", None, vec![rec], vec![], result).emit(a.out.as_deref())?;
    Ok(Exit::Success)
}

#[derive(Serialize)]
struct FidelityOut {
    fidelity: f64,
    trace_distance: f64,
}

fn fidelity(a: FidelityArgs) -> CmdResult {
    let (rho, r1) = read_state(&a.state, "state")?;
    let (xi, r2) = read_state(&a.other, "other")?;
    let result = FidelityOut {
        fidelity: entropics::fidelity(&rho, &xi)?,
        trace_distance: entropics::trace_distance(&rho, &xi)?,
    };
    Report::new("fidelity", None, vec![r1, r2], vec![], result).emit(a.out.as_deref())?;
    Ok(Exit::Success)
}

#[derive(Serialize)]
struct DecouplingRow {
    instance: usize,
    fidelity: f64,
    epsilon: f64,
    lhs: f64,
    rhs: f64,
    holds: bool,
}

#[derive(Serialize)]
struct DecouplingOut {
    instances: Vec<DecouplingRow>,
    all_hold: bool,
}

fn decoupling(a: DecouplingArgs) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::with_capacity(a.instances);
    for i in 0..a.instances {
        let inst = random_protocol(a.strength, &mut rng)?;
        let r = run_protocol(&inst.protocol, &inst.source, &inst.channel)?;
        rows.push(DecouplingRow {
            instance: i,
            fidelity: r.fidelity,
            epsilon: r.epsilon,
            lhs: r.decoupling.lhs,
            rhs: r.decoupling.rhs,
            holds: r.decoupling.holds,
        });
    }
    let result = DecouplingOut {
        all_hold: rows.iter().all(|r| r.holds),
        instances: rows,
    };
    let tolerances = vec![
        tol("holds_slack", 1e-9),
        tol("fidelity_roundoff", FIDELITY_ROUNDOFF),
        tol("strength", a.strength),
    ];
    Report::new("verify decoupling", Some(a.seed), vec![], tolerances, result).emit(a.out.as_deref())?;
    Ok(Exit::Success)
}

#[derive(Serialize)]
struct SelftestOut {
    scale: &'static str,
    criteria: Vec<Outcome>,
    passed: bool,
}

fn selftest(a: SelftestArgs) -> CmdResult {
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    let only: Option<Vec<u8>> = match label_list(&a.only) {
        None => None,
        Some(list) => Some(
            list.iter()
                .map(|s| s.parse::<u8>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure {
                    code: Exit::Malformed,
                    message: format!("--only: {e}"),
                })?,
        ),
    };
    let binary = std::env::current_exe()?;
    let mut outcomes = Vec::new();
    for (id, _) in acceptance::CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let o = acceptance::run(id, scale, Path::new(&binary));
        eprintln!("{}", o.line());
        outcomes.push(o);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let result = SelftestOut {
        scale: if a.quick { "quick" } else { "full" },
        criteria: outcomes,
        passed,
    };
    Report::new("selftest", None, vec![], vec![], result).emit(a.out.as_deref())?;
    Ok(if passed { Exit::Success } else { Exit::SelftestFailed })
}
