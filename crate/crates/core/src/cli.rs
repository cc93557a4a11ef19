//! The `entrocorr` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 solver non-convergence. Reports go to stdout (or `--out`); diagnostics
//! go to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::continuum::{
    self, bin_sweep, maxwell_assumption_report, normal_differential_entropy, sample_maxwell,
    ContinuumError, MaxwellParams, RNG_ALGORITHM,
};
use crate::dist::{DistError, JointDist, Marginal, MixtureWeights, NormalizeMode};
use crate::entropy::{
    averaging_gap, chain_decompose, entropy, mutual_information, subadditivity_report, EntropyError,
    Unit,
};
use crate::ingest::{self, IngestError, ReportFormat, ReportMeta};
use crate::maxent::{solve_maxent, MaxEntError, MaxEntProblem, SolverOptions};

pub const DEFAULT_SEED: u64 = 20_260_101;
/// CODATA 2018 exact value, J/K.
pub const BOLTZMANN_K: f64 = 1.380_649e-23;

#[derive(Debug, Parser)]
#[command(
    name = "entrocorr",
    version,
    about = "Entropy tools for two-variable discrete distributions"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Entropy unit for every reported entropy field.
    #[arg(long, value_enum, default_value_t = UnitArg::Nats, global = true)]
    unit: UnitArg,
    /// Boltzmann constant used with `--unit physical`.
    #[arg(long, default_value_t = BOLTZMANN_K, global = true)]
    boltzmann_k: f64,
    /// Emit the JSON report instead of a table.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit the CSV report instead of a table.
    #[arg(long, global = true)]
    csv: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
    Physical,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy of a joint and of both marginals.
    Entropy(JointInput),
    /// Replace a joint by the product of its marginals.
    Decorrelate(JointInput),
    /// Mutual information as the entropy gained by decorrelating.
    Mi(JointInput),
    /// Chain decomposition S(p) = S(P) + Σ P_i S(ζ^(i)).
    Chain(JointInput),
    /// Entropy of a weighted mixture against the mixed entropies.
    Mixture(MixtureArgs),
    /// Maximum-entropy distribution under expectation constraints.
    Maxent(MaxentArgs),
    /// Sample Maxwell velocities and test independence and isotropy.
    MaxwellDemo(MaxwellArgs),
    /// Plug-in entropy of a continuous stream under finer and finer bins.
    BinSweep(SweepArgs),
}

#[derive(Debug, Args)]
struct JointInput {
    /// Joint distribution CSV (rows: states of A, columns: states of B).
    #[arg(long, required_unless_present = "pairs", conflicts_with = "pairs")]
    joint: Option<PathBuf>,
    /// Two-column label pairs CSV; counted into an empirical joint.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Added to every cell of the pairs count table.
    #[arg(long, default_value_t = 0.0, requires = "pairs")]
    pseudocount: f64,
    /// Accept any positive total and divide it out.
    #[arg(long)]
    renormalize: bool,
}

#[derive(Debug, Args)]
struct MixtureArgs {
    /// Component distribution files, one probability vector each.
    #[arg(long, value_delimiter = ',', required = true)]
    dists: Vec<PathBuf>,
    /// Nonnegative weights, one per component (default: equal).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    weights: Vec<f64>,
    #[arg(long)]
    renormalize: bool,
}

#[derive(Debug, Args)]
struct MaxentArgs {
    /// Feature grid: one row per feature, one column per state.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Number of states when no features file is given.
    #[arg(long, required_unless_present = "features")]
    states: Option<usize>,
    /// Target expectation per feature.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    targets: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct MaxwellArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Generator {
    Normal,
    Uniform,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// One value per line.
    #[arg(long, required_unless_present = "generate", conflicts_with = "generate")]
    samples: Option<PathBuf>,
    /// Generate a unit normal or unit uniform stream instead.
    #[arg(long, value_enum)]
    generate: Option<Generator>,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Ascending bin counts.
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64, 128, 256])]
    bins: Vec<usize>,
    /// Binning range LO,HI (default: ±6 for normal, 0,1 for uniform, data
    /// extent for files).
    #[arg(long, value_delimiter = ',', num_args = 1, allow_negative_numbers = true)]
    range: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    NoConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::NoConvergence(_) => 3,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(IngestError, DistError, EntropyError, ContinuumError);

impl From<MaxEntError> for CliError {
    fn from(e: MaxEntError) -> Self {
        match e {
            MaxEntError::NoConvergence { .. } => CliError::NoConvergence(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

struct Ctx {
    unit: Unit,
    format: Option<ReportFormat>,
}

impl Ctx {
    fn e(&self, nats: f64) -> f64 {
        self.unit.from_nats(nats)
    }

    fn meta(&self) -> ReportMeta {
        ReportMeta::new(self.unit)
    }
}

/// A rendered report plus any lines for stderr.
struct Output {
    data: String,
    log: Vec<String>,
}

/// Parse `argv` (including the program name) and run one subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for line in &out.log {
                let _ = writeln!(stderr, "{line}");
            }
            let written = match &cli.global.out {
                Some(path) => std::fs::write(path, &out.data).map_err(|e| {
                    CliError::Data(format!("{}: {e}", path.display()))
                }),
                None => stdout
                    .write_all(out.data.as_bytes())
                    .map_err(|e| CliError::Data(e.to_string())),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    let g = &cli.global;
    let unit = match g.unit {
        UnitArg::Nats => Unit::Nats,
        UnitArg::Bits => Unit::Bits,
        UnitArg::Physical => {
            if !(g.boltzmann_k > 0.0 && g.boltzmann_k.is_finite()) {
                return Err(CliError::Usage(format!(
                    "--boltzmann-k must be positive, got {}",
                    g.boltzmann_k
                )));
            }
            Unit::Physical(g.boltzmann_k)
        }
    };
    let format = if g.json {
        Some(ReportFormat::Json)
    } else if g.csv {
        Some(ReportFormat::Csv)
    } else {
        None
    };
    let ctx = Ctx { unit, format };
    match &cli.command {
        Command::Entropy(a) => cmd_entropy(&ctx, a),
        Command::Decorrelate(a) => cmd_decorrelate(&ctx, a),
        Command::Mi(a) => cmd_mi(&ctx, a),
        Command::Chain(a) => cmd_chain(&ctx, a),
        Command::Mixture(a) => cmd_mixture(&ctx, a),
        Command::Maxent(a) => cmd_maxent(&ctx, a),
        Command::MaxwellDemo(a) => cmd_maxwell(&ctx, a),
        Command::BinSweep(a) => cmd_sweep(&ctx, a),
    }
}

fn load_joint(input: &JointInput) -> Result<JointDist, CliError> {
    let mode = if input.renormalize {
        NormalizeMode::Renormalize
    } else {
        NormalizeMode::Strict
    };
    match (&input.joint, &input.pairs) {
        (Some(path), _) => Ok(ingest::read_joint_csv(path, mode)?),
        (None, Some(path)) => {
            let pairs = ingest::read_pairs_csv(path)?;
            Ok(ingest::joint_from_pairs(&pairs, input.pseudocount)?.joint)
        }
        (None, None) => Err(CliError::Usage("one of --joint or --pairs is required".into())),
    }
}

/// Render either the machine report or the human table.
fn emit<T: Serialize>(ctx: &Ctx, meta: ReportMeta, result: &T, table: impl FnOnce() -> String) -> Result<String, CliError> {
    match ctx.format {
        Some(f) => Ok(ingest::render_report(result, &meta, f)?),
        None => Ok(table()),
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.8}")
}

fn kv_table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let pad = width - k.chars().count();
        let _ = writeln!(out, "{k}{} = {v}", " ".repeat(pad));
    }
    out
}

fn vec_str(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|&x| fmt_num(x)).collect();
    format!("[{}]", cells.join(", "))
}

#[derive(Serialize)]
struct EntropyResult {
    rows: usize,
    cols: usize,
    s_joint: f64,
    s_marg_a: f64,
    s_marg_b: f64,
}

fn cmd_entropy(ctx: &Ctx, a: &JointInput) -> Result<Output, CliError> {
    let j = load_joint(a)?;
    let r = EntropyResult {
        rows: j.rows(),
        cols: j.cols(),
        s_joint: ctx.e(entropy(&j).nats()),
        s_marg_a: ctx.e(entropy(&j.marginal_a()).nats()),
        s_marg_b: ctx.e(entropy(&j.marginal_b()).nats()),
    };
    let u = ctx.unit.name();
    let data = emit(ctx, ctx.meta(), &r, || {
        kv_table(&[
            ("shape", format!("{} x {}", r.rows, r.cols)),
            ("S(p)", format!("{} {u}", fmt_num(r.s_joint))),
            ("S(P)", format!("{} {u}", fmt_num(r.s_marg_a))),
            ("S(Q)", format!("{} {u}", fmt_num(r.s_marg_b))),
        ])
    })?;
    Ok(Output { data, log: vec![] })
}

#[derive(Serialize)]
struct DecorrelateResult {
    joint: Vec<Vec<f64>>,
    marginal_a: Vec<f64>,
    marginal_b: Vec<f64>,
}

fn cmd_decorrelate(ctx: &Ctx, a: &JointInput) -> Result<Output, CliError> {
    let j = load_joint(a)?;
    let pi = j.decorrelate();
    let data = match ctx.format {
        Some(ReportFormat::Json) => {
            let r = DecorrelateResult {
                joint: pi.to_matrix(),
                marginal_a: j.marginal_a().probs().to_vec(),
                marginal_b: j.marginal_b().probs().to_vec(),
            };
            ingest::render_json(&r, &ctx.meta())?
        }
        _ => ingest::format_joint_csv(&pi),
    };
    Ok(Output { data, log: vec![] })
}

#[derive(Serialize)]
struct MiResult {
    mutual_information: f64,
    s_joint: f64,
    s_pi: f64,
    s_marg_a: f64,
    s_marg_b: f64,
    gap: f64,
    holds: bool,
}

fn cmd_mi(ctx: &Ctx, a: &JointInput) -> Result<Output, CliError> {
    let j = load_joint(a)?;
    let mi = mutual_information(&j)?;
    let rep = subadditivity_report(&j).in_unit(ctx.unit);
    let r = MiResult {
        mutual_information: mi.in_unit(ctx.unit),
        s_joint: rep.s_joint,
        s_pi: rep.s_pi,
        s_marg_a: rep.s_marg_a,
        s_marg_b: rep.s_marg_b,
        gap: rep.gap,
        holds: rep.holds,
    };
    let u = ctx.unit.name();
    let data = emit(ctx, ctx.meta(), &r, || {
        kv_table(&[
            ("I(A;B) = S(pi) - S(p)", format!("{} {u}", fmt_num(r.mutual_information))),
            ("S(p)", format!("{} {u}", fmt_num(r.s_joint))),
            ("S(pi)", format!("{} {u}", fmt_num(r.s_pi))),
            ("S(P) + S(Q)", format!("{} {u}", fmt_num(r.s_marg_a + r.s_marg_b))),
            ("S(p) <= S(pi)", r.holds.to_string()),
        ])
    })?;
    Ok(Output { data, log: vec![] })
}

#[derive(Serialize)]
struct ChainResult {
    s_base: f64,
    s_cond: f64,
    s_total: f64,
    s_joint: f64,
    base: Vec<f64>,
    row_entropies: Vec<Option<f64>>,
}

fn cmd_chain(ctx: &Ctx, a: &JointInput) -> Result<Output, CliError> {
    let j = load_joint(a)?;
    let c = chain_decompose(&j);
    let r = ChainResult {
        s_base: c.s_base.in_unit(ctx.unit),
        s_cond: c.s_cond.in_unit(ctx.unit),
        s_total: c.s_total.in_unit(ctx.unit),
        s_joint: ctx.e(entropy(&j).nats()),
        base: j.marginal_a().probs().to_vec(),
        row_entropies: c
            .row_entropies
            .iter()
            .map(|s| s.map(|s| s.in_unit(ctx.unit)))
            .collect(),
    };
    let u = ctx.unit.name();
    let data = emit(ctx, ctx.meta(), &r, || {
        let mut out = kv_table(&[
            ("S(P)", format!("{} {u}", fmt_num(r.s_base))),
            ("sum_i P_i S(zeta_i)", format!("{} {u}", fmt_num(r.s_cond))),
            ("S(P) + sum", format!("{} {u}", fmt_num(r.s_total))),
            ("S(p)", format!("{} {u}", fmt_num(r.s_joint))),
        ]);
        out.push_str("row  P_i         S(zeta_i)\n");
        for (i, (p, s)) in r.base.iter().zip(&r.row_entropies).enumerate() {
            let s = s.map_or_else(|| "undefined".to_string(), fmt_num);
            let _ = writeln!(out, "{:<4} {} {}", i, fmt_num(*p), s);
        }
        out
    })?;
    Ok(Output { data, log: vec![] })
}

#[derive(Serialize)]
struct MixtureResult {
    weights: Vec<f64>,
    mixture: Vec<f64>,
    s_mixture: f64,
    component_entropies: Vec<f64>,
    mean_component_entropy: f64,
    averaging_gap: f64,
}

fn cmd_mixture(ctx: &Ctx, a: &MixtureArgs) -> Result<Output, CliError> {
    let mode = if a.renormalize {
        NormalizeMode::Renormalize
    } else {
        NormalizeMode::Strict
    };
    let dists = a
        .dists
        .iter()
        .map(|p| Ok(Marginal::new(ingest::read_values(p)?, mode)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let raw = if a.weights.is_empty() {
        vec![1.0; dists.len()]
    } else {
        a.weights.clone()
    };
    if raw.len() != dists.len() {
        return Err(CliError::Usage(format!(
            "{} distributions but {} weights",
            dists.len(),
            raw.len()
        )));
    }
    let weights = MixtureWeights::new(raw)?;
    let mix = Marginal::mixture(&dists, &weights)?;
    let gap = averaging_gap(&dists, &weights)?;
    let wbar = weights.normalized();
    let comp: Vec<f64> = dists.iter().map(|d| entropy(d).nats()).collect();
    let mean: f64 = crate::sum::compensated_sum(comp.iter().zip(&wbar).map(|(s, w)| s * w));
    let r = MixtureResult {
        weights: wbar,
        mixture: mix.probs().to_vec(),
        s_mixture: ctx.e(entropy(&mix).nats()),
        component_entropies: comp.iter().map(|&s| ctx.e(s)).collect(),
        mean_component_entropy: ctx.e(mean),
        averaging_gap: ctx.e(gap),
    };
    let u = ctx.unit.name();
    let data = emit(ctx, ctx.meta(), &r, || {
        kv_table(&[
            ("weights", vec_str(&r.weights)),
            ("mixture", vec_str(&r.mixture)),
            ("S(mixture)", format!("{} {u}", fmt_num(r.s_mixture))),
            ("component S", vec_str(&r.component_entropies)),
            ("sum_k w_k S(Z_k)", format!("{} {u}", fmt_num(r.mean_component_entropy))),
            ("averaging gap", format!("{} {u}", fmt_num(r.averaging_gap))),
        ])
    })?;
    Ok(Output { data, log: vec![] })
}

#[derive(Serialize)]
struct MaxentResult {
    dist: Vec<f64>,
    multipliers: Vec<f64>,
    entropy: f64,
    residual: f64,
    iterations: usize,
}

fn cmd_maxent(ctx: &Ctx, a: &MaxentArgs) -> Result<Output, CliError> {
    let features = match &a.features {
        Some(p) => ingest::read_grid(p)?,
        None => Vec::new(),
    };
    let k = match (features.first(), a.states) {
        (Some(f), Some(k)) if f.len() != k => {
            return Err(CliError::Usage(format!(
                "--states {k} disagrees with {} feature columns",
                f.len()
            )))
        }
        (Some(f), _) => f.len(),
        (None, Some(k)) => k,
        (None, None) => return Err(CliError::Usage("need --features or --states".into())),
    };
    if a.targets.len() != features.len() {
        return Err(CliError::Usage(format!(
            "{} features but {} targets",
            features.len(),
            a.targets.len()
        )));
    }
    let prob = MaxEntProblem::new(k, features, a.targets.clone())?;
    let sol = solve_maxent(
        &prob,
        SolverOptions {
            tol: a.tol,
            max_iter: a.max_iter,
        },
    )?;
    let r = MaxentResult {
        dist: sol.dist.probs().to_vec(),
        multipliers: sol.multipliers.clone(),
        entropy: sol.entropy.in_unit(ctx.unit),
        residual: sol.residual,
        iterations: sol.iterations,
    };
    let u = ctx.unit.name();
    let data = emit(ctx, ctx.meta(), &r, || {
        kv_table(&[
            ("distribution", vec_str(&r.dist)),
            ("multipliers", vec_str(&r.multipliers)),
            ("entropy", format!("{} {u}", fmt_num(r.entropy))),
            ("residual", format!("{:e}", r.residual)),
            ("iterations", r.iterations.to_string()),
        ])
    })?;
    Ok(Output { data, log: vec![] })
}

#[derive(Serialize)]
struct MaxwellResult {
    alpha: f64,
    n: usize,
    bins: usize,
    mi_xy: f64,
    mi_xz: f64,
    mi_yz: f64,
    speed_mode: f64,
    speed_mode_expected: f64,
    angular_deviation: f64,
    cos_theta_deviation: f64,
    phi_deviation: f64,
    plugin_bias_bound: f64,
    clamped: u64,
}

fn cmd_maxwell(ctx: &Ctx, a: &MaxwellArgs) -> Result<Output, CliError> {
    let params = MaxwellParams::new(a.alpha, a.n, a.seed)?;
    let samples = sample_maxwell(&params);
    let rep = maxwell_assumption_report(&samples, a.bins)?;
    let r = MaxwellResult {
        alpha: a.alpha,
        n: a.n,
        bins: a.bins,
        mi_xy: ctx.e(rep.mi_xy),
        mi_xz: ctx.e(rep.mi_xz),
        mi_yz: ctx.e(rep.mi_yz),
        speed_mode: rep.speed_mode,
        speed_mode_expected: 1.0 / a.alpha.sqrt(),
        angular_deviation: rep.angular_deviation,
        cos_theta_deviation: rep.cos_theta_deviation,
        phi_deviation: rep.phi_deviation,
        plugin_bias_bound: ctx.e(((a.bins - 1) as f64).powi(2) / (2.0 * a.n as f64)),
        clamped: rep.clamped,
    };
    let meta = ctx.meta().with_seed(a.seed, RNG_ALGORITHM);
    let u = ctx.unit.name();
    let data = emit(ctx, meta, &r, || {
        kv_table(&[
            ("seed", format!("{} ({RNG_ALGORITHM})", a.seed)),
            ("alpha", r.alpha.to_string()),
            ("n", r.n.to_string()),
            ("bins", r.bins.to_string()),
            ("I(vx;vy)", format!("{} {u}", fmt_num(r.mi_xy))),
            ("I(vx;vz)", format!("{} {u}", fmt_num(r.mi_xz))),
            ("I(vy;vz)", format!("{} {u}", fmt_num(r.mi_yz))),
            ("plug-in bias (bins-1)^2/2n", format!("{} {u}", fmt_num(r.plugin_bias_bound))),
            ("speed mode", fmt_num(r.speed_mode)),
            ("1/sqrt(alpha)", fmt_num(r.speed_mode_expected)),
            ("angular deviation", fmt_num(r.angular_deviation)),
        ])
    })?;
    Ok(Output {
        data,
        log: vec![format!("seed = {} ({RNG_ALGORITHM})", a.seed)],
    })
}

#[derive(Serialize)]
struct SweepResultRow {
    bins: usize,
    delta: f64,
    s_binned: f64,
    s_corrected: f64,
    clamped: u64,
}

fn cmd_sweep(ctx: &Ctx, a: &SweepArgs) -> Result<Output, CliError> {
    let (xs, default_range, reference, seed) = match (&a.samples, a.generate) {
        (Some(path), _) => {
            let xs = ingest::read_values(path)?;
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (xs, (lo, hi), None, None)
        }
        (None, Some(Generator::Normal)) => (
            continuum::standard_normals(a.seed, 0, a.n),
            (-6.0, 6.0),
            Some(normal_differential_entropy(1.0)),
            Some(a.seed),
        ),
        (None, Some(Generator::Uniform)) => (
            continuum::uniform_samples(a.seed, 0, a.n),
            (0.0, 1.0),
            Some(0.0),
            Some(a.seed),
        ),
        (None, None) => return Err(CliError::Usage("need --samples or --generate".into())),
    };
    let range = match &a.range {
        None => default_range,
        Some(v) if v.len() == 2 => (v[0], v[1]),
        Some(v) => {
            return Err(CliError::Usage(format!(
                "--range takes LO,HI, got {} values",
                v.len()
            )))
        }
    };
    let rows: Vec<SweepResultRow> = bin_sweep(&xs, &a.bins, range)?
        .into_iter()
        .map(|r| SweepResultRow {
            bins: r.bins,
            delta: r.delta,
            s_binned: ctx.e(r.s_binned),
            s_corrected: ctx.e(r.s_corrected),
            clamped: r.clamped,
        })
        .collect();
    let mut meta = ctx.meta();
    let mut log = Vec::new();
    if let Some(seed) = seed {
        meta = meta.with_seed(seed, RNG_ALGORITHM);
        log.push(format!("seed = {seed} ({RNG_ALGORITHM})"));
    }
    let u = ctx.unit.name();
    let data = emit(ctx, meta, &rows, || {
        let mut out = String::new();
        if let Some(seed) = seed {
            let _ = writeln!(out, "seed {seed} ({RNG_ALGORITHM}), n = {}", xs.len());
        }
        if let Some(h) = reference {
            let _ = writeln!(out, "differential entropy reference = {} {u}", fmt_num(ctx.e(h)));
        }
        let _ = writeln!(out, "{:>6}  {:>12}  {:>12}  {:>14}  {:>8}", "bins", "delta", "s_binned", "s_binned+lnD", "clamped");
        for r in &rows {
            let _ = writeln!(
                out,
                "{:>6}  {:>12}  {:>12}  {:>14}  {:>8}",
                r.bins,
                fmt_num(r.delta),
                fmt_num(r.s_binned),
                fmt_num(r.s_corrected),
                r.clamped
            );
        }
        out
    })?;
    Ok(Output { data, log })
}
