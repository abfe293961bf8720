//! Command-line front end: reads JSON problems, runs the distance
//! computations and verification suites, and writes JSON results with an
//! optional CSV table.

pub mod problem;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ncdist_core::algebra::{AlgebraElement, FiniteAlgebra};
use ncdist_core::classical::{lip, lip_via_levels, lip_via_states, FiniteMetricSpace};
use ncdist_core::hyper::{hausdorff_distance_with, infimum_distance_with, DistanceResult, HyperConfig};
use ncdist_core::lipanalog::{chain_check_with, subadditivity_probe, ChainReport, ProbeReport, ViolationKind, CHAIN_TOL, LEVEL_TOL};
use ncdist_core::numerics::C64;
use ncdist_core::qmetric::{rho_with_config, seminorm_eval, CuttingPlaneConfig, RhoMethod, RhoResult, Seminorm, POLYHEDRAL_GAP_TOL};
use ncdist_core::suites::{run_suite, SuiteReport, SUITES};
use ncdist_core::torus::{build, subcircle_distance_table, torus_seminorm, FuzzyTorusConfig, TorusTable};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use problem::{invalid, ElementSpec, ProblemFile, SeminormSpec, Task};
use report::{Row, RunManifest, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}:{line}:{column}: field `{field}`: {message}")]
    Schema { path: String, line: usize, column: usize, field: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] ncdist_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ncdist_core::Error as E;
        match self {
            CliError::Core(E::NumericalFailure(_)) => 2,
            CliError::Core(E::EmptySet(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncdist", version, about = "Distances between state sets of finite-dimensional C*-algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Also write a CSV table of the results.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,

    /// Seed for every random choice; overrides the seed in the problem file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Record wall-clock timings (the output is then no longer reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance ρ_L between pairs of states.
    Rho(ProblemArgs),
    /// Infimum distance between pairs of state sets.
    Infimum(ProblemArgs),
    /// Hausdorff distance between pairs of state sets.
    Hausdorff(ProblemArgs),
    /// Seminorm values (and classical Lipschitz constants for metric seminorms).
    Lip(ProblemArgs),
    /// The chain L2 ≤ L1 ≤ L for each element.
    L1l2(L1l2Args),
    /// Sub-circle distance table of a fuzzy torus.
    Torus(TorusArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct L1l2Args {
    #[arg(long)]
    pub problem: PathBuf,

    /// Also run the subadditivity probe with this many trials.
    #[arg(long)]
    pub probe: Option<usize>,

    /// Directory receiving one replayable problem file per probe violation.
    #[arg(long, requires = "probe")]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    #[arg(long, default_value_t = 3)]
    pub q: usize,

    #[arg(long, default_value_t = 1)]
    pub p: i64,

    /// Number of representation points.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,

    /// Fourier cutoff M.
    #[arg(long, default_value_t = 1)]
    pub cutoff: usize,

    /// Write the table in z, z' layout.
    #[arg(long)]
    pub table_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// One of classical, embedding, chain, torus-baseline; all when absent.
    #[arg(long)]
    pub suite: Option<String>,

    /// Instance count per check.
    #[arg(long)]
    pub trials: Option<usize>,
}

/// Outcome of a successful run: the exit code reflects convergence and
/// verification status.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
}

struct Context {
    manifest: RunManifest,
    rows: Vec<Row>,
    converged: bool,
    timings: bool,
}

impl Context {
    fn new(command: &str, input: &[u8], seed: u64, tolerances: Tolerances, timings: bool) -> Self {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input_sha256: hex::encode(Sha256::digest(input)),
            seed,
            tolerances,
            timings_ms: timings.then(Vec::new),
        };
        Self { manifest, rows: vec![], converged: true, timings }
    }

    fn timed<T>(&mut self, task: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<(T, f64), CliError> {
        let start = Instant::now();
        let out = f()?;
        let ms = if self.timings { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        if let Some(t) = self.manifest.timings_ms.as_mut() {
            t.push((task.into(), ms));
        }
        Ok((out, ms))
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Rho(a) => problem_command(cli, Task::Rho, &a.problem, None),
        Command::Infimum(a) => problem_command(cli, Task::Infimum, &a.problem, None),
        Command::Hausdorff(a) => problem_command(cli, Task::Hausdorff, &a.problem, None),
        Command::Lip(a) => problem_command(cli, Task::Lip, &a.problem, None),
        Command::L1l2(a) => problem_command(cli, Task::L1l2, &a.problem, Some(a)),
        Command::Torus(a) => torus_command(cli, a),
        Command::Verify(a) => verify_command(cli, a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn finish<T: Serialize>(cli: &Cli, ctx: Context, results: T, code: i32) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Output<'a, T> {
        manifest: &'a RunManifest,
        results: T,
    }
    let mut json = serde_json::to_string_pretty(&Output { manifest: &ctx.manifest, results }).expect("results serialize");
    json.push('\n');
    match &cli.out {
        Some(p) => write(p, json.as_bytes())?,
        None => print!("{json}"),
    }
    if let Some(p) = &cli.csv {
        write(p, report::to_csv(&ctx.rows).as_bytes())?;
    }
    let code = if code == 0 && !ctx.converged { 2 } else { code };
    Ok(Outcome { code })
}

fn resolve_tolerances(problem: Option<&ProblemFile>, l: Option<&Seminorm>, seed: u64) -> (Tolerances, HyperConfig) {
    let base = match l {
        Some(l) if l.is_polyhedral() => CuttingPlaneConfig::tight(),
        _ => CuttingPlaneConfig::default(),
    };
    let hyper_default = HyperConfig::default();
    let t = problem.map(|p| p.tolerances.clone()).unwrap_or_default();
    let cp = CuttingPlaneConfig {
        rel_tol: t.rel_tol.unwrap_or(base.rel_tol),
        abs_tol: t.abs_tol.unwrap_or(base.abs_tol),
        max_cuts: t.max_cuts.unwrap_or(base.max_cuts),
        box_bound: t.box_bound.unwrap_or(base.box_bound),
    };
    let hyper = HyperConfig {
        cutting_plane: Some(cp),
        seed,
        first_batch: t.first_batch.unwrap_or(hyper_default.first_batch),
        plateau: t.plateau.unwrap_or(hyper_default.plateau),
        max_samples: t.max_samples.unwrap_or(hyper_default.max_samples),
    };
    let tol = Tolerances {
        cutting_plane: cp,
        first_batch: hyper.first_batch,
        plateau: hyper.plateau,
        max_samples: hyper.max_samples,
        l1_samples: t.l1_samples.unwrap_or(report::L1_SAMPLES),
        polyhedral_gap: POLYHEDRAL_GAP_TOL,
        level_tol: LEVEL_TOL,
        chain_tol: CHAIN_TOL,
    };
    (tol, hyper)
}

fn rho_method(m: &RhoMethod) -> &'static str {
    match m {
        RhoMethod::ExactLp => "exact-lp",
        RhoMethod::CuttingPlane => "cutting-plane",
        RhoMethod::KernelObstruction => "kernel-obstruction",
    }
}

#[derive(Serialize)]
struct PairResult<T> {
    instance_id: String,
    i: usize,
    j: usize,
    result: T,
}

#[derive(Serialize)]
struct LipResult {
    instance_id: String,
    seminorm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical: Option<ClassicalLip>,
}

#[derive(Serialize)]
struct ClassicalLip {
    lip: f64,
    via_states: f64,
    via_levels: f64,
}

#[derive(Serialize)]
struct ChainResult {
    instance_id: String,
    #[serde(flatten)]
    report: ChainReport,
}

#[derive(Serialize)]
struct L1l2Output {
    chain: Vec<ChainResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<ProbeReport>,
}

fn problem_command(cli: &Cli, task: Task, path: &Path, l1l2: Option<&L1l2Args>) -> Result<Outcome, CliError> {
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| invalid(&path.display().to_string(), e))?;
    let problem = ProblemFile::parse(text, &path.display().to_string())?;
    if let Some(t) = problem.task {
        if t != task {
            return Err(invalid("task", format!("the problem declares {t:?} but the {task:?} command was run")));
        }
    }
    let algebra = problem.algebra()?;
    let l = problem.seminorm.build(&algebra)?;
    let seed = cli.seed.or(problem.seed).unwrap_or(0);
    let (tol, hyper) = resolve_tolerances(Some(&problem), Some(&l), seed);
    let cp = tol.cutting_plane;
    let l1_samples = tol.l1_samples;
    let command = format!("{task:?}").to_lowercase();
    let mut ctx = Context::new(&command, &bytes, seed, tol, cli.timings);
    log::info!("{command}: algebra {:?}, seed {seed}", algebra.blocks());

    match task {
        Task::Rho => {
            let states = problem
                .states
                .iter()
                .enumerate()
                .map(|(k, s)| s.state(&algebra, &format!("states[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = Vec::new();
            for (i, j) in problem.pairs_for(states.len(), "states")? {
                let id = format!("rho[{i},{j}]");
                let (r, ms): (RhoResult, f64) = ctx.timed(&id, || Ok(rho_with_config(&l, &states[i], &states[j], &cp)?))?;
                ctx.converged &= r.converged;
                ctx.rows.push(Row::new(&id, "rho", r.value, r.lower, r.upper, rho_method(&r.method), r.iterations, ms));
                out.push(PairResult { instance_id: id, i, j, result: r });
            }
            finish(cli, ctx, out, 0)
        }
        Task::Infimum | Task::Hausdorff => {
            let sets = problem
                .sets
                .iter()
                .enumerate()
                .map(|(k, s)| s.build(&algebra, &format!("sets[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let (name, f): (&str, fn(_, _, _, _) -> _) = if task == Task::Infimum {
                ("I", infimum_distance_with)
            } else {
                ("H", hausdorff_distance_with)
            };
            let mut out = Vec::new();
            for (i, j) in problem.pairs_for(sets.len(), "sets")? {
                let id = format!("{name}[{i},{j}]");
                let (r, ms): (DistanceResult, f64) = ctx.timed(&id, || Ok(f(&sets[i], &sets[j], &l, &hyper)?))?;
                ctx.converged &= r.converged;
                ctx.rows.push(Row::new(&id, name, r.value, r.lower, r.upper, r.method.as_str(), r.iterations, ms));
                out.push(PairResult { instance_id: id, i, j, result: r });
            }
            finish(cli, ctx, out, 0)
        }
        Task::Lip => {
            let elements = elements(&problem, &algebra)?;
            let space = match &problem.seminorm {
                SeminormSpec::Metric { distances, .. } => Some(FiniteMetricSpace::new(distances.clone())?),
                _ => None,
            };
            let mut out = Vec::new();
            for (k, a) in elements.iter().enumerate() {
                let id = format!("a[{k}]");
                let (v, ms) = ctx.timed(&id, || Ok(seminorm_eval(&l, a)?))?;
                ctx.rows.push(Row::new(&id, "L", v, v, v, "exact-lp", 0, ms));
                let classical = match &space {
                    Some(x) => {
                        let f: Vec<f64> = a.blocks().iter().map(|b| b[(0, 0)].re).collect();
                        let c = ClassicalLip { lip: lip(&f, x)?, via_states: lip_via_states(&f, x)?, via_levels: lip_via_levels(&f, x)? };
                        ctx.rows.push(Row::new(&id, "lip", c.lip, c.lip, c.lip, "enumeration", 0, 0.0));
                        ctx.rows.push(Row::new(&id, "lip_states", c.via_states, c.via_states, c.via_states, "exact-lp", 0, 0.0));
                        ctx.rows.push(Row::new(&id, "lip_levels", c.via_levels, c.via_levels, c.via_levels, "exact-lp", 0, 0.0));
                        Some(c)
                    }
                    None => None,
                };
                out.push(LipResult { instance_id: id, seminorm: v, classical });
            }
            finish(cli, ctx, out, 0)
        }
        Task::L1l2 => {
            let elements = elements(&problem, &algebra)?;
            let mut chain = Vec::new();
            for (k, a) in elements.iter().enumerate() {
                let id = format!("a[{k}]");
                let (report, ms) = ctx.timed(&id, || Ok(chain_check_with(a, &l, l1_samples, &hyper)?))?;
                ctx.rows.push(Row::new(&id, "L", report.l, report.l, report.l, "exact-lp", 0, ms));
                for (q, b) in [("L1", &report.l1), ("L2", &report.l2)] {
                    ctx.rows.push(Row::new(&id, q, b.value, b.lower, b.upper, b.method.as_str(), 0, 0.0));
                }
                chain.push(ChainResult { instance_id: id, report });
            }
            let probe = match l1l2.and_then(|a| a.probe) {
                Some(trials) => {
                    let (p, _) = ctx.timed("probe", || Ok(subadditivity_probe(&l, &algebra, trials, seed)?))?;
                    if let Some(dir) = l1l2.and_then(|a| a.export.as_ref()) {
                        export_violations(dir, &problem, &l, &p)?;
                    }
                    Some(p)
                }
                None => None,
            };
            finish(cli, ctx, L1l2Output { chain, probe }, 0)
        }
    }
}

fn elements(problem: &ProblemFile, algebra: &FiniteAlgebra) -> Result<Vec<AlgebraElement>, CliError> {
    problem.elements.iter().enumerate().map(|(k, e)| e.element(algebra, &format!("elements[{k}]"))).collect()
}

/// Writes each violating pair as an `l1l2` problem on `a`, `b` and the
/// combination the inequality was tested on.
fn export_violations(dir: &Path, problem: &ProblemFile, l: &Seminorm, probe: &ProbeReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    for (k, v) in probe.violations.iter().enumerate() {
        let combined = match v.kind {
            ViolationKind::Subadditivity => v.a.add(&v.b)?,
            ViolationKind::Leibniz => v.a.mul(&v.b)?.hermitian_part(),
        };
        let file = ProblemFile {
            algebra: problem.algebra.clone(),
            seminorm: SeminormSpec::from_seminorm(l),
            task: Some(Task::L1l2),
            states: vec![],
            sets: vec![],
            elements: [&v.a, &v.b, &combined].into_iter().map(ElementSpec::from_element).collect(),
            pairs: None,
            seed: Some(probe.seed),
            tolerances: problem.tolerances.clone(),
        };
        let mut json = serde_json::to_string_pretty(&file).expect("problem serializes");
        json.push('\n');
        write(&dir.join(format!("violation-{k:04}.json")), json.as_bytes())?;
    }
    Ok(())
}

/// Distinct points of a spectrum, in order of first appearance.
pub fn distinct(zs: Vec<C64>) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::new();
    for z in zs {
        if out.iter().all(|w| (w - z).norm() > 1e-9) {
            out.push(z);
        }
    }
    out
}

#[derive(Serialize)]
struct TorusOutput {
    config: FuzzyTorusConfig,
    theta: f64,
    commutation_residual: f64,
    table: TorusTable,
}

fn torus_command(cli: &Cli, a: &TorusArgs) -> Result<Outcome, CliError> {
    let seed = cli.seed.unwrap_or(0);
    let input = format!("torus q={} p={} reps={} cutoff={}", a.q, a.p, a.reps, a.cutoff);
    let config = FuzzyTorusConfig::standard(a.q, a.p, a.reps, a.cutoff);
    let bundle = build(&config)?;
    let l = torus_seminorm(&bundle)?;
    let (tol, hyper) = resolve_tolerances(None, Some(&l), seed);
    let mut ctx = Context::new("torus", input.as_bytes(), seed, tol, cli.timings);
    let zs = distinct(config.v_spectrum());
    log::info!("torus: {} sub-circles, realized dimension {:?}", zs.len(), bundle.algebra.blocks());
    let (table, ms) = ctx.timed("table", || Ok(subcircle_distance_table(&bundle, &l, &zs, &hyper)?))?;
    for e in &table.entries {
        let id = format!("torus[{},{}]", e.i, e.j);
        ctx.converged &= e.infimum.converged && e.hausdorff.converged;
        for (q, r) in [("I", &e.infimum), ("H", &e.hausdorff)] {
            ctx.rows.push(Row::new(&id, q, r.value, r.lower, r.upper, r.method.as_str(), r.iterations, ms));
        }
    }
    if let Some(p) = &a.table_csv {
        write(p, table.to_csv().as_bytes())?;
    }
    let out = TorusOutput { theta: bundle.theta, commutation_residual: bundle.commutation_residual, config, table };
    finish(cli, ctx, out, 0)
}

fn verify_command(cli: &Cli, a: &VerifyArgs) -> Result<Outcome, CliError> {
    let seed = cli.seed.unwrap_or(0);
    let names: Vec<&str> = match &a.suite {
        Some(s) if SUITES.contains(&s.as_str()) => vec![s.as_str()],
        Some(s) => return Err(CliError::Invalid(format!("unknown suite `{s}`; expected one of {}", SUITES.join(", ")))),
        None => SUITES.to_vec(),
    };
    let trials = a.trials.map_or("default".to_string(), |t| t.to_string());
    let input = format!("verify suites={} trials={trials}", names.join(","));
    let (tol, _) = resolve_tolerances(None, None, seed);
    let mut ctx = Context::new("verify", input.as_bytes(), seed, tol, cli.timings);
    let mut reports: Vec<SuiteReport> = Vec::new();
    for name in names {
        let (r, ms) = ctx.timed(name, || Ok(run_suite(name, a.trials, seed)?))?;
        for c in &r.checks {
            let id = format!("{}/{}", r.suite, c.name);
            let verdict = if c.passed { "pass" } else { "fail" };
            ctx.rows.push(Row::new(&id, "max_deviation", c.max_deviation, 0.0, c.tolerance, verdict, c.instances, ms));
        }
        log::info!("suite {}: {}", r.suite, if r.passed { "passed" } else { "FAILED" });
        reports.push(r);
    }
    let code = if reports.iter().all(|r| r.passed) { 0 } else { 2 };
    finish(cli, ctx, reports, code)
}
