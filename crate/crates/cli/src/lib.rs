//! Command-line front end: mesh generation, single solves, convergence and
//! condition-number studies.

pub mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_list, parse_pairs, ConfigFile};
use fracdg::assembly::{assemble_system_with, EtaRule, FluxScheme, FracOperators, PenaltyConfig, PenaltyLaw};
use fracdg::fracint::{FracParams, OuterRule};
use fracdg::mesh::{load_mesh, write_native, Mesh};
use fracdg::solver::{relative_residual, solve_dense};
use fracdg::space::DgSpace;
use fracdg::verify::{
    energy_error, l2_error, run_condition_study, run_convergence_study, CaseKind, ConditionTable, ConvergenceReport,
    ManufacturedCase, MeshFamily, StudyConfig,
};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, input files or parameter ranges (exit 1).
    Usage(String),
    /// Singular systems, failed study points or failed trend checks (exit 2).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<fracdg::Error> for CliError {
    fn from(e: fracdg::Error) -> Self {
        use fracdg::Error as E;
        match e {
            E::OutsideMesh(..) | E::SingularMatrix { .. } | E::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "fracdg", version, about = "DG solvers for 2D Riemann-Liouville fractional elliptic problems")]
pub struct Cli {
    /// Text file of `key = value` defaults; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for assembly and study points.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a generated mesh in the native text format.
    MeshGen(MeshGenArgs),
    /// Assemble and solve one problem and report its errors.
    Solve(SolveArgs),
    /// Refinement study written as CSV.
    Convergence(StudyArgs),
    /// Condition numbers of the system matrices, one column per flux.
    Cond(CondArgs),
}

#[derive(Args, Debug, Default)]
pub struct MeshArgs {
    /// Cells per side of a generated mesh.
    #[arg(long)]
    pub gen_mesh: Option<usize>,
    /// Mesh file (native or Gmsh 2.2 ASCII).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// structured | jittered | lshape
    #[arg(long)]
    pub mesh_kind: Option<String>,
    /// Vertex perturbation as a fraction of the spacing.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct ProblemArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Penalty constant λ̃.
    #[arg(long)]
    pub lambda_tilde: Option<f64>,
    /// analysis (λ̃/h) | constant (λ̃) | fractional (λ̃/h^(max(α,β)−1))
    #[arg(long)]
    pub penalty_law: Option<String>,
    /// LDG switch: min-id or a direction "x,y".
    #[arg(long)]
    pub eta: Option<String>,
    /// Outer quadrature of the fractional couplings: volume | graded:LEVELS:POINTS
    #[arg(long)]
    pub outer: Option<String>,
    /// example1 | lshape-smooth | example2
    #[arg(long)]
    pub case: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct MeshGenArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct SolveArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub order: Option<usize>,
    /// central | ldg | ip
    #[arg(long)]
    pub flux: Option<String>,
    /// Write per-element solution coefficients to this file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Write the system matrix as binary (u64 LE rows, cols, then f64 LE).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct StudyArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Refinement levels, e.g. 2,4,8,16.
    #[arg(long)]
    pub levels: Option<String>,
    /// Polynomial orders, e.g. 1,2.
    #[arg(long)]
    pub orders: Option<String>,
    /// Parameter pairs alpha:beta, e.g. 1.4:1.4,1.9:1.9.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Fluxes, e.g. central,ldg,ip.
    #[arg(long)]
    pub fluxes: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Skip the energy-norm error.
    #[arg(long)]
    pub no_energy: bool,
    /// Also compute condition numbers.
    #[arg(long)]
    pub cond: bool,
    /// Record wall times (the CSV is then no longer reproducible byte for byte).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Default)]
pub struct CondArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Structured refinement levels m (K = 2m²).
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub fluxes: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exit with status 2 if any column does not grow with K.
    #[arg(long)]
    pub check_trends: bool,
}

/// Flag value, else config value, else `None`.
fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(cfg.get(key)?),
    }
}

fn pick_str(flag: &Option<String>, cfg: &ConfigFile, key: &str) -> Option<String> {
    flag.clone().or_else(|| cfg.raw(key).map(str::to_string))
}

fn pick_path(flag: &Option<PathBuf>, cfg: &ConfigFile, key: &str) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.raw(key).map(PathBuf::from))
}

fn params(alpha: f64, beta: f64) -> Result<FracParams, CliError> {
    FracParams::new(alpha, beta).map_err(|e| usage(e.to_string()))
}

fn eta_rule(p: &ProblemArgs, cfg: &ConfigFile) -> Result<EtaRule, CliError> {
    match pick_str(&p.eta, cfg, "eta").as_deref() {
        None | Some("min-id") => Ok(EtaRule::MinId),
        Some(s) => {
            let v = parse_list::<f64>(s).map_err(|e| usage(format!("eta: {e}")))?;
            match v.as_slice() {
                [x, y] if x.is_finite() && y.is_finite() && (*x != 0.0 || *y != 0.0) => Ok(EtaRule::Direction([*x, *y])),
                _ => Err(usage(format!("eta must be min-id or a nonzero direction x,y, got '{s}'"))),
            }
        }
    }
}

fn flux(name: &str, eta: EtaRule) -> Result<FluxScheme, CliError> {
    match name {
        "central" => Ok(FluxScheme::Central),
        "ldg" => Ok(FluxScheme::Ldg(eta)),
        "ip" => Ok(FluxScheme::Ip),
        _ => Err(usage(format!("unknown flux '{name}' (central, ldg, ip)"))),
    }
}

/// Explicit penalty settings, or `None` for the per-scheme default.
fn penalty_override(p: &ProblemArgs, cfg: &ConfigFile) -> Result<Option<(Option<f64>, Option<PenaltyLaw>)>, CliError> {
    let lt: Option<f64> = pick(p.lambda_tilde, cfg, "lambda-tilde")?;
    let law = match pick_str(&p.penalty_law, cfg, "penalty-law").as_deref() {
        None => None,
        Some("analysis") => Some(PenaltyLaw::Analysis),
        Some("constant") => Some(PenaltyLaw::Constant),
        Some("fractional") => Some(PenaltyLaw::Fractional),
        Some(s) => return Err(usage(format!("unknown penalty law '{s}' (analysis, constant, fractional)"))),
    };
    if let Some(v) = lt {
        if !(v > 0.0 && v.is_finite()) {
            return Err(usage(format!("lambda-tilde must be positive, got {v}")));
        }
    }
    Ok(if lt.is_none() && law.is_none() { None } else { Some((lt, law)) })
}

fn resolve_penalty(over: Option<(Option<f64>, Option<PenaltyLaw>)>, scheme: FluxScheme, order: usize) -> Result<PenaltyConfig, CliError> {
    let d = PenaltyConfig::default_for(scheme, order);
    match over {
        None => Ok(d),
        Some((lt, law)) => Ok(PenaltyConfig::new(lt.unwrap_or(d.lambda_tilde), law.unwrap_or(d.law))?),
    }
}

fn outer_rule(p: &ProblemArgs, cfg: &ConfigFile) -> Result<OuterRule, CliError> {
    match pick_str(&p.outer, cfg, "outer").as_deref() {
        None | Some("volume") => Ok(OuterRule::Volume),
        Some(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                ["graded", l, n] => {
                    let levels = l.parse::<usize>().map_err(|e| usage(format!("outer levels: {e}")))?;
                    let points = n.parse::<usize>().map_err(|e| usage(format!("outer points: {e}")))?;
                    if levels == 0 || points == 0 || levels > 40 || points > 32 {
                        return Err(usage("graded outer rule needs 1..=40 levels and 1..=32 points"));
                    }
                    Ok(OuterRule::Graded { levels, points })
                }
                _ => Err(usage(format!("outer must be volume or graded:LEVELS:POINTS, got '{s}'"))),
            }
        }
    }
}

fn family(m: &MeshArgs, cfg: &ConfigFile) -> Result<MeshFamily, CliError> {
    let kind = pick_str(&m.mesh_kind, cfg, "mesh-kind").unwrap_or_else(|| "structured".into());
    let seed: u64 = pick(m.seed, cfg, "seed")?.unwrap_or(1);
    let jitter: Option<f64> = pick(m.jitter, cfg, "jitter")?;
    match kind.as_str() {
        "structured" => Ok(MeshFamily::Structured),
        "jittered" => Ok(MeshFamily::Jittered { amplitude: jitter.unwrap_or(0.25), seed }),
        "lshape" => Ok(MeshFamily::LShape { jitter: jitter.unwrap_or(0.0), seed }),
        _ => Err(usage(format!("unknown mesh kind '{kind}' (structured, jittered, lshape)"))),
    }
}

fn case_kind(p: &ProblemArgs, cfg: &ConfigFile, fam: MeshFamily) -> Result<CaseKind, CliError> {
    match pick_str(&p.case, cfg, "case") {
        Some(s) => Ok(CaseKind::parse(&s)?),
        None => Ok(match fam {
            MeshFamily::LShape { .. } => CaseKind::LShapeSmooth,
            _ => CaseKind::Example1,
        }),
    }
}

fn mesh_from(m: &MeshArgs, cfg: &ConfigFile) -> Result<(Mesh, MeshFamily), CliError> {
    let fam = family(m, cfg)?;
    let gen: Option<usize> = pick(m.gen_mesh, cfg, "gen-mesh")?;
    let file = pick_path(&m.mesh, cfg, "mesh");
    match (gen, file) {
        (Some(_), Some(_)) => Err(usage("give either --gen-mesh or --mesh, not both")),
        (None, None) => Err(usage("a mesh is required: --gen-mesh M or --mesh FILE")),
        (Some(level), None) => {
            if level == 0 || level > 400 {
                return Err(usage(format!("gen-mesh must be in 1..=400, got {level}")));
            }
            Ok((fam.build(level)?, fam))
        }
        (None, Some(path)) => Ok((load_mesh(&path)?, fam)),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Runs a parsed command line, writing the summary to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    if let Some(j) = pick(cli.jobs, &cfg, "jobs")? {
        if j == 0 {
            return Err(usage("jobs must be at least 1"));
        }
        // A pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let mut text = String::new();
    match &cli.command {
        Command::MeshGen(a) => mesh_gen(a, &cfg, &mut text)?,
        Command::Solve(a) => solve(a, &cfg, &mut text)?,
        Command::Convergence(a) => convergence(a, &cfg, &mut text)?,
        Command::Cond(a) => cond(a, &cfg, &mut text)?,
    }
    out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string()))
}

fn mesh_gen(a: &MeshGenArgs, cfg: &ConfigFile, out: &mut String) -> Result<(), CliError> {
    let (mesh, _) = mesh_from(&a.mesh, cfg)?;
    let text = write_native(&mesh);
    match pick_path(&a.output, cfg, "output") {
        Some(p) => {
            write_file(&p, &text)?;
            let _ = writeln!(out, "wrote {} ({} elements)", p.display(), mesh.num_elements());
        }
        None => out.push_str(&text),
    }
    Ok(())
}

fn solve(a: &SolveArgs, cfg: &ConfigFile, out: &mut String) -> Result<(), CliError> {
    let start = Instant::now();
    let alpha: f64 = pick(a.problem.alpha, cfg, "alpha")?.unwrap_or(1.5);
    let beta: f64 = pick(a.problem.beta, cfg, "beta")?.unwrap_or(alpha);
    let params = params(alpha, beta)?;
    let order: usize = pick(a.order, cfg, "order")?.unwrap_or(1);
    if order == 0 || order > fracdg::basis::MAX_ORDER {
        return Err(usage(format!("order must be in 1..={}", fracdg::basis::MAX_ORDER)));
    }
    let eta = eta_rule(&a.problem, cfg)?;
    let scheme = flux(&pick_str(&a.flux, cfg, "flux").unwrap_or_else(|| "central".into()), eta)?;
    let penalty = resolve_penalty(penalty_override(&a.problem, cfg)?, scheme, order)?;
    let outer = outer_rule(&a.problem, cfg)?;
    let (mesh, fam) = mesh_from(&a.mesh, cfg)?;
    let case = ManufacturedCase::new(case_kind(&a.problem, cfg, fam)?, params);

    let space = DgSpace::new(mesh, order)?;
    let ops = FracOperators::with_outer(&space, params, outer)?;
    let sys = assemble_system_with(&space, &ops, scheme, &penalty, &|p| case.forcing(p))?;
    let u = solve_dense(&sys.matrix, &sys.rhs)?;
    let l2 = l2_error(&space, &u, &|p| case.exact(p));
    let energy = energy_error(&space, &u, &case)?;
    let residual = relative_residual(&sys.matrix, &u, &sys.rhs);

    if let Some(p) = &a.dump {
        let mut s = String::from("# element coefficients\n");
        for e in 0..space.mesh().num_elements() {
            let cells: Vec<String> = u[space.dofs(e)].iter().map(|c| format!("{c:.16e}")).collect();
            let _ = writeln!(s, "{e} {}", cells.join(" "));
        }
        write_file(p, &s)?;
    }
    if let Some(p) = &a.matrix {
        sys.write_matrix_binary(p)?;
    }
    let _ = writeln!(out, "case = {}", case.kind.name());
    let _ = writeln!(out, "flux = {}", scheme.name());
    let _ = writeln!(out, "alpha = {} beta = {}", params.alpha(), params.beta());
    let _ = writeln!(out, "N = {order}");
    let _ = writeln!(out, "K = {}", space.mesh().num_elements());
    let _ = writeln!(out, "DOFs = {}", space.ndofs());
    let _ = writeln!(out, "L2 error = {l2:.6e}");
    let _ = writeln!(out, "energy error = {energy:.6e}");
    let _ = writeln!(out, "residual = {residual:.3e}");
    let _ = writeln!(out, "wall time = {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn pairs_from(pairs: &Option<String>, p: &ProblemArgs, cfg: &ConfigFile) -> Result<Vec<FracParams>, CliError> {
    let list = match pick_str(pairs, cfg, "pairs") {
        Some(s) => parse_pairs(&s).map_err(|e| usage(format!("pairs: {e}")))?,
        None => {
            let alpha: f64 = pick(p.alpha, cfg, "alpha")?.unwrap_or(1.5);
            let beta: f64 = pick(p.beta, cfg, "beta")?.unwrap_or(alpha);
            vec![(alpha, beta)]
        }
    };
    list.into_iter().map(|(a, b)| params(a, b)).collect()
}

fn fluxes_from(s: Option<String>, eta: EtaRule) -> Result<Vec<FluxScheme>, CliError> {
    let names = s.unwrap_or_else(|| "central,ldg,ip".into());
    parse_list::<String>(&names).map_err(|e| usage(format!("fluxes: {e}")))?.iter().map(|n| flux(n, eta)).collect()
}

fn levels_from(s: Option<String>, default: &str) -> Result<Vec<usize>, CliError> {
    let v = parse_list::<usize>(&s.unwrap_or_else(|| default.into())).map_err(|e| usage(format!("levels: {e}")))?;
    if v.iter().any(|&l| l == 0 || l > 400) {
        return Err(usage("levels must be in 1..=400"));
    }
    Ok(v)
}

/// Penalty for a study: explicit settings apply to every scheme.
fn study_penalty(p: &ProblemArgs, cfg: &ConfigFile, schemes: &[FluxScheme]) -> Result<Option<PenaltyConfig>, CliError> {
    match penalty_override(p, cfg)? {
        None => Ok(None),
        Some(over) => Ok(Some(resolve_penalty(Some(over), schemes[0], 1)?)),
    }
}

fn finish_report(report: &mut ConvergenceReport, timing: bool) {
    if !timing {
        report.rows.iter_mut().for_each(|r| r.wall_time = f64::NAN);
    }
}

fn convergence(a: &StudyArgs, cfg: &ConfigFile, out: &mut String) -> Result<(), CliError> {
    let fam = family(&a.mesh, cfg)?;
    if a.mesh.gen_mesh.is_some() || a.mesh.mesh.is_some() {
        return Err(usage("convergence uses --levels and --mesh-kind, not a single mesh"));
    }
    let levels = levels_from(pick_str(&a.levels, cfg, "levels"), "2,4,8")?;
    if levels.len() < 2 {
        return Err(usage("convergence needs at least two levels"));
    }
    let orders = parse_list::<usize>(&pick_str(&a.orders, cfg, "orders").unwrap_or_else(|| "1".into()))
        .map_err(|e| usage(format!("orders: {e}")))?;
    if orders.iter().any(|&n| n == 0 || n > fracdg::basis::MAX_ORDER) {
        return Err(usage(format!("orders must be in 1..={}", fracdg::basis::MAX_ORDER)));
    }
    let eta = eta_rule(&a.problem, cfg)?;
    let schemes = fluxes_from(pick_str(&a.fluxes, cfg, "fluxes"), eta)?;
    let config = StudyConfig {
        case: case_kind(&a.problem, cfg, fam)?,
        family: fam,
        levels,
        orders,
        params: pairs_from(&a.pairs, &a.problem, cfg)?,
        penalty: study_penalty(&a.problem, cfg, &schemes)?,
        schemes,
        outer: outer_rule(&a.problem, cfg)?,
        energy: !a.no_energy,
        condition: a.cond,
    };
    let mut report = run_convergence_study(&config)?;
    finish_report(&mut report, a.timing);
    emit_report(&report, pick_path(&a.output, cfg, "output").as_deref(), out)?;
    if !report.diagnostics.is_empty() {
        return Err(CliError::Numerical(format!("{} study point(s) failed: {}", report.diagnostics.len(), report.diagnostics.join("; "))));
    }
    Ok(())
}

/// Writes the CSV and one (h, error) companion file per (N, flux).
fn emit_report(report: &ConvergenceReport, path: Option<&Path>, out: &mut String) -> Result<(), CliError> {
    let csv = report.to_csv();
    let Some(path) = path else {
        out.push_str(&csv);
        return Ok(());
    };
    write_file(path, &csv)?;
    let _ = writeln!(out, "wrote {}", path.display());
    let stem = path.with_extension("");
    let mut keys: Vec<(usize, String)> = Vec::new();
    for r in &report.rows {
        if !keys.contains(&(r.order, r.flux.clone())) {
            keys.push((r.order, r.flux.clone()));
        }
    }
    for (order, flux) in keys {
        let sub = ConvergenceReport {
            rows: report.rows.iter().filter(|r| r.order == order && r.flux == flux).cloned().collect(),
            ..Default::default()
        };
        let p = PathBuf::from(format!("{}_N{order}_{flux}.dat", stem.display()));
        let mut text = String::from("# h l2_error\n");
        text.push_str(&sub.companion(false));
        write_file(&p, &text)?;
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(())
}

fn cond(a: &CondArgs, cfg: &ConfigFile, out: &mut String) -> Result<(), CliError> {
    let levels = levels_from(pick_str(&a.levels, cfg, "levels"), "2,3,4,5")?;
    let order: usize = pick(a.order, cfg, "order")?.unwrap_or(1);
    if order == 0 || order > fracdg::basis::MAX_ORDER {
        return Err(usage(format!("order must be in 1..={}", fracdg::basis::MAX_ORDER)));
    }
    let eta = eta_rule(&a.problem, cfg)?;
    let schemes = fluxes_from(pick_str(&a.fluxes, cfg, "fluxes"), eta)?;
    let config = StudyConfig {
        case: CaseKind::Example1,
        family: MeshFamily::Structured,
        levels,
        orders: vec![order],
        params: pairs_from(&a.pairs, &a.problem, cfg)?,
        penalty: study_penalty(&a.problem, cfg, &schemes)?,
        schemes,
        outer: outer_rule(&a.problem, cfg)?,
        energy: false,
        condition: true,
    };
    let report = run_condition_study(&config)?;
    let table = ConditionTable::from_report(&report);
    let csv = table.to_csv();
    match pick_path(&a.output, cfg, "output") {
        Some(p) => {
            write_file(&p, &csv)?;
            let _ = writeln!(out, "wrote {}", p.display());
        }
        None => out.push_str(&csv),
    }
    if !report.diagnostics.is_empty() {
        return Err(CliError::Numerical(report.diagnostics.join("; ")));
    }
    if a.check_trends {
        let bad = table.trend_violations();
        if !bad.is_empty() {
            return Err(CliError::Numerical(format!("condition numbers do not grow with K: {}", bad.join("; "))));
        }
    }
    Ok(())
}
