//! Command-line front end. One command per invocation; all results land in
//! machine-readable files whose keys and columns are frozen (see
//! docs/output-schema.md) so downstream plotting scripts stay stable.
//!
//! Exit codes: 0 success, 1 invalid input, 2 non-convergence or other
//! numerical breakdown, 3 theorem-verdict failure. Code 3 exists so CI can
//! distinguish "a checked inequality failed" from operational errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    convergence_study, level_set_table, payne_rayner_report, r_grid, schwarz_sweep,
    verify_levelset_inequalities, AnalysisError, ConvergenceStudy, LevelSetTable,
    PayneRaynerReport, SchwarzSweep,
};
use crate::geometry::{build_mesh, DomainSpec, Point};
use crate::output::{csv_table, fmt_f64, JsonObject};
use crate::solver::{minimize_quotient, SolveResult, SolverConfig, SolverError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERDICT_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sobolev",
    version,
    about = "Sharp Sobolev constants and extremal profiles on planar domains",
    long_about = "Computes the sharp constant C_p(D) of the embedding H^1_0(D) -> L^p(D) \
                  and its extremal profile with P1 finite elements, and checks the \
                  monotonicity, log-convexity, and reverse-Hölder inequalities that the \
                  constant satisfies."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute C_p and the extremal profile on one domain.
    Solve(SolveArgs),
    /// Sweep r and compare C_p(f(r·disk)) against C_p(r·disk).
    Schwarz(SchwarzArgs),
    /// Reverse-Hölder report for the extremal profile (Saint-Venant at p=1).
    #[command(name = "payne-rayner")]
    PayneRayner(PayneRaynerArgs),
    /// Superlevel-set table and differential-inequality verdicts.
    Levelsets(LevelsetsArgs),
    /// Mesh-refinement study of C_p at h, h/2, h/4, ...
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Domain as inline JSON or as a path to a JSON file.
    #[arg(long)]
    pub domain: String,
    /// Integrability exponent; must be >= 1.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Target mesh resolution (edge length scale).
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    /// Output path; defaults to sobolev_<subcommand>.<ext> in the working
    /// directory. Sidecar files derive their names from this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the primary output (tables default to csv, reports to json).
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Thread-pool size for sweep parallelism (default: machine parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the nodal field to <out stem>.field.csv.
    #[arg(long)]
    pub dump_field: bool,
}

#[derive(Args, Debug)]
pub struct SchwarzArgs {
    /// The --domain spec must have type "map_image"; its "r" entry is
    /// ignored in favor of the sweep grid flags.
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0.1)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub r_max: f64,
    #[arg(long, default_value_t = 9)]
    pub r_count: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub r_spacing: Spacing,
    /// Permit sweep radii above 0.95 (mesh distortion grows sharply there).
    #[arg(long)]
    pub allow_large_r: bool,
}

#[derive(Args, Debug)]
pub struct PayneRaynerArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct LevelsetsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of threshold samples between 0 and max(phi); at least 16.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Base point for the moment integral H1, as "x,y" (default: mesh centroid).
    #[arg(long)]
    pub base_point: Option<String>,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of successively halved resolutions to solve.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// A command failure carrying its exit code; the message goes to stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INVALID_INPUT, message: message.into() }
    }
    fn not_converged(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_NOT_CONVERGED, message: message.into() }
    }
}

impl From<AnalysisError> for Failure {
    fn from(err: AnalysisError) -> Failure {
        let code = match &err {
            AnalysisError::Geometry(_) => EXIT_INVALID_INPUT,
            AnalysisError::Solver(SolverError::InvalidConfig(_)) => EXIT_INVALID_INPUT,
            AnalysisError::Solver(_) => EXIT_NOT_CONVERGED,
            AnalysisError::SweepTooSparse { .. } => EXIT_NOT_CONVERGED,
            AnalysisError::InsufficientRegularRows { .. } => EXIT_NOT_CONVERGED,
            AnalysisError::WrongExponent { .. } => EXIT_INVALID_INPUT,
            AnalysisError::RadiusOutOfRange { .. } => EXIT_INVALID_INPUT,
            AnalysisError::InvalidGrid(_) => EXIT_INVALID_INPUT,
        };
        Failure { code, message: err.to_string() }
    }
}

impl From<crate::geometry::GeometryError> for Failure {
    fn from(err: crate::geometry::GeometryError) -> Failure {
        Failure::invalid(err.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(err: SolverError) -> Failure {
        match &err {
            SolverError::InvalidConfig(_) => Failure::invalid(err.to_string()),
            _ => Failure::not_converged(err.to_string()),
        }
    }
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if ok { EXIT_OK } else { EXIT_INVALID_INPUT };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Schwarz(args) => cmd_schwarz(args),
        Command::PayneRayner(args) => cmd_payne_rayner(args),
        Command::Levelsets(args) => cmd_levelsets(args),
        Command::Convergence(args) => cmd_convergence(args),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

fn setup_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // Ignore the error from re-initialization (only possible when run()
        // is invoked twice in one process, e.g. from tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_domain(raw: &str) -> Result<DomainSpec, Failure> {
    let trimmed = raw.trim();
    let json = if trimmed.starts_with('{') {
        trimmed.to_string()
    } else {
        std::fs::read_to_string(trimmed).map_err(|e| {
            Failure::invalid(format!("cannot read domain file {trimmed}: {e}"))
        })?
    };
    DomainSpec::from_json(&json).map_err(|e| Failure::invalid(e.to_string()))
}

fn validate_common(common: &CommonArgs) -> Result<SolverConfig, Failure> {
    if !(common.h.is_finite() && common.h > 0.0) {
        return Err(Failure::invalid(format!(
            "resolution h must be positive, got {}",
            common.h
        )));
    }
    let config = SolverConfig::new(common.p);
    config.validate()?;
    Ok(config)
}

fn default_out(stem: &str, ext: &str) -> PathBuf {
    PathBuf::from(format!("sobolev_{stem}.{ext}"))
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut side = out.to_path_buf();
    side.set_extension(ext);
    side
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content)
        .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_f64(v),
        None => String::new(),
    }
}

fn solve_domain(
    spec: &DomainSpec,
    config: &SolverConfig,
    h: f64,
) -> Result<SolveResult, Failure> {
    let mesh = build_mesh(spec, h)?;
    Ok(minimize_quotient(&std::sync::Arc::new(mesh), config)?)
}

fn field_csv(result: &SolveResult) -> String {
    let mesh = &result.phi.mesh;
    let rows: Vec<Vec<String>> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            vec![
                i.to_string(),
                fmt_f64(v.x),
                fmt_f64(v.y),
                fmt_f64(result.phi.values[i]),
            ]
        })
        .collect();
    csv_table(&["vertex", "x", "y", "value"], &rows)
}

// ---------------------------------------------------------------------------
// solve

fn solve_report_json(spec: &DomainSpec, result: &SolveResult) -> String {
    JsonObject::new()
        .str("command", "solve")
        .raw("domain", &spec.to_json())
        .f64("p", result.p)
        .f64("h", result.h)
        .f64("cp", result.cp)
        .f64("sobolev_constant", result.sobolev_constant())
        .f64("lambda", result.lambda)
        .f64("energy", result.energy)
        .f64("p_norm_integral", result.p_norm_integral)
        .f64("pminus1_integral", result.pminus1_integral)
        .usize("iterations", result.iterations)
        .f64("residual", result.residual)
        .bool("converged", result.converged)
        .usize("vertices", result.phi.mesh.vertex_count())
        .usize("triangles", result.phi.mesh.triangle_count())
        .finish()
}

fn solve_report_csv(result: &SolveResult) -> String {
    let row = vec![vec![
        fmt_f64(result.p),
        fmt_f64(result.h),
        fmt_f64(result.cp),
        fmt_f64(result.sobolev_constant()),
        fmt_f64(result.lambda),
        fmt_f64(result.energy),
        fmt_f64(result.p_norm_integral),
        fmt_f64(result.pminus1_integral),
        result.iterations.to_string(),
        fmt_f64(result.residual),
        result.converged.to_string(),
    ]];
    csv_table(
        &[
            "p",
            "h",
            "cp",
            "sobolev_constant",
            "lambda",
            "energy",
            "p_norm_integral",
            "pminus1_integral",
            "iterations",
            "residual",
            "converged",
        ],
        &row,
    )
}

fn cmd_solve(args: SolveArgs) -> Result<i32, Failure> {
    setup_threads(args.common.threads);
    let config = validate_common(&args.common)?;
    let spec = load_domain(&args.common.domain)?;
    let result = solve_domain(&spec, &config, args.common.h)?;

    let format = args.common.format.unwrap_or(OutputFormat::Json);
    let ext = match format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let out = args.common.out.unwrap_or_else(|| default_out("solve", ext));
    let content = match format {
        OutputFormat::Json => solve_report_json(&spec, &result),
        OutputFormat::Csv => solve_report_csv(&result),
    };
    write_file(&out, &content)?;
    if args.dump_field {
        let field_path = sidecar(&out, "field.csv");
        write_file(&field_path, &field_csv(&result))?;
        println!("field: {}", field_path.display());
    }

    println!(
        "cp = {} (p = {}, h = {}, {} vertices)",
        fmt_f64(result.cp),
        result.p,
        result.h,
        result.phi.mesh.vertex_count()
    );
    println!(
        "converged = {} after {} iterations, residual = {}",
        result.converged,
        result.iterations,
        fmt_f64(result.residual)
    );
    println!("wrote {}", out.display());
    Ok(if result.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

// ---------------------------------------------------------------------------
// schwarz

fn sweep_rows_csv(sweep: &SchwarzSweep) -> String {
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.r),
                fmt_f64(r.log_r),
                fmt_f64(r.cp_image),
                fmt_f64(r.phi_ratio),
                fmt_f64(r.reciprocal),
            ]
        })
        .collect();
    csv_table(&["r", "log_r", "cp_image", "phi_ratio", "reciprocal"], &rows)
}

fn sweep_rows_json(sweep: &SchwarzSweep) -> String {
    let rows: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| {
            JsonObject::new()
                .f64("r", r.r)
                .f64("log_r", r.log_r)
                .f64("cp_image", r.cp_image)
                .f64("phi_ratio", r.phi_ratio)
                .f64("reciprocal", r.reciprocal)
                .finish()
        })
        .collect();
    JsonObject::new()
        .str("command", "schwarz")
        .raw("rows", &format!("[{}]", rows.join(",")))
        .finish()
}

fn skipped_rows_json(sweep: &SchwarzSweep) -> String {
    let items: Vec<String> = sweep
        .skipped
        .iter()
        .map(|s| {
            JsonObject::new()
                .f64("r", s.r)
                .str("reason", &s.reason)
                .finish()
        })
        .collect();
    format!("[{}]", items.join(","))
}

fn sweep_verdict_json(sweep: &SchwarzSweep) -> String {
    let mut obj = JsonObject::new()
        .str("command", "schwarz")
        .f64("p", sweep.p)
        .f64("h", sweep.h)
        .f64("cp_unit_disk", sweep.cp_unit_disk)
        .bool("monotone_decreasing", sweep.verdicts.is_monotone_decreasing)
        .bool("constant", sweep.verdicts.is_constant);
    if let Some(convex) = sweep.verdicts.reciprocal_logconvex {
        obj = obj.bool("reciprocal_logconvex", convex);
    }
    match sweep.extrapolated_limit {
        Some(v) => obj = obj.f64("extrapolated_limit", v),
        None => obj = obj.raw("extrapolated_limit", "null"),
    }
    match sweep.expected_limit {
        Some(v) => obj = obj.f64("expected_limit", v),
        None => obj = obj.raw("expected_limit", "null"),
    }
    obj.usize("row_count", sweep.rows.len())
        .raw("skipped_rows", &skipped_rows_json(sweep))
        .finish()
}

fn cmd_schwarz(args: SchwarzArgs) -> Result<i32, Failure> {
    setup_threads(args.common.threads);
    validate_common(&args.common)?;
    let spec = load_domain(&args.common.domain)?;
    let map = match &spec {
        DomainSpec::MapImage { map, .. } => map.to_map().map_err(Failure::from)?,
        other => {
            return Err(Failure::invalid(format!(
                "schwarz needs a map_image domain; got type \"{}\"",
                other.kind()
            )))
        }
    };
    let grid = r_grid(
        args.r_min,
        args.r_max,
        args.r_count,
        args.r_spacing == Spacing::Log,
    )?;
    let sweep = schwarz_sweep(&map, args.common.p, &grid, args.common.h, args.allow_large_r)?;

    let format = args.common.format.unwrap_or(OutputFormat::Csv);
    let ext = match format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let out = args.common.out.unwrap_or_else(|| default_out("schwarz", ext));
    let content = match format {
        OutputFormat::Json => sweep_rows_json(&sweep),
        OutputFormat::Csv => sweep_rows_csv(&sweep),
    };
    write_file(&out, &content)?;
    let verdict_path = sidecar(&out, "verdict.json");
    write_file(&verdict_path, &sweep_verdict_json(&sweep))?;

    println!(
        "{} rows, {} skipped; monotone_decreasing = {}, constant = {}{}",
        sweep.rows.len(),
        sweep.skipped.len(),
        sweep.verdicts.is_monotone_decreasing,
        sweep.verdicts.is_constant,
        match sweep.verdicts.reciprocal_logconvex {
            Some(v) => format!(", reciprocal_logconvex = {v}"),
            None => String::new(),
        }
    );
    println!("wrote {} and {}", out.display(), verdict_path.display());
    Ok(if sweep.verdicts.all_pass() { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

// ---------------------------------------------------------------------------
// payne-rayner

fn payne_rayner_json(report: &PayneRaynerReport, h: f64) -> String {
    let mut obj = JsonObject::new()
        .str("command", "payne_rayner")
        .f64("p", report.p)
        .f64("h", h)
        .f64("cp", report.cp)
        .f64("lambda", report.lambda)
        .f64("lhs", report.lhs)
        .f64("rhs", report.rhs)
        .f64("deficit", report.deficit)
        .f64("deficit_rel", report.deficit_rel)
        .f64("length_flux", report.length_flux)
        .f64("length_lambda", report.length_lambda)
        .f64("conformal_area", report.conformal_area)
        .f64("iso_lhs", report.iso_lhs)
        .f64("iso_rhs", report.iso_rhs)
        .bool("equality_flag", report.equality_flag);
    match &report.saint_venant {
        Some(sv) => {
            let record = JsonObject::new()
                .f64("area_squared", sv.area_squared)
                .f64("two_pi_p", sv.two_pi_p)
                .f64("ratio", sv.ratio)
                .finish();
            obj = obj.raw("saint_venant", &record);
        }
        None => obj = obj.raw("saint_venant", "null"),
    }
    obj.finish()
}

fn payne_rayner_csv(report: &PayneRaynerReport, h: f64) -> String {
    let sv = report.saint_venant.as_ref();
    let row = vec![vec![
        fmt_f64(report.p),
        fmt_f64(h),
        fmt_f64(report.cp),
        fmt_f64(report.lambda),
        fmt_f64(report.lhs),
        fmt_f64(report.rhs),
        fmt_f64(report.deficit),
        fmt_f64(report.deficit_rel),
        fmt_f64(report.length_flux),
        fmt_f64(report.length_lambda),
        fmt_f64(report.conformal_area),
        fmt_f64(report.iso_lhs),
        fmt_f64(report.iso_rhs),
        report.equality_flag.to_string(),
        fmt_opt(sv.map(|s| s.area_squared)),
        fmt_opt(sv.map(|s| s.two_pi_p)),
        fmt_opt(sv.map(|s| s.ratio)),
    ]];
    csv_table(
        &[
            "p",
            "h",
            "cp",
            "lambda",
            "lhs",
            "rhs",
            "deficit",
            "deficit_rel",
            "length_flux",
            "length_lambda",
            "conformal_area",
            "iso_lhs",
            "iso_rhs",
            "equality_flag",
            "sv_area_squared",
            "sv_two_pi_p",
            "sv_ratio",
        ],
        &row,
    )
}

fn cmd_payne_rayner(args: PayneRaynerArgs) -> Result<i32, Failure> {
    setup_threads(args.common.threads);
    let config = validate_common(&args.common)?;
    let spec = load_domain(&args.common.domain)?;
    let result = solve_domain(&spec, &config, args.common.h)?;
    if !result.converged {
        return Err(Failure::not_converged(format!(
            "solve did not converge within {} iterations (residual {})",
            result.iterations,
            fmt_f64(result.residual)
        )));
    }
    let report = payne_rayner_report(&result);

    let format = args.common.format.unwrap_or(OutputFormat::Json);
    let ext = match format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let out = args.common.out.unwrap_or_else(|| default_out("payne_rayner", ext));
    let content = match format {
        OutputFormat::Json => payne_rayner_json(&report, args.common.h),
        OutputFormat::Csv => payne_rayner_csv(&report, args.common.h),
    };
    write_file(&out, &content)?;

    println!(
        "deficit/rhs = {}, equality_flag = {}",
        fmt_f64(report.deficit_rel),
        report.equality_flag
    );
    if let Some(sv) = &report.saint_venant {
        println!("saint_venant ratio = {}", fmt_f64(sv.ratio));
    }
    println!("wrote {}", out.display());
    Ok(if report.inequality_holds() { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

// ---------------------------------------------------------------------------
// levelsets

fn level_rows_csv(table: &LevelSetTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.area),
                fmt_f64(r.length),
                fmt_f64(r.h0),
                fmt_f64(r.h1),
                r.flags.join(";"),
            ]
        })
        .collect();
    csv_table(&["t", "A", "l", "H0", "H1", "flags"], &rows)
}

fn level_rows_json(table: &LevelSetTable) -> String {
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            let flags: Vec<String> = r.flags.iter().map(|f| format!("\"{f}\"")).collect();
            JsonObject::new()
                .f64("t", r.t)
                .f64("A", r.area)
                .f64("l", r.length)
                .f64("H0", r.h0)
                .f64("H1", r.h1)
                .raw("flags", &format!("[{}]", flags.join(",")))
                .finish()
        })
        .collect();
    JsonObject::new()
        .str("command", "levelsets")
        .raw("rows", &format!("[{}]", rows.join(",")))
        .finish()
}

fn parse_base_point(raw: &str) -> Result<Point, Failure> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::invalid(format!(
            "base point must be \"x,y\", got \"{raw}\""
        )));
    }
    let x: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Failure::invalid(format!("bad base-point x \"{}\"", parts[0])))?;
    let y: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Failure::invalid(format!("bad base-point y \"{}\"", parts[1])))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(Failure::invalid("base point must be finite".to_string()));
    }
    Ok(Point::new(x, y))
}

fn cmd_levelsets(args: LevelsetsArgs) -> Result<i32, Failure> {
    setup_threads(args.common.threads);
    let config = validate_common(&args.common)?;
    if args.samples < 16 {
        return Err(Failure::invalid(format!(
            "levelsets needs at least 16 samples, got {}",
            args.samples
        )));
    }
    let base_point = args.base_point.as_deref().map(parse_base_point).transpose()?;
    let spec = load_domain(&args.common.domain)?;
    let result = solve_domain(&spec, &config, args.common.h)?;
    if !result.converged {
        return Err(Failure::not_converged(format!(
            "solve did not converge within {} iterations (residual {})",
            result.iterations,
            fmt_f64(result.residual)
        )));
    }
    let table = level_set_table(&result, base_point, args.samples)?;
    let verdicts = verify_levelset_inequalities(&table, args.common.p)?;

    let format = args.common.format.unwrap_or(OutputFormat::Csv);
    let ext = match format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let out = args.common.out.unwrap_or_else(|| default_out("levelsets", ext));
    let content = match format {
        OutputFormat::Json => level_rows_json(&table),
        OutputFormat::Csv => level_rows_csv(&table),
    };
    write_file(&out, &content)?;

    let verdict_json = JsonObject::new()
        .str("command", "levelsets")
        .f64("p", table.p)
        .f64("h", args.common.h)
        .usize("samples", args.samples)
        .f64("lambda", table.lambda)
        .f64("phi_max", table.phi_max)
        .raw(
            "base_point",
            &format!("[{},{}]", fmt_f64(table.base_point.x), fmt_f64(table.base_point.y)),
        )
        .bool("h0_decay", verdicts.h0_decay)
        .bool("h1_identity", verdicts.h1_identity)
        .bool("combined_monotone", verdicts.combined_monotone)
        .usize("usable_rows", verdicts.usable_rows)
        .f64("worst_h0_margin", verdicts.worst_h0_margin)
        .f64("worst_h1_error", verdicts.worst_h1_error)
        .f64("worst_combined_margin", verdicts.worst_combined_margin)
        .finish();
    let verdict_path = sidecar(&out, "verdict.json");
    write_file(&verdict_path, &verdict_json)?;

    println!(
        "h0_decay = {}, h1_identity = {}, combined_monotone = {} ({} usable rows)",
        verdicts.h0_decay, verdicts.h1_identity, verdicts.combined_monotone, verdicts.usable_rows
    );
    println!("wrote {} and {}", out.display(), verdict_path.display());
    Ok(if verdicts.all_pass() { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

// ---------------------------------------------------------------------------
// convergence

fn convergence_rows_csv(study: &ConvergenceStudy) -> String {
    let rows: Vec<Vec<String>> = study
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.h),
                fmt_f64(r.cp),
                fmt_f64(r.error),
                fmt_opt(r.observed_order),
            ]
        })
        .collect();
    csv_table(&["h", "cp", "error", "observed_order"], &rows)
}

fn convergence_rows_json(study: &ConvergenceStudy) -> String {
    let rows: Vec<String> = study
        .rows
        .iter()
        .map(|r| {
            let mut obj = JsonObject::new()
                .f64("h", r.h)
                .f64("cp", r.cp)
                .f64("error", r.error);
            match r.observed_order {
                Some(v) => obj = obj.f64("observed_order", v),
                None => obj = obj.raw("observed_order", "null"),
            }
            obj.finish()
        })
        .collect();
    JsonObject::new()
        .str("command", "convergence")
        .raw("rows", &format!("[{}]", rows.join(",")))
        .finish()
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<i32, Failure> {
    setup_threads(args.common.threads);
    validate_common(&args.common)?;
    let spec = load_domain(&args.common.domain)?;
    let study = convergence_study(&spec, args.common.p, args.common.h, args.levels)?;

    let format = args.common.format.unwrap_or(OutputFormat::Csv);
    let ext = match format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let out = args.common.out.unwrap_or_else(|| default_out("convergence", ext));
    let content = match format {
        OutputFormat::Json => convergence_rows_json(&study),
        OutputFormat::Csv => convergence_rows_csv(&study),
    };
    write_file(&out, &content)?;

    let threshold = ConvergenceStudy::order_threshold(&spec);
    let passes = study.passes(&spec);
    let mut verdict = JsonObject::new()
        .str("command", "convergence")
        .f64("p", study.p)
        .f64("reference", study.reference)
        .str("reference_kind", study.reference_kind);
    match study.final_order {
        Some(v) => verdict = verdict.f64("final_order", v),
        None => verdict = verdict.raw("final_order", "null"),
    }
    let verdict_json = verdict
        .f64("threshold", threshold)
        .bool("passes", passes)
        .finish();
    let verdict_path = sidecar(&out, "verdict.json");
    write_file(&verdict_path, &verdict_json)?;

    println!(
        "reference = {} ({}), final order = {}",
        fmt_f64(study.reference),
        study.reference_kind,
        match study.final_order {
            Some(v) => fmt_f64(v),
            None => "n/a".to_string(),
        }
    );
    println!("wrote {} and {}", out.display(), verdict_path.display());
    Ok(if passes { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_every_subcommand() {
        let cli = Cli::try_parse_from([
            "sobolev",
            "solve",
            "--domain",
            "{\"type\":\"disk\",\"radius\":1}",
            "--p",
            "2",
            "--h",
            "0.05",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Solve(_)));

        let cli = Cli::try_parse_from([
            "sobolev",
            "schwarz",
            "--domain",
            "d.json",
            "--r-min",
            "0.2",
            "--r-max",
            "0.8",
            "--r-count",
            "5",
            "--r-spacing",
            "log",
        ])
        .unwrap();
        match cli.command {
            Command::Schwarz(args) => {
                assert_eq!(args.r_count, 5);
                assert_eq!(args.r_spacing, Spacing::Log);
                assert!(!args.allow_large_r);
            }
            other => panic!("wrong command {other:?}"),
        }

        assert!(Cli::try_parse_from(["sobolev", "payne-rayner", "--domain", "d.json"]).is_ok());
        assert!(Cli::try_parse_from(["sobolev", "levelsets", "--domain", "d", "--samples", "32"])
            .is_ok());
        assert!(Cli::try_parse_from(["sobolev", "convergence", "--domain", "d"]).is_ok());
        assert!(Cli::try_parse_from(["sobolev", "frobnicate"]).is_err());
    }

    #[test]
    fn defaults_match_the_documented_contract() {
        let cli = Cli::try_parse_from(["sobolev", "solve", "--domain", "d"]).unwrap();
        match cli.command {
            Command::Solve(args) => {
                assert_eq!(args.common.p, 2.0);
                assert_eq!(args.common.h, 0.02);
                assert!(args.common.out.is_none());
                assert!(!args.dump_field);
            }
            _ => unreachable!(),
        }
        let cli = Cli::try_parse_from(["sobolev", "levelsets", "--domain", "d"]).unwrap();
        match cli.command {
            Command::Levelsets(args) => assert_eq!(args.samples, 64),
            _ => unreachable!(),
        }
    }

    #[test]
    fn inline_domain_and_file_domain_both_load() {
        let inline = load_domain("{\"type\":\"disk\",\"radius\":1}").unwrap();
        assert!(matches!(inline, DomainSpec::Disk { .. }));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("domain.json");
        std::fs::write(&path, "{\"type\":\"disk\",\"radius\":2,\"center\":[1,0]}").unwrap();
        let loaded = load_domain(path.to_str().unwrap()).unwrap();
        match loaded {
            DomainSpec::Disk { radius, center } => {
                assert_eq!(radius, 2.0);
                assert_eq!(center, [1.0, 0.0]);
            }
            _ => panic!("wrong spec"),
        }

        assert!(load_domain("/nonexistent/file.json").is_err());
        assert!(load_domain("{\"type\":\"disk\"}").is_err());
    }

    #[test]
    fn base_point_parsing() {
        let p = parse_base_point("0.25,-0.5").unwrap();
        assert_eq!((p.x, p.y), (0.25, -0.5));
        assert!(parse_base_point("0.25").is_err());
        assert!(parse_base_point("a,b").is_err());
        assert!(parse_base_point("1,inf").is_err());
    }

    #[test]
    fn sidecar_paths_derive_from_out() {
        let out = PathBuf::from("runs/sweep.csv");
        assert_eq!(sidecar(&out, "verdict.json"), PathBuf::from("runs/sweep.verdict.json"));
        assert_eq!(sidecar(&out, "field.csv"), PathBuf::from("runs/sweep.field.csv"));
    }
}
