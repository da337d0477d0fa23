//! Config-driven frontend: load a system and a shape path from a TOML
//! document, then verify identities, lift paths, compute loop holonomy,
//! or scan curvature, emitting CSV tables or key-value records.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use holonomy_core::connection::connection_at;
use holonomy_core::dynamics::{
    curvature_numeric, fd_velocities, holonomy, horizontal_lift, Integrator, LiftOptions,
    ShapePath,
};
use holonomy_core::exec::ExecMode;
use holonomy_core::systems::{
    self, BoardSpec, CatLoopParams, DiscSpec, GenericSpec, NBodySpec, SymmetryParts,
};
use holonomy_core::verify::verify_system;
use holonomy_core::{Error, GroupElement, SystemModel};

mod config;
use config::{PathKind, RunConfig, SystemKind};

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SINGULAR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "holonomy",
    about = "Connections, horizontal lifts, loop holonomy, and curvature \
             for symmetric mechanical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Override the configured integration step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the configured tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output here instead of the configured destination (stdout
    /// by default).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_parser = ["csv", "record"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every structural identity check at seeded sample points.
    Verify(CommonArgs),
    /// Horizontally lift the configured shape path and emit the
    /// trajectory.
    Lift(CommonArgs),
    /// Lift the configured closed path and report the net group element.
    Holonomy(CommonArgs),
    /// Scan a curvature component over a coordinate range.
    Curvature(CommonArgs),
    /// Print the constructed metric and generators at a point.
    Describe(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run) = match &cli.command {
        Command::Verify(a) => (a, run_verify as Runner),
        Command::Lift(a) => (a, run_lift as Runner),
        Command::Holonomy(a) => (a, run_holonomy as Runner),
        Command::Curvature(a) => (a, run_curvature as Runner),
        Command::Describe(a) => (a, run_describe as Runner),
    };
    let cfg = match load_config(args) {
        Ok(cfg) => cfg,
        Err(message) => {
            eprintln!("config error: {message}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cfg) {
        Ok(Outcome { text, verified }) => {
            if let Err(e) = emit(&cfg, &text) {
                eprintln!("output error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            if verified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAIL)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SingularAction { .. }
        | Error::SingularActionOnPath { .. }
        | Error::VerticalDegeneracy => EXIT_SINGULAR,
        _ => EXIT_CONFIG,
    }
}

struct Outcome {
    text: String,
    verified: bool,
}

impl Outcome {
    fn ok(text: String) -> holonomy_core::Result<Outcome> {
        Ok(Outcome {
            text,
            verified: true,
        })
    }
}

type Runner = fn(&RunConfig) -> holonomy_core::Result<Outcome>;

fn load_config(args: &CommonArgs) -> Result<RunConfig, String> {
    let raw = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = config::parse(&raw)?;
    if let Some(steps) = args.steps {
        cfg.integrator.steps = steps;
    }
    if let Some(tol) = args.tol {
        cfg.integrator.tolerance = tol;
        cfg.tol_flag = Some(tol);
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.run.out = Some(out.clone());
    }
    if let Some(format) = &args.format {
        cfg.run.format = format.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, text: &str) -> std::io::Result<()> {
    match &cfg.run.out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_system(cfg: &RunConfig) -> holonomy_core::Result<SystemModel> {
    match &cfg.system.kind {
        SystemKind::Board { m1, m2 } => systems::build_board(&BoardSpec::free(*m1, *m2)),
        SystemKind::Disc { inertia, mass } => systems::build_disc(&DiscSpec::free(*inertia, *mass)),
        SystemKind::NBody { masses, parts } => {
            let parts = match parts.as_str() {
                "translations" => SymmetryParts::Translations,
                "rotations" => SymmetryParts::Rotations,
                "both" => SymmetryParts::Both,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown symmetry parts '{other}'"
                    )))
                }
            };
            systems::build_nbody(&NBodySpec {
                masses: masses.clone(),
                parts,
            })
        }
        SystemKind::Generic {
            n,
            k,
            metric,
            generators,
            potential,
        } => systems::build_generic(&GenericSpec {
            n: *n,
            k: *k,
            metric: rows_to_matrix(metric, *n, *n, "metric")?,
            generators: rows_to_matrix(generators, *n, *k, "generators")?,
            potential_quadratic: potential
                .as_ref()
                .map(|rows| rows_to_matrix(rows, *n, *n, "potential"))
                .transpose()?,
        }),
    }
}

fn rows_to_matrix(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> holonomy_core::Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter(format!(
            "{what} table must be {nrows} rows of {ncols} entries"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn build_path(cfg: &RunConfig) -> holonomy_core::Result<ShapePath> {
    let path = cfg
        .path
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("this command needs a [path] section".into()))?;
    match &path.kind {
        PathKind::DiscCircle { r0, turns } => systems::disc_circle_loop(*r0, *turns),
        PathKind::Radial { r0, r1 } => systems::radial_excursion(*r0, *r1),
        PathKind::BoardSine { x0, amplitude } => Ok(systems::board_sine(*x0, *amplitude)),
        PathKind::Cat {
            amplitude,
            leg,
            base_angles,
        } => {
            let masses = match &cfg.system.kind {
                SystemKind::NBody { masses, .. } if masses.len() == 3 => {
                    [masses[0], masses[1], masses[2]]
                }
                _ => [1.0, 1.0, 1.0],
            };
            systems::cat_loop(&CatLoopParams {
                masses,
                leg: *leg,
                base_angles: *base_angles,
                amplitude: *amplitude,
            })
        }
        PathKind::Csv { file } => {
            let raw = std::fs::read_to_string(file).map_err(|e| {
                Error::InvalidParameter(format!("cannot read path file {file}: {e}"))
            })?;
            let mut rows = Vec::new();
            for (lineno, line) in raw.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let row: Result<Vec<f64>, _> =
                    line.split(',').map(|c| c.trim().parse::<f64>()).collect();
                let row = row.map_err(|e| {
                    Error::InvalidParameter(format!("{file}:{}: {e}", lineno + 1))
                })?;
                rows.push(DVector::from_vec(row));
            }
            ShapePath::from_samples(rows)
        }
    }
}

fn lift_options(cfg: &RunConfig) -> LiftOptions {
    LiftOptions {
        steps: cfg.integrator.steps,
        integrator: match cfg.integrator.method.as_str() {
            "lie-euler" => Integrator::LieEuler,
            _ => Integrator::Rk4,
        },
    }
}

/// Fixed-width scientific float formatting so identical runs produce
/// byte-identical output.
fn num(v: f64) -> String {
    format!("{v:.17e}")
}

fn run_verify(cfg: &RunConfig) -> holonomy_core::Result<Outcome> {
    let m = build_system(cfg)?;
    let report = verify_system(&m, cfg.run.points, cfg.run.seed, ExecMode::default());
    let mut out = String::new();
    out.push_str(&format!("system = {}\n", report.system));
    out.push_str(&format!("points = {}\n", report.points));
    out.push_str(&format!("seed = {}\n", cfg.run.seed));
    let mut all_pass = true;
    for check in &report.checks {
        let tolerance = cfg.tol_flag.unwrap_or(check.tolerance);
        let passed = check.max_residual <= tolerance;
        all_pass &= passed;
        out.push_str(&format!(
            "check.{} = {} residual={} tolerance={} evaluated={} skipped={}\n",
            check.name,
            if passed { "pass" } else { "fail" },
            num(check.max_residual),
            num(tolerance),
            check.evaluated,
            check.skipped,
        ));
        if let Some(note) = &check.note {
            out.push_str(&format!("check.{}.note = {note}\n", check.name));
        }
    }
    out.push_str(&format!(
        "result = {}\n",
        if all_pass { "pass" } else { "fail" }
    ));
    Ok(Outcome {
        text: out,
        verified: all_pass,
    })
}

fn run_lift(cfg: &RunConfig) -> holonomy_core::Result<Outcome> {
    let m = build_system(cfg)?;
    let path = build_path(cfg)?;
    let traj = horizontal_lift(&m, &path, &m.lie().identity(), &lift_options(cfg))?;
    let velocities = fd_velocities(&traj.times, &traj.points);

    let mut out = String::new();
    let k = m.group_dim();
    let n = m.dim();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..k).map(|a| format!("p{a}")));
    header.push("pairing_residual".into());
    out.push_str(&header.join(","));
    out.push('\n');

    for (i, x) in traj.points.iter().enumerate() {
        let pairing = connection_at(&m, x)?.pair(&velocities[i]).norm();
        let mut row: Vec<String> = vec![num(traj.times[i])];
        row.extend(x.iter().map(|&v| num(v)));
        row.extend(traj.momenta[i].0.iter().map(|&v| num(v)));
        row.push(num(pairing));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Outcome::ok(out)
}

fn run_holonomy(cfg: &RunConfig) -> holonomy_core::Result<Outcome> {
    let m = build_system(cfg)?;
    let path = build_path(cfg)?;
    let hol = holonomy(&m, &path, &lift_options(cfg))?;
    let log = m.lie().log(&hol)?;

    let mut out = String::new();
    out.push_str(&format!("system = {}\n", m.name()));
    out.push_str(&format!("steps = {}\n", cfg.integrator.steps));
    match &hol {
        GroupElement::Abelian(w) => {
            for (i, &v) in w.iter().enumerate() {
                out.push_str(&format!("element.abelian{i} = {}\n", num(v)));
            }
        }
        GroupElement::So3(r) => {
            for i in 0..3 {
                for j in 0..3 {
                    out.push_str(&format!("element.r{i}{j} = {}\n", num(r[(i, j)])));
                }
            }
        }
        GroupElement::Product(_) => {
            out.push_str("element.kind = product\n");
        }
    }
    for (i, &v) in log.0.iter().enumerate() {
        out.push_str(&format!("log{i} = {}\n", num(v)));
    }

    // Analytic comparison for the builtin disc circle.
    if let (SystemKind::Disc { inertia, mass }, Some(path_cfg)) = (&cfg.system.kind, &cfg.path) {
        if let PathKind::DiscCircle { r0, turns } = &path_cfg.kind {
            let mr2 = mass * r0 * r0;
            let beta = -2.0 * std::f64::consts::PI * turns * mr2 / (inertia + mr2);
            out.push_str(&format!("analytic.beta = {}\n", num(beta)));
            out.push_str(&format!("analytic.residual = {}\n", num((log.0[0] - beta).abs())));
        }
    }
    Outcome::ok(out)
}

fn run_curvature(cfg: &RunConfig) -> holonomy_core::Result<Outcome> {
    let m = build_system(cfg)?;
    let scan = cfg
        .curvature
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("curvature needs a [curvature] section".into()))?;
    let (i, j) = (scan.plane[0], scan.plane[1]);
    if scan.base.len() != m.dim() {
        return Err(Error::InvalidParameter(format!(
            "curvature base point must have {} coordinates",
            m.dim()
        )));
    }
    let base = DVector::from_vec(scan.base.clone());
    let values = holonomy_core::exec::map_indexed(ExecMode::default(), scan.count, |step| {
        let frac = if scan.count > 1 {
            step as f64 / (scan.count - 1) as f64
        } else {
            0.0
        };
        let mut x = base.clone();
        x[scan.axis] = scan.range[0] + (scan.range[1] - scan.range[0]) * frac;
        curvature_numeric(&m, &x, (i, j)).map(|s| (x, s.value))
    });

    let k = m.group_dim();
    let mut out = String::new();
    let mut header: Vec<String> = (0..m.dim()).map(|c| format!("x{c}")).collect();
    header.push("plane_i".into());
    header.push("plane_j".into());
    header.extend((0..k).map(|a| format!("f{a}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for value in values {
        let (x, f) = value?;
        let mut row: Vec<String> = x.iter().map(|&v| num(v)).collect();
        row.push(i.to_string());
        row.push(j.to_string());
        row.extend(f.0.iter().map(|&v| num(v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Outcome::ok(out)
}

fn run_describe(cfg: &RunConfig) -> holonomy_core::Result<Outcome> {
    let m = build_system(cfg)?;
    let x = match &cfg.describe_point {
        Some(coords) => {
            if coords.len() != m.dim() {
                return Err(Error::InvalidParameter(format!(
                    "describe point must have {} coordinates",
                    m.dim()
                )));
            }
            DVector::from_vec(coords.clone())
        }
        None => m.sample_point(&mut ChaCha8Rng::seed_from_u64(cfg.run.seed)),
    };

    let mut out = String::new();
    out.push_str(&format!("system = {}\n", m.name()));
    out.push_str(&format!("dimension = {}\n", m.dim()));
    out.push_str(&format!("group_dimension = {}\n", m.group_dim()));
    for (idx, &v) in x.iter().enumerate() {
        out.push_str(&format!("point.x{idx} = {}\n", num(v)));
    }
    let g = m.metric_at(&x);
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            out.push_str(&format!("metric.g{i}{j} = {}\n", num(g[(i, j)])));
        }
    }
    let gens = m.generators_at(&x);
    for a in 0..m.group_dim() {
        for i in 0..m.dim() {
            out.push_str(&format!("generator{a}.v{i} = {}\n", num(gens[(i, a)])));
        }
    }
    let gram = m.gram(&x)?;
    for a in 0..m.group_dim() {
        for b in 0..m.group_dim() {
            out.push_str(&format!("gram.g{a}{b} = {}\n", num(gram[(a, b)])));
        }
    }
    let conn = connection_at(&m, &x)?;
    for a in 0..m.group_dim() {
        for i in 0..m.dim() {
            out.push_str(&format!("connection.a{a}{i} = {}\n", num(conn.components[(a, i)])));
        }
    }
    Outcome::ok(out)
}
