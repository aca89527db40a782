use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foilmesh::config::RunConfig;
use foilmesh::geometry::watertight_check;
use foilmesh::integrator::{CflMode, Termination};
use foilmesh::io::{format_points, read_mesh, write_diagnostics, write_mesh, write_points, MeshFormat, PointFormat};
use foilmesh::pipeline::{self, SnapshotWriter};
use foilmesh::refine::quality_report;
use foilmesh::scenario::{box_scenario, BoxFaces, DEFAULT_BOX_INSET, DEFAULT_BOX_SIDE};
use foilmesh::snap::{affected_neighbors, radius_of_effectiveness};
use foilmesh::{FoilError, TriMesh};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  check: mesh is not a closed genus-0 surface
  2  usage error
  3  bad configuration, parameter or input syntax
  4  file system error
  5  unusable geometry (too few points, degenerate input, broken mesh)
  6  time step above the stability bound
  7  numerical divergence
  8  run stopped at max_iterations without converging

Errors are reported on stderr as a single line: error[category]: message";

#[derive(Parser)]
#[command(name = "foilmesh", version, about = "Shrink-wrap a triangle foil onto fixed points", after_help = EXIT_CODES)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation and write the final mesh.
    Run(RunArgs),
    /// Report watertightness and quality of a mesh file (.obj or .ply).
    Check {
        mesh: PathBuf,
        /// Also scan for self-intersecting face pairs.
        #[arg(long)]
        intersections: bool,
    },
    /// Write a built-in constraint point set.
    Scenario(ScenarioArgs),
    /// Print derived quantities for a configuration without running it.
    Info(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file. Later options override it.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set dt=0.05`. Repeatable.
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Constraint points (.xyz or .ply) instead of the scenario.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Built-in constraint set used when no input is given.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioName>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Final mesh (.obj or .ply).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-iteration diagnostics CSV.
    #[arg(short, long)]
    diagnostics: Option<PathBuf>,
    /// Directory for snapshot meshes (see snapshot_every).
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    /// Continue when dt is above the stability bound.
    #[arg(long)]
    allow_unstable: bool,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value_t = ScenarioName::Box)]
    name: ScenarioName,
    #[arg(long, default_value_t = DEFAULT_BOX_SIDE)]
    side: f64,
    #[arg(long, default_value_t = DEFAULT_BOX_INSET)]
    inset: f64,
    #[arg(long, value_enum, default_value_t = Faces::Lateral)]
    faces: Faces,
    /// Point file (.xyz or .ply); XYZ on stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioName {
    Box,
}

#[derive(Clone, Copy, ValueEnum)]
enum Faces {
    Lateral,
    TopBottom,
}

impl From<Faces> for BoxFaces {
    fn from(f: Faces) -> Self {
        match f {
            Faces::Lateral => BoxFaces::Lateral,
            Faces::TopBottom => BoxFaces::TopBottom,
        }
    }
}

enum Failure {
    Foil(FoilError),
    NotClosed,
    NotConverged,
    Diverged,
}

impl From<FoilError> for Failure {
    fn from(e: FoilError) -> Self {
        Failure::Foil(e)
    }
}

fn exit_code(e: &FoilError) -> u8 {
    match e {
        FoilError::Config(_) | FoilError::Parse { .. } | FoilError::InvalidParameter(_) => 3,
        FoilError::Io { .. } => 4,
        FoilError::CflViolation { .. } => 6,
        FoilError::NumericalDivergence { .. } => 7,
        FoilError::Structural(_)
        | FoilError::DegenerateFace { .. }
        | FoilError::DegenerateEdge(..)
        | FoilError::InsufficientInput(_)
        | FoilError::EmptyConstraint(_)
        | FoilError::InvalidSpec(_)
        | FoilError::DegenerateInput(_)
        | FoilError::LengthMismatch { .. }
        | FoilError::ProjectionUndefined(_) => 5,
    }
}

#[derive(Default)]
struct Report(String);

impl Report {
    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push_str(&format!("{key}: {value}\n"));
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, FoilError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for s in &args.set {
        cfg.apply_override(s)?;
    }
    if let Some(path) = &args.input {
        cfg.input_path = Some(path.clone());
    }
    if let Some(ScenarioName::Box) = args.scenario {
        cfg.set("scenario", "box")?;
        cfg.input_path = None;
    }
    Ok(cfg)
}

fn set_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if let Some(p) = flag {
        *slot = Some(p.clone());
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    set_path(&mut cfg.output_path, &args.output);
    set_path(&mut cfg.diagnostics_path, &args.diagnostics);
    set_path(&mut cfg.snapshot_dir, &args.snapshot_dir);
    if args.allow_unstable {
        cfg.sim.cfl_mode = CflMode::Warn;
    }
    if args.config.dump_config {
        emit(&cfg.dump());
        return Ok(());
    }
    cfg.validate()?;
    let output_format = cfg.output_path.as_deref().map(MeshFormat::from_path).transpose()?;
    let outcome = match &cfg.snapshot_dir {
        Some(dir) if cfg.sim.snapshot_every > 0 => {
            std::fs::create_dir_all(dir).map_err(|e| FoilError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            pipeline::run(&cfg, &mut SnapshotWriter { dir: dir.clone() })?
        }
        _ => pipeline::run(&cfg, &mut ())?,
    };
    if let (Some(path), Some(format)) = (&cfg.output_path, output_format) {
        write_mesh(&outcome.mesh, path, format)?;
    }
    if let Some(path) = &cfg.diagnostics_path {
        write_diagnostics(&outcome.history, path)?;
    }
    let w = watertight_check(&outcome.mesh);
    let mut r = Report::default();
    r.line("termination", outcome.termination.as_str());
    r.line("iterations", outcome.history.len());
    if let Some(d) = outcome.final_max_displacement() {
        r.line("final max displacement", format!("{d:e}"));
    }
    r.line("vertices", outcome.mesh.vertex_count());
    r.line("faces", outcome.mesh.face_count());
    r.line("closed", w.is_closed);
    r.line("euler characteristic", w.euler_characteristic);
    let reached = outcome.constraints.len() - outcome.unreached_constraints();
    r.line(
        "constraints reached",
        format!("{reached}/{}", outcome.constraints.len()),
    );
    r.line(
        "radius of effectiveness",
        radius_of_effectiveness(&cfg.material, outcome.nn_scale, &cfg.snap)?,
    );
    r.line(
        "affected neighbors",
        affected_neighbors(&cfg.material, outcome.nn_scale, &cfg.snap)?,
    );
    emit(&r.0);
    match outcome.termination {
        Termination::Converged => Ok(()),
        Termination::MaxIterations => Err(Failure::NotConverged),
        Termination::Diverged => Err(Failure::Diverged),
    }
}

fn check(path: &Path, intersections: bool) -> Result<(), Failure> {
    let mesh: TriMesh = read_mesh(path, MeshFormat::from_path(path)?)?;
    let w = watertight_check(&mesh);
    let q = quality_report(&mesh, intersections);
    let mut r = Report::default();
    r.line("vertices", mesh.vertex_count());
    r.line("faces", mesh.face_count());
    r.line("closed", w.is_closed);
    r.line("euler characteristic", w.euler_characteristic);
    r.line("boundary edges", w.boundary_edge_count);
    r.line("non-manifold edges", w.nonmanifold_edge_count);
    r.line("consistently oriented", w.consistently_oriented);
    r.line("isolated vertices", w.isolated_vertex_count);
    r.line("min angle (deg)", format!("{:.4}", q.min_angle_deg));
    r.line("faces under 1 deg", q.degenerate_faces.len());
    if intersections {
        r.line("self-intersecting face pairs", q.self_intersections.len());
    }
    emit(&r.0);
    if w.is_closed && w.euler_characteristic == 2 {
        Ok(())
    } else {
        Err(Failure::NotClosed)
    }
}

fn scenario(args: ScenarioArgs) -> Result<(), Failure> {
    let ScenarioName::Box = args.name;
    let points = box_scenario(args.side, args.inset, args.faces.into())?;
    match &args.output {
        Some(path) => write_points(&points, path, PointFormat::from_path(path)?)?,
        None => {
            emit(&format_points(&points, PointFormat::Xyz));
        }
    }
    Ok(())
}

fn info(args: ConfigArgs) -> Result<(), Failure> {
    let cfg = load_config(&args)?;
    if args.dump_config {
        emit(&cfg.dump());
        return Ok(());
    }
    let info = pipeline::info(&cfg)?;
    let c = info.sphere.center;
    let mut r = Report::default();
    r.line("constraint points", info.constraint_count);
    r.line(
        "initial sphere",
        format!("center ({}, {}, {}), radius {}", c.x, c.y, c.z, info.sphere.radius),
    );
    r.line("foil vertices", info.foil_vertices);
    r.line("foil faces", info.foil_faces);
    r.line("mean nearest-neighbor distance", info.nn_distance);
    r.line("radius of effectiveness", info.radius_of_effectiveness);
    r.line("affected neighbors", info.affected_neighbors);
    r.line("critical damping", info.critical_damping);
    r.line("omega max", info.omega_max);
    r.line("max dt (exclusive)", info.max_dt);
    let verdict = if info.dt_admissible {
        "admissible"
    } else {
        "above the bound"
    };
    r.line("dt", format!("{} ({verdict})", cfg.sim.dt));
    emit(&r.0);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Check { mesh, intersections } => check(&mesh, intersections),
        Command::Scenario(args) => scenario(args),
        Command::Info(args) => info(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Foil(e)) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::NotClosed) => ExitCode::from(1),
        Err(Failure::NotConverged) => {
            eprintln!("error[not-converged]: stopped at max_iterations before the displacement fell below epsilon");
            ExitCode::from(8)
        }
        Err(Failure::Diverged) => {
            eprintln!("error[numerical-divergence]: displacements grew past the divergence limit");
            ExitCode::from(7)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use foilmesh::config::KEYS;

    #[test]
    fn keys_are_documented_in_dump() {
        let dump = RunConfig::default().dump();
        for (key, _) in KEYS {
            assert!(dump.contains(&format!("\n{key} = ")), "{key}");
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
