use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sparse_rom::fom::{write_field_csv, GeometryModel, GeometrySpec};
use sparse_rom::harness::{compare_point_rules, run_study, StudyConfig, StudyReport};
use sparse_rom::points::{PointRuleKind, UnivariatePointRule, DEFAULT_GRID_RESOLUTION};
use sparse_rom::providers::FomProblem;
use sparse_rom::Error;

#[derive(Parser)]
#[command(name = "sparse-rom", version, about = "Sparse polynomial interpolation ROMs for parametrized channel flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the first N points of a univariate rule, one per line.
    Points {
        #[arg(long)]
        rule: PointRuleKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        grid_resolution: usize,
    },
    /// Solve one parameter point and write x,y,u_x,u_y,p at the velocity nodes.
    Fom {
        /// straight | narrowing-width | curved-walls
        #[arg(long)]
        model: GeometryModel,
        /// Physical parameters: μ (narrowing-width), ν,curvature
        /// (curved-walls) or ν (straight).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        param: Vec<f64>,
        /// Read --param as coordinates in [-1, 1]^d instead.
        #[arg(long)]
        reference: bool,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write <prefix>_nodes.csv and <prefix>_cells.csv.
        #[arg(long)]
        mesh_out: Option<PathBuf>,
    },
    /// Run a convergence study and write its CSV.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the study once per point rule (`compare_rules` in the config).
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        rules: Option<Vec<PointRuleKind>>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() {
        return 3;
    }
    match e.root() {
        Error::Config(_) | Error::InvalidInput(_) | Error::Domain(_) | Error::Geometry(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> sparse_rom::Result<()> {
    match cmd {
        Command::Points { rule, n, grid_resolution } => {
            let r = UnivariatePointRule::new(rule, n, grid_resolution)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for p in r.points() {
                writeln!(out, "{p:e}")?;
            }
        }
        Command::Fom { model, param, reference, nx, ny, out, mesh_out } => fom(model, &param, reference, nx, ny, &out, mesh_out)?,
        Command::Study { config, out } => {
            let mut cfg = StudyConfig::from_file(&config)?;
            if out.is_some() {
                cfg.output = out;
            }
            let report = run_study(&cfg)?;
            summarize(&report);
        }
        Command::Compare { config, rules } => {
            let cfg = StudyConfig::from_file(&config)?;
            let rules = rules.unwrap_or_else(|| cfg.compare_rules.clone());
            for report in compare_point_rules(&cfg, &rules)? {
                summarize(&report);
            }
        }
    }
    Ok(())
}

fn summarize(report: &StudyReport) {
    let rules: Vec<&str> = report.rule.iter().map(|r| r.name()).collect();
    let last = report.rows.last();
    println!(
        "rule={} N={} mean={:e} max={:e} solves={}{}",
        rules.join(","),
        report.rows.len(),
        last.map_or(f64::NAN, |r| r.mean_rel_l2),
        last.map_or(f64::NAN, |r| r.max_rel_l2),
        report.evaluations(),
        report
            .output
            .as_ref()
            .map(|p| format!(" csv={}", p.display()))
            .unwrap_or_default(),
    );
}

fn fom(
    model: GeometryModel,
    param: &[f64],
    reference: bool,
    nx: Option<usize>,
    ny: Option<usize>,
    out: &std::path::Path,
    mesh_out: Option<PathBuf>,
) -> sparse_rom::Result<()> {
    use sparse_rom::fom::{build_mesh, oseen_solve, Field, FlowConfig};

    let (mesh, sol, nu) = if model == GeometryModel::Straight {
        let nu = match param {
            [] => 1.0,
            [nu] => *nu,
            _ => return Err(Error::Config("straight channel takes one parameter (viscosity)".into())),
        };
        let flow = FlowConfig::with_viscosity(nu);
        let mesh = build_mesh(&GeometrySpec::reference(model), nx.unwrap_or(36), ny.unwrap_or(12))?;
        let sol = oseen_solve(&mesh, &flow, &Field::zero(&mesh))?;
        (mesh, sol, nu)
    } else {
        let mut problem = FomProblem::new(model, 0, 0)?;
        let cfg = StudyConfig::new(sparse_rom::harness::StudyModel::Fom(model));
        problem.nx = nx.unwrap_or(cfg.nx);
        problem.ny = ny.unwrap_or(cfg.ny);
        if param.len() != problem.param_dim() {
            return Err(Error::Config(format!(
                "{} expects {} parameter(s), got {}",
                model.name(),
                problem.param_dim(),
                param.len()
            )));
        }
        let x = if reference { problem.params.to_physical(param)? } else { param.to_vec() };
        let (_, flow) = problem.physical_from(&x);
        let (mesh, sol) = problem.solve_physical(&x, None)?;
        (mesh, sol, flow.nu_visc)
    };

    let mut w = BufWriter::new(File::create(out)?);
    write_field_csv(&mesh, &sol.field, &mut w)?;
    w.flush()?;
    if let Some(prefix) = mesh_out {
        let name = |suffix: &str| {
            let stem = prefix.file_name().and_then(|s| s.to_str()).unwrap_or("mesh");
            prefix.with_file_name(format!("{stem}_{suffix}.csv"))
        };
        let mut nodes = BufWriter::new(File::create(name("nodes"))?);
        mesh.write_nodes_csv(&mut nodes)?;
        nodes.flush()?;
        let mut cells = BufWriter::new(File::create(name("cells"))?);
        mesh.write_cells_csv(&mut cells)?;
        cells.flush()?;
    }
    let re = sparse_rom::fom::reynolds(2.25, 3.0, nu)?;
    eprintln!(
        "converged in {} Oseen iterations (Re = {re}), {} velocity DOFs",
        sol.iterations(),
        mesh.velocity_dofs()
    );
    Ok(())
}
