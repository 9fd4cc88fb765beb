use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::{
    bench_optimality, bench_scalability, bench_stabilization, discretizations, export_vtk,
    run_transient, steps_csv, CsvTable, ExperimentConfig, MeshSpec, TransientSetup,
};
use crate::assembly::PhysParams;
use crate::error::{Error, Result};
use crate::mesh::{generate_hex, generate_tet, load_mesh, save_mesh, validate_topology, BoxDomain};
use crate::solver::{
    condition_estimate, count_distinct, spectrum_estimate, BlockOperator, BlockPreconditioner,
    Composed, PreconditionerVariant,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIVERGED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "maxvem", version, about = "Lowest-order virtual elements for transient Maxwell problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate or check a PMESH file.
    Mesh(MeshArgs),
    /// Run one transient simulation to the final time.
    Solve(RunArgs),
    /// Iterations versus problem size, timestep and preconditioner.
    BenchOptimality(RunArgs),
    /// Solve time versus thread count.
    BenchScalability(RunArgs),
    /// Iterations versus stabilization parameter.
    BenchStabilization(RunArgs),
    /// Eigenvalues of the preconditioned block operator.
    Spectrum(RunArgs),
    /// 2-norm condition number of the block system.
    Cond(RunArgs),
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Unit cube split into n×n×n hexahedra.
    #[arg(long, conflicts_with_all = ["tet", "input"])]
    hex: Option<usize>,
    /// Unit cube split into 6·n³ tetrahedra.
    #[arg(long, conflicts_with = "input")]
    tet: Option<usize>,
    /// Existing PMESH file to validate.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output file (CSV, or VTK for `solve`).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["tet", "mesh"])]
    hex: Option<usize>,
    #[arg(long, conflicts_with = "mesh")]
    tet: Option<usize>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Apply α to the whole system instead of only the preconditioner's Schur complement.
    #[arg(long)]
    alpha_everywhere: bool,
    /// exact-exact, jacobi-exact, exact-ams or jacobi-ams.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// `cond` on the unscaled system instead of its diagonal equilibration.
    #[arg(long)]
    raw: bool,
    /// Eigenvalue clustering tolerance for `spectrum`.
    #[arg(long, default_value_t = 1e-8)]
    cluster_tol: f64,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.hex {
            c.mesh = MeshSpec::Hex {
                levels: vec![n],
                domain: BoxDomain::unit(),
            };
        }
        if let Some(n) = self.tet {
            c.mesh = MeshSpec::Tet {
                levels: vec![n],
                domain: BoxDomain::unit(),
            };
        }
        if let Some(p) = &self.mesh {
            c.mesh = MeshSpec::File { paths: vec![p.clone()] };
        }
        if let Some(t) = self.tau {
            c.timesteps = vec![t];
        }
        if let Some(a) = self.alpha {
            c.alphas = Some(vec![a]);
        }
        if self.alpha_everywhere {
            c.alpha_scope = super::AlphaScope::System;
        }
        if let Some(v) = &self.variant {
            c.variants = vec![v.parse()?];
        }
        if let Some(t) = self.threads {
            c.threads = Some(vec![t]);
        }
        c.validate()?;
        Ok(c)
    }
}

/// Entry point; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
                Error::Io(_) => EXIT_CONFIG,
                _ => EXIT_DIVERGED,
            }
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Mesh(a) => mesh_cmd(a),
        Command::Solve(a) => solve_cmd(a),
        Command::BenchOptimality(a) => bench_cmd(a, "optimality", bench_optimality),
        Command::BenchScalability(a) => bench_cmd(a, "scalability", bench_scalability),
        Command::BenchStabilization(a) => bench_cmd(a, "stabilization", bench_stabilization),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Cond(a) => cond_cmd(a),
    }
}

fn mesh_cmd(a: MeshArgs) -> Result<i32> {
    let mesh = match (a.hex, a.tet, &a.input) {
        (Some(n), _, _) => generate_hex([n; 3], &BoxDomain::unit())?,
        (_, Some(n), _) => generate_tet([n; 3], &BoxDomain::unit())?,
        (_, _, Some(p)) => load_mesh(p)?,
        _ => return Err(Error::Config("one of --hex, --tet or --input is required".into())),
    };
    let report = validate_topology(&mesh);
    eprint!("{report}");
    println!(
        "vertices {} edges {} faces {} cells {} dofs {}",
        mesh.n_vertices(),
        mesh.n_edges(),
        mesh.n_faces(),
        mesh.n_cells(),
        mesh.total_dofs()
    );
    if let Some(out) = &a.output {
        save_mesh(&mesh, out)?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_CONFIG })
}

fn write_table(table: &CsvTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, table.to_csv())?;
    Ok(())
}

fn solve_cmd(a: RunArgs) -> Result<i32> {
    let cfg = a.config()?;
    let disc = discretizations(&cfg.mesh)?.into_iter().next().expect("nonempty");
    let tau = cfg.timesteps[0];
    let setup = TransientSetup {
        tau,
        steps: cfg.steps_to_final(tau),
        alpha: cfg.alphas.as_ref().map_or(1.0, |v| v[0]),
        alpha_scope: cfg.alpha_scope,
        epsilon: cfg.epsilon,
        sigma: cfg.sigma,
        mu: cfg.mu,
        source: cfg.source.into(),
        source_steps: None,
        variant: cfg.variants[0],
        tolerances: cfg.solver.clone(),
        ams: cfg.ams,
        threads: cfg.threads.as_ref().map_or(1, |t| t[0]),
    };
    let (rec, state) = run_transient(&disc, &setup)?;
    let table = steps_csv(&rec);
    print!("{}", table.to_csv());
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_table(&table, &cfg.output_dir.join(format!("solve_{}.csv", disc.label)))?;
    let vtk = a
        .output
        .unwrap_or_else(|| cfg.output_dir.join(format!("{}.vtk", disc.label)));
    let dofs = crate::assembly::apply_boundary_conditions(&disc.mesh);
    export_vtk(&disc.mesh, &disc.local_ops, &dofs, &state, &vtk)?;
    eprintln!(
        "{}: {} steps, max {} iterations, divergence drift {:.3e}",
        disc.label,
        rec.reports.len(),
        rec.iterations(),
        rec.divergence_drift
    );
    Ok(if rec.diverged() { EXIT_DIVERGED } else { EXIT_OK })
}

type Bench = fn(&ExperimentConfig) -> Result<(CsvTable, Vec<super::RunRecord>)>;

fn bench_cmd(a: RunArgs, name: &str, bench: Bench) -> Result<i32> {
    let cfg = a.config()?;
    let (table, records) = bench(&cfg)?;
    print!("{}", table.to_csv());
    let path = a.output.unwrap_or_else(|| cfg.output_dir.join(format!("{name}.csv")));
    write_table(&table, &path)?;
    Ok(if records.iter().any(|r| r.diverged()) {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    })
}

fn first_system(cfg: &ExperimentConfig) -> Result<(super::Discretization, crate::assembly::BlockSystem)> {
    let disc = discretizations(&cfg.mesh)?.into_iter().next().expect("nonempty");
    let params = PhysParams::uniform(disc.mesh.n_cells(), cfg.epsilon, cfg.sigma, cfg.mu, cfg.timesteps[0]);
    let sys = disc.assemble_scoped(&params, cfg.alphas.as_ref().map_or(1.0, |v| v[0]), cfg.alpha_scope)?;
    Ok((disc, sys))
}

fn spectrum_cmd(a: RunArgs) -> Result<i32> {
    let cfg = a.config()?;
    let (disc, sys) = first_system(&cfg)?;
    let variant: PreconditionerVariant = cfg.variants[0];
    let pre = BlockPreconditioner::build(&sys, &disc.mesh, &disc.incidence, variant, &cfg.ams)?;
    let op = BlockOperator { system: &sys };
    let eig = spectrum_estimate(&Composed { outer: &op, inner: &pre })?;
    let table = CsvTable {
        header: vec!["re", "im"],
        rows: eig
            .iter()
            .map(|z| vec![format!("{:.12e}", z.re), format!("{:.12e}", z.im)])
            .collect(),
    };
    if let Some(p) = &a.output {
        write_table(&table, p)?;
    } else {
        print!("{}", table.to_csv());
    }
    eprintln!(
        "{} {variant}: {} eigenvalues, {} distinct at tolerance {:e}",
        disc.label,
        eig.len(),
        count_distinct(&eig, a.cluster_tol),
        a.cluster_tol
    );
    Ok(EXIT_OK)
}

fn cond_cmd(a: RunArgs) -> Result<i32> {
    let cfg = a.config()?;
    let (disc, sys) = first_system(&cfg)?;
    let m = sys.monolithic();
    let k = condition_estimate(&if a.raw { m } else { m.equilibrated() })?;
    println!("mesh,dofs,free_dofs,tau,condition");
    println!("{},{},{},{},{k:.6e}", disc.label, disc.total_dofs(), sys.n(), sys.tau);
    Ok(EXIT_OK)
}
