//! Time stepping, benchmark harnesses, result export and the command line.

pub mod cli;
mod config;
mod vtk;

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_blocks, assemble_rhs, cell_divergence, interpolate_edge_field, BlockSystem, PhysParams,
    StateVector,
};
use crate::error::Result;
use crate::mesh::{compute_geometry, generate_hex, generate_tet, load_mesh, GeometricCache, PolyMesh};
use crate::solver::{
    gmres, with_threads, AmsOptions, BlockOperator, BlockPreconditioner, PreconditionerVariant,
    SolveReport, SolverConfig,
};
use crate::vem::{build_incidence, build_local_operators, IncidenceOperators, LocalVemOperators};

pub use config::{
    ExperimentConfig, MeshSpec, Tolerances, DEFAULT_ALPHA_SWEEP, DEFAULT_THREAD_SWEEP,
    DEFAULT_TIMESTEPS,
};
pub use vtk::export_vtk;

/// A mesh with everything that does not depend on τ, α or materials.
pub struct Discretization {
    pub label: String,
    pub mesh: PolyMesh,
    pub geom: GeometricCache,
    pub local_ops: Vec<LocalVemOperators>,
    pub incidence: IncidenceOperators,
}

impl Discretization {
    pub fn new(label: impl Into<String>, mesh: PolyMesh) -> Result<Self> {
        let geom = compute_geometry(&mesh)?;
        let local_ops = build_local_operators(&mesh, &geom)?;
        let incidence = build_incidence(&mesh, &geom);
        Ok(Self {
            label: label.into(),
            mesh,
            geom,
            local_ops,
            incidence,
        })
    }

    pub fn hex(n: usize) -> Result<Self> {
        Self::new(format!("hex{n}"), generate_hex([n; 3], &crate::mesh::BoxDomain::unit())?)
    }

    pub fn tet(n: usize) -> Result<Self> {
        Self::new(format!("tet{n}"), generate_tet([n; 3], &crate::mesh::BoxDomain::unit())?)
    }

    pub fn total_dofs(&self) -> usize {
        self.mesh.total_dofs()
    }

    pub fn assemble(&self, params: &PhysParams, alpha: f64) -> Result<BlockSystem> {
        assemble_blocks(&self.mesh, &self.local_ops, &self.incidence, params, alpha)
    }

    /// Assembles with `alpha` applied where `scope` says; elsewhere α = 1.
    pub fn assemble_scoped(&self, params: &PhysParams, alpha: f64, scope: AlphaScope) -> Result<BlockSystem> {
        match scope {
            AlphaScope::System => self.assemble(params, alpha),
            AlphaScope::Schur => {
                let mut s = self.assemble(params, 1.0)?;
                if alpha != 1.0 {
                    s.schur = self.assemble(params, alpha)?.schur;
                }
                Ok(s)
            }
        }
    }
}

/// Builds every mesh named by a spec, in level order.
pub fn discretizations(spec: &MeshSpec) -> Result<Vec<Discretization>> {
    match spec {
        MeshSpec::Hex { levels, domain } => levels
            .iter()
            .map(|&n| Discretization::new(format!("hex{n}"), generate_hex([n; 3], domain)?))
            .collect(),
        MeshSpec::Tet { levels, domain } => levels
            .iter()
            .map(|&n| Discretization::new(format!("tet{n}"), generate_tet([n; 3], domain)?))
            .collect(),
        MeshSpec::File { paths } => paths
            .iter()
            .map(|p| {
                let label = p.file_stem().map_or("mesh".into(), |s| s.to_string_lossy().into_owned());
                Discretization::new(label, load_mesh(p)?)
            })
            .collect(),
    }
}

/// Where the stabilization multiplier α acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaScope {
    /// Only the Schur complement handed to the preconditioner; the system
    /// itself keeps α = 1.
    #[default]
    Schur,
    /// System and preconditioner alike.
    System,
}

/// One transient run.
#[derive(Debug, Clone)]
pub struct TransientSetup {
    pub tau: f64,
    pub steps: usize,
    pub alpha: f64,
    pub alpha_scope: AlphaScope,
    pub epsilon: f64,
    pub sigma: f64,
    pub mu: f64,
    pub source: Vector3<f64>,
    /// Source is applied for this many steps, then switched off.
    pub source_steps: Option<usize>,
    pub variant: PreconditionerVariant,
    pub tolerances: Tolerances,
    pub ams: AmsOptions,
    pub threads: usize,
}

impl Default for TransientSetup {
    fn default() -> Self {
        Self {
            tau: 0.05,
            steps: 1,
            alpha: 1.0,
            alpha_scope: AlphaScope::Schur,
            epsilon: 1.0,
            sigma: 1.0,
            mu: 1.0,
            source: Vector3::new(1.0, 1.0, 1.0),
            source_steps: None,
            variant: PreconditionerVariant::JacobiAms,
            tolerances: Tolerances::default(),
            ams: AmsOptions::default(),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub mesh: String,
    pub total_dofs: usize,
    pub free_dofs: usize,
    pub tau: f64,
    pub alpha: f64,
    pub variant: PreconditionerVariant,
    pub threads: usize,
    pub reports: Vec<SolveReport>,
    /// Assembly plus preconditioner construction.
    pub setup_seconds: f64,
    pub total_seconds: f64,
    /// `εᵀ‖E‖² + μ⁻¹‖B‖²` in the discrete mass norms after each step.
    pub energy: Vec<f64>,
    /// Largest per-cell change of the discrete divergence of B over the run.
    pub divergence_drift: f64,
}

impl RunRecord {
    pub fn diverged(&self) -> bool {
        self.reports.iter().any(|r| !r.converged())
    }

    /// Largest iteration count over all steps.
    pub fn iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn solve_seconds(&self) -> f64 {
        self.reports.iter().map(|r| r.solve_seconds).sum()
    }
}

/// Implicit Euler from zero initial data. Returns the record and the final
/// state; stops early (record marked diverged) if a solve fails to converge.
pub fn run_transient(disc: &Discretization, setup: &TransientSetup) -> Result<(RunRecord, StateVector)> {
    with_threads(setup.threads, || run_inner(disc, setup))?
}

fn run_inner(disc: &Discretization, setup: &TransientSetup) -> Result<(RunRecord, StateVector)> {
    let start = Instant::now();
    let n_cells = disc.mesh.n_cells();
    let params = PhysParams::uniform(n_cells, setup.epsilon, setup.sigma, setup.mu, setup.tau);
    let system = disc.assemble_scoped(&params, setup.alpha, setup.alpha_scope)?;
    let precond = BlockPreconditioner::build(&system, &disc.mesh, &disc.incidence, setup.variant, &setup.ams)?;
    let setup_seconds = start.elapsed().as_secs_f64();

    let cfg = SolverConfig {
        abs_tol: setup.tolerances.abs_tol,
        rel_tol: setup.tolerances.rel_tol,
        max_iterations: setup.tolerances.max_iterations,
        variant: setup.variant,
        threads: setup.threads,
    };
    let j = interpolate_edge_field(&disc.geom, |_| setup.source);
    let zero_j = vec![0.0; j.len()];
    let op = BlockOperator { system: &system };

    let mut state = StateVector::zeros(&system.dofs);
    let div0 = cell_divergence(&disc.incidence, &system.dofs, &state.b);
    let mut reports = Vec::with_capacity(setup.steps);
    let mut energy = Vec::with_capacity(setup.steps);
    let mut drift = 0.0f64;
    for step in 0..setup.steps {
        let src = match setup.source_steps {
            Some(k) if step >= k => &zero_j,
            _ => &j,
        };
        let rhs = assemble_rhs(&system, &state, src)?;
        let (x, report) = gmres(&op, Some(&precond), &rhs, &cfg)?;
        let ok = report.converged();
        reports.push(report);
        if !ok {
            break;
        }
        state = StateVector::from_block(&x, system.n_b());
        let div = cell_divergence(&disc.incidence, &system.dofs, &state.b);
        for (a, b) in div.iter().zip(&div0) {
            drift = drift.max((a - b).abs());
        }
        energy.push(field_energy(&system, &state));
    }

    Ok((
        RunRecord {
            mesh: disc.label.clone(),
            total_dofs: disc.total_dofs(),
            free_dofs: system.n(),
            tau: setup.tau,
            alpha: setup.alpha,
            variant: setup.variant,
            threads: setup.threads.max(1),
            reports,
            setup_seconds,
            total_seconds: start.elapsed().as_secs_f64(),
            energy,
            divergence_drift: drift,
        },
        state,
    ))
}

/// `Eᵀ M_E(ε) E + Bᵀ M_F(1/μ) B`.
pub fn field_energy(system: &BlockSystem, state: &StateVector) -> f64 {
    let me = system.edge_mass_eps.mul_vec(&state.e);
    let mf = system.face_mass_mu.mul_vec(&state.b);
    system.tau * crate::sparse::dot(&state.e, &me) + crate::sparse::dot(&state.b, &mf)
}

/// Header plus rows of string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

const DASH: &str = "--";

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

fn setup_for(cfg: &ExperimentConfig, tau: f64, alpha: f64, variant: PreconditionerVariant, threads: usize) -> TransientSetup {
    TransientSetup {
        tau,
        steps: cfg.bench_steps.unwrap_or_else(|| cfg.steps_to_final(tau)),
        alpha,
        alpha_scope: cfg.alpha_scope,
        epsilon: cfg.epsilon,
        sigma: cfg.sigma,
        mu: cfg.mu,
        source: Vector3::from(cfg.source),
        source_steps: None,
        variant,
        tolerances: cfg.solver.clone(),
        ams: cfg.ams,
        threads,
    }
}

pub const OPTIMALITY_HEADER: [&str; 10] = [
    "mesh",
    "dofs",
    "free_dofs",
    "tau",
    "variant",
    "alpha",
    "threads",
    "setup_seconds",
    "solve_seconds",
    "iterations",
];

/// Iterations and solve time per (mesh, τ, variant).
pub fn bench_optimality(cfg: &ExperimentConfig) -> Result<(CsvTable, Vec<RunRecord>)> {
    cfg.validate()?;
    let alpha = cfg.alphas.as_ref().map_or(1.0, |a| a[0]);
    let threads = cfg.threads.as_ref().map_or(1, |t| t[0]);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for disc in discretizations(&cfg.mesh)? {
        for &tau in &cfg.timesteps {
            for &variant in &cfg.variants {
                let (rec, _) = run_transient(&disc, &setup_for(cfg, tau, alpha, variant, threads))?;
                let (time, its) = if rec.diverged() {
                    (DASH.to_string(), DASH.to_string())
                } else {
                    (fmt_f(rec.solve_seconds()), rec.iterations().to_string())
                };
                rows.push(vec![
                    rec.mesh.clone(),
                    rec.total_dofs.to_string(),
                    rec.free_dofs.to_string(),
                    tau.to_string(),
                    variant.to_string(),
                    alpha.to_string(),
                    threads.to_string(),
                    fmt_f(rec.setup_seconds),
                    time,
                    its,
                ]);
                records.push(rec);
            }
        }
    }
    Ok((
        CsvTable {
            header: OPTIMALITY_HEADER.to_vec(),
            rows,
        },
        records,
    ))
}

pub const SCALABILITY_HEADER: [&str; 9] = [
    "mesh",
    "dofs",
    "tau",
    "variant",
    "threads",
    "solve_seconds",
    "iterations",
    "speedup",
    "efficiency",
];

/// Solve time versus thread count on the first mesh, first τ and first
/// variant of the config. `S_p = T_1 / T_p`, `E_p = S_p / p`, with `T_1`
/// taken from the first thread count.
pub fn bench_scalability(cfg: &ExperimentConfig) -> Result<(CsvTable, Vec<RunRecord>)> {
    cfg.validate()?;
    let threads = cfg.threads.clone().unwrap_or_else(|| DEFAULT_THREAD_SWEEP.to_vec());
    let alpha = cfg.alphas.as_ref().map_or(1.0, |a| a[0]);
    let tau = cfg.timesteps[0];
    let variant = cfg.variants[0];
    let disc = discretizations(&cfg.mesh)?.into_iter().next().expect("validated nonempty");
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut t1 = None;
    for &p in &threads {
        let (rec, _) = run_transient(&disc, &setup_for(cfg, tau, alpha, variant, p))?;
        let t = rec.solve_seconds();
        let base = *t1.get_or_insert(t * threads[0] as f64);
        let (speedup, eff) = if rec.diverged() || t == 0.0 {
            (DASH.to_string(), DASH.to_string())
        } else {
            let s = base / t;
            (fmt_f(s), fmt_f(s / p as f64))
        };
        rows.push(vec![
            rec.mesh.clone(),
            rec.total_dofs.to_string(),
            tau.to_string(),
            variant.to_string(),
            p.to_string(),
            fmt_f(t),
            if rec.diverged() { DASH.into() } else { rec.iterations().to_string() },
            speedup,
            eff,
        ]);
        records.push(rec);
    }
    Ok((
        CsvTable {
            header: SCALABILITY_HEADER.to_vec(),
            rows,
        },
        records,
    ))
}

pub const STABILIZATION_HEADER: [&str; 7] = ["mesh", "dofs", "tau", "alpha", "variant", "iterations", "solve_seconds"];

/// Iterations per (mesh, α) at the first τ of the config, first variant.
pub fn bench_stabilization(cfg: &ExperimentConfig) -> Result<(CsvTable, Vec<RunRecord>)> {
    cfg.validate()?;
    let alphas = cfg.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHA_SWEEP.to_vec());
    let threads = cfg.threads.as_ref().map_or(1, |t| t[0]);
    let tau = cfg.timesteps[0];
    let variant = cfg.variants[0];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for disc in discretizations(&cfg.mesh)? {
        for &alpha in &alphas {
            let (rec, _) = run_transient(&disc, &setup_for(cfg, tau, alpha, variant, threads))?;
            let (its, time) = if rec.diverged() {
                (DASH.to_string(), DASH.to_string())
            } else {
                (rec.iterations().to_string(), fmt_f(rec.solve_seconds()))
            };
            rows.push(vec![
                rec.mesh.clone(),
                rec.total_dofs.to_string(),
                tau.to_string(),
                alpha.to_string(),
                variant.to_string(),
                its,
                time,
            ]);
            records.push(rec);
        }
    }
    Ok((
        CsvTable {
            header: STABILIZATION_HEADER.to_vec(),
            rows,
        },
        records,
    ))
}

/// Per-step solver summary of one run.
pub fn steps_csv(rec: &RunRecord) -> CsvTable {
    CsvTable {
        header: vec!["step", "time", "iterations", "rel_residual", "solve_seconds", "energy"],
        rows: rec
            .reports
            .iter()
            .enumerate()
            .map(|(k, r)| {
                vec![
                    (k + 1).to_string(),
                    fmt_f((k + 1) as f64 * rec.tau),
                    if r.converged() { r.iterations.to_string() } else { DASH.into() },
                    format!("{:.6e}", r.rel_residual),
                    fmt_f(r.solve_seconds),
                    rec.energy.get(k).map_or(DASH.into(), |e| format!("{e:.6e}")),
                ]
            })
            .collect(),
    }
}
