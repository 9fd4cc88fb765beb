//! Krylov solver, preconditioners and dense diagnostics.

mod amg;
mod ams;
mod block;
mod dense;
mod direct;
mod gmres;
mod jacobi;

pub use amg::Amg;
pub use ams::{aux_space_build, AmsCycle, AmsOptions, AuxSolver, AuxSpacePreconditioner};
pub use block::{
    block_precond_apply, BlockOperator, BlockPreconditioner, Composed, PreconditionerVariant,
};
pub use dense::{
    condition_estimate, count_distinct, materialize, spectrum_estimate, CONDITION_LIMIT,
    SPECTRUM_LIMIT,
};
pub use direct::{direct_factor, rcm_ordering, DirectFactor};
pub use gmres::{gmres, residual_norm, SolveReport, SolveStatus, SolverConfig};
pub use jacobi::{jacobi_build, Jacobi};

/// Runs `f` on a dedicated pool of `threads` workers (0 = ambient pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}
