use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, LinearOperator};

use super::PreconditionerVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub variant: PreconditionerVariant,
    /// 0 means the ambient rayon pool.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-6,
            max_iterations: 1000,
            variant: PreconditionerVariant::JacobiAms,
            threads: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Iteration limit reached.
    Diverged,
    /// The Krylov space became invariant but the true residual is still
    /// above tolerance.
    Breakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// True residual `‖b - A x‖`, recomputed after the solve.
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub solve_seconds: f64,
    pub status: SolveStatus,
    /// Residual norm before the first iteration and after each one
    /// (Givens estimate).
    pub history: Vec<f64>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn diverged(&self) -> bool {
        self.status == SolveStatus::Diverged
    }

    /// `iteration,abs_residual,rel_residual` per history entry.
    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "iteration,abs_residual,rel_residual")?;
        let b = self.history.first().copied().unwrap_or(0.0);
        for (i, r) in self.history.iter().enumerate() {
            let rel = if b > 0.0 { r / b } else { 0.0 };
            writeln!(w, "{i},{r:.6e},{rel:.6e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Givens {
    c: f64,
    s: f64,
}

impl Givens {
    fn new(a: f64, b: f64) -> (Self, f64) {
        let r = a.hypot(b);
        if r == 0.0 {
            (Self { c: 1.0, s: 0.0 }, 0.0)
        } else {
            (Self { c: a / r, s: b / r }, r)
        }
    }

    fn apply(&self, a: &mut f64, b: &mut f64) {
        let (x, y) = (*a, *b);
        *a = self.c * x + self.s * y;
        *b = -self.s * x + self.c * y;
    }
}

/// Full (non-restarted) GMRES with right preconditioning, starting from zero.
///
/// Convergence is declared on the true residual `‖b - A x‖ ≤ max(abs_tol,
/// rel_tol ‖b‖)`; if the Givens estimate is below tolerance but the true
/// residual is not, iteration continues.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    b: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    config.validate()?;
    let n = op.nrows();
    if op.ncols() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "operator {}×{}, right-hand side {}",
            n,
            op.ncols(),
            b.len()
        )));
    }
    if let Some(p) = precond {
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::Dimension(format!(
                "preconditioner {}×{} for system of size {n}",
                p.nrows(),
                p.ncols()
            )));
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite right-hand side".into()));
    }

    let start = Instant::now();
    let beta = norm2(b);
    let target = config.abs_tol.max(config.rel_tol * beta);
    let mut history = vec![beta];
    if beta == 0.0 || beta <= target {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                abs_residual: beta,
                rel_residual: 0.0,
                solve_seconds: start.elapsed().as_secs_f64(),
                status: SolveStatus::Converged,
                history,
            },
        ));
    }

    let m = config.max_iterations;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m.min(256) + 1);
    basis.push(b.iter().map(|v| v / beta).collect());
    // column j of the Hessenberg matrix, already rotated
    let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m.min(256));
    let mut rot: Vec<Givens> = Vec::with_capacity(m.min(256));
    let mut g = vec![beta];

    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut true_res = beta;
    let mut status = SolveStatus::Diverged;
    let mut iterations = 0;

    let breakdown_tol = 1e-14 * beta;

    for j in 0..m {
        iterations = j + 1;
        match precond {
            Some(p) => {
                p.apply(&basis[j], &mut z);
                op.apply(&z, &mut w);
            }
            None => op.apply(&basis[j], &mut w),
        }

        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            h[i] = dot(&w, v);
            axpy(-h[i], v, &mut w);
        }
        let mut wn = norm2(&w);
        let lost = (0..=j).map(|i| dot(&w, &basis[i]).abs()).fold(0.0, f64::max);
        if wn > 0.0 && lost > 1e-8 * wn {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                h[i] += c;
                axpy(-c, v, &mut w);
            }
            wn = norm2(&w);
        }
        h[j + 1] = wn;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite Arnoldi coefficient at iteration {iterations}")));
        }

        for (i, r) in rot.iter().enumerate() {
            let (mut a, mut c) = (h[i], h[i + 1]);
            r.apply(&mut a, &mut c);
            h[i] = a;
            h[i + 1] = c;
        }
        let (r, diag) = Givens::new(h[j], h[j + 1]);
        h[j] = diag;
        h[j + 1] = 0.0;
        let gj = g[j];
        g[j] = r.c * gj;
        g.push(-r.s * gj);
        rot.push(r);
        hess.push(h);

        let estimate = g[j + 1].abs();
        history.push(estimate);
        let invariant = wn <= breakdown_tol;

        if estimate <= target || invariant || j + 1 == m {
            x = combine(&basis, &hess, &g, j + 1, precond, n)?;
            true_res = residual_norm(op, b, &x);
            if true_res <= target {
                status = SolveStatus::Converged;
                break;
            }
            if invariant {
                status = SolveStatus::Breakdown;
                break;
            }
        }
        if invariant {
            break;
        }
        basis.push(w.iter().map(|v| v / wn).collect());
    }

    Ok((
        x,
        SolveReport {
            iterations,
            abs_residual: true_res,
            rel_residual: true_res / beta,
            solve_seconds: start.elapsed().as_secs_f64(),
            status,
            history,
        },
    ))
}

/// `x = M⁻¹ V y` with `R y = g` for the first `k` columns.
fn combine(
    basis: &[Vec<f64>],
    hess: &[Vec<f64>],
    g: &[f64],
    k: usize,
    precond: Option<&dyn LinearOperator>,
    n: usize,
) -> Result<Vec<f64>> {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            s -= hess[jj][i] * yj;
        }
        let d = hess[i][i];
        if d == 0.0 {
            return Err(Error::Numerical("singular Hessenberg system".into()));
        }
        y[i] = s / d;
    }
    let mut u = vec![0.0; n];
    for (v, &c) in basis.iter().zip(&y) {
        axpy(c, v, &mut u);
    }
    Ok(match precond {
        Some(p) => {
            let mut x = vec![0.0; n];
            p.apply(&u, &mut x);
            x
        }
        None => u,
    })
}

pub fn residual_norm(op: &dyn LinearOperator, b: &[f64], x: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    op.apply(x, &mut ax);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    norm2(&r)
}
