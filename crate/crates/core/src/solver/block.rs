use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::BlockSystem;
use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::sparse::{LinearOperator, SparseMatrix};
use crate::vem::IncidenceOperators;

use super::ams::{aux_space_build, AmsOptions};
use super::direct::DirectFactor;
use super::jacobi::jacobi_build;

/// Choice of approximate inverses for `C` and `S_C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerVariant {
    ExactExact,
    JacobiExact,
    ExactAms,
    JacobiAms,
}

impl PreconditionerVariant {
    pub const ALL: [PreconditionerVariant; 4] = [
        PreconditionerVariant::ExactExact,
        PreconditionerVariant::JacobiExact,
        PreconditionerVariant::ExactAms,
        PreconditionerVariant::JacobiAms,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PreconditionerVariant::ExactExact => "exact-exact",
            PreconditionerVariant::JacobiExact => "jacobi-exact",
            PreconditionerVariant::ExactAms => "exact-ams",
            PreconditionerVariant::JacobiAms => "jacobi-ams",
        }
    }

    fn exact_c(self) -> bool {
        matches!(self, PreconditionerVariant::ExactExact | PreconditionerVariant::ExactAms)
    }

    fn exact_s(self) -> bool {
        matches!(self, PreconditionerVariant::ExactExact | PreconditionerVariant::JacobiExact)
    }
}

impl fmt::Display for PreconditionerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PreconditionerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.label() == s || v.label().replace('-', "_") == s)
            .ok_or_else(|| Error::Config(format!("unknown preconditioner variant `{s}`")))
    }
}

/// The 2×2 block system as an operator, without forming it.
pub struct BlockOperator<'a> {
    pub system: &'a BlockSystem,
}

impl LinearOperator for BlockOperator<'_> {
    fn nrows(&self) -> usize {
        self.system.n()
    }
    fn ncols(&self) -> usize {
        self.system.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = self.system;
        let nb = s.n_b();
        let (xb, xe) = x.split_at(nb);
        let (yb, ye) = y.split_at_mut(nb);
        s.c.mul_vec_into(xb, yb);
        let t = s.b2.mul_vec(xe);
        for (p, q) in yb.iter_mut().zip(&t) {
            *p += q;
        }
        s.a.mul_vec_into(xe, ye);
        let t = s.b1.mul_vec(xb);
        for (p, q) in ye.iter_mut().zip(&t) {
            *p += q;
        }
    }
}

/// Block lower-triangular approximate inverse:
/// `z_B = Ĉ⁻¹ r_B`, `z_E = Ŝ⁻¹ (r_E - B1 z_B)`.
pub struct BlockPreconditioner {
    c_inv: Box<dyn LinearOperator + Send>,
    s_inv: Box<dyn LinearOperator + Send>,
    b1: SparseMatrix,
    pub variant: PreconditionerVariant,
}

impl BlockPreconditioner {
    /// Assembles the preconditioner from explicit sub-inverses.
    pub fn from_parts(
        c_inv: Box<dyn LinearOperator + Send>,
        s_inv: Box<dyn LinearOperator + Send>,
        b1: SparseMatrix,
        variant: PreconditionerVariant,
    ) -> Result<Self> {
        if b1.nrows() != s_inv.nrows() || b1.ncols() != c_inv.nrows() {
            return Err(Error::Dimension(format!(
                "B1 is {}×{}, inverses are {} and {}",
                b1.nrows(),
                b1.ncols(),
                c_inv.nrows(),
                s_inv.nrows()
            )));
        }
        Ok(Self {
            c_inv,
            s_inv,
            b1,
            variant,
        })
    }

    pub fn build(
        system: &BlockSystem,
        mesh: &PolyMesh,
        incidence: &IncidenceOperators,
        variant: PreconditionerVariant,
        ams: &AmsOptions,
    ) -> Result<Self> {
        let c_inv: Box<dyn LinearOperator + Send> = if variant.exact_c() {
            Box::new(DirectFactor::new(&system.c, "C")?)
        } else {
            Box::new(jacobi_build(&system.c)?)
        };
        let s_inv: Box<dyn LinearOperator + Send> = if variant.exact_s() {
            Box::new(DirectFactor::new(&system.schur, "S_C")?)
        } else {
            Box::new(aux_space_build(
                &system.schur,
                mesh,
                incidence,
                &system.dofs.free_edges,
                ams,
            )?)
        };
        Self::from_parts(c_inv, s_inv, system.b1.clone(), variant)
    }

    pub fn n_b(&self) -> usize {
        self.c_inv.nrows()
    }
}

impl LinearOperator for BlockPreconditioner {
    fn nrows(&self) -> usize {
        self.c_inv.nrows() + self.s_inv.nrows()
    }
    fn ncols(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        block_precond_apply(self, r, z)
    }
}

pub fn block_precond_apply(stack: &BlockPreconditioner, r: &[f64], z: &mut [f64]) {
    let nb = stack.n_b();
    let (rb, re) = r.split_at(nb);
    let (zb, ze) = z.split_at_mut(nb);
    stack.c_inv.apply(rb, zb);
    let coupled = stack.b1.mul_vec(zb);
    let rhs: Vec<f64> = re.iter().zip(&coupled).map(|(p, q)| p - q).collect();
    stack.s_inv.apply(&rhs, ze);
}

/// `x ↦ A (P x)`: the right-preconditioned operator.
pub struct Composed<'a> {
    pub outer: &'a dyn LinearOperator,
    pub inner: &'a dyn LinearOperator,
}

impl LinearOperator for Composed<'_> {
    fn nrows(&self) -> usize {
        self.outer.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.inner.nrows()];
        self.inner.apply(x, &mut t);
        self.outer.apply(&t, y);
    }
}
