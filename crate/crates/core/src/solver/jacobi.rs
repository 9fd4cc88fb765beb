use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseMatrix};

/// Multiplication by the inverse diagonal.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn inv_diag(&self) -> &[f64] {
        &self.inv_diag
    }
}

pub fn jacobi_build(m: &SparseMatrix) -> Result<Jacobi> {
    let d = m.diagonal();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "Jacobi needs a positive diagonal, row {i} has {}",
            d[i]
        )));
    }
    Ok(Jacobi {
        inv_diag: d.iter().map(|v| 1.0 / v).collect(),
    })
}

impl LinearOperator for Jacobi {
    fn nrows(&self) -> usize {
        self.inv_diag.len()
    }
    fn ncols(&self) -> usize {
        self.inv_diag.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(4096)
            .zip(x.par_chunks(4096))
            .zip(self.inv_diag.par_chunks(4096))
            .for_each(|((ys, xs), ds)| {
                for ((yi, xi), di) in ys.iter_mut().zip(xs).zip(ds) {
                    *yi = xi * di;
                }
            });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let j = jacobi_build(&SparseMatrix::identity(3)).unwrap();
        let mut y = [0.0; 3];
        j.apply(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, [1.0, 2.0, 3.0]);
        let j = jacobi_build(&SparseMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        let mut y = [0.0; 2];
        j.apply(&[1.0, 1.0], &mut y);
        assert_eq!(y, [0.5, 0.25]);
    }

    #[test]
    fn nonpositive_diagonal_is_rejected() {
        assert!(jacobi_build(&SparseMatrix::from_diagonal(&[1.0, 0.0])).is_err());
        assert!(jacobi_build(&SparseMatrix::from_diagonal(&[-1.0])).is_err());
    }
}
