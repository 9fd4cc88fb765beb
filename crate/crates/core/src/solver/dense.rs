use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseMatrix};

pub const SPECTRUM_LIMIT: usize = 2000;
pub const CONDITION_LIMIT: usize = 5000;

/// Dense matrix of an operator, column by column.
pub fn materialize(op: &dyn LinearOperator) -> DMatrix<f64> {
    let (m, n) = (op.nrows(), op.ncols());
    let mut out = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        out.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    out
}

/// All eigenvalues of a (preconditioned) operator via a dense Schur
/// decomposition.
pub fn spectrum_estimate(op: &dyn LinearOperator) -> Result<Vec<Complex<f64>>> {
    let n = op.nrows();
    if op.ncols() != n {
        return Err(Error::Dimension(format!("operator is {}×{}", n, op.ncols())));
    }
    if n > SPECTRUM_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: SPECTRUM_LIMIT,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let dense = materialize(op);
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| dense[(i, j)]);
    let eig = m
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue iteration failed: {e:?}")))?;
    let mut v: Vec<Complex<f64>> = eig.iter().map(|z| Complex::new(z.re, z.im)).collect();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(v)
}

/// Number of groups after single-linkage clustering at distance `tol`
/// (relative to the largest modulus).
pub fn count_distinct(eigs: &[Complex<f64>], tol: f64) -> usize {
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() <= tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// `σ_max / σ_min` by dense SVD.
pub fn condition_estimate(m: &SparseMatrix) -> Result<f64> {
    let n = m.nrows().max(m.ncols());
    if n > CONDITION_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: CONDITION_LIMIT,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let sv = m.to_dense().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_spectra() {
        let e = spectrum_estimate(&SparseMatrix::identity(4)).unwrap();
        assert!(e.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-14));
        let d = spectrum_estimate(&SparseMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        for (z, want) in d.iter().zip([1.0, 2.0, 3.0]) {
            assert!((z.re - want).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
        assert_eq!(count_distinct(&d, 1e-8), 3);
    }

    #[test]
    fn trivial_conditions() {
        assert!((condition_estimate(&SparseMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-14);
        let k = condition_estimate(&SparseMatrix::from_diagonal(&[1.0, 10.0])).unwrap();
        assert!((k - 10.0).abs() < 1e-12);
    }

    #[test]
    fn size_limits() {
        let big = SparseMatrix::identity(SPECTRUM_LIMIT + 1);
        assert!(matches!(spectrum_estimate(&big), Err(Error::TooLarge { .. })));
        let big = SparseMatrix::identity(CONDITION_LIMIT + 1);
        assert!(matches!(condition_estimate(&big), Err(Error::TooLarge { .. })));
    }
}
