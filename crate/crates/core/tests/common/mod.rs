#![allow(dead_code)]

use std::path::PathBuf;

use maxvem::assembly::{BlockSystem, PhysParams};
use maxvem::driver::Discretization;
use maxvem::mesh::load_mesh;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_MESHES: [&str; 2] = ["pyramids", "checkerboard"];

pub fn sample_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{name}.pmesh"))
}

pub fn sample(name: &str) -> Discretization {
    Discretization::new(name, load_mesh(&sample_path(name)).unwrap()).unwrap()
}

/// hex(2), hex(3), tet(2) and both shipped samples.
pub fn mesh_suite() -> Vec<Discretization> {
    let mut v = vec![
        Discretization::hex(2).unwrap(),
        Discretization::hex(3).unwrap(),
        Discretization::tet(2).unwrap(),
    ];
    v.extend(SAMPLE_MESHES.iter().map(|n| sample(n)));
    v
}

pub fn unit_system(disc: &Discretization, tau: f64) -> BlockSystem {
    let p = PhysParams::uniform(disc.mesh.n_cells(), 1.0, 1.0, 1.0, tau);
    disc.assemble(&p, 1.0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Smallest eigenvalue of a symmetric dense matrix.
pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Dense monolithic block matrix `[C B2; B1 A]`, built from the blocks
/// independently of `BlockSystem::monolithic`.
pub fn dense_block(sys: &BlockSystem) -> DMatrix<f64> {
    let (nb, ne) = (sys.n_b(), sys.n_e());
    let mut k = DMatrix::zeros(nb + ne, nb + ne);
    k.view_mut((0, 0), (nb, nb)).copy_from(&sys.c.to_dense());
    k.view_mut((0, nb), (nb, ne)).copy_from(&sys.b2.to_dense());
    k.view_mut((nb, 0), (ne, nb)).copy_from(&sys.b1.to_dense());
    k.view_mut((nb, nb), (ne, ne)).copy_from(&sys.a.to_dense());
    k
}

/// `‖S x − (A x − B1 C⁻¹ B2 x)‖ / (‖S‖₂ ‖x‖)` maximized over 10 random x,
/// with C⁻¹ from a dense LU.
pub fn schur_defect(disc: &Discretization, tau: f64, seed: u64) -> f64 {
    let sys = unit_system(disc, tau);
    let (a, b1, b2, c, s) = (
        sys.a.to_dense(),
        sys.b1.to_dense(),
        sys.b2.to_dense(),
        sys.c.to_dense(),
        sys.schur.to_dense(),
    );
    let lu = c.lu();
    let norm = s.singular_values().max();
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = dvec(&random_vec(&mut r, sys.n_e()));
        let reference = &a * &x - &b1 * lu.solve(&(&b2 * &x)).unwrap();
        worst = worst.max((&s * &x - reference).norm() / (x.norm() * norm));
    }
    worst
}
