mod common;

use common::*;
use maxvem::assembly::{interpolate_edge_field, interpolate_face_field};
use maxvem::driver::Discretization;
use maxvem::mesh::{generate_hex, BoxDomain, Point};
use maxvem::vem::nodal_interpolation;
use nalgebra::{DVector, Matrix3, Vector3};
use proptest::prelude::*;

fn gather(idx: &[usize], all: &[f64]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| all[i]))
}

fn check_patch(disc: &Discretization, c: Vector3<f64>, tol: f64) {
    let e = interpolate_edge_field(&disc.geom, |_| c);
    let f = interpolate_face_field(&disc.geom, |_| c);
    for op in &disc.local_ops {
        let pe = &op.edge.projection * gather(&op.edge.edges, &e);
        let pf = &op.face.projection * gather(&op.face.faces, &f);
        assert!((pe - c).norm() <= tol * c.norm().max(1.0), "{} edge cell {}", disc.label, op.edge.cell);
        assert!((pf - c).norm() <= tol * c.norm().max(1.0), "{} face cell {}", disc.label, op.face.cell);
    }
}

#[test]
fn patch_test_on_every_mesh_type() {
    for disc in mesh_suite() {
        for c in [Vector3::x(), Vector3::new(0.3, -1.2, 2.5)] {
            check_patch(&disc, c, 1e-12);
        }
    }
}

#[test]
fn projection_reproduces_dofs_of_constants() {
    for disc in mesh_suite() {
        for op in &disc.local_ops {
            let ie = &op.edge.projection * &op.edge.dofs_of_constants;
            let jf = &op.face.projection * &op.face.dofs_of_constants;
            assert!((ie - Matrix3::identity()).norm() < 1e-12);
            assert!((jf - Matrix3::identity()).norm() < 1e-12);
        }
    }
}

#[test]
fn stabilization_kernel_contains_constants() {
    for disc in mesh_suite() {
        for op in &disc.local_ops {
            for (s, d) in [
                (&op.edge.stabilization, &op.edge.dofs_of_constants),
                (&op.face.stabilization, &op.face.dofs_of_constants),
            ] {
                assert!((s * d).norm() <= 1e-12 * s.norm().max(1e-300) * d.norm());
                assert!((s - s.transpose()).norm() <= 1e-14 * s.norm());
                assert!(min_eig(s) >= -1e-12 * s.norm());
            }
        }
    }
}

#[test]
fn constant_field_energy_is_independent_of_alpha() {
    let disc = sample("checkerboard");
    let c = Vector3::new(1.0, -2.0, 0.5);
    let e = interpolate_edge_field(&disc.geom, |_| c);
    let f = interpolate_face_field(&disc.geom, |_| c);
    for op in &disc.local_ops {
        let vol = disc.geom.cell_volume[op.edge.cell];
        let u = gather(&op.edge.edges, &e);
        let w = gather(&op.face.faces, &f);
        for alpha in [0.0, 0.01, 1.0, 100.0] {
            let me = op.edge.mass(alpha).unwrap();
            let mf = op.face.mass(alpha).unwrap();
            let exact = vol * c.norm_squared();
            assert!(((u.transpose() * &me * &u)[0] - exact).abs() <= 1e-12 * exact);
            assert!(((w.transpose() * &mf * &w)[0] - exact).abs() <= 1e-12 * exact);
        }
    }
}

#[test]
fn local_masses_are_spd_for_positive_alpha() {
    for disc in mesh_suite() {
        for op in &disc.local_ops {
            for alpha in [0.001, 1.0, 100.0] {
                let me = op.edge.mass(alpha).unwrap();
                let mf = op.face.mass(alpha).unwrap();
                assert!(min_eig(&me) > 0.0, "{} cell {}", disc.label, op.edge.cell);
                assert!(min_eig(&mf) > 0.0, "{} cell {}", disc.label, op.face.cell);
            }
        }
    }
}

#[test]
fn mass_scaling_under_uniform_dilation() {
    let s = 2.0;
    let unit = Discretization::new("u", generate_hex([2; 3], &BoxDomain::unit()).unwrap()).unwrap();
    let big = Discretization::new(
        "s",
        generate_hex([2; 3], &BoxDomain { min: [0.0; 3], max: [s; 3] }).unwrap(),
    )
    .unwrap();
    for (a, b) in unit.local_ops.iter().zip(&big.local_ops) {
        let (ea, eb) = (a.edge.mass(1.0).unwrap(), b.edge.mass(1.0).unwrap());
        assert!((eb - ea * s.powi(3)).norm() <= 1e-12 * s.powi(3) * a.edge.mass(1.0).unwrap().norm());
        // face DoFs are fluxes, so the face mass carries |F|⁻² on top of the volume
        let (fa, fb) = (a.face.mass(1.0).unwrap(), b.face.mass(1.0).unwrap());
        assert!((fb - &fa / s).norm() <= 1e-12 * fa.norm());
    }
}

#[test]
fn nodal_interpolation_of_linear_field_matches_midpoint_value() {
    let disc = Discretization::hex(2).unwrap();
    let a = Matrix3::new(1.0, 2.0, -1.0, 0.5, -3.0, 0.0, 2.0, 1.0, 4.0);
    let pi = nodal_interpolation(&disc.mesh, &disc.geom);
    let nodal: Vec<f64> = disc.mesh.vertices().iter().flat_map(|p| (a * p).iter().copied().collect::<Vec<_>>()).collect();
    let got = pi.mul_vec(&nodal);
    let want = interpolate_edge_field(&disc.geom, |p: &Point| a * p);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-12);
    }
}

#[test]
fn exact_sequence_holds_on_every_mesh() {
    for disc in mesh_suite() {
        let inc = &disc.incidence;
        let cg = inc.curl.matmul(&inc.grad);
        let dc = inc.div.matmul(&inc.curl);
        let scale_cg = inc.curl.to_dense().norm() * inc.grad.to_dense().norm();
        let scale_dc = inc.div.to_dense().norm() * inc.curl.to_dense().norm();
        assert!(max_abs(cg.values()) <= 1e-14 * scale_cg, "{}", disc.label);
        assert!(max_abs(dc.values()) <= 1e-14 * scale_dc, "{}", disc.label);
    }
}

#[test]
fn unit_face_circulation_is_perimeter() {
    let disc = Discretization::hex(1).unwrap();
    for (f, face) in disc.mesh.faces().iter().enumerate() {
        let u: Vec<f64> = {
            let mut u = vec![0.0; disc.mesh.n_edges()];
            for e in face {
                u[e.index] = e.sign_f64();
            }
            u
        };
        assert!((disc.incidence.curl.mul_vec(&u)[f] - 4.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn div_curl_vanishes_on_random_edge_fields(seed in any::<u64>(), which in 0usize..5) {
        let disc = &mesh_suite()[which];
        let u = random_vec(&mut rng(seed), disc.mesh.n_edges());
        let b = disc.incidence.curl.mul_vec(&u);
        let d = disc.incidence.div.mul_vec(&b);
        prop_assert!(max_abs(&d) <= 1e-14 * max_abs(&b).max(1.0) * 8.0);
    }

    #[test]
    fn curl_grad_vanishes_on_random_potentials(seed in any::<u64>(), which in 0usize..5) {
        let disc = &mesh_suite()[which];
        let p = random_vec(&mut rng(seed), disc.mesh.n_vertices());
        let g = disc.incidence.grad.mul_vec(&p);
        let c = disc.incidence.curl.mul_vec(&g);
        prop_assert!(max_abs(&c) <= 1e-13 * max_abs(&g).max(1.0));
    }

    #[test]
    fn patch_test_for_random_constants(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        for name in SAMPLE_MESHES {
            check_patch(&sample(name), Vector3::new(x, y, z), 1e-12);
        }
    }
}
