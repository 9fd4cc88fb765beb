mod common;

use common::*;
use maxvem::assembly::{
    apply_boundary_conditions, assemble_rhs, interpolate_edge_field, PhysParams, StateVector,
};
use maxvem::driver::{run_transient, Discretization, TransientSetup};
use maxvem::solver::PreconditionerVariant;
use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;

#[test]
fn schur_matches_dense_elimination() {
    for disc in mesh_suite() {
        for tau in [0.1, 0.005] {
            let d = schur_defect(&disc, tau, 7);
            assert!(d <= 1e-10, "{} τ={tau}: {d:e}", disc.label);
        }
    }
}

#[test]
fn off_diagonal_blocks_are_negative_adjoints() {
    for disc in mesh_suite() {
        let sys = unit_system(&disc, 0.05);
        let diff = sys.b1.add_scaled(1.0, &sys.b2.transpose(), 1.0);
        let scale = max_abs(sys.b2.values());
        assert!(max_abs(diff.values()) <= 1e-12 * scale, "{}", disc.label);
    }
}

#[test]
fn diagonal_blocks_and_schur_are_spd() {
    for disc in mesh_suite() {
        let sys = unit_system(&disc, 0.05);
        for (name, m) in [("A", &sys.a), ("C", &sys.c), ("S_C", &sys.schur)] {
            let d = m.to_dense();
            assert!((&d - d.transpose()).norm() <= 1e-12 * d.norm(), "{} {name}", disc.label);
            assert!(d.clone().cholesky().is_some(), "{} {name} not SPD", disc.label);
        }
    }
}

#[test]
fn hex_dof_counts() {
    for (n, total) in [(2, 90), (4, 540), (8, 3672)] {
        let d = Discretization::hex(n).unwrap();
        assert_eq!(d.total_dofs(), total);
        let m = &d.mesh;
        let interior_edges = (0..m.n_edges()).filter(|&e| !m.is_boundary_edge(e)).count();
        let interior_faces = (0..m.n_faces()).filter(|&f| !m.is_boundary_face(f)).count();
        // interior edges: 3 n (n-1)², interior faces: 3 n² (n-1)
        assert_eq!(interior_edges, 3 * n * (n - 1) * (n - 1));
        assert_eq!(interior_faces, 3 * n * n * (n - 1));
        assert_eq!(apply_boundary_conditions(m).n_free(), interior_edges + interior_faces);
    }
}

#[test]
fn block_scalings() {
    let d = Discretization::hex(2).unwrap();
    let p = PhysParams::uniform(d.mesh.n_cells(), 1.0, 0.0, 1.0, 0.1);
    let sys = d.assemble(&p, 1.0).unwrap();
    let fe = &sys.dofs.free_edges;
    let me = sys.edge_mass.submatrix(fe, fe);
    assert!(max_abs(sys.a.add_scaled(1.0, &me, -10.0).values()) <= 1e-12 * max_abs(sys.a.values()));

    let mu2 = PhysParams::uniform(d.mesh.n_cells(), 1.0, 1.0, 2.0, 0.1);
    let s2 = d.assemble(&mu2, 1.0).unwrap();
    let ff = &s2.dofs.free_faces;
    let mf = s2.face_mass.submatrix(ff, ff);
    assert!(max_abs(s2.c.add_scaled(1.0, &mf, -1.0 / (2.0 * 0.1)).values()) <= 1e-12 * max_abs(s2.c.values()));
}

#[test]
fn schur_minus_a_is_linear_in_tau() {
    let d = Discretization::hex(2).unwrap();
    let parts: Vec<DMatrix<f64>> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&t| {
            let s = unit_system(&d, t);
            s.schur.to_dense() - s.a.to_dense()
        })
        .collect();
    assert!((&parts[0] - &parts[1] * 2.0).norm() <= 1e-12 * parts[0].norm());
    assert!((&parts[1] - &parts[2] * 2.0).norm() <= 1e-12 * parts[1].norm());
}

/// Global mass matrices, curl and blocks rebuilt densely from the local
/// matrices, independently of the sparse assembly path.
fn dense_step_reference(disc: &Discretization, tau: f64, c: Vector3<f64>) -> Vec<f64> {
    let (ne, nf) = (disc.mesh.n_edges(), disc.mesh.n_faces());
    let mut me = DMatrix::<f64>::zeros(ne, ne);
    let mut mf = DMatrix::<f64>::zeros(nf, nf);
    for op in &disc.local_ops {
        let le = op.edge.mass(1.0).unwrap();
        for (i, &gi) in op.edge.edges.iter().enumerate() {
            for (j, &gj) in op.edge.edges.iter().enumerate() {
                me[(gi, gj)] += le[(i, j)];
            }
        }
        let lf = op.face.mass(1.0).unwrap();
        for (i, &gi) in op.face.faces.iter().enumerate() {
            for (j, &gj) in op.face.faces.iter().enumerate() {
                mf[(gi, gj)] += lf[(i, j)];
            }
        }
    }
    let mut curl = DMatrix::<f64>::zeros(nf, ne);
    for (f, face) in disc.mesh.faces().iter().enumerate() {
        for e in face {
            curl[(f, e.index)] += e.sign_f64() * disc.geom.edge_length[e.index];
        }
    }
    let dofs = apply_boundary_conditions(&disc.mesh);
    let (fe, ff) = (&dofs.free_edges, &dofs.free_faces);
    let (nb, nee) = (ff.len(), fe.len());
    let pick = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    };
    let mf_ff = pick(&mf, ff, ff);
    let curl_fe = pick(&curl, ff, fe);
    let mut k = DMatrix::zeros(nb + nee, nb + nee);
    k.view_mut((0, 0), (nb, nb)).copy_from(&(&mf_ff / tau));
    k.view_mut((0, nb), (nb, nee)).copy_from(&(&mf_ff * &curl_fe));
    k.view_mut((nb, 0), (nee, nb)).copy_from(&(-(curl_fe.transpose() * &mf_ff)));
    k.view_mut((nb, nb), (nee, nee)).copy_from(&(pick(&me, fe, fe) * (1.0 / tau + 1.0)));
    let j_all: Vec<f64> = (0..ne).map(|e| c.dot(&disc.geom.edge_tangent[e])).collect();
    let src = pick(&me, fe, &(0..ne).collect::<Vec<_>>()) * dvec(&j_all);
    let mut rhs = nalgebra::DVector::zeros(nb + nee);
    rhs.rows_mut(nb, nee).copy_from(&src);
    k.lu().solve(&rhs).unwrap().iter().copied().collect()
}

#[test]
fn one_step_matches_dense_reference() {
    let c = Vector3::new(1.0, 1.0, 1.0);
    for disc in [Discretization::hex(2).unwrap(), Discretization::tet(2).unwrap(), sample("checkerboard")] {
        let reference = dense_step_reference(&disc, 0.05, c);
        for variant in [PreconditionerVariant::ExactExact, PreconditionerVariant::JacobiAms] {
            let setup = TransientSetup {
                tau: 0.05,
                steps: 1,
                variant,
                tolerances: maxvem::driver::Tolerances {
                    abs_tol: 1e-14,
                    rel_tol: 1e-12,
                    max_iterations: 1000,
                },
                threads: 1,
                ..Default::default()
            };
            let (_, state) = run_transient(&disc, &setup).unwrap();
            let x = dvec(&state.to_block());
            let r = dvec(&reference);
            assert!((&x - &r).norm() <= 1e-8 * r.norm(), "{} {variant}", disc.label);
        }
    }
}

#[test]
fn rhs_from_zero_state() {
    let d = Discretization::hex(2).unwrap();
    let sys = unit_system(&d, 0.05);
    let zero = StateVector::zeros(&sys.dofs);
    let none = vec![0.0; d.mesh.n_edges()];
    assert!(assemble_rhs(&sys, &zero, &none).unwrap().iter().all(|&v| v == 0.0));

    let j = interpolate_edge_field(&d.geom, |_| Vector3::new(1.0, 1.0, 1.0));
    assert!(j.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    let rhs = assemble_rhs(&sys, &zero, &j).unwrap();
    assert!(rhs[..sys.n_b()].iter().all(|&v| v == 0.0));
    let want = sys.edge_mass_source.mul_vec(&j);
    assert_eq!(&rhs[sys.n_b()..], &want[..]);
    assert!(assemble_rhs(&sys, &zero, &j[1..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn schur_identity_random_tau(tau in 1e-3f64..1.0, seed in any::<u64>(), which in 0usize..5) {
        let disc = &mesh_suite()[which];
        prop_assert!(schur_defect(disc, tau, seed) <= 1e-10);
    }

    #[test]
    fn divergence_is_conserved(
        tau in 0.005f64..0.2,
        jx in -2.0f64..2.0,
        jy in -2.0f64..2.0,
        jz in -2.0f64..2.0,
        which in 0usize..5,
    ) {
        let disc = &mesh_suite()[which];
        let setup = TransientSetup {
            tau,
            steps: 3,
            source: Vector3::new(jx, jy, jz),
            variant: PreconditionerVariant::ExactExact,
            threads: 1,
            ..Default::default()
        };
        let (rec, state) = run_transient(disc, &setup).unwrap();
        let scale = max_abs(&state.b).max(1e-300);
        prop_assert!(rec.divergence_drift <= 1e-10 * scale.max(1.0));
    }
}
