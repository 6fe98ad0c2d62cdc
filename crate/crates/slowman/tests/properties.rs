//! Property suite: algebraic identities and API invariants that must hold
//! for *arbitrary* finite inputs, not just the seeded samples the
//! acceptance gate uses.

use proptest::prelude::*;

use slowman::geom::{Matrix, Vector};
use slowman::kinematics;
use slowman::levelset::GridSpec;
use slowman::model::{builtin, linear};
use slowman::tls;
use slowman::trajectory::{self, Control, SectionSpec};

fn coeff() -> impl Strategy<Value = f64> {
    // Away from overflow but spanning many magnitudes, both signs.
    prop_oneof![-100.0..100.0f64, -1e-3..1e-3f64]
}

fn mat2() -> impl Strategy<Value = (Matrix, Vector)> {
    (prop::array::uniform4(coeff()), prop::array::uniform2(coeff())).prop_map(|(m, v)| {
        (
            Matrix::from_rows2([[m[0], m[1]], [m[2], m[3]]]),
            Vector::new2(v[0], v[1]),
        )
    })
}

fn mat3() -> impl Strategy<Value = (Matrix, Vector)> {
    (prop::array::uniform9(coeff()), prop::array::uniform3(coeff())).prop_map(|(m, v)| {
        (
            Matrix::from_rows3([
                [m[0], m[1], m[2]],
                [m[3], m[4], m[5]],
                [m[6], m[7], m[8]],
            ]),
            Vector::new3(v[0], v[1], v[2]),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The eigenvalue-free 2D polynomial is the wedge of velocity and
    /// acceleration for any jacobian/velocity pair.
    #[test]
    fn poly2_is_wedge((j, v) in mat2()) {
        let a = tls::polynomial_phi_2d(&j, &v);
        let b = v.cross2(&j.mul_vec(&v));
        let mass = j.norm() * v.norm_sq();
        prop_assert!((a - b).abs() <= 1e-9 * mass.max(1e-300));
    }

    /// The 3D polynomial is the triple product (J²V)·(V ∧ JV).
    #[test]
    fn poly3_is_triple_product((j, v) in mat3()) {
        let a = tls::polynomial_phi_3d(&j, &v);
        let jv = j.mul_vec(&v);
        let b = j.mul_vec(&jv).dot(&v.cross3(&jv));
        let mass = j.norm().powi(3) * v.norm().powi(3);
        prop_assert!((a - b).abs() <= 1e-9 * mass.max(1e-300));
    }

    /// Time reversal of the flow (V → −V, hence J → −J) negates the 2D
    /// wedge (signed curvature flips with orientation) and leaves the 3D
    /// cubic unchanged (torsion does not). Every monomial carries the same
    /// even/odd sign count, so agreement is bitwise.
    #[test]
    fn polynomials_under_time_reversal((j2, v2) in mat2(), (j3, v3) in mat3()) {
        let r2 = Matrix::zeros(2) - j2;
        prop_assert_eq!(
            tls::polynomial_phi_2d(&r2, &v2.scale(-1.0)),
            -tls::polynomial_phi_2d(&j2, &v2)
        );
        let r3 = Matrix::zeros(3) - j3;
        prop_assert_eq!(
            tls::polynomial_phi_3d(&r3, &v3.scale(-1.0)),
            tls::polynomial_phi_3d(&j3, &v3)
        );
    }

    /// Lagrange identity: tangential² + normal² = ‖γ‖², and the normal
    /// component equals curvature·‖V‖².
    #[test]
    fn lagrange_and_curvature_normal(
        vc in prop::array::uniform2(-100.0..100.0f64),
        gc in prop::array::uniform2(-100.0..100.0f64),
    ) {
        let v = Vector::new2(vc[0], vc[1]);
        let g = Vector::new2(gc[0], gc[1]);
        prop_assume!(v.norm() > 1e-6 && g.norm() > 1e-6);
        let (gt, gn) = kinematics::acceleration_components(&v, &g).unwrap();
        prop_assert!((gt * gt + gn * gn - g.norm_sq()).abs() <= 1e-10 * g.norm_sq());
        let kappa = kinematics::curvature(&v, &g).unwrap();
        let lhs = kappa * v.norm_sq();
        prop_assert!((lhs - gn).abs() <= 1e-10 * gn.abs().max(1e-300));
    }

    /// Eigen-decomposition of a random real-spectrum jacobian: residual
    /// ‖JY − λY‖ small for every pair, and left/right eigenvectors for
    /// distinct eigenvalues are bi-orthogonal.
    #[test]
    fn eigen_residual_and_biorthogonality(seed in 0u64..1u64 << 48, dim in 2usize..4) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let j = tls::sample_real_spectrum_jacobian(&mut rng, dim);
        let e = tls::eigen_matrix(&j).unwrap();
        for k in 0..dim {
            let y = e.right[k].real_part();
            let jy = j.mul_vec(&y);
            let ly = y.scale(e.eigenvalues[k].re);
            prop_assert!((jy - ly).norm() <= 1e-8 * j.norm() * y.norm());
        }
        for a in 0..dim {
            for b in 0..dim {
                if (e.eigenvalues[a].re - e.eigenvalues[b].re).abs()
                    > 1e-3 * j.norm().max(1.0)
                {
                    if a != b {
                        let t = e.left[a].real_part();
                        let y = e.right[b].real_part();
                        prop_assert!(
                            t.dot(&y).abs() <= 1e-7 * t.norm() * y.norm()
                        );
                    }
                }
            }
        }
    }

    /// Fixed-step node times are exactly t0 + k·dt (no accumulation
    /// drift), and the final node is exactly t1 when the span divides.
    #[test]
    fn fixed_step_times_are_exact(steps in 1usize..400, dt_num in 1u32..50) {
        let dt = dt_num as f64 / 64.0; // exactly representable
        let m = linear(Matrix::from_rows2([[0.0, 1.0], [-1.0, 0.0]]));
        let t1 = steps as f64 * dt;
        let traj = trajectory::integrate(
            &m,
            &Vector::new2(1.0, 0.0),
            0.0,
            t1,
            Control::Fixed { dt },
        ).unwrap();
        prop_assert_eq!(traj.len(), steps + 1);
        for (k, t) in traj.times.iter().enumerate() {
            prop_assert_eq!(*t, k as f64 * dt);
        }
        prop_assert_eq!(traj.final_time(), t1);
    }

    /// Dense output is exact at the nodes and refuses queries outside the
    /// time span.
    #[test]
    fn dense_output_matches_nodes(t_query in -1.0..9.0f64) {
        let m = builtin("vanderpol", &[]).unwrap();
        let traj = trajectory::integrate(
            &m,
            &Vector::new2(0.5, 0.5),
            0.0,
            8.0,
            Control::Adaptive { rtol: 1e-8, atol: 1e-10 },
        ).unwrap();
        if (0.0..=8.0).contains(&t_query) {
            prop_assert!(traj.state_at(t_query).is_some());
        } else {
            prop_assert!(traj.state_at(t_query).is_none());
        }
        let k = traj.len() / 2;
        let s = traj.state_at(traj.times[k]).unwrap();
        prop_assert!(s.dist(&traj.states[k]) <= 1e-12 * (1.0 + traj.states[k].norm()));
    }

    /// Section offset is affine: offset(p + t·n) = t for the unit normal.
    #[test]
    fn section_offset_is_affine(
        p in prop::array::uniform3(-10.0..10.0f64),
        n in prop::array::uniform3(-1.0..1.0f64),
        t in -100.0..100.0f64,
    ) {
        let normal = Vector::new3(n[0], n[1], n[2]);
        prop_assume!(normal.norm() > 1e-3);
        let sec = SectionSpec::from_unnormalized(
            Vector::new3(p[0], p[1], p[2]),
            normal,
            trajectory::CrossingDirection::Both,
        ).unwrap();
        let q = *sec.point() + sec.normal().scale(t);
        let off = sec.offset(&q);
        prop_assert!((off - t).abs() <= 1e-9 * (1.0 + t.abs() + sec.point().norm()));
    }

    /// Grid validation never panics and accepts exactly the documented
    /// shapes: 2–3 axes, finite lo < hi, at least 2 samples per axis.
    #[test]
    fn grid_spec_validation_total(
        dims in 1usize..5,
        lo in -5.0..5.0f64,
        width in -1.0..3.0f64,
        res in 0usize..6,
    ) {
        let bounds = vec![(lo, lo + width); dims];
        let resolution = vec![res; dims];
        let ok = (2..=3).contains(&dims) && width > 0.0 && res >= 2;
        prop_assert_eq!(GridSpec::new(bounds, resolution).is_ok(), ok);
    }

    /// Grid coordinates hit both bounds exactly and are monotone
    /// (`res` cells means `res + 1` samples per axis).
    #[test]
    fn grid_coords_cover_bounds(res in 2usize..40, lo in -3.0..0.0f64, hi in 1.0..4.0f64) {
        let g = GridSpec::new(vec![(lo, hi); 2], vec![res; 2]).unwrap();
        prop_assert_eq!(g.coord(0, 0), lo);
        prop_assert_eq!(g.coord(0, res), hi);
        for k in 1..=res {
            prop_assert!(g.coord(0, k) > g.coord(0, k - 1));
        }
    }
}
