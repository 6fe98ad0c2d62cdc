//! Seeded randomized verification of the cross-module identities.
//!
//! Every identity the library rests on — the kinematic decompositions, the
//! two polynomial manifold conditions against their curvature/torsion
//! counterparts, and the eigenvector relations — is polynomial in the
//! jacobian entries and the state, so dense random sampling over boxes is a
//! sound falsification strategy: a wrong coefficient anywhere fails almost
//! surely on the first few trials.
//!
//! Determinism contract: each check draws from its own `ChaCha8Rng` seeded
//! as `seed + check_index`, so reports are byte-identical across runs on
//! one platform, independent of check reordering elsewhere.
//!
//! Residuals are relative, with a scale floor on the polynomial-identity
//! checks: the compared values share a term mass `M` (product of norm
//! powers), rounding noise sits near `1e−16·M`, and dividing by
//! `max(|a|, |b|, 1e−4·M)` keeps the residual meaningful even when a sample
//! lands accidentally close to the zero set.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geom::{Matrix, Vector};
use crate::kinematics::{self, JerkMode};
use crate::manifold;
use crate::model::{builtin, linear, ModelSpec};
use crate::tls;

/// One row of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub trials: u64,
    pub max_residual: f64,
    pub pass: bool,
}

pub const DEFAULT_TRIALS: u64 = 1000;

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// State boxes for the builtin models, sized to their attractors (positive
/// octant for the predator-prey model).
fn model_boxes() -> Vec<(ModelSpec, Vec<(f64, f64)>)> {
    let m = |name: &str| builtin(name, &[]).expect("builtin");
    vec![
        (m("vanderpol"), vec![(-3.0, 3.0), (-6.0, 3.0)]),
        (m("lorenz"), vec![(-25.0, 25.0), (-30.0, 30.0), (0.0, 55.0)]),
        (m("chua"), vec![(-1.6, 0.6), (-1.5, 1.5), (-11.0, 12.0)]),
        (m("volterra_gause"), vec![(0.05, 1.0), (0.05, 1.0), (0.05, 1.0)]),
    ]
}

fn random_state<R: Rng>(rng: &mut R, bbox: &[(f64, f64)]) -> Vector {
    let mut s = Vector::zeros(bbox.len());
    for (a, (lo, hi)) in bbox.iter().enumerate() {
        s.set(a, rng.random_range(*lo..*hi));
    }
    s
}

fn random_matrix<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Matrix {
    let mut j = Matrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            j.set(r, c, rng.random_range(-half_width..half_width));
        }
    }
    j
}

/// Relative difference with a mass floor (see module docs).
fn floored_rel(a: f64, b: f64, mass: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-4 * mass);
    if denom == 0.0 {
        return 0.0;
    }
    (a - b).abs() / denom
}

struct Check {
    name: &'static str,
    tolerance: f64,
    run: Box<dyn Fn(&mut ChaCha8Rng, u64) -> (u64, f64)>,
}

/// Runs the whole suite. `trials` scales every randomized check (states per
/// model for the model-driven ones, matrices for the jacobian-driven ones).
pub fn run_suite(seed: u64, trials: u64) -> Vec<CheckReport> {
    let checks = check_list();
    checks
        .iter()
        .enumerate()
        .map(|(k, check)| {
            let mut rng = rng_for(seed, k as u64);
            let (performed, max_residual) = (check.run)(&mut rng, trials);
            CheckReport {
                check: check.name.to_string(),
                trials: performed,
                max_residual,
                pass: max_residual.is_finite() && max_residual <= check.tolerance,
            }
        })
        .collect()
}

/// Pretty JSON array, one object per check, trailing newline.
pub fn report_json(reports: &[CheckReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("report serialization");
    s.push('\n');
    s
}

pub fn first_failure(reports: &[CheckReport]) -> Option<&CheckReport> {
    reports.iter().find(|r| !r.pass)
}

fn check_list() -> Vec<Check> {
    let run = |f: fn(&mut ChaCha8Rng, u64) -> (u64, f64)| -> Box<dyn Fn(&mut ChaCha8Rng, u64) -> (u64, f64)> {
        Box::new(f)
    };
    vec![
        Check {
            name: "kinematics_lagrange",
            tolerance: 1e-10,
            run: run(check_lagrange),
        },
        Check {
            name: "kinematics_curvature_normal",
            tolerance: 1e-10,
            run: run(check_curvature_normal),
        },
        Check {
            name: "curvature_polynomial_exact",
            tolerance: 0.0,
            run: run(check_curvature_polynomial_exact),
        },
        Check {
            name: "curvature_polynomial_pairs",
            tolerance: 1e-9,
            run: run(check_curvature_polynomial_pairs),
        },
        Check {
            name: "torsion_polynomial_states",
            tolerance: 1e-9,
            run: run(check_torsion_polynomial_states),
        },
        Check {
            name: "torsion_polynomial_pairs",
            tolerance: 1e-9,
            run: run(check_torsion_polynomial_pairs),
        },
        Check {
            name: "eigenvector_spectral_residual",
            tolerance: 1e-9,
            run: run(check_spectral_residual),
        },
        Check {
            name: "left_right_orthogonality_2d",
            tolerance: 1e-9,
            run: run(check_orthogonality_2d),
        },
        Check {
            name: "cross_left_alignment_3d",
            tolerance: 1e-7,
            run: run(check_alignment_3d),
        },
        Check {
            name: "conjugate_products_2d",
            tolerance: 1e-9,
            run: run(check_conjugate_2d),
        },
        Check {
            name: "conjugate_products_3d",
            tolerance: 1e-8,
            run: run(check_conjugate_3d),
        },
    ]
}

// ---------------------------------------------------------------------------
// kinematics

/// γ_τ² + γ_ν² = ‖γ‖² (Pythagoras in the Frenet frame).
fn check_lagrange(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    let mut performed = 0;
    for (model, bbox) in model_boxes() {
        for _ in 0..trials {
            let s = random_state(rng, &bbox);
            let (v, gamma) = match field_and_accel(&model, &s) {
                Some(p) => p,
                None => continue,
            };
            let (gt, gn) = match kinematics::acceleration_components(&v, &gamma) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let lhs = gt * gt + gn * gn;
            let rhs = gamma.norm_sq();
            if rhs > 0.0 {
                max = max.max((lhs - rhs).abs() / rhs);
            }
            performed += 1;
        }
    }
    (performed, max)
}

/// curvature · ‖V‖² = γ_ν.
fn check_curvature_normal(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    let mut performed = 0;
    for (model, bbox) in model_boxes() {
        for _ in 0..trials {
            let s = random_state(rng, &bbox);
            let (v, gamma) = match field_and_accel(&model, &s) {
                Some(p) => p,
                None => continue,
            };
            let kappa = match kinematics::curvature(&v, &gamma) {
                Ok(k) => k,
                Err(_) => continue,
            };
            let (_, gn) = match kinematics::acceleration_components(&v, &gamma) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let lhs = kappa * v.norm_sq();
            let denom = lhs.abs().max(gn.abs());
            if denom > 0.0 {
                max = max.max((lhs - gn).abs() / denom);
            }
            performed += 1;
        }
    }
    (performed, max)
}

fn field_and_accel(model: &ModelSpec, s: &Vector) -> Option<(Vector, Vector)> {
    let v = model.eval_field(s).ok()?;
    let gamma = kinematics::acceleration(model, s).ok()?;
    Some((v, gamma))
}

// ---------------------------------------------------------------------------
// polynomial manifold conditions

/// The 2D curvature condition and the 2D polynomial share one arithmetic
/// path, so they must agree bit-for-bit on model states.
fn check_curvature_polynomial_exact(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let model = builtin("vanderpol", &[]).expect("builtin");
    let bbox = [(-3.0, 3.0), (-6.0, 3.0)];
    let mut max = 0.0f64;
    let mut performed = 0;
    for _ in 0..trials {
        let s = random_state(rng, &bbox);
        let a = match manifold::phi_curvature_2d(&model, &s) {
            Ok(a) => a,
            Err(_) => continue,
        };
        let j = model.eval_jacobian(&s).expect("jacobian");
        let v = model.eval_field(&s).expect("field");
        let b = tls::polynomial_phi_2d(&j, &v);
        max = max.max((a - b).abs());
        performed += 1;
    }
    (performed, max)
}

/// Random (J, v): the 2D polynomial equals V ∧ JV.
fn check_curvature_polynomial_pairs(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    for _ in 0..trials {
        let j = random_matrix(rng, 2, 2.0);
        let v = random_state(rng, &[(-1.0, 1.0), (-1.0, 1.0)]);
        let a = tls::polynomial_phi_2d(&j, &v);
        let b = v.cross2(&j.mul_vec(&v));
        let mass = j.norm() * v.norm_sq();
        max = max.max(floored_rel(a, b, mass));
    }
    (trials, max)
}

/// Stationary-jerk torsion condition against the 3D polynomial on model
/// states: same cubic, different association order.
fn check_torsion_polynomial_states(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    let mut performed = 0;
    for (model, bbox) in model_boxes() {
        if model.dim() != 3 {
            continue;
        }
        for _ in 0..trials {
            let s = random_state(rng, &bbox);
            let a = match manifold::phi_torsion_3d(&model, &s, JerkMode::StationaryJacobian) {
                Ok(a) => a,
                Err(_) => continue,
            };
            let j = model.eval_jacobian(&s).expect("jacobian");
            let v = model.eval_field(&s).expect("field");
            let b = tls::polynomial_phi_3d(&j, &v);
            let mass = j.norm().powi(3) * v.norm().powi(3);
            max = max.max(floored_rel(a, b, mass));
            performed += 1;
        }
    }
    (performed, max)
}

/// Random (J, v): the 3D polynomial equals (J²V)·(V ∧ JV).
fn check_torsion_polynomial_pairs(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let bbox = [(-1.0, 1.0); 3];
    let mut max = 0.0f64;
    for _ in 0..trials {
        let j = random_matrix(rng, 3, 2.0);
        let v = random_state(rng, &bbox);
        let a = tls::polynomial_phi_3d(&j, &v);
        let jv = j.mul_vec(&v);
        let b = j.mul_vec(&jv).dot(&v.cross3(&jv));
        let mass = j.norm().powi(3) * v.norm().powi(3);
        max = max.max(floored_rel(a, b, mass));
    }
    (trials, max)
}

// ---------------------------------------------------------------------------
// eigenstructure

/// ‖J·Y − λY‖ small for every parametric eigenvector, 2D and 3D.
fn check_spectral_residual(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    let mut performed = 0;
    for dim in [2usize, 3] {
        for _ in 0..trials {
            let j = tls::sample_real_spectrum_jacobian(rng, dim);
            let e = match tls::eigen_matrix(&j) {
                Ok(e) => e,
                Err(_) => {
                    max = f64::INFINITY;
                    continue;
                }
            };
            for (i, y) in e.right.iter().enumerate() {
                let yv = y.real_part();
                let lam = e.eigenvalues[i].re;
                let r = (j.mul_vec(&yv) - yv.scale(lam)).norm() / (j.norm() * yv.norm());
                max = max.max(r);
            }
            performed += 1;
        }
    }
    (performed, max)
}

/// Fast left eigenvector ⊥ slow right eigenvector (2D).
fn check_orthogonality_2d(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    for _ in 0..trials {
        let j = tls::sample_real_spectrum_jacobian(rng, 2);
        let e = match tls::eigen_matrix(&j) {
            Ok(e) => e,
            Err(_) => {
                max = f64::INFINITY;
                continue;
            }
        };
        let t1 = e.left[e.fast_index].real_part();
        let y2 = e.right[e.slow_indices[0]].real_part();
        max = max.max(t1.dot(&y2).abs() / (t1.norm() * y2.norm()));
    }
    (trials, max)
}

/// Y₂ ∧ Y₃ parallel to the fast left eigenvector (3D): sine of the angle.
fn check_alignment_3d(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    let mut max = 0.0f64;
    for _ in 0..trials {
        let j = tls::sample_real_spectrum_jacobian(rng, 3);
        let e = match tls::eigen_matrix(&j) {
            Ok(e) => e,
            Err(_) => {
                max = f64::INFINITY;
                continue;
            }
        };
        let cross = e.right[e.slow_indices[0]]
            .real_part()
            .cross3(&e.right[e.slow_indices[1]].real_part());
        let t1 = e.left[e.fast_index].real_part();
        max = max.max(cross.cross3(&t1).norm() / (cross.norm() * t1.norm()));
    }
    (trials, max)
}

// ---------------------------------------------------------------------------
// conjugate products

fn conjugate_on_random_linear(rng: &mut ChaCha8Rng, trials: u64, dim: usize) -> (u64, f64) {
    let bbox = vec![(-1.0, 1.0); dim];
    let mut max = 0.0f64;
    let mut performed = 0;
    for _ in 0..trials {
        let j = tls::sample_real_spectrum_jacobian(rng, dim);
        let model = linear(j);
        // A state with a healthy velocity (J is invertible by construction,
        // so V = J·s vanishes only at the origin).
        let mut s = random_state(rng, &bbox);
        while model.eval_field(&s).map(|v| v.norm() < 1e-3).unwrap_or(true) {
            s = random_state(rng, &bbox);
        }
        match tls::conjugate_product_check(&model, &s) {
            Ok(r) => {
                max = max.max(r);
                performed += 1;
            }
            Err(_) => max = f64::INFINITY,
        }
    }
    (performed, max)
}

fn check_conjugate_2d(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    conjugate_on_random_linear(rng, trials, 2)
}

fn check_conjugate_3d(rng: &mut ChaCha8Rng, trials: u64) -> (u64, f64) {
    conjugate_on_random_linear(rng, trials, 3)
}
