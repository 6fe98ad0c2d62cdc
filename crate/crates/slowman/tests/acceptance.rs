//! Acceptance gate: every criterion the library commits to, each as one
//! test printing a single PASS/FAIL line (visible with `--nocapture`).
//!
//! Numbers frozen here (spot values, boxes, tolerances) are the product
//! contract; see README for the reproduction recipes behind them.

use std::time::Instant;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slowman::geom::{Matrix, Vector};
use slowman::kinematics::{self, JerkMode};
use slowman::levelset::{self, GridSpec, SurfaceMode};
use slowman::manifold::{self, Branch, FieldKind, ImplicitField, Normalization};
use slowman::model::{builtin, parse_model, ModelSpec};
use slowman::tls;
use slowman::trajectory::{self, Control, CrossingDirection, SectionSpec};

fn criterion(number: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "ACCEPTANCE {number:2} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn random_state<R: Rng>(rng: &mut R, bbox: &[(f64, f64)]) -> Vector {
    let mut s = Vector::zeros(bbox.len());
    for (a, (lo, hi)) in bbox.iter().enumerate() {
        s.set(a, rng.random_range(*lo..*hi));
    }
    s
}

fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    let mut j = Matrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            j.set(r, c, rng.random_range(-2.0..2.0));
        }
    }
    j
}

/// Relative difference with a mass floor: rounding noise lives at
/// ~1e−16·mass, so the floor keeps near-zero-set samples meaningful.
fn floored_rel(a: f64, b: f64, mass: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-4 * mass);
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

fn vdp() -> ModelSpec {
    builtin("vanderpol", &[]).unwrap()
}

fn extract_vdp_polyline(cells: usize) -> levelset::LevelSet {
    let m = vdp();
    let field = ImplicitField::new(&m, FieldKind::Curvature2d).unwrap();
    let grid = GridSpec::new(vec![(-3.0, 3.0), (-6.0, 3.0)], vec![cells, cells]).unwrap();
    levelset::extract_zero_2d(&field, &grid).unwrap()
}

// ---------------------------------------------------------------------------

#[test]
fn c01_vanderpol_closed_form_regression() {
    let m = vdp();
    let eps = 0.05;
    let phi = |x: f64, y: f64| manifold::phi_curvature_2d(&m, &Vector::new2(x, y)).unwrap();

    // Bisection oracle: the zero of φ(x, ·) near each closed-form branch.
    let mut worst = 0.0f64;
    let mut points = 0usize;
    for side in [1.0, -1.0] {
        for k in 0..50 {
            let x = side * (1.2 + 1.3 * k as f64 / 49.0);
            for branch in [Branch::Upper, Branch::Lower] {
                let y_star = match manifold::vanderpol_slow_curve(x, eps, branch) {
                    Ok(y) => y,
                    Err(_) => {
                        assert!(
                            x.abs() < 1.21,
                            "fold gap outside the expected band at x = {x}"
                        );
                        continue;
                    }
                };
                let (mut lo, mut hi) = (y_star - 0.05, y_star + 0.05);
                let (mut flo, fhi) = (phi(x, lo), phi(x, hi));
                assert!(
                    flo * fhi < 0.0,
                    "no bracketing sign change at x = {x}, branch {branch:?}"
                );
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let fm = phi(x, mid);
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let y_hat = 0.5 * (lo + hi);
                worst = worst.max((y_hat - y_star).abs());
                points += 1;
            }
        }
    }
    let roots_ok = worst <= 1e-8 && points >= 196;

    // Extracted polyline against the branches.
    let ls = extract_vdp_polyline(512);
    let mut poly_worst = 0.0f64;
    let mut compared = 0usize;
    for v in &ls.vertices {
        let x = v[0];
        if !(1.25..=2.9).contains(&x.abs()) {
            continue;
        }
        let upper = manifold::vanderpol_slow_curve(x, eps, Branch::Upper).unwrap();
        let lower = manifold::vanderpol_slow_curve(x, eps, Branch::Lower).unwrap();
        let d = (v[1] - upper).abs().min((v[1] - lower).abs());
        if d < 0.5 {
            poly_worst = poly_worst.max(d);
            compared += 1;
        }
    }
    let poly_ok = poly_worst <= 1e-4 && compared >= 50;

    // Published spot values sit on the zero set to their six printed digits.
    let mut spots_ok = true;
    for (x, y) in [(2.0, 0.633146), (2.0, -5.299813)] {
        let s = Vector::new2(x, y);
        let j = m.eval_jacobian(&s).unwrap();
        let v = m.eval_field(&s).unwrap();
        let (a, b, c, d) = (j.get(0, 0), j.get(0, 1), j.get(1, 0), j.get(1, 1));
        let mass = (c * v[0] * v[0]).abs()
            + ((a - d) * v[0] * v[1]).abs()
            + (b * v[1] * v[1]).abs();
        spots_ok &= phi(x, y).abs() <= 1e-6 * mass;
    }

    let pass = criterion(
        1,
        "vanderpol closed-form regression",
        roots_ok && poly_ok && spots_ok,
        &format!(
            "root dev {worst:.2e} over {points} pts; polyline dev {poly_worst:.2e} over {compared}; spots {}",
            if spots_ok { "on zero set" } else { "OFF zero set" }
        ),
    );
    assert!(pass);
}

#[test]
fn c02_singular_approximation() {
    let m = vdp();
    // The singular curve satisfies the singular-approximation condition.
    let mut worst = 0.0f64;
    for k in 0..50 {
        let x = 1.5 + 1.0 * k as f64 / 49.0;
        let y = manifold::vanderpol_singular_curve(x, 0.05).unwrap();
        let s = Vector::new2(x, y);
        let phi = manifold::phi_singular_approx(&m, &s).unwrap();
        let scale = kinematics::acceleration(&m, &s).unwrap().norm().max(1.0);
        worst = worst.max(phi.abs() / scale);
    }
    let on_curve_ok = worst <= 1e-9;

    // First-order property: the gap to the slow curve shrinks at least
    // linearly in the timescale parameter.
    let sup_gap = |eps: f64| -> f64 {
        let mut sup = 0.0f64;
        for k in 0..=100 {
            let x = 1.5 + 1.0 * k as f64 / 100.0;
            let singular = manifold::vanderpol_singular_curve(x, eps).unwrap();
            let slow = manifold::vanderpol_slow_curve(x, eps, Branch::Upper).unwrap();
            sup = sup.max((singular - slow).abs());
        }
        sup
    };
    let (coarse, fine) = (sup_gap(0.05), sup_gap(0.005));
    let shrink_ok = fine <= 0.25 * coarse;

    let pass = criterion(
        2,
        "singular approximation",
        on_curve_ok && shrink_ok,
        &format!(
            "on-curve residual {worst:.2e}; sup gap {coarse:.3e} -> {fine:.3e} ({:.3}x)",
            fine / coarse
        ),
    );
    assert!(pass);
}

#[test]
fn c03_central_polynomial_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // 2D: one shared arithmetic path — agreement is bitwise.
    let m2 = vdp();
    let mut exact = true;
    for _ in 0..10_000 {
        let s = random_state(&mut rng, &[(-3.0, 3.0), (-6.0, 3.0)]);
        let a = manifold::phi_curvature_2d(&m2, &s).unwrap();
        let j = m2.eval_jacobian(&s).unwrap();
        let v = m2.eval_field(&s).unwrap();
        exact &= a == tls::polynomial_phi_2d(&j, &v);
    }

    // 3D: stationary-jerk torsion numerator against the ten-coefficient
    // cubic, for every 3D builtin.
    let mut worst3 = 0.0f64;
    for (name, bbox) in [
        ("lorenz", vec![(-25.0, 25.0), (-30.0, 30.0), (0.0, 55.0)]),
        ("chua", vec![(-1.6, 0.6), (-1.5, 1.5), (-11.0, 12.0)]),
        ("volterra_gause", vec![(0.05, 1.0), (0.05, 1.0), (0.05, 1.0)]),
    ] {
        let m = builtin(name, &[]).unwrap();
        for _ in 0..10_000 {
            let s = random_state(&mut rng, &bbox);
            let a = manifold::phi_torsion_3d(&m, &s, JerkMode::StationaryJacobian).unwrap();
            let j = m.eval_jacobian(&s).unwrap();
            let v = m.eval_field(&s).unwrap();
            let b = tls::polynomial_phi_3d(&j, &v);
            let mass = j.norm().powi(3) * v.norm().powi(3);
            worst3 = worst3.max(floored_rel(a, b, mass));
        }
    }

    // Random (J, v) pairs against the raw cross/triple products.
    let mut worst_pairs = 0.0f64;
    for _ in 0..10_000 {
        let j = random_matrix(&mut rng, 2);
        let v = random_state(&mut rng, &[(-1.0, 1.0); 2]);
        let a = tls::polynomial_phi_2d(&j, &v);
        let b = v.cross2(&j.mul_vec(&v));
        worst_pairs = worst_pairs.max(floored_rel(a, b, j.norm() * v.norm_sq()));

        let j = random_matrix(&mut rng, 3);
        let v = random_state(&mut rng, &[(-1.0, 1.0); 3]);
        let a = tls::polynomial_phi_3d(&j, &v);
        let jv = j.mul_vec(&v);
        let b = j.mul_vec(&jv).dot(&v.cross3(&jv));
        worst_pairs =
            worst_pairs.max(floored_rel(a, b, j.norm().powi(3) * v.norm().powi(3)));
    }

    let pass = criterion(
        3,
        "central polynomial identity",
        exact && worst3 <= 1e-9 && worst_pairs <= 1e-9,
        &format!(
            "2D bitwise {}; 3D state residual {worst3:.2e}; (J,v) pair residual {worst_pairs:.2e}",
            if exact { "equal" } else { "UNEQUAL" }
        ),
    );
    assert!(pass);
}

#[test]
fn c04_eigenstructure_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // Fast-left ⊥ slow-right (2D).
    let mut ortho = 0.0f64;
    for _ in 0..1000 {
        let j = tls::sample_real_spectrum_jacobian(&mut rng, 2);
        let e = tls::eigen_matrix(&j).unwrap();
        let t1 = e.left[e.fast_index].real_part();
        let y2 = e.right[e.slow_indices[0]].real_part();
        ortho = ortho.max(t1.dot(&y2).abs() / (t1.norm() * y2.norm()));
    }

    // Y₂ ∧ Y₃ parallel to the fast left eigenvector (3D).
    let mut align = 0.0f64;
    for _ in 0..1000 {
        let j = tls::sample_real_spectrum_jacobian(&mut rng, 3);
        let e = tls::eigen_matrix(&j).unwrap();
        let cross = e.right[e.slow_indices[0]]
            .real_part()
            .cross3(&e.right[e.slow_indices[1]].real_part());
        let t1 = e.left[e.fast_index].real_part();
        align = align.max(cross.cross3(&t1).norm() / (cross.norm() * t1.norm()));
    }

    // Conjugate-product equivalence on coupled linear systems.
    let mut conj = 0.0f64;
    for dim in [2usize, 3] {
        let bbox = vec![(-1.0, 1.0); dim];
        for _ in 0..1000 {
            let j = tls::sample_real_spectrum_jacobian(&mut rng, dim);
            let model = slowman::model::linear(j);
            let mut s = random_state(&mut rng, &bbox);
            while model.eval_field(&s).map(|v| v.norm() < 1e-3).unwrap_or(true) {
                s = random_state(&mut rng, &bbox);
            }
            conj = conj.max(tls::conjugate_product_check(&model, &s).unwrap());
        }
    }

    let pass = criterion(
        4,
        "eigenstructure equivalences",
        ortho <= 1e-9 && align <= 1e-7 && conj <= 1e-8,
        &format!("orthogonality {ortho:.2e}; alignment {align:.2e}; conjugate products {conj:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c05_kinematics_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let boxes: Vec<(ModelSpec, Vec<(f64, f64)>)> = vec![
        (vdp(), vec![(-3.0, 3.0), (-6.0, 3.0)]),
        (
            builtin("lorenz", &[]).unwrap(),
            vec![(-25.0, 25.0), (-30.0, 30.0), (0.0, 55.0)],
        ),
        (
            builtin("chua", &[]).unwrap(),
            vec![(-1.6, 0.6), (-1.5, 1.5), (-11.0, 12.0)],
        ),
        (
            builtin("volterra_gause", &[]).unwrap(),
            vec![(0.05, 1.0), (0.05, 1.0), (0.05, 1.0)],
        ),
    ];
    let mut lagrange = 0.0f64;
    let mut curv = 0.0f64;
    for (m, bbox) in &boxes {
        for _ in 0..2500 {
            let s = random_state(&mut rng, bbox);
            let v = m.eval_field(&s).unwrap();
            let gamma = kinematics::acceleration(m, &s).unwrap();
            let (gt, gn) = kinematics::acceleration_components(&v, &gamma).unwrap();
            lagrange = lagrange.max((gt * gt + gn * gn - gamma.norm_sq()).abs() / gamma.norm_sq());
            let kappa = kinematics::curvature(&v, &gamma).unwrap();
            let lhs = kappa * v.norm_sq();
            curv = curv.max((lhs - gn).abs() / lhs.abs().max(gn.abs()).max(1e-300));
        }
    }

    // d‖V‖/dt along a trajectory equals the tangential acceleration, to
    // the central-difference truncation order.
    let damped = parse_model("dim 2; dx = y; dy = 0 - 4*x - 0.4*y;").unwrap();
    let dt = 1e-3;
    let traj = trajectory::integrate(
        &damped,
        &Vector::new2(1.0, 0.0),
        0.0,
        3.0,
        Control::Fixed { dt },
    )
    .unwrap();
    let speeds: Vec<f64> = traj.velocities.iter().map(|v| v.norm()).collect();
    let mut deriv = 0.0f64;
    let scale = speeds.iter().cloned().fold(0.0, f64::max);
    for k in 1..speeds.len() - 1 {
        let numeric = (speeds[k + 1] - speeds[k - 1]) / (2.0 * dt);
        let v = &traj.velocities[k];
        let gamma = kinematics::acceleration(&damped, &traj.states[k]).unwrap();
        let (gt, _) = kinematics::acceleration_components(v, &gamma).unwrap();
        deriv = deriv.max((numeric - gt).abs());
    }
    let deriv_ok = deriv <= 1e-4 * scale;

    let pass = criterion(
        5,
        "kinematics identities",
        lagrange <= 1e-10 && curv <= 1e-10 && deriv_ok,
        &format!(
            "lagrange {lagrange:.2e}; curvature-normal {curv:.2e}; speed derivative {deriv:.2e} (scale {scale:.2})"
        ),
    );
    assert!(pass);
}

#[test]
fn c06_integrator_quality() {
    // Energy conservation on the harmonic oscillator over one period.
    let harmonic = parse_model("dim 2; dx = y; dy = 0 - x;").unwrap();
    let traj = trajectory::integrate(
        &harmonic,
        &Vector::new2(1.0, 0.0),
        0.0,
        2.0 * std::f64::consts::PI,
        Control::Fixed { dt: 1e-3 },
    )
    .unwrap();
    let drift = traj
        .states
        .iter()
        .map(|s| (s.norm_sq() - 1.0).abs())
        .fold(0.0, f64::max);

    // Fourth-order convergence on decoupled exponential decay.
    let decay = parse_model("dim 2; dx = 0 - x; dy = 0 - y;").unwrap();
    let run = |dt: f64| {
        let t = trajectory::integrate(
            &decay,
            &Vector::new2(1.0, 1.0),
            0.0,
            1.0,
            Control::Fixed { dt },
        )
        .unwrap();
        (t.final_state()[0] - (-1.0f64).exp()).abs()
    };
    let ratio = run(0.1) / run(0.05);

    let pass = criterion(
        6,
        "integrator quality",
        drift <= 1e-9 && (14.0..=18.0).contains(&ratio),
        &format!("energy drift {drift:.2e}; halving ratio {ratio:.2}"),
    );
    assert!(pass);
}

#[test]
fn c07_domain_structure_on_limit_cycle() {
    let m = vdp();
    // Transient, then a window providing several full cycles.
    let settle = trajectory::integrate(
        &m,
        &Vector::new2(2.0, 0.0),
        0.0,
        30.0,
        Control::Adaptive { rtol: 1e-10, atol: 1e-12 },
    )
    .unwrap();
    let traj = trajectory::integrate(
        &m,
        settle.final_state(),
        0.0,
        9.0,
        Control::Adaptive { rtol: 1e-10, atol: 1e-12 },
    )
    .unwrap();

    // One exact period between successive positive crossings of x = 0.
    let section = SectionSpec::new(
        Vector::new2(0.0, 0.0),
        Vector::new2(1.0, 0.0),
        CrossingDirection::Positive,
    )
    .unwrap();
    let crossings = trajectory::poincare_crossings(&traj, &section).unwrap();
    assert!(crossings.len() >= 3, "window must contain full cycles");
    let (t_a, t_b) = (crossings[1].0, crossings[2].0);

    // γ·V sign sequence over one period, densely resampled.
    let n = 40_000;
    let mut signs = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for k in 0..n {
        let t = t_a + (t_b - t_a) * k as f64 / n as f64;
        let s = traj.state_at(t).unwrap();
        let v = m.eval_field(&s).unwrap();
        let gamma = kinematics::acceleration(&m, &s).unwrap();
        signs.push(gamma.dot(&v) > 0.0);
        states.push(s);
    }
    let transitions = signs.windows(2).filter(|w| w[0] != w[1]).count();

    // Distance from slow-arc samples to the extracted slow manifold.
    let ls = extract_vdp_polyline(512);
    let mut max_slow_dist = 0.0f64;
    for (k, s) in states.iter().enumerate() {
        if signs[k] {
            continue; // accelerating: fast domain
        }
        let d = ls
            .vertices
            .iter()
            .map(|v| v.dist(s))
            .fold(f64::INFINITY, f64::min);
        max_slow_dist = max_slow_dist.max(d);
    }

    let pass = criterion(
        7,
        "domain structure on the limit cycle",
        transitions == 4 && max_slow_dist < 0.1,
        &format!(
            "period {:.4}; transitions {transitions} (want 4); max slow-arc distance {max_slow_dist:.3} (want < 0.1)",
            t_b - t_a
        ),
    );
    assert!(pass);
}

#[test]
fn c08_torsion_surfaces_at_scale() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for (name, bbox) in [
        ("lorenz", vec![(-25.0, 25.0), (-30.0, 30.0), (0.0, 55.0)]),
        ("chua", vec![(-1.6, 0.6), (-1.5, 1.5), (-11.0, 12.0)]),
    ] {
        let m = builtin(name, &[]).unwrap();
        let field = ImplicitField::new(&m, FieldKind::Torsion3d)
            .unwrap()
            .with_normalization(Normalization::UnitGradient);
        let grid = GridSpec::new(bbox, vec![96; 3]).unwrap();
        let ls = levelset::extract_zero_3d(&field, &grid, SurfaceMode::Triangles).unwrap();
        let max_res = ls
            .residuals
            .iter()
            .cloned()
            .fold(0.0f64, |a, b| if b.is_finite() { a.max(b) } else { f64::INFINITY });
        let kept = levelset::filter_attractive(&ls, &m).unwrap();
        let surface_ok = !ls.is_empty()
            && max_res <= 1e-6
            && !kept.is_empty()
            && kept.len() < ls.len();
        ok &= surface_ok;
        details.push(format!(
            "{name}: {} verts, residual {max_res:.2e}, attractive {}",
            ls.len(),
            kept.len()
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 300.0;
    let pass = criterion(
        8,
        "torsion surfaces at scale",
        ok,
        &format!("{}; {elapsed:.0} s", details.join("; ")),
    );
    assert!(pass);
}

#[test]
fn c09_volterra_gause_deployment() {
    let m = builtin("volterra_gause", &[]).unwrap();

    // Documented recipe: torsion surface in the positive-octant box, cut by
    // the y-normal section through the attractor's waist.
    let grid = GridSpec::new(
        vec![(0.14, 0.99), (0.01, 0.54), (0.002, 0.27)],
        vec![48; 3],
    )
    .unwrap();
    let field = ImplicitField::new(&m, FieldKind::Torsion3d)
        .unwrap()
        .with_normalization(Normalization::UnitGradient);
    let surface = levelset::extract_zero_3d(&field, &grid, SurfaceMode::Points).unwrap();
    let section = SectionSpec::new(
        Vector::new3(0.5, 0.27, 0.1),
        Vector::new3(0.0, 1.0, 0.0),
        CrossingDirection::Both,
    )
    .unwrap();
    let band = levelset::default_band(&grid);
    let curve = levelset::singular_manifold(&surface, &section, band).unwrap();

    let times: Vec<f64> = (1..=8).map(|k| k as f64).collect();
    let control = Control::Adaptive { rtol: 1e-9, atol: 1e-12 };
    let deployment = levelset::deploy(&m, &curve, &times, control).unwrap();

    // Reference trajectory bounding box, inflated 10% per axis.
    let reference = trajectory::integrate(
        &m,
        &Vector::new3(0.25, 0.3, 0.1),
        0.0,
        500.0,
        control,
    )
    .unwrap();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); 3];
    for s in &reference.states {
        for a in 0..3 {
            bounds[a].0 = bounds[a].0.min(s[a]);
            bounds[a].1 = bounds[a].1.max(s[a]);
        }
    }
    let inflated: Vec<(f64, f64)> = bounds
        .iter()
        .map(|(lo, hi)| {
            let pad = 0.1 * (hi - lo);
            (lo - pad, hi + pad)
        })
        .collect();

    let mut outside = 0usize;
    for set in &deployment.sets {
        for v in &set.vertices {
            if (0..3).any(|a| v[a] < inflated[a].0 || v[a] > inflated[a].1) {
                outside += 1;
            }
        }
    }
    let pass = criterion(
        9,
        "volterra-gause deployment",
        !curve.is_empty() && deployment.skipped.is_empty() && outside == 0,
        &format!(
            "curve {} pts, {} skipped, {} outside the inflated box {:?}",
            curve.len(),
            deployment.skipped.len(),
            outside,
            inflated
                .iter()
                .map(|(a, b)| format!("[{a:.3},{b:.3}]"))
                .collect::<Vec<_>>()
                .join("x")
        ),
    );
    assert!(pass);
}

#[test]
fn c10_end_to_end_determinism() {
    let run = || {
        std::process::Command::new(env!("CARGO_BIN_EXE_slowman"))
            .args(["verify", "--seed", "7"])
            .output()
            .expect("spawn slowman")
    };
    let (a, b) = (run(), run());
    let both_zero = a.status.code() == Some(0) && b.status.code() == Some(0);
    let identical = a.stdout == b.stdout;
    let parsed: Vec<serde_json::Value> =
        serde_json::from_slice(&a.stdout).expect("verify report must be JSON");
    let all_pass = parsed.iter().all(|r| r["pass"] == serde_json::json!(true));
    let pass = criterion(
        10,
        "end-to-end determinism",
        both_zero && identical && all_pass,
        &format!(
            "exit codes {:?}/{:?}; reports {}; {} checks",
            a.status.code(),
            b.status.code(),
            if identical { "byte-identical" } else { "DIFFER" },
            parsed.len()
        ),
    );
    assert!(pass);
}
