//! Pointwise kinematics of trajectory curves.
//!
//! Everything a trajectory does locally is read off the vector field without
//! integrating: velocity V, acceleration γ = J·V, over-acceleration
//! (jerk) γ̇, the Frenet triad, tangential/normal acceleration components,
//! curvature and torsion. Degenerate situations — a fixed point (V = 0) or an
//! inflection locus (γ ∥ V) — are meaningful geometry, so the bundled
//! [`sample`] marks the affected quantities as not-defined instead of
//! erroring, while the low-level operations return typed errors.

use thiserror::Error;

use crate::geom::{Matrix, Vector};
use crate::model::{ModelError, ModelSpec};

/// How the jerk γ̇ is computed.
///
/// `StationaryJacobian` freezes J along the flow (dJ/dt = 0), giving
/// γ̇ = J²V — the approximation every closed-form result downstream is built
/// on. `Exact` adds the transport term (dJ/dt)·V via a directional finite
/// difference of J along the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JerkMode {
    Exact,
    StationaryJacobian,
}

impl JerkMode {
    pub fn label(self) -> &'static str {
        match self {
            JerkMode::Exact => "exact",
            JerkMode::StationaryJacobian => "stationary_jacobian",
        }
    }

    pub fn from_label(s: &str) -> Option<JerkMode> {
        match s {
            "exact" => Some(JerkMode::Exact),
            "stationary_jacobian" | "stationary" => Some(JerkMode::StationaryJacobian),
            _ => None,
        }
    }
}

/// Slow/fast classification of a state by the sign of γ·V (equivalently of
/// the tangential acceleration γ_τ): decelerating flow is slow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainClass {
    Slow,
    Fast,
    Boundary,
}

impl DomainClass {
    pub fn label(self) -> &'static str {
        match self {
            DomainClass::Slow => "slow",
            DomainClass::Fast => "fast",
            DomainClass::Boundary => "boundary",
        }
    }
}

/// Tolerance on the normalized γ·V for the boundary band between slow and
/// fast domains: an exact zero is measure-zero, so the boundary is a band.
pub const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KinematicsError {
    #[error("{0} undefined at zero velocity")]
    ZeroVelocity(&'static str),
    #[error("{0} undefined: velocity and acceleration are collinear")]
    Degenerate(&'static str),
    #[error("{0} requires a 3-dimensional state")]
    NotThreeDimensional(&'static str),
}

/// Kinematic quantities at one state. Degenerate quantities are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicsSample {
    pub state: Vector,
    pub v: Vector,
    pub gamma: Vector,
    pub jerk: Vector,
    pub gamma_tau: Option<f64>,
    pub gamma_nu: Option<f64>,
    pub curvature: Option<f64>,
    /// 3D only; `None` in 2D or when γ ∥ V.
    pub torsion: Option<f64>,
    pub domain: Option<DomainClass>,
    pub jerk_mode: JerkMode,
}

/// The instantaneous acceleration γ = J(X)·V(X).
pub fn acceleration(model: &ModelSpec, state: &Vector) -> Result<Vector, ModelError> {
    let v = model.eval_field(state)?;
    let j = model.eval_jacobian(state)?;
    Ok(j.mul_vec(&v))
}

/// The over-acceleration γ̇.
///
/// Exact mode evaluates γ̇ = Jγ + (dJ/dt)V, estimating the transport term by
/// the flow-directional difference [J(X+hV̂) − J(X−hV̂)]·V·(‖V‖/2h) with
/// h = 1e−5·max(1, ‖X‖); this needs no second derivatives, so it works for
/// parsed models too. At a fixed point (and always in stationary mode) the
/// result is J²V.
pub fn jerk(model: &ModelSpec, state: &Vector, mode: JerkMode) -> Result<Vector, ModelError> {
    let v = model.eval_field(state)?;
    let j = model.eval_jacobian(state)?;
    let gamma = j.mul_vec(&v);
    match mode {
        JerkMode::StationaryJacobian => Ok(j.mul_vec(&gamma)),
        JerkMode::Exact => {
            let n = v.norm();
            if n == 0.0 {
                return Ok(j.mul_vec(&gamma));
            }
            let vhat = v.scale(1.0 / n);
            let h = 1e-5 * state.norm().max(1.0);
            let jp = model.eval_jacobian(&(*state + vhat.scale(h)))?;
            let jm = model.eval_jacobian(&(*state - vhat.scale(h)))?;
            let djdt_v = (jp.mul_vec(&v) - jm.mul_vec(&v)).scale(n / (2.0 * h));
            Ok(j.mul_vec(&gamma) + djdt_v)
        }
    }
}

/// The Frenet triad (τ, ν, β) at a state with velocity `v` and acceleration
/// `gamma`: τ = V/‖V‖, β = (V∧γ)/‖V∧γ‖, ν = β∧τ. 2D inputs are embedded in
/// the z = 0 plane; the returned vectors are always 3D.
pub fn frenet_frame(
    v: &Vector,
    gamma: &Vector,
) -> Result<(Vector, Vector, Vector), KinematicsError> {
    let v3 = v.lift3();
    let g3 = gamma.lift3();
    let n = v3.norm();
    if n == 0.0 {
        return Err(KinematicsError::ZeroVelocity("Frenet frame"));
    }
    let tau = v3.scale(1.0 / n);
    let w = v3.cross3(&g3);
    let wn = w.norm();
    if wn == 0.0 {
        return Err(KinematicsError::Degenerate("Frenet frame"));
    }
    let beta = w.scale(1.0 / wn);
    let nu = beta.cross3(&tau);
    Ok((tau, nu, beta))
}

/// Tangential and normal acceleration components:
/// γ_τ = (γ·V)/‖V‖ and γ_ν = ‖γ∧V‖/‖V‖ ≥ 0.
pub fn acceleration_components(
    v: &Vector,
    gamma: &Vector,
) -> Result<(f64, f64), KinematicsError> {
    let n = v.norm();
    if n == 0.0 {
        return Err(KinematicsError::ZeroVelocity("acceleration components"));
    }
    Ok((gamma.dot(v) / n, gamma.wedge_norm(v) / n))
}

/// Curvature of the trajectory curve: ‖γ∧V‖/‖V‖³.
pub fn curvature(v: &Vector, gamma: &Vector) -> Result<f64, KinematicsError> {
    let n2 = v.norm_sq();
    if n2 == 0.0 {
        return Err(KinematicsError::ZeroVelocity("curvature"));
    }
    Ok(gamma.wedge_norm(v) / (n2 * n2.sqrt()))
}

/// Torsion of the trajectory curve: −[γ̇·(γ∧V)]/‖γ∧V‖².
pub fn torsion(v: &Vector, gamma: &Vector, jerk: &Vector) -> Result<f64, KinematicsError> {
    if v.dim() != 3 {
        return Err(KinematicsError::NotThreeDimensional("torsion"));
    }
    let w = gamma.cross3(v);
    let wn2 = w.norm_sq();
    if wn2 == 0.0 {
        return Err(KinematicsError::Degenerate("torsion"));
    }
    Ok(-jerk.dot(&w) / wn2)
}

/// Sign-of-γ_τ domain classification with the [`DOMAIN_TOL`] boundary band.
pub fn domain_class(v: &Vector, gamma: &Vector) -> Result<DomainClass, KinematicsError> {
    let scale = gamma.norm() * v.norm();
    if v.norm_sq() == 0.0 {
        return Err(KinematicsError::ZeroVelocity("domain classification"));
    }
    let d = gamma.dot(v);
    Ok(if d < -DOMAIN_TOL * scale {
        DomainClass::Slow
    } else if d > DOMAIN_TOL * scale {
        DomainClass::Fast
    } else {
        DomainClass::Boundary
    })
}

/// Computes every kinematic quantity at one state; degenerate quantities
/// come back as `None` rather than errors.
pub fn sample(
    model: &ModelSpec,
    state: &Vector,
    mode: JerkMode,
) -> Result<KinematicsSample, ModelError> {
    let v = model.eval_field(state)?;
    let j = model.eval_jacobian(state)?;
    let gamma = j.mul_vec(&v);
    let jk = jerk_from_parts(model, state, &v, &j, &gamma, mode)?;

    let moving = v.norm_sq() > 0.0;
    let (gamma_tau, gamma_nu) = if moving {
        let (t, n) = acceleration_components(&v, &gamma).expect("v is nonzero");
        (Some(t), Some(n))
    } else {
        (None, None)
    };
    let curv = moving.then(|| curvature(&v, &gamma).expect("v is nonzero"));
    let tors = (state.dim() == 3 && gamma.wedge_norm_sq(&v) > 0.0)
        .then(|| torsion(&v, &gamma, &jk).expect("nondegenerate"));
    let domain = moving.then(|| domain_class(&v, &gamma).expect("v is nonzero"));

    Ok(KinematicsSample {
        state: *state,
        v,
        gamma,
        jerk: jk,
        gamma_tau,
        gamma_nu,
        curvature: curv,
        torsion: tors,
        domain,
        jerk_mode: mode,
    })
}

// Shared by `sample` so V, J, γ aren't recomputed.
fn jerk_from_parts(
    model: &ModelSpec,
    state: &Vector,
    v: &Vector,
    j: &Matrix,
    gamma: &Vector,
    mode: JerkMode,
) -> Result<Vector, ModelError> {
    match mode {
        JerkMode::StationaryJacobian => Ok(j.mul_vec(gamma)),
        JerkMode::Exact => {
            let n = v.norm();
            if n == 0.0 {
                return Ok(j.mul_vec(gamma));
            }
            let vhat = v.scale(1.0 / n);
            let h = 1e-5 * state.norm().max(1.0);
            let jp = model.eval_jacobian(&(*state + vhat.scale(h)))?;
            let jm = model.eval_jacobian(&(*state - vhat.scale(h)))?;
            let djdt_v = (jp.mul_vec(v) - jm.mul_vec(v)).scale(n / (2.0 * h));
            Ok(j.mul_vec(gamma) + djdt_v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin, linear, parse_model};
    use approx::assert_relative_eq;

    #[test]
    fn acceleration_hand_values() {
        let vdp = builtin("vanderpol", &[]).unwrap();
        let g = acceleration(&vdp, &Vector::new2(1.0, 1.0)).unwrap();
        assert_relative_eq!(g[0], -20.0, max_relative = 1e-12);
        assert_relative_eq!(g[1], -(2.0 - 1.0 / 3.0) / 0.05, max_relative = 1e-12);

        let lorenz = builtin("lorenz", &[]).unwrap();
        let g = acceleration(&lorenz, &Vector::new3(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(g, Vector::zeros(3));

        // Linear decay: J = -I, so gamma = (-I)(-state) = +state.
        let decay = parse_model("dim 2; dx = -x; dy = -y").unwrap();
        let g = acceleration(&decay, &Vector::new2(2.0, 3.0)).unwrap();
        assert_relative_eq!(g[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(g[1], 3.0, max_relative = 1e-9);
    }

    #[test]
    fn jerk_modes_agree_for_linear_models() {
        let lin = linear(Matrix::from_rows2([[-1.0, 2.0], [1.0, -0.5]]));
        let s = Vector::new2(1.3, -0.4);
        let a = jerk(&lin, &s, JerkMode::Exact).unwrap();
        let b = jerk(&lin, &s, JerkMode::StationaryJacobian).unwrap();
        // Constant analytic J: the directional difference vanishes identically.
        assert_eq!(a, b);

        // A parsed linear model goes through the numeric jacobian, whose
        // last-bit noise gets amplified by the 1/h in the transport term;
        // agreement degrades to finite-difference accuracy.
        let parsed = parse_model("dim 2; dx = -x + 2*y; dy = x - 0.5*y").unwrap();
        let a = jerk(&parsed, &s, JerkMode::Exact).unwrap();
        let b = jerk(&parsed, &s, JerkMode::StationaryJacobian).unwrap();
        assert!((a - b).norm() <= 1e-4 * (1.0 + b.norm()));
    }

    #[test]
    fn stationary_jerk_is_j_squared_v() {
        let lorenz = builtin("lorenz", &[]).unwrap();
        let s = Vector::new3(1.0, 1.0, 1.0);
        let jk = jerk(&lorenz, &s, JerkMode::StationaryJacobian).unwrap();
        let j = lorenz.eval_jacobian(&s).unwrap();
        let v = lorenz.eval_field(&s).unwrap();
        let oracle = j.mul_mat(&j).mul_vec(&v);
        assert_relative_eq!(jk[0], oracle[0], max_relative = 1e-12);
        assert_relative_eq!(jk[1], oracle[1], max_relative = 1e-12);
        assert_relative_eq!(jk[2], oracle[2], max_relative = 1e-12);
    }

    #[test]
    fn exact_jerk_differs_where_j_varies() {
        let vdp = builtin("vanderpol", &[]).unwrap();
        let s = Vector::new2(1.0, 1.0);
        let a = jerk(&vdp, &s, JerkMode::Exact).unwrap();
        let b = jerk(&vdp, &s, JerkMode::StationaryJacobian).unwrap();
        assert!((a - b).norm() > 1e-3, "transport term should be visible");
    }

    #[test]
    fn frenet_examples() {
        let (tau, nu, beta) =
            frenet_frame(&Vector::new3(1.0, 0.0, 0.0), &Vector::new3(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(tau, Vector::new3(1.0, 0.0, 0.0));
        assert_eq!(beta, Vector::new3(0.0, 0.0, 1.0));
        assert_eq!(nu, Vector::new3(0.0, 1.0, 0.0));

        assert!(matches!(
            frenet_frame(&Vector::new3(0.0, 2.0, 0.0), &Vector::new3(0.0, 4.0, 0.0)),
            Err(KinematicsError::Degenerate(_))
        ));

        // Uniform circular motion at (1,0,0): nu points at the center.
        let (_, nu, _) =
            frenet_frame(&Vector::new3(0.0, -1.0, 0.0), &Vector::new3(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(nu, Vector::new3(-1.0, 0.0, 0.0));
    }

    #[test]
    fn frenet_triad_is_orthonormal_right_handed() {
        let v = Vector::new3(0.3, -1.2, 0.7);
        let g = Vector::new3(1.0, 0.4, -2.0);
        let (tau, nu, beta) = frenet_frame(&v, &g).unwrap();
        for u in [&tau, &nu, &beta] {
            assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(tau.dot(&nu), 0.0, epsilon = 1e-12);
        assert_relative_eq!(tau.dot(&beta), 0.0, epsilon = 1e-12);
        assert_relative_eq!(nu.dot(&beta), 0.0, epsilon = 1e-12);
        let cross = tau.cross3(&nu);
        assert!((cross - beta).norm() <= 1e-12, "tau x nu must equal beta");
    }

    #[test]
    fn component_examples() {
        let (t, n) =
            acceleration_components(&Vector::new2(0.0, -1.0), &Vector::new2(-1.0, 0.0)).unwrap();
        assert_eq!((t, n), (0.0, 1.0));

        let v = Vector::new2(0.0, 3.0);
        let (t, n) = acceleration_components(&v, &v.scale(2.0)).unwrap();
        assert_relative_eq!(t, 6.0, max_relative = 1e-14);
        assert_eq!(n, 0.0);

        let (t, n) =
            acceleration_components(&Vector::new2(3.0, 4.0), &Vector::new2(1.0, 0.0)).unwrap();
        assert_relative_eq!(t, 3.0 / 5.0, max_relative = 1e-14);
        assert_relative_eq!(n, 4.0 / 5.0, max_relative = 1e-14);

        assert!(acceleration_components(&Vector::zeros(2), &Vector::new2(1.0, 0.0)).is_err());
    }

    #[test]
    fn curvature_examples() {
        let k = curvature(&Vector::new2(0.0, -1.0), &Vector::new2(-1.0, 0.0)).unwrap();
        assert_relative_eq!(k, 1.0, max_relative = 1e-14);
        let k = curvature(&Vector::new2(2.0, 0.0), &Vector::new2(0.0, 1.0)).unwrap();
        assert_relative_eq!(k, 0.25, max_relative = 1e-14);
        let v = Vector::new2(1.0, 2.0);
        assert_eq!(curvature(&v, &v.scale(-3.0)).unwrap(), 0.0);
    }

    #[test]
    fn torsion_examples() {
        let t = torsion(
            &Vector::new3(1.0, 0.0, 0.0),
            &Vector::new3(0.0, 1.0, 0.0),
            &Vector::new3(0.0, 0.0, 1.0),
        )
        .unwrap();
        assert_eq!(t, 1.0);

        let v = Vector::new3(1.0, 0.0, 0.0);
        assert!(matches!(
            torsion(&v, &v, &Vector::new3(0.0, 1.0, 0.0)),
            Err(KinematicsError::Degenerate(_))
        ));
        assert!(torsion(&Vector::new2(1.0, 0.0), &Vector::new2(0.0, 1.0), &Vector::new2(0.0, 0.0))
            .is_err());
    }

    #[test]
    fn planar_system_embedded_in_3d_has_zero_torsion() {
        let m = parse_model("dim 3; dx = y; dy = -x + 0.3*y; dz = 0").unwrap();
        let s = sample(&m, &Vector::new3(1.0, 0.5, 0.0), JerkMode::StationaryJacobian).unwrap();
        assert_eq!(s.torsion, Some(0.0));
    }

    #[test]
    fn domain_classification() {
        // Uniform circular motion: gamma . v = 0 -> boundary.
        let c = domain_class(&Vector::new2(0.0, -1.0), &Vector::new2(-1.0, 0.0)).unwrap();
        assert_eq!(c, DomainClass::Boundary);
        // Linear decay decelerates -> slow.
        let c = domain_class(&Vector::new2(-1.0, 0.0), &Vector::new2(1.0, 0.0)).unwrap();
        assert_eq!(c, DomainClass::Slow);
        // Van der Pol at (0, 1) accelerates -> fast.
        let vdp = builtin("vanderpol", &[]).unwrap();
        let st = Vector::new2(0.0, 1.0);
        let v = vdp.eval_field(&st).unwrap();
        let g = acceleration(&vdp, &st).unwrap();
        assert_relative_eq!(g.dot(&v), 8000.0, max_relative = 1e-12);
        assert_eq!(domain_class(&v, &g).unwrap(), DomainClass::Fast);
    }

    #[test]
    fn sample_marks_degenerate_fields() {
        let lorenz = builtin("lorenz", &[]).unwrap();
        let s = sample(&lorenz, &Vector::zeros(3), JerkMode::StationaryJacobian).unwrap();
        assert_eq!(s.v, Vector::zeros(3));
        assert!(s.gamma_tau.is_none());
        assert!(s.curvature.is_none());
        assert!(s.torsion.is_none());
        assert!(s.domain.is_none());
    }

    #[test]
    fn sample_invariants_at_generic_states() {
        let lorenz = builtin("lorenz", &[]).unwrap();
        let mut seed = 0.2_f64;
        for _ in 0..200 {
            seed = (seed * 37.7 + 0.11).sin();
            let st = Vector::new3(10.0 * seed, 10.0 * (seed * 2.3).cos(), 20.0 + 10.0 * seed);
            let s = sample(&lorenz, &st, JerkMode::StationaryJacobian).unwrap();
            let (gt, gn) = (s.gamma_tau.unwrap(), s.gamma_nu.unwrap());
            assert!(gn >= 0.0);
            // Lagrange identity.
            assert_relative_eq!(gt * gt + gn * gn, s.gamma.norm_sq(), max_relative = 1e-10);
            // curvature * |V|^2 = gamma_nu.
            assert_relative_eq!(
                s.curvature.unwrap() * s.v.norm_sq(),
                gn,
                max_relative = 1e-10
            );
        }
    }
}
