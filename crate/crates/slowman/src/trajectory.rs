//! Numerical integration of models, kinematics sampling along trajectories,
//! and Poincaré-section crossing detection.
//!
//! Two integrators: classic fixed-step RK4 (node times are t₀ + k·dt in
//! exact floating arithmetic, never accumulated), and the Dormand–Prince
//! 5(4) embedded pair with PI step-size control. Both store the vector field
//! at every node, which buys third-order cubic-Hermite dense output for
//! free — that is what crossing refinement bisects on.

use thiserror::Error;

use crate::geom::Vector;
use crate::kinematics::{self, JerkMode, KinematicsSample};
use crate::model::{ModelError, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Fixed { dt: f64 },
    Adaptive { rtol: f64, atol: f64 },
}

impl Control {
    /// Tight defaults: chaotic models need small local error for
    /// qualitative fidelity over long horizons.
    pub fn adaptive_default() -> Control {
        Control::Adaptive { rtol: 1e-9, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest tolerance-scaled local error among accepted steps (≤ 1 by
    /// construction for adaptive runs; 0 for fixed-step runs).
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model_name: String,
    pub params: Vec<(String, f64)>,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// Vector field at each node (for dense output and kinematics reuse).
    pub velocities: Vec<Vector>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("empty trajectory")
    }

    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("empty trajectory")
    }

    /// Cubic Hermite interpolation between the bracketing nodes; `None`
    /// outside the time span.
    pub fn state_at(&self, t: f64) -> Option<Vector> {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        if n == 1 {
            return Some(self.states[0]);
        }
        // Last segment index with times[k] <= t.
        let k = match self.times.partition_point(|&tk| tk <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(
            self.states[k].scale(h00)
                + self.velocities[k].scale(h10 * h)
                + self.states[k + 1].scale(h01)
                + self.velocities[k + 1].scale(h11 * h),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    /// Offset goes from negative to positive.
    Positive,
    /// Offset goes from positive to negative.
    Negative,
    Both,
}

impl CrossingDirection {
    pub fn label(self) -> &'static str {
        match self {
            CrossingDirection::Positive => "positive",
            CrossingDirection::Negative => "negative",
            CrossingDirection::Both => "both",
        }
    }

    pub fn from_label(s: &str) -> Option<CrossingDirection> {
        match s {
            "positive" => Some(CrossingDirection::Positive),
            "negative" => Some(CrossingDirection::Negative),
            "both" => Some(CrossingDirection::Both),
            _ => None,
        }
    }
}

/// An oriented Poincaré section: the plane through `point` with unit
/// `normal`, crossed in the given direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSpec {
    point: Vector,
    normal: Vector,
    direction: CrossingDirection,
}

impl SectionSpec {
    /// Requires ‖normal‖ = 1 within 1e−12.
    pub fn new(
        point: Vector,
        normal: Vector,
        direction: CrossingDirection,
    ) -> Result<SectionSpec, TrajectoryError> {
        if point.dim() != normal.dim() {
            return Err(TrajectoryError::BadSection("point/normal dimension mismatch"));
        }
        if (normal.norm() - 1.0).abs() > 1e-12 {
            return Err(TrajectoryError::BadSection("normal is not unit length"));
        }
        Ok(SectionSpec { point, normal, direction })
    }

    /// Normalizes the given normal vector first.
    pub fn from_unnormalized(
        point: Vector,
        normal: Vector,
        direction: CrossingDirection,
    ) -> Result<SectionSpec, TrajectoryError> {
        let unit = normal
            .normalize()
            .ok_or(TrajectoryError::BadSection("zero normal vector"))?;
        SectionSpec::new(point, unit, direction)
    }

    pub fn point(&self) -> &Vector {
        &self.point
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn direction(&self) -> CrossingDirection {
        self.direction
    }

    /// Signed distance of a state from the section plane.
    pub fn offset(&self, state: &Vector) -> f64 {
        (*state - self.point).dot(&self.normal)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("t1 must be greater than t0")]
    BadTimeSpan,
    #[error("dt must be positive and finite")]
    BadStep,
    #[error("tolerances must be positive and finite")]
    BadTolerance,
    #[error("invalid section: {0}")]
    BadSection(&'static str),
    #[error("step size underflow at t = {t}: tolerances unreachable (stiffness or a singularity)")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    StepBudget { t: f64 },
    #[error("state left the model domain at t = {t}")]
    DomainExit {
        t: f64,
        source: ModelError,
        /// Everything integrated up to the last valid node.
        partial: Box<Trajectory>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

const MAX_STEPS: usize = 50_000_000;

struct Recorder<'m> {
    model: &'m ModelSpec,
    times: Vec<f64>,
    states: Vec<Vector>,
    velocities: Vec<Vector>,
    stats: StepStats,
}

impl<'m> Recorder<'m> {
    fn new(model: &'m ModelSpec, t0: f64, x0: Vector, v0: Vector) -> Self {
        Recorder {
            model,
            times: vec![t0],
            states: vec![x0],
            velocities: vec![v0],
            stats: StepStats::default(),
        }
    }

    fn push(&mut self, t: f64, x: Vector, v: Vector) {
        self.times.push(t);
        self.states.push(x);
        self.velocities.push(v);
        self.stats.accepted += 1;
    }

    fn finish(self) -> Trajectory {
        Trajectory {
            model_name: self.model.name().to_string(),
            params: self.model.params().iter().map(|(k, v)| (k.clone(), *v)).collect(),
            times: self.times,
            states: self.states,
            velocities: self.velocities,
            stats: self.stats,
        }
    }

    fn domain_exit(self, t: f64, source: ModelError) -> TrajectoryError {
        TrajectoryError::DomainExit { t, source, partial: Box::new(self.finish()) }
    }
}

/// Integrates the model from `x0` over [t0, t1].
pub fn integrate(
    model: &ModelSpec,
    x0: &Vector,
    t0: f64,
    t1: f64,
    control: Control,
) -> Result<Trajectory, TrajectoryError> {
    if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
        return Err(TrajectoryError::BadTimeSpan);
    }
    let v0 = model.eval_field(x0)?;
    match control {
        Control::Fixed { dt } => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(TrajectoryError::BadStep);
            }
            integrate_fixed(model, *x0, v0, t0, t1, dt)
        }
        Control::Adaptive { rtol, atol } => {
            if !(rtol.is_finite() && rtol > 0.0 && atol.is_finite() && atol > 0.0) {
                return Err(TrajectoryError::BadTolerance);
            }
            integrate_adaptive(model, *x0, v0, t0, t1, rtol, atol)
        }
    }
}

fn rk4_step(model: &ModelSpec, x: &Vector, k1: &Vector, h: f64) -> Result<Vector, ModelError> {
    let k2 = model.eval_field(&(*x + k1.scale(h / 2.0)))?;
    let k3 = model.eval_field(&(*x + k2.scale(h / 2.0)))?;
    let k4 = model.eval_field(&(*x + k3.scale(h)))?;
    Ok(*x + (*k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0))
}

fn integrate_fixed(
    model: &ModelSpec,
    x0: Vector,
    v0: Vector,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory, TrajectoryError> {
    let mut rec = Recorder::new(model, t0, x0, v0);
    let mut x = x0;
    let mut v = v0;
    let mut k: usize = 0;
    loop {
        if k > MAX_STEPS {
            return Err(TrajectoryError::StepBudget { t: t0 + k as f64 * dt });
        }
        let t = t0 + k as f64 * dt;
        let t_next = t0 + (k + 1) as f64 * dt;
        // Final step: land exactly on t1 (absorbing a partial step, or a
        // whole one when dt divides the span).
        if t_next >= t1 - 1e-12 * dt {
            let h = t1 - t;
            if h > 1e-12 * dt {
                x = match rk4_step(model, &x, &v, h) {
                    Ok(x) => x,
                    Err(e) => return Err(rec.domain_exit(t, e)),
                };
                v = match model.eval_field(&x) {
                    Ok(v) => v,
                    Err(e) => return Err(rec.domain_exit(t, e)),
                };
                rec.push(t1, x, v);
            }
            return Ok(rec.finish());
        }
        x = match rk4_step(model, &x, &v, dt) {
            Ok(x) => x,
            Err(e) => return Err(rec.domain_exit(t, e)),
        };
        v = match model.eval_field(&x) {
            Ok(v) => v,
            Err(e) => return Err(rec.domain_exit(t, e)),
        };
        rec.push(t_next, x, v);
        k += 1;
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order weights (row 7 of A doubles as them: FSAL).
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate_adaptive(
    model: &ModelSpec,
    x0: Vector,
    v0: Vector,
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, TrajectoryError> {
    let mut rec = Recorder::new(model, t0, x0, v0);
    let mut t = t0;
    let mut x = x0;
    let mut k1 = v0;
    let mut h = ((t1 - t0) / 100.0).min(1e-2 * (1.0 + x.norm()) / (1.0 + k1.norm()));
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(TrajectoryError::StepBudget { t });
        }
        if h < 1e-14 * 1.0_f64.max(t.abs()) {
            return Err(TrajectoryError::StepUnderflow { t });
        }
        let clamped = h >= t1 - t;
        let hs = if clamped { t1 - t } else { h };

        let mut ks: [Vector; 7] = [k1; 7];
        let mut failed = None;
        for stage in 0..6 {
            let mut y = x;
            for (i, a) in A[stage].iter().enumerate().take(stage + 1) {
                if *a != 0.0 {
                    y = y + ks[i].scale(a * hs);
                }
            }
            match model.eval_field(&y) {
                Ok(f) => ks[stage + 1] = f,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            return Err(rec.domain_exit(t, e));
        }
        // 5th-order solution is the stage-7 evaluation point (FSAL).
        let mut x5 = x;
        for i in 0..6 {
            if B5[i] != 0.0 {
                x5 = x5 + ks[i].scale(B5[i] * hs);
            }
        }
        let k7 = ks[6];

        // Tolerance-scaled RMS error of the embedded difference.
        let mut err_sq = 0.0;
        for d in 0..x.dim() {
            let mut e = 0.0;
            for i in 0..7 {
                e += (B5[i] - B4[i]) * ks[i][d];
            }
            e *= hs;
            let sc = atol + rtol * x[d].abs().max(x5[d].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / x.dim() as f64).sqrt();

        if err <= 1.0 {
            t = if clamped { t1 } else { t + hs };
            x = x5;
            // FSAL: the last stage already evaluated the field at x5.
            k1 = k7;
            rec.push(t, x, k1);
            rec.stats.max_error_estimate = rec.stats.max_error_estimate.max(err);
            let fac = (0.9 * err.max(1e-12).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0))
                .clamp(0.2, 5.0);
            err_prev = err.max(1e-4);
            h = hs * fac;
        } else {
            rec.stats.rejected += 1;
            let fac = (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0))
                .clamp(0.2, 5.0)
                .min(1.0);
            h = hs * fac;
        }
    }
    Ok(rec.finish())
}

/// One kinematics sample per trajectory node (the node order is preserved;
/// pair with `traj.times` for timestamps).
pub fn sample_kinematics(
    model: &ModelSpec,
    traj: &Trajectory,
    jerk_mode: JerkMode,
) -> Result<Vec<KinematicsSample>, ModelError> {
    traj.states.iter().map(|s| kinematics::sample(model, s, jerk_mode)).collect()
}

/// All section crossings of the trajectory consistent with the section's
/// orientation, each refined by bisection on the dense output until the
/// plane offset is ≤ 1e−10·max(1, ‖state‖). Grazing contacts (offset
/// touching zero without a strict sign change between nodes) are not
/// reported.
pub fn poincare_crossings(
    traj: &Trajectory,
    section: &SectionSpec,
) -> Result<Vec<(f64, Vector)>, TrajectoryError> {
    if !traj.is_empty() && traj.states[0].dim() != section.point.dim() {
        return Err(TrajectoryError::BadSection("section/trajectory dimension mismatch"));
    }
    let mut crossings = Vec::new();
    for k in 0..traj.len().saturating_sub(1) {
        let o0 = section.offset(&traj.states[k]);
        let o1 = section.offset(&traj.states[k + 1]);
        if !(o0 * o1 < 0.0) {
            continue;
        }
        let rising = o0 < 0.0;
        let wanted = match section.direction {
            CrossingDirection::Both => true,
            CrossingDirection::Positive => rising,
            CrossingDirection::Negative => !rising,
        };
        if !wanted {
            continue;
        }
        let (mut lo, mut hi) = (traj.times[k], traj.times[k + 1]);
        let mut lo_off = o0;
        let mut best = (lo, traj.states[k]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let xm = traj.state_at(mid).expect("mid-time inside span");
            let om = section.offset(&xm);
            best = (mid, xm);
            if om.abs() <= 1e-10 * 1.0_f64.max(xm.norm()) {
                break;
            }
            if (om < 0.0) == (lo_off < 0.0) {
                lo = mid;
                lo_off = om;
            } else {
                hi = mid;
            }
        }
        crossings.push(best);
    }
    Ok(crossings)
}
