//! Implicit scalar fields whose zero sets approximate the slow manifold.
//!
//! The central objects are the curvature condition (2D), the torsion
//! condition (3D), and the singular approximation of the acceleration for
//! singularly perturbed models; each is exposed both as a bare function and
//! through [`ImplicitField`], the form the level-set extractor consumes.
//! Closed-form slow/singular curves for the van der Pol oscillator are
//! provided for regression against the field zero sets.
//!
//! Sign convention: the 2D field is det[V, γ] = ẋÿ − ẏẍ and the 3D field is
//! γ̇·(V ∧ γ). These orientations make the fields *equal* to the polynomial
//! forms in [`crate::tls`] (not merely equal up to sign), so cross-module
//! identities hold exactly. Zero sets are unaffected by the choice.

use thiserror::Error;

use crate::geom::Vector;
use crate::kinematics::{self, DomainClass, JerkMode, KinematicsError};
use crate::model::{ModelError, ModelSpec};
use crate::tls;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Curvature2d,
    Torsion3d,
    SingularApprox,
    TlsPoly2d,
    TlsPoly3d,
}

impl FieldKind {
    pub fn label(self) -> &'static str {
        match self {
            FieldKind::Curvature2d => "curvature2d",
            FieldKind::Torsion3d => "torsion3d",
            FieldKind::SingularApprox => "singular_approx",
            FieldKind::TlsPoly2d => "tls_poly2d",
            FieldKind::TlsPoly3d => "tls_poly3d",
        }
    }

    pub fn from_label(s: &str) -> Option<FieldKind> {
        match s {
            "curvature2d" => Some(FieldKind::Curvature2d),
            "torsion3d" => Some(FieldKind::Torsion3d),
            "singular_approx" => Some(FieldKind::SingularApprox),
            "tls_poly2d" => Some(FieldKind::TlsPoly2d),
            "tls_poly3d" => Some(FieldKind::TlsPoly3d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    /// Divide by ‖∇φ‖ (central differences): robust level-set extraction
    /// when raw fields carry large timescale prefactors.
    UnitGradient,
}

impl Normalization {
    pub fn label(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::UnitGradient => "unit_gradient",
        }
    }

    pub fn from_label(s: &str) -> Option<Normalization> {
        match s {
            "raw" => Some(Normalization::Raw),
            "unit_gradient" => Some(Normalization::UnitGradient),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        }
    }

    pub fn from_label(s: &str) -> Option<Branch> {
        match s {
            "upper" => Some(Branch::Upper),
            "lower" => Some(Branch::Lower),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attractivity {
    Attractive,
    Tangent,
    Repulsive,
}

impl Attractivity {
    pub fn label(self) -> &'static str {
        match self {
            Attractivity::Attractive => "attractive",
            Attractivity::Tangent => "tangent",
            Attractivity::Repulsive => "repulsive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("field {kind} requires a {need}-dimensional model")]
    WrongDim { kind: &'static str, need: usize },
    #[error("model '{0}' has no designated fast axis: singular approximation undefined")]
    NotSingularlyPerturbed(String),
    #[error("negative radicand {radicand} at x = {x}: state is in the fold gap, no real slow branch")]
    NegativeRadicand { x: f64, radicand: f64 },
    #[error("singular-curve pole at x = {0} (x² = 1)")]
    Pole(f64),
    #[error("gradient vanishes: attractivity undefined")]
    ZeroGradient,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An implicit scalar field φ over state space; the slow manifold is the
/// zero set φ = 0.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitField<'m> {
    model: &'m ModelSpec,
    kind: FieldKind,
    jerk_mode: JerkMode,
    normalization: Normalization,
}

impl<'m> ImplicitField<'m> {
    pub fn new(model: &'m ModelSpec, kind: FieldKind) -> Result<Self, ManifoldError> {
        let need = match kind {
            FieldKind::Curvature2d | FieldKind::TlsPoly2d => Some(2),
            FieldKind::Torsion3d | FieldKind::TlsPoly3d => Some(3),
            FieldKind::SingularApprox => None,
        };
        if let Some(need) = need {
            if model.dim() != need {
                return Err(ManifoldError::WrongDim { kind: kind.label(), need });
            }
        }
        if kind == FieldKind::SingularApprox && model.epsilon_axis().is_none() {
            return Err(ManifoldError::NotSingularlyPerturbed(model.name().to_string()));
        }
        Ok(ImplicitField {
            model,
            kind,
            jerk_mode: JerkMode::Exact,
            normalization: Normalization::Raw,
        })
    }

    pub fn with_jerk_mode(mut self, mode: JerkMode) -> Self {
        self.jerk_mode = mode;
        self
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }

    pub fn model(&self) -> &ModelSpec {
        self.model
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn jerk_mode(&self) -> JerkMode {
        self.jerk_mode
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub(crate) fn eval_raw(&self, state: &Vector) -> Result<f64, ManifoldError> {
        match self.kind {
            FieldKind::Curvature2d => phi_curvature_2d(self.model, state),
            FieldKind::Torsion3d => phi_torsion_3d(self.model, state, self.jerk_mode),
            FieldKind::SingularApprox => phi_singular_approx(self.model, state),
            FieldKind::TlsPoly2d => {
                let v = self.model.eval_field(state)?;
                let j = self.model.eval_jacobian(state)?;
                Ok(tls::polynomial_phi_2d(&j, &v))
            }
            FieldKind::TlsPoly3d => {
                let v = self.model.eval_field(state)?;
                let j = self.model.eval_jacobian(state)?;
                Ok(tls::polynomial_phi_3d(&j, &v))
            }
        }
    }

    pub fn eval(&self, state: &Vector) -> Result<f64, ManifoldError> {
        let raw = self.eval_raw(state)?;
        match self.normalization {
            Normalization::Raw => Ok(raw),
            Normalization::UnitGradient => {
                // A bit-exact zero is *on* the zero set, so the distance
                // estimate |φ|/‖∇φ‖ is 0 even where the gradient also
                // vanishes (degenerate zeros such as the Lorenz z-axis,
                // where the torsion numerator is identically 0).
                if raw == 0.0 {
                    return Ok(0.0);
                }
                let g = self.gradient(state, None)?.norm();
                if g == 0.0 {
                    return Err(ManifoldError::ZeroGradient);
                }
                Ok(raw / g)
            }
        }
    }

    /// ∇φ of the *raw* field by central differences;
    /// `h` defaults to 1e−5·max(1, ‖state‖).
    pub fn gradient(&self, state: &Vector, h: Option<f64>) -> Result<Vector, ManifoldError> {
        gradient_of(state, h, |s| self.eval_raw(s))
    }
}

fn default_step(state: &Vector) -> f64 {
    1e-5 * 1.0_f64.max(state.norm())
}

fn gradient_of<F>(state: &Vector, h: Option<f64>, phi: F) -> Result<Vector, ManifoldError>
where
    F: Fn(&Vector) -> Result<f64, ManifoldError>,
{
    let h = h.unwrap_or_else(|| default_step(state));
    let mut g = Vector::zeros(state.dim());
    for i in 0..state.dim() {
        let mut plus = *state;
        plus.set(i, state[i] + h);
        let mut minus = *state;
        minus.set(i, state[i] - h);
        g.set(i, (phi(&plus)? - phi(&minus)?) / (2.0 * h));
    }
    Ok(g)
}

/// 2D slow-manifold condition: the acceleration is collinear with the
/// velocity, det[V, γ] = ẋÿ − ẏẍ = 0.
///
/// Evaluates [`tls::polynomial_phi_2d`] on (J, V) — the determinant expands
/// to exactly that polynomial (γ = J·V), so the curvature route and the
/// eigenvalue-free polynomial route share one arithmetic path and agree
/// bit-for-bit.
pub fn phi_curvature_2d(model: &ModelSpec, state: &Vector) -> Result<f64, ManifoldError> {
    if model.dim() != 2 {
        return Err(ManifoldError::WrongDim { kind: "curvature2d", need: 2 });
    }
    let v = model.eval_field(state)?;
    let j = model.eval_jacobian(state)?;
    Ok(tls::polynomial_phi_2d(&j, &v))
}

/// 3D slow-manifold condition: torsion vanishes, φ = γ̇·(V ∧ γ) = 0.
///
/// With [`JerkMode::StationaryJacobian`] this is (J²V)·(V ∧ JV), the same
/// cubic as [`tls::polynomial_phi_3d`] up to rounding.
pub fn phi_torsion_3d(
    model: &ModelSpec,
    state: &Vector,
    jerk_mode: JerkMode,
) -> Result<f64, ManifoldError> {
    if model.dim() != 3 {
        return Err(ManifoldError::WrongDim { kind: "torsion3d", need: 3 });
    }
    let v = model.eval_field(state)?;
    let gamma = kinematics::acceleration(model, state)?;
    let jerk = kinematics::jerk(model, state, jerk_mode)?;
    Ok(jerk.dot(&v.cross3(&gamma)))
}

/// Singular approximation of the acceleration: the fast-axis component of
/// γ = J·V. Its zero set is the first-order (in the timescale ratio)
/// approximation of the slow manifold. The raw value keeps the model's
/// 1/ε-scaled jacobian row, so magnitudes are large; see
/// [`Normalization::UnitGradient`].
pub fn phi_singular_approx(model: &ModelSpec, state: &Vector) -> Result<f64, ManifoldError> {
    let axis = model
        .epsilon_axis()
        .ok_or_else(|| ManifoldError::NotSingularlyPerturbed(model.name().to_string()))?;
    let gamma = kinematics::acceleration(model, state)?;
    Ok(gamma[axis])
}

/// Signed attractivity of an arbitrary scalar field along the flow:
/// value = V·∇φ, the total time derivative dφ/dt of φ on trajectories.
///
/// Positive values mean φ grows along the flow. On a zero set oriented so
/// that the normal points away from the concave side, positive dφ/dt on the
/// inside marks the attractive parts; orientation of a general surface is
/// not decidable from φ alone, so the raw signed value is always reported
/// and 3D classifications should be cross-checked against the sign of the
/// torsion. The verdict is `Tangent` when the normalized derivative
/// |V·∇φ|/(‖V‖‖∇φ‖) is ≤ 1e−9.
pub fn attractivity_of<F>(
    model: &ModelSpec,
    phi: F,
    state: &Vector,
    h: Option<f64>,
) -> Result<(f64, Attractivity), ManifoldError>
where
    F: Fn(&Vector) -> Result<f64, ManifoldError>,
{
    let v = model.eval_field(state)?;
    let g = gradient_of(state, h, phi)?;
    let gn = g.norm();
    if gn == 0.0 {
        return Err(ManifoldError::ZeroGradient);
    }
    let value = v.dot(&g);
    let scale = v.norm() * gn;
    let verdict = if value.abs() <= 1e-9 * scale {
        Attractivity::Tangent
    } else if value > 0.0 {
        Attractivity::Attractive
    } else {
        Attractivity::Repulsive
    };
    Ok((value, verdict))
}

/// [`attractivity_of`] specialized to an [`ImplicitField`] (its raw value).
/// Evaluating dφ/dt over a grid yields the envelope field of the manifold.
pub fn attractivity(
    field: &ImplicitField,
    state: &Vector,
    h: Option<f64>,
) -> Result<(f64, Attractivity), ManifoldError> {
    attractivity_of(field.model(), |s| field.eval_raw(s), state, h)
}

/// Slow/fast domain classification by the sign of γ·V (equivalently the
/// tangential acceleration γ_τ): decelerating is slow, accelerating is
/// fast, with a 1e−9 normalized boundary band.
pub fn classify_domain(model: &ModelSpec, state: &Vector) -> Result<DomainClass, ManifoldError> {
    let v = model.eval_field(state)?;
    let gamma = kinematics::acceleration(model, state)?;
    Ok(kinematics::domain_class(&v, &gamma)?)
}

/// Closed-form slow-manifold branches of the van der Pol oscillator:
/// y = −x³/6 − x/2 ± (x/2)·√(x⁴ − 2x² + 1 − 4ε), the two roots of the
/// curvature condition seen as a quadratic in y. `Upper` selects the larger
/// root. Errs where the radicand is negative (the fold gap near x² = 1).
pub fn vanderpol_slow_curve(x: f64, eps: f64, branch: Branch) -> Result<f64, ManifoldError> {
    if !(x.is_finite() && eps.is_finite()) {
        return Err(ManifoldError::NonFiniteInput);
    }
    let radicand = x.powi(4) - 2.0 * x * x + 1.0 - 4.0 * eps;
    if radicand < 0.0 {
        return Err(ManifoldError::NegativeRadicand { x, radicand });
    }
    let base = -x.powi(3) / 6.0 - x / 2.0;
    let half = (x / 2.0 * radicand.sqrt()).abs();
    Ok(match branch {
        Branch::Upper => base + half,
        Branch::Lower => base - half,
    })
}

/// Closed-form singular-approximation curve of the van der Pol oscillator:
/// y = (x⁵ − 4x³ + 3x(1−ε)) / (3(x² − 1)), with poles at x = ±1.
pub fn vanderpol_singular_curve(x: f64, eps: f64) -> Result<f64, ManifoldError> {
    if !(x.is_finite() && eps.is_finite()) {
        return Err(ManifoldError::NonFiniteInput);
    }
    let denom = 3.0 * (-1.0 + x * x);
    if (x * x - 1.0).abs() <= 1e-12 * 1.0_f64.max(x * x) {
        return Err(ManifoldError::Pole(x));
    }
    Ok((x.powi(5) - 4.0 * x.powi(3) + 3.0 * x * (1.0 - eps)) / denom)
}

/// The published singular-approximation polynomial for the Chua system,
/// without its 1/(6ε²) prefactor (prefactors never move zero sets; the
/// dropped factor is reported in CSV/CLI metadata). Identical — after that
/// rescaling — to [`phi_singular_approx`] on the builtin Chua model.
pub fn chua_singular_phi(state: &Vector, eps: f64, mu: f64) -> Result<f64, ManifoldError> {
    if state.dim() != 3 {
        return Err(ManifoldError::WrongDim { kind: "chua_singular", need: 3 });
    }
    if !(state.is_finite() && eps.is_finite() && mu.is_finite()) {
        return Err(ManifoldError::NonFiniteInput);
    }
    let (x, y, z) = (state[0], state[1], state[2]);
    Ok(5043.0 * x.powi(3) + 9020.0 * x.powi(4) + 3872.0 * x.powi(5)
        - 246.0 * x * z
        - 264.0 * x * x * z
        - 4.2 * x * eps
        + 6.0 * y * eps
        + 1.44 * z * eps
        + 369.0 * x * x * mu
        + 352.0 * x.powi(3) * mu
        - 6.0 * z * mu
        + 6.0 * x * mu * mu)
}
