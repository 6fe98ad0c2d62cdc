//! Model catalog: four built-in slow-fast benchmark systems plus user models
//! parsed from text.
//!
//! Components always evaluate the phase-space velocity dX/dt directly — for
//! the ε-carrying systems the division by ε is folded into the component, and
//! the ε-row is remembered separately (`epsilon_axis`) for the singular
//! approximation. Built-ins ship analytic jacobians; parsed models fall back
//! to central differences.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{self, EvalError, ModelSource, ParseError};
use crate::geom::{Matrix, Vector};

pub const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// The four built-in systems.
pub const BUILTIN_NAMES: [&str; 4] = ["vanderpol", "chua", "lorenz", "volterra_gause"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    VanDerPol,
    Chua,
    Lorenz,
    VolterraGause,
}

#[derive(Debug, Clone)]
enum Components {
    Builtin(Builtin),
    Parsed(ModelSource),
    /// dX/dt = A·X with constant analytic jacobian A.
    Linear(Matrix),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{model}` has no parameter `{name}`")]
    UnknownParam { model: String, name: String },
    #[error("parameter `{name}` = {value} rejected: {reason}")]
    BadParam { name: String, value: f64, reason: &'static str },
    #[error("state has {got} components, model `{model}` expects {expected}")]
    DimensionMismatch { model: String, expected: usize, got: usize },
    #[error("domain violation on axis {} while evaluating d{}/dt: {source}", AXIS_NAMES[*.axis], AXIS_NAMES[*.axis])]
    Domain { axis: usize, source: EvalError },
    #[error("non-finite value on axis {}", AXIS_NAMES[*.axis])]
    NonFinite { axis: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// An immutable vector field of dimension 2 or 3. Evaluators are pure and
/// safe to call from many threads at once.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    name: String,
    dim: usize,
    params: BTreeMap<String, f64>,
    components: Components,
    jacobian_kind: JacobianKind,
    epsilon_axis: Option<usize>,
}

/// Builds a built-in model, applying parameter overrides.
pub fn builtin(name: &str, overrides: &[(String, f64)]) -> Result<ModelSpec, ModelError> {
    let (kind, dim, defaults, epsilon_axis): (Builtin, usize, &[(&str, f64)], Option<usize>) =
        match name {
            "vanderpol" => (Builtin::VanDerPol, 2, &[("eps", 0.05)], Some(0)),
            "chua" => (Builtin::Chua, 3, &[("eps", 0.05), ("mu", 2.0)], Some(0)),
            "lorenz" => (
                Builtin::Lorenz,
                3,
                &[("sigma", 10.0), ("beta", 8.0 / 3.0), ("r", 28.0)],
                None,
            ),
            "volterra_gause" => (
                Builtin::VolterraGause,
                3,
                &[("xi", 0.866), ("eps", 1.428), ("delta1", 0.577), ("delta2", 0.376)],
                Some(0),
            ),
            _ => return Err(ModelError::UnknownModel(name.to_string())),
        };
    let mut params: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    apply_overrides(name, &mut params, overrides)?;
    // The timescale-splitting parameter must stay positive: it divides a
    // component (eps) or scales one (xi).
    let scale_key = match kind {
        Builtin::VanDerPol | Builtin::Chua => Some("eps"),
        Builtin::VolterraGause => Some("xi"),
        Builtin::Lorenz => None,
    };
    if let Some(key) = scale_key {
        let v = params[key];
        if v <= 0.0 {
            return Err(ModelError::BadParam {
                name: key.to_string(),
                value: v,
                reason: "timescale parameter must be positive",
            });
        }
    }
    Ok(ModelSpec {
        name: name.to_string(),
        dim,
        params,
        components: Components::Builtin(kind),
        jacobian_kind: JacobianKind::Analytic,
        epsilon_axis,
    })
}

/// Parses a model from the text format (see the crate-level docs and
/// [`crate::expr`]); the resulting jacobian is numeric.
pub fn parse_model(source: &str) -> Result<ModelSpec, ModelError> {
    let parsed = expr::parse_model_source(source)?;
    let params: BTreeMap<String, f64> = parsed.params.iter().cloned().collect();
    Ok(ModelSpec {
        name: "parsed".to_string(),
        dim: parsed.dim,
        params,
        components: Components::Parsed(parsed),
        jacobian_kind: JacobianKind::Numeric,
        epsilon_axis: None,
    })
}

/// All built-ins at their default parameters, in catalog order.
pub fn catalog() -> Vec<ModelSpec> {
    BUILTIN_NAMES.iter().map(|n| builtin(n, &[]).unwrap()).collect()
}

/// The linear system dX/dt = A·X. Its jacobian is A everywhere — this *is*
/// the tangent linear system, which makes it the natural probe model for the
/// eigen machinery and for anything that assumes a constant jacobian.
pub fn linear(a: Matrix) -> ModelSpec {
    ModelSpec {
        name: "linear".to_string(),
        dim: a.dim(),
        params: BTreeMap::new(),
        components: Components::Linear(a),
        jacobian_kind: JacobianKind::Analytic,
        epsilon_axis: None,
    }
}

fn apply_overrides(
    model: &str,
    params: &mut BTreeMap<String, f64>,
    overrides: &[(String, f64)],
) -> Result<(), ModelError> {
    for (key, value) in overrides {
        if !params.contains_key(key) {
            return Err(ModelError::UnknownParam {
                model: model.to_string(),
                name: key.clone(),
            });
        }
        if !value.is_finite() {
            return Err(ModelError::BadParam {
                name: key.clone(),
                value: *value,
                reason: "must be finite",
            });
        }
        params.insert(key.clone(), *value);
    }
    Ok(())
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Replaces the display name (used by the CLI for file-loaded models).
    pub fn rename(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn jacobian_kind(&self) -> JacobianKind {
        self.jacobian_kind
    }

    /// Axis of the component that carries the small timescale parameter,
    /// if the model declares one.
    pub fn epsilon_axis(&self) -> Option<usize> {
        self.epsilon_axis
    }

    /// Applies parameter overrides after construction (used for parsed models).
    pub fn set_params(&mut self, overrides: &[(String, f64)]) -> Result<(), ModelError> {
        let name = self.name.clone();
        apply_overrides(&name, &mut self.params, overrides)
    }

    /// Serializes a parsed model back to its text form with current
    /// parameter values; built-ins are identified by name instead.
    pub fn to_source(&self) -> Option<String> {
        match &self.components {
            Components::Parsed(src) => {
                let mut src = src.clone();
                for (name, value) in &mut src.params {
                    *value = self.params[name.as_str()];
                }
                Some(src.to_source())
            }
            Components::Builtin(_) | Components::Linear(_) => None,
        }
    }

    pub fn state_from_slice(&self, xs: &[f64]) -> Result<Vector, ModelError> {
        Vector::from_slice(xs)
            .filter(|v| v.dim() == self.dim)
            .ok_or_else(|| ModelError::DimensionMismatch {
                model: self.name.clone(),
                expected: self.dim,
                got: xs.len(),
            })
    }

    fn check_dim(&self, state: &Vector) -> Result<(), ModelError> {
        if state.dim() != self.dim {
            return Err(ModelError::DimensionMismatch {
                model: self.name.clone(),
                expected: self.dim,
                got: state.dim(),
            });
        }
        Ok(())
    }

    fn p(&self, key: &str) -> f64 {
        self.params[key]
    }

    /// The phase-space velocity V(X) = dX/dt.
    pub fn eval_field(&self, state: &Vector) -> Result<Vector, ModelError> {
        self.check_dim(state)?;
        let v = match &self.components {
            Components::Builtin(b) => self.builtin_field(*b, state)?,
            Components::Linear(a) => a.mul_vec(state),
            Components::Parsed(src) => {
                let mut v = Vector::zeros(self.dim);
                for (axis, comp) in src.components.iter().enumerate() {
                    let value = comp
                        .eval(state.as_slice(), &self.params)
                        .map_err(|source| ModelError::Domain { axis, source })?;
                    v.set(axis, value);
                }
                v
            }
        };
        for axis in 0..self.dim {
            if !v[axis].is_finite() {
                return Err(ModelError::NonFinite { axis });
            }
        }
        Ok(v)
    }

    /// The functional jacobian J(X) = dV/dX: analytic for built-ins,
    /// central differences for parsed models.
    pub fn eval_jacobian(&self, state: &Vector) -> Result<Matrix, ModelError> {
        self.check_dim(state)?;
        let j = match &self.components {
            Components::Builtin(b) => self.builtin_jacobian(*b, state)?,
            Components::Linear(a) => *a,
            Components::Parsed(_) => self.numeric_jacobian(state)?,
        };
        for i in 0..self.dim {
            for k in 0..self.dim {
                if !j.get(i, k).is_finite() {
                    return Err(ModelError::NonFinite { axis: i });
                }
            }
        }
        Ok(j)
    }

    /// Central-difference jacobian with per-axis step h = 1e-6·max(1, |xᵢ|).
    /// Available for any model; used as an oracle against the analytic forms.
    pub fn numeric_jacobian(&self, state: &Vector) -> Result<Matrix, ModelError> {
        self.check_dim(state)?;
        let mut j = Matrix::zeros(self.dim);
        for col in 0..self.dim {
            let h = 1e-6 * state[col].abs().max(1.0);
            let mut sp = *state;
            sp.set(col, state[col] + h);
            let mut sm = *state;
            sm.set(col, state[col] - h);
            let vp = self.eval_field(&sp)?;
            let vm = self.eval_field(&sm)?;
            for row in 0..self.dim {
                j.set(row, col, (vp[row] - vm[row]) / (2.0 * h));
            }
        }
        Ok(j)
    }

    fn builtin_field(&self, b: Builtin, s: &Vector) -> Result<Vector, ModelError> {
        Ok(match b {
            Builtin::VanDerPol => {
                let eps = self.p("eps");
                let (x, y) = (s[0], s[1]);
                Vector::new2((x + y - x.powi(3) / 3.0) / eps, -x)
            }
            Builtin::Chua => {
                let (eps, mu) = (self.p("eps"), self.p("mu"));
                let (x, y, z) = (s[0], s[1], s[2]);
                Vector::new3(
                    (z - 44.0 / 3.0 * x.powi(3) - 41.0 / 2.0 * x.powi(2) - mu * x) / eps,
                    -z,
                    -0.7 * x + y + 0.24 * z,
                )
            }
            Builtin::Lorenz => {
                let (sg, beta, r) = (self.p("sigma"), self.p("beta"), self.p("r"));
                let (x, y, z) = (s[0], s[1], s[2]);
                Vector::new3(sg * (y - x), -x * z + r * x - y, x * y - beta * z)
            }
            Builtin::VolterraGause => {
                let (x, y, z) = (s[0], s[1], s[2]);
                self.vg_domain_check(x, y)?;
                let (xi, eps) = (self.p("xi"), self.p("eps"));
                let (d1, d2) = (self.p("delta1"), self.p("delta2"));
                Vector::new3(
                    (x * (1.0 - x) - x.sqrt() * y) / xi,
                    -d1 * y + x.sqrt() * y - y.sqrt() * z,
                    eps * z * (y.sqrt() - d2),
                )
            }
        })
    }

    fn builtin_jacobian(&self, b: Builtin, s: &Vector) -> Result<Matrix, ModelError> {
        Ok(match b {
            Builtin::VanDerPol => {
                let eps = self.p("eps");
                let x = s[0];
                Matrix::from_rows2([[(1.0 - x * x) / eps, 1.0 / eps], [-1.0, 0.0]])
            }
            Builtin::Chua => {
                let (eps, mu) = (self.p("eps"), self.p("mu"));
                let x = s[0];
                Matrix::from_rows3([
                    [(-44.0 * x * x - 41.0 * x - mu) / eps, 0.0, 1.0 / eps],
                    [0.0, 0.0, -1.0],
                    [-0.7, 1.0, 0.24],
                ])
            }
            Builtin::Lorenz => {
                let (sg, beta, r) = (self.p("sigma"), self.p("beta"), self.p("r"));
                let (x, y, z) = (s[0], s[1], s[2]);
                Matrix::from_rows3([
                    [-sg, sg, 0.0],
                    [r - z, -1.0, -x],
                    [y, x, -beta],
                ])
            }
            Builtin::VolterraGause => {
                let (x, y, z) = (s[0], s[1], s[2]);
                self.vg_domain_check(x, y)?;
                let (xi, eps) = (self.p("xi"), self.p("eps"));
                let (d1, d2) = (self.p("delta1"), self.p("delta2"));
                let (rx, ry) = (x.sqrt(), y.sqrt());
                Matrix::from_rows3([
                    [(1.0 - 2.0 * x - y / (2.0 * rx)) / xi, -rx / xi, 0.0],
                    [y / (2.0 * rx), -d1 + rx - z / (2.0 * ry), -ry],
                    [0.0, eps * z / (2.0 * ry), eps * (ry - d2)],
                ])
            }
        })
    }

    fn vg_domain_check(&self, x: f64, y: f64) -> Result<(), ModelError> {
        // Square roots of x and y: negative populations are hard errors,
        // never clamped.
        if x < 0.0 {
            return Err(ModelError::Domain {
                axis: 0,
                source: EvalError::DomainViolation { func: "sqrt", arg: x },
            });
        }
        if y < 0.0 {
            return Err(ModelError::Domain {
                axis: 1,
                source: EvalError::DomainViolation { func: "sqrt", arg: y },
            });
        }
        Ok(())
    }
}
