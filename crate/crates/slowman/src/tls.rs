//! The tangent-linear-system route to the slow manifold.
//!
//! Near the slow manifold the fast eigenmode of the jacobian is evanescent,
//! so the manifold can be characterized through the eigenstructure of J: the
//! velocity is collinear to the slow right eigenvector (2D), coplanar to the
//! two slow right eigenvectors (3D), or — equivalently — orthogonal to the
//! fast *left* eigenvector. Those conditions need a real spectrum; where
//! eigenvalues go complex the eigenvalue-free polynomials
//! ([`polynomial_phi_2d`], [`polynomial_phi_3d`]) apply instead, and they are
//! algebraically identical to the curvature/torsion route of
//! [`crate::manifold`].
//!
//! Generic-letter convention: jacobian entries are named row-major
//! `a b c / d e f / g h i`, matching the polynomial tables.

use num_complex::Complex64;
use rand::{Rng, RngExt};
use thiserror::Error;

use crate::geom::{Matrix, Vector};
use crate::model::{ModelError, ModelSpec};

/// A 2- or 3-component complex vector (eigenvector storage).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec {
    dim: usize,
    a: [Complex64; 3],
}

impl CVec {
    fn new(dim: usize, a: [Complex64; 3]) -> Self {
        CVec { dim, a }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> Complex64 {
        assert!(i < self.dim);
        self.a[i]
    }

    pub fn norm(&self) -> f64 {
        self.a[..self.dim].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_imag(&self) -> f64 {
        self.a[..self.dim].iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Drops imaginary parts; callers must have checked realness.
    pub fn real_part(&self) -> Vector {
        let mut v = Vector::zeros(self.dim);
        for i in 0..self.dim {
            v.set(i, self.a[i].re);
        }
        v
    }

    fn cross3(&self, o: &CVec) -> CVec {
        let (u, v) = (&self.a, &o.a);
        CVec::new(
            3,
            [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ],
        )
    }
}

/// Eigen decomposition of the jacobian at a state, split into one fast
/// (dominant |Re λ|) and the remaining slow eigenvalues.
///
/// Eigenvectors keep the raw scale of the parametric forms they were built
/// from (no normalization); only directions are meaningful.
#[derive(Debug, Clone)]
pub struct EigenData {
    /// Sorted by descending |Re λ|; a conjugate pair keeps +Im first.
    pub eigenvalues: Vec<Complex64>,
    pub right: Vec<CVec>,
    pub left: Vec<CVec>,
    pub fast_index: usize,
    pub slow_indices: Vec<usize>,
    pub is_real: Vec<bool>,
}

impl EigenData {
    pub fn all_real(&self) -> bool {
        self.is_real.iter().all(|r| *r)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TlsError {
    #[error("complex eigenvalues: eigenvector-based condition undefined; use the polynomial form")]
    ComplexSpectrum,
    #[error("defective spectrum: {0}")]
    Defective(&'static str),
    #[error("coupling coefficient {0} is zero (uncoupled system); conjugate-product forms degenerate")]
    CouplingZero(&'static str),
    #[error("{op} requires a {need}-dimensional model")]
    WrongDim { op: &'static str, need: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Relative tolerance for repeated-eigenvalue / tied-|Re| detection.
const TIE_TOL: f64 = 1e-12;

/// Eigen decomposition of J(state).
pub fn eigen(model: &ModelSpec, state: &Vector) -> Result<EigenData, TlsError> {
    let j = model.eval_jacobian(state)?;
    eigen_matrix(&j)
}

/// Eigen decomposition of an explicit jacobian.
pub fn eigen_matrix(j: &Matrix) -> Result<EigenData, TlsError> {
    let dim = j.dim();
    let mut lambdas = if dim == 2 { roots2(j) } else { roots3(j) };
    for l in &mut lambdas {
        *l = polish_root(j, *l);
        if l.im.abs() <= 1e-12 * (1.0 + l.norm()) {
            l.im = 0.0;
        }
    }
    // Descending |Re|, conjugate pairs +Im first.
    lambdas.sort_by(|x, y| {
        y.re.abs()
            .partial_cmp(&x.re.abs())
            .unwrap()
            .then(y.im.partial_cmp(&x.im).unwrap())
    });

    for i in 0..dim {
        for k in (i + 1)..dim {
            let scale = 1.0_f64.max(lambdas[i].norm()).max(lambdas[k].norm());
            if (lambdas[i] - lambdas[k]).norm() <= TIE_TOL * scale {
                return Err(TlsError::Defective("repeated eigenvalue"));
            }
            let conj_pair = lambdas[i].im != 0.0
                && (lambdas[i].conj() - lambdas[k]).norm() <= 1e-9 * scale;
            if !conj_pair
                && (lambdas[i].re.abs() - lambdas[k].re.abs()).abs() <= TIE_TOL * scale
            {
                return Err(TlsError::Defective("tied |Re λ|: fast/slow split undefined"));
            }
        }
    }

    let jt = j.transpose();
    let mut right = Vec::with_capacity(dim);
    let mut left = Vec::with_capacity(dim);
    for &l in &lambdas {
        right.push(parametric_eigenvector(j, l)?);
        left.push(parametric_eigenvector(&jt, l)?);
    }
    let is_real: Vec<bool> = lambdas.iter().map(|l| l.im == 0.0).collect();
    Ok(EigenData {
        fast_index: 0,
        slow_indices: (1..dim).collect(),
        eigenvalues: lambdas,
        right,
        left,
        is_real,
    })
}

fn roots2(j: &Matrix) -> Vec<Complex64> {
    let t = j.trace();
    let d = j.det();
    let disc = t * t - 4.0 * d;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Add same-signed terms first to dodge cancellation.
        let big = if t >= 0.0 { (t + s) / 2.0 } else { (t - s) / 2.0 };
        let other = if big != 0.0 { d / big } else { 0.0 };
        vec![Complex64::new(big, 0.0), Complex64::new(other, 0.0)]
    } else {
        let im = (-disc).sqrt() / 2.0;
        vec![
            Complex64::new(t / 2.0, im),
            Complex64::new(t / 2.0, -im),
        ]
    }
}

fn char3(j: &Matrix) -> (f64, f64, f64) {
    // λ³ + c2λ² + c1λ + c0
    let tr = j.trace();
    let m = j.get(0, 0) * j.get(1, 1) - j.get(0, 1) * j.get(1, 0)
        + j.get(0, 0) * j.get(2, 2)
        - j.get(0, 2) * j.get(2, 0)
        + j.get(1, 1) * j.get(2, 2)
        - j.get(1, 2) * j.get(2, 1);
    (-tr, m, -j.det())
}

fn roots3(j: &Matrix) -> Vec<Complex64> {
    let (c2, c1, c0) = char3(j);
    // Depress: λ = t − c2/3.
    let shift = -c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if p == 0.0 && q == 0.0 {
        return vec![Complex64::new(shift, 0.0); 3];
    }
    if disc > 0.0 {
        // One real root + conjugate pair (Cardano).
        let sd = disc.sqrt();
        let u = (-q / 2.0 + sd).cbrt();
        let v = (-q / 2.0 - sd).cbrt();
        let re = -(u + v) / 2.0 + shift;
        let im = 3.0_f64.sqrt() / 2.0 * (u - v);
        vec![
            Complex64::new(u + v + shift, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else {
        // Three real roots (trigonometric branch); p < 0 here.
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0);
        let theta = arg.acos();
        (0..3)
            .map(|k| {
                let t = 2.0 * r * ((theta - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
                Complex64::new(t + shift, 0.0)
            })
            .collect()
    }
}

/// A few complex Newton steps on the characteristic polynomial; the closed
/// forms are already close, this squeezes out the last digits.
fn polish_root(j: &Matrix, mut l: Complex64) -> Complex64 {
    if j.dim() == 2 {
        let (t, d) = (j.trace(), j.det());
        for _ in 0..3 {
            let p = (l - t) * l + d;
            let dp = 2.0 * l - t;
            if dp.norm() == 0.0 {
                break;
            }
            l -= p / dp;
        }
    } else {
        let (c2, c1, c0) = char3(j);
        for _ in 0..3 {
            let p = ((l + c2) * l + c1) * l + c0;
            let dp = (3.0 * l + 2.0 * c2) * l + c1;
            if dp.norm() == 0.0 {
                break;
            }
            l -= p / dp;
        }
    }
    l
}

/// Right eigenvector of `m` for eigenvalue `l` from the printed parametric
/// forms, with the published fallbacks when a form degenerates.
///
/// 2D: (λ−d, c), falling back to (b, λ−a). 3D: the cross product of the
/// first two rows of (M − λI) — componentwise exactly the printed
/// (bf + c(λ−e), cd + f(λ−a), (λ−a)(λ−e) − bd) — falling back to the other
/// two row pairs. Left eigenvectors are obtained by passing Mᵗ.
fn parametric_eigenvector(m: &Matrix, l: Complex64) -> Result<CVec, TlsError> {
    let scale = m.norm() + l.norm();
    if m.dim() == 2 {
        let (a, b) = (m.get(0, 0), m.get(0, 1));
        let (c, d) = (m.get(1, 0), m.get(1, 1));
        let primary = CVec::new(2, [l - d, Complex64::new(c, 0.0), Complex64::ZERO]);
        if primary.norm() > 1e-12 * scale {
            return Ok(primary);
        }
        let fallback = CVec::new(2, [Complex64::new(b, 0.0), l - a, Complex64::ZERO]);
        if fallback.norm() > 1e-12 * scale {
            return Ok(fallback);
        }
        return Err(TlsError::Defective("eigenvector parametric forms degenerate"));
    }
    let row = |i: usize| {
        let mut r = [Complex64::ZERO; 3];
        for k in 0..3 {
            r[k] = Complex64::new(m.get(i, k), 0.0);
        }
        r[i] -= l;
        CVec::new(3, r)
    };
    let (r0, r1, r2) = (row(0), row(1), row(2));
    let tol = 1e-12 * scale * scale;
    for cand in [r0.cross3(&r1), r1.cross3(&r2), r0.cross3(&r2)] {
        if cand.norm() > tol {
            return Ok(cand);
        }
    }
    Err(TlsError::Defective("eigenvector parametric forms degenerate"))
}

fn require_dim(model: &ModelSpec, need: usize, op: &'static str) -> Result<(), TlsError> {
    if model.dim() != need {
        return Err(TlsError::WrongDim { op, need });
    }
    Ok(())
}

fn real_eigen(model: &ModelSpec, state: &Vector) -> Result<(Vector, EigenData), TlsError> {
    let v = model.eval_field(state)?;
    let e = eigen(model, state)?;
    if !e.all_real() {
        return Err(TlsError::ComplexSpectrum);
    }
    Ok((v, e))
}

/// 2D collinearity condition V ∧ Y_λ₂ (slow right eigenvector): with the
/// primary parametric form this is exactly c·ẋ − (λ₂ − d)·ẏ.
pub fn collinearity_phi_2d(model: &ModelSpec, state: &Vector) -> Result<f64, TlsError> {
    require_dim(model, 2, "collinearity_phi_2d")?;
    let (v, e) = real_eigen(model, state)?;
    let y2 = e.right[e.slow_indices[0]].real_part();
    Ok(v.cross2(&y2))
}

/// 3D coplanarity condition det(V, Y_λ₂, Y_λ₃) = V·(Y_λ₂ ∧ Y_λ₃).
pub fn coplanarity_phi_3d(model: &ModelSpec, state: &Vector) -> Result<f64, TlsError> {
    require_dim(model, 3, "coplanarity_phi_3d")?;
    let (v, e) = real_eigen(model, state)?;
    let y2 = e.right[e.slow_indices[0]].real_part();
    let y3 = e.right[e.slow_indices[1]].real_part();
    Ok(v.dot(&y2.cross3(&y3)))
}

/// Orthogonality condition V·ᵗY_λ₁ against the fast *left* eigenvector
/// (either dimension). Equivalent to the collinearity/coplanarity route.
pub fn orthogonality_phi(model: &ModelSpec, state: &Vector) -> Result<f64, TlsError> {
    let (v, e) = real_eigen(model, state)?;
    let t1 = e.left[e.fast_index].real_part();
    Ok(v.dot(&t1))
}

/// The eigenvalue-free 2D slow-manifold polynomial
/// cẋ² − (a−d)ẋẏ − bẏ², equal to det[v, Jv] = ẋÿ − ẏẍ.
///
/// This is *the* shared arithmetic for the 2D manifold field:
/// [`crate::manifold::phi_curvature_2d`] evaluates exactly this function, so
/// the curvature route and the polynomial route agree bit-for-bit.
pub fn polynomial_phi_2d(j: &Matrix, v: &Vector) -> f64 {
    let (a, b) = (j.get(0, 0), j.get(0, 1));
    let (c, d) = (j.get(1, 0), j.get(1, 1));
    let (x, y) = (v[0], v[1]);
    c * (x * x) - (a - d) * (x * y) - b * (y * y)
}

/// The eigenvalue-free 3D slow-manifold polynomial, Σ α_ijk ẋⁱẏʲżᵏ over
/// i+j+k = 3 with the ten published coefficients; equal (up to rounding) to
/// (J²v)·(v ∧ Jv).
pub fn polynomial_phi_3d(j: &Matrix, v: &Vector) -> f64 {
    let (a, b, c) = (j.get(0, 0), j.get(0, 1), j.get(0, 2));
    let (d, e, f) = (j.get(1, 0), j.get(1, 1), j.get(1, 2));
    let (g, h, i) = (j.get(2, 0), j.get(2, 1), j.get(2, 2));
    let (x, y, z) = (v[0], v[1], v[2]);

    let a300 = d * d * h + d * g * i - f * g * g - d * g * e;
    let a030 = c * h * h + a * b * h - b * b * g - i * b * h;
    let a003 = c * c * d + c * f * e - b * f * f - c * f * a;
    let a210 = b * d * g + a * e * g - e * e * g + c * g * g - 2.0 * a * d * h
        - 2.0 * f * g * h
        + d * e * h
        - a * g * i
        + e * g * i
        + d * h * i;
    let a120 = -a * b * g + 2.0 * b * e * g + a * a * h - f * h * h - b * d * h - a * e * h
        + 2.0 * c * g * h
        - b * g * i
        - a * h * i
        + e * h * i;
    let a201 = -b * d * d + a * d * e - c * d * g + 2.0 * a * f * g + 2.0 * d * f * h
        - e * f * g
        - a * d * i
        - d * e * i
        - f * g * i
        + d * i * i;
    let a102 = a * c * d + c * d * e - a * a * f - 2.0 * b * d * f + a * e * f + c * f * g
        + f * f * h
        - 2.0 * c * d * i
        + a * f * i
        - e * f * i;
    let a021 = b * b * d - a * b * e - 2.0 * b * c * g - 2.0 * c * e * h + a * c * h + b * f * h
        + a * b * i
        + b * e * i
        + c * h * i
        - b * i * i;
    let a012 = 2.0 * b * c * d - a * c * e + c * e * e - a * b * f - b * e * f - c * c * g
        - c * f * h
        + a * c * i
        - c * e * i
        + 2.0 * b * f * i;
    let a111 = a * b * d - a * a * e - b * d * e + a * e * e - a * c * g + 3.0 * b * f * g
        - 3.0 * c * d * h
        + e * f * h
        + a * a * i
        - e * e * i
        + c * g * i
        - f * h * i
        - a * i * i
        + e * i * i;

    a300 * (x * x * x)
        + a030 * (y * y * y)
        + a003 * (z * z * z)
        + a210 * (x * x * y)
        + a120 * (x * y * y)
        + a201 * (x * x * z)
        + a102 * (x * z * z)
        + a021 * (y * y * z)
        + a012 * (y * z * z)
        + a111 * (x * y * z)
}

/// Cross-checks the two conjugate-product factorizations of the slow
/// manifold equation (right-eigenvector wedge products vs left-eigenvector
/// dot products), returning their scale-normalized relative difference.
///
/// 2D: (V∧Y₁)(V∧Y₂)/c is compared against −(V·ᵗY₁)(V·ᵗY₂)/b. (Expanding the
/// parametric forms shows the left-product carries −b, not +b; the zero sets
/// are identical either way.) 3D: the triple wedge product is compared
/// against −κ₁κ₂κ₃ times the triple dot product, with each κᵢ the scale
/// factor of the alignment Y_λⱼ ∧ Y_λₖ = κᵢ·ᵗY_λᵢ and its circular shifts —
/// the same identity the equivalence proof itself invokes.
pub fn conjugate_product_check(model: &ModelSpec, state: &Vector) -> Result<f64, TlsError> {
    let (v, e) = real_eigen(model, state)?;
    let j = model.eval_jacobian(state)?;
    let jn = j.norm();
    // In both dimensions the printed leading factors live at the same
    // entries: (1,0) is ∂g/∂x and (0,1) is the ε-scaled ∂f/∂y.
    if j.get(1, 0).abs() <= 1e-12 * jn {
        return Err(TlsError::CouplingZero("∂g/∂x"));
    }
    if j.get(0, 1).abs() <= 1e-12 * jn {
        return Err(TlsError::CouplingZero("∂f/∂y"));
    }

    let rel = |f1: f64, f2: f64| {
        let denom = f1.abs().max(f2.abs());
        if denom == 0.0 {
            0.0
        } else {
            (f1 - f2).abs() / denom
        }
    };

    if model.dim() == 2 {
        let (c, b) = (j.get(1, 0), j.get(0, 1));
        let y: Vec<Vector> = e.right.iter().map(CVec::real_part).collect();
        let t: Vec<Vector> = e.left.iter().map(CVec::real_part).collect();
        let f1 = v.cross2(&y[0]) * v.cross2(&y[1]);
        let f2 = v.dot(&t[0]) * v.dot(&t[1]);
        Ok(rel(f1 / c, -f2 / b))
    } else {
        let y: Vec<Vector> = e.right.iter().map(CVec::real_part).collect();
        let t: Vec<Vector> = e.left.iter().map(CVec::real_part).collect();
        let kappa = |wj: &Vector, wk: &Vector, ti: &Vector| {
            wj.cross3(wk).dot(ti) / ti.norm_sq()
        };
        let k1 = kappa(&y[1], &y[2], &t[0]);
        let k2 = kappa(&y[2], &y[0], &t[1]);
        let k3 = kappa(&y[0], &y[1], &t[2]);
        let f1 = v.dot(&y[0].cross3(&y[1])) * v.dot(&y[1].cross3(&y[2])) * v.dot(&y[0].cross3(&y[2]));
        let f2 = v.dot(&t[0]) * v.dot(&t[1]) * v.dot(&t[2]);
        Ok(rel(f1, -k1 * k2 * k3 * f2))
    }
}

/// Draws a random jacobian with a well-separated real spectrum and healthy
/// couplings: eigenvalues in [−5, 5] with pairwise separation in value and
/// in |value|, conjugated through a random basis of bounded conditioning.
/// The workhorse behind the randomized equivalence checks.
pub fn sample_real_spectrum_jacobian<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    assert!(dim == 2 || dim == 3);
    loop {
        let mut ls = [0.0_f64; 3];
        'draw: loop {
            for l in ls.iter_mut().take(dim) {
                *l = rng.random_range(-5.0..5.0);
            }
            for i in 0..dim {
                for k in 0..i {
                    if (ls[i] - ls[k]).abs() < 0.5 || (ls[i].abs() - ls[k].abs()).abs() < 0.25 {
                        continue 'draw;
                    }
                }
            }
            break;
        }
        let mut p = Matrix::zeros(dim);
        for i in 0..dim {
            for k in 0..dim {
                p.set(i, k, rng.random_range(-1.0..1.0));
            }
        }
        if p.det().abs() < if dim == 2 { 0.1 } else { 0.15 } {
            continue;
        }
        let pinv = match p.inverse() {
            Some(m) => m,
            None => continue,
        };
        if p.norm() * pinv.norm() > 8.0 {
            continue;
        }
        let mut d = Matrix::zeros(dim);
        for i in 0..dim {
            d.set(i, i, ls[i]);
        }
        let j = p.mul_mat(&d).mul_mat(&pinv);
        // Conjugate-product checks divide by these couplings.
        if j.get(1, 0).abs() < 1e-3 || j.get(0, 1).abs() < 1e-3 {
            continue;
        }
        return j;
    }
}
