//! Catalog of concrete Finsler metrics with jet-polymorphic evaluation.
//!
//! Every family evaluates `F(x, y)` on [`JetScalar`] arguments, so one code
//! path serves plain values and full derivative jets. Supported families:
//!
//! * `euclidean` — `F = |y|`.
//! * `riemannian` — `F = sqrt(a_ij(x) y^i y^j)` with polynomial coefficients.
//! * `klein` — the Beltrami–Klein model of hyperbolic space on the unit ball.
//! * `randers` — `F = alpha + beta` with a closed one-form `beta`.
//! * `funk_ball` — the Funk metric of the unit ball, in closed form.
//! * `hilbert_ball` — its symmetrization (the Riemannian Klein metric).
//! * `funk_convex` — the Funk metric of a convex polynomial domain
//!   `{phi < 1}`, defined implicitly by `phi(x + y/F) = 1`.
//! * `minkowski_quartic_perturbed` — the locally Minkowski norm
//!   `sqrt(w |y|^2 + eps sqrt(sum y_i^4))`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{self, Algebra, JetError, JetScalar};
use crate::poly::Polynomial;

/// Ball metrics reject base points closer to the boundary than this, to keep
/// fourth and fifth derivatives well conditioned.
pub const DOMAIN_GUARD: f64 = 1e-6;

/// Supported metric dimensions. The jet algebra lifts both `x` and `y`, so
/// the dimension is capped by half the supported variable count.
pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = jets::MAX_VARS / 2;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric build rejected by check `{check}`: {detail}")]
    BuildRejection { check: String, detail: String },
    #[error("base point outside admissible chart region ({detail})")]
    OutOfDomain { detail: String },
    #[error("F is not differentiable at the zero section (y = 0)")]
    ApexDirection,
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Metric family tag; the JSON form uses snake_case strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Euclidean,
    Riemannian,
    Klein,
    Randers,
    FunkBall,
    HilbertBall,
    FunkConvex,
    MinkowskiQuarticPerturbed,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::Riemannian => "riemannian",
            Family::Klein => "klein",
            Family::Randers => "randers",
            Family::FunkBall => "funk_ball",
            Family::HilbertBall => "hilbert_ball",
            Family::FunkConvex => "funk_convex",
            Family::MinkowskiQuarticPerturbed => "minkowski_quartic_perturbed",
        }
    }
}

/// Closed one-form `beta = d(potential) + constant covector`; closedness
/// holds by construction rather than by a numerical curl check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Vec<f64>>,
}

/// Family parameters; which fields apply depends on the family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Riemannian coefficient matrix `a_ij(x)` (polynomials in `x`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<Polynomial>>>,
    /// Randers base metric (euclidean, klein, or riemannian spec).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Box<MetricSpec>>,
    /// Randers one-form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<OneForm>,
    /// Convex domain functional for `funk_convex`; defaults to the quartic
    /// `|u|^2 + 0.5 sum u_i^4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Polynomial>,
    /// Quartic perturbation strength for `minkowski_quartic_perturbed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Weight of the quadratic part of the Minkowski norm (default 1).
    /// Setting it to 0 gives the deliberately degenerate pure quartic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_weight: Option<f64>,
    /// Constant rescaling `F -> scale * F` (default 1); rescaling by `s`
    /// multiplies flag curvature by `1/s^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Skip build-time invariant checks. Exists for negative-control
    /// fixtures that need a deliberately broken metric to reach the
    /// verification layer; never set this for real runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unchecked: Option<bool>,
}

impl Params {
    pub fn is_empty(&self) -> bool {
        self == &Params::default()
    }
}

/// Serializable description of a catalog metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub family: Family,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

impl MetricSpec {
    pub fn euclidean(n: usize) -> MetricSpec {
        MetricSpec {
            family: Family::Euclidean,
            n,
            params: Params::default(),
        }
    }

    pub fn klein(n: usize) -> MetricSpec {
        MetricSpec {
            family: Family::Klein,
            n,
            params: Params::default(),
        }
    }

    pub fn funk_ball(n: usize) -> MetricSpec {
        MetricSpec {
            family: Family::FunkBall,
            n,
            params: Params::default(),
        }
    }

    pub fn hilbert_ball(n: usize) -> MetricSpec {
        MetricSpec {
            family: Family::HilbertBall,
            n,
            params: Params::default(),
        }
    }

    pub fn funk_convex_quartic(n: usize) -> MetricSpec {
        MetricSpec {
            family: Family::FunkConvex,
            n,
            params: Params::default(),
        }
    }

    pub fn minkowski_quartic(n: usize, epsilon: f64) -> MetricSpec {
        MetricSpec {
            family: Family::MinkowskiQuarticPerturbed,
            n,
            params: Params {
                epsilon: Some(epsilon),
                ..Params::default()
            },
        }
    }

    pub fn riemannian(n: usize, a: Vec<Vec<Polynomial>>) -> MetricSpec {
        MetricSpec {
            family: Family::Riemannian,
            n,
            params: Params {
                a: Some(a),
                ..Params::default()
            },
        }
    }

    /// Randers metric over a given base with `beta` built from an optional
    /// polynomial potential and a constant covector.
    pub fn randers(alpha: MetricSpec, potential: Option<Polynomial>, constant: Vec<f64>) -> MetricSpec {
        let n = alpha.n;
        MetricSpec {
            family: Family::Randers,
            n,
            params: Params {
                alpha: Some(Box::new(alpha)),
                beta: Some(OneForm {
                    potential,
                    constant: Some(constant),
                }),
                ..Params::default()
            },
        }
    }

    pub fn with_scale(mut self, scale: f64) -> MetricSpec {
        self.params.scale = Some(scale);
        self
    }
}

/// Resolved Riemannian base of a Randers metric.
#[derive(Clone, Debug)]
enum AlphaKind {
    Euclidean,
    Klein,
    Riemannian(Vec<Vec<Polynomial>>),
}

#[derive(Clone, Debug)]
enum Kind {
    Euclidean,
    Riemannian(Vec<Vec<Polynomial>>),
    Klein,
    Randers {
        alpha: AlphaKind,
        /// `beta_i(x)` as polynomials (gradient of the potential plus the
        /// constant covector).
        beta: Vec<Polynomial>,
    },
    FunkBall,
    HilbertBall,
    FunkConvex(Polynomial),
    Minkowski {
        epsilon: f64,
        quadratic_weight: f64,
    },
}

/// An evaluable Finsler metric.
#[derive(Clone, Debug)]
pub struct Metric {
    spec: MetricSpec,
    n: usize,
    kind: Kind,
    scale: f64,
}

/// Build an evaluable metric, enforcing the family invariants.
pub fn build_metric(spec: &MetricSpec) -> Result<Metric, MetricError> {
    Metric::build(spec)
}

impl Metric {
    pub fn build(spec: &MetricSpec) -> Result<Metric, MetricError> {
        let n = spec.n;
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(reject(
                "dimension",
                format!("n = {n} outside supported range {MIN_DIM}..={MAX_DIM}"),
            ));
        }
        let scale = spec.params.scale.unwrap_or(1.0);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(reject("scale", format!("scale = {scale} must be positive")));
        }
        let unchecked = spec.params.unchecked.unwrap_or(false);

        let kind = match spec.family {
            Family::Euclidean => Kind::Euclidean,
            Family::Klein => Kind::Klein,
            Family::FunkBall => Kind::FunkBall,
            Family::HilbertBall => Kind::HilbertBall,
            Family::Riemannian => {
                let a = spec
                    .params
                    .a
                    .clone()
                    .ok_or_else(|| reject("riemannian_coefficients", "params.a missing".into()))?;
                validate_coefficient_matrix(&a, n)?;
                Kind::Riemannian(a)
            }
            Family::Randers => {
                let alpha_spec = spec
                    .params
                    .alpha
                    .as_deref()
                    .ok_or_else(|| reject("randers_alpha", "params.alpha missing".into()))?;
                if alpha_spec.n != n {
                    return Err(reject(
                        "randers_alpha",
                        format!("alpha dimension {} != randers dimension {n}", alpha_spec.n),
                    ));
                }
                let alpha = match alpha_spec.family {
                    Family::Euclidean => AlphaKind::Euclidean,
                    Family::Klein => AlphaKind::Klein,
                    Family::Riemannian => {
                        let a = alpha_spec.params.a.clone().ok_or_else(|| {
                            reject("randers_alpha", "alpha params.a missing".into())
                        })?;
                        validate_coefficient_matrix(&a, n)?;
                        AlphaKind::Riemannian(a)
                    }
                    other => {
                        return Err(reject(
                            "randers_alpha",
                            format!(
                                "alpha family must be euclidean, klein, or riemannian, got {}",
                                other.as_str()
                            ),
                        ))
                    }
                };
                let form = spec
                    .params
                    .beta
                    .clone()
                    .ok_or_else(|| reject("randers_beta", "params.beta missing".into()))?;
                let beta = resolve_one_form(&form, n)?;
                if !unchecked {
                    check_randers_norm(&alpha, &beta, n)?;
                }
                Kind::Randers { alpha, beta }
            }
            Family::FunkConvex => {
                let phi = spec
                    .params
                    .phi
                    .clone()
                    .unwrap_or_else(|| Polynomial::quartic_domain(n));
                if phi.n_vars != n {
                    return Err(reject(
                        "funk_domain",
                        format!("phi has {} variables, expected {n}", phi.n_vars),
                    ));
                }
                if !unchecked {
                    check_funk_domain(&phi, n)?;
                }
                Kind::FunkConvex(phi)
            }
            Family::MinkowskiQuarticPerturbed => {
                let epsilon = spec.params.epsilon.unwrap_or(0.0);
                let quadratic_weight = spec.params.quadratic_weight.unwrap_or(1.0);
                if epsilon < 0.0 || quadratic_weight < 0.0 {
                    return Err(reject(
                        "minkowski_parameters",
                        format!("epsilon = {epsilon}, quadratic_weight = {quadratic_weight} must be nonnegative"),
                    ));
                }
                if epsilon == 0.0 && quadratic_weight == 0.0 {
                    return Err(reject(
                        "minkowski_parameters",
                        "epsilon and quadratic_weight cannot both vanish".into(),
                    ));
                }
                Kind::Minkowski {
                    epsilon,
                    quadratic_weight,
                }
            }
        };

        Ok(Metric {
            spec: spec.clone(),
            n,
            kind,
            scale,
        })
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Admissible chart region predicate.
    pub fn admissible(&self, x: &[f64]) -> bool {
        self.check_domain(x).is_ok()
    }

    pub fn check_domain(&self, x: &[f64]) -> Result<(), MetricError> {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        match &self.kind {
            Kind::Klein | Kind::FunkBall | Kind::HilbertBall => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1.0 - DOMAIN_GUARD {
                    return Err(MetricError::OutOfDomain {
                        detail: format!("|x| = {norm:.9} on the unit-ball chart"),
                    });
                }
            }
            Kind::Randers { alpha, .. } => {
                if matches!(alpha, AlphaKind::Klein) {
                    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1.0 - DOMAIN_GUARD {
                        return Err(MetricError::OutOfDomain {
                            detail: format!("|x| = {norm:.9} on the unit-ball chart"),
                        });
                    }
                }
            }
            Kind::FunkConvex(phi) => {
                let v = phi.eval(x);
                if v > 1.0 - DOMAIN_GUARD {
                    return Err(MetricError::OutOfDomain {
                        detail: format!("phi(x) = {v:.9} at the domain boundary"),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Radius of the Euclidean ball used when sampling base points for this
    /// metric; keeps probes away from chart boundaries.
    pub fn sample_radius(&self) -> f64 {
        match &self.kind {
            Kind::Klein | Kind::FunkBall | Kind::HilbertBall | Kind::Randers { .. } => 0.5,
            Kind::FunkConvex(_) => 0.45,
            _ => 0.7,
        }
    }

    /// Evaluate `F(x, y)` on jet arguments; all jets must share one algebra.
    pub fn eval_jets(&self, x: &[JetScalar], y: &[JetScalar]) -> Result<JetScalar, MetricError> {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let x0: Vec<f64> = x.iter().map(|j| j.value()).collect();
        self.check_domain(&x0)?;
        let y_norm2: f64 = y.iter().map(|j| j.value() * j.value()).sum();
        if y_norm2 < 1e-24 {
            return Err(MetricError::ApexDirection);
        }
        let alg = x[0].algebra().clone();
        let f = match &self.kind {
            Kind::Euclidean => dot(&alg, y, y).try_sqrt()?,
            Kind::Riemannian(a) => riemannian_f2(&alg, a, x, y).try_sqrt()?,
            Kind::Klein => {
                // F^2 = [(1-|x|^2)|y|^2 + <x,y>^2] / (1-|x|^2)^2
                let one = JetScalar::constant(&alg, 1.0);
                let om = &one - &dot(&alg, x, x);
                let q = dot(&alg, y, y);
                let p = dot(&alg, x, y);
                let num = (&(&om * &q) + &(&p * &p)).try_sqrt()?;
                num.try_div(&om)?
            }
            Kind::Randers { alpha, beta } => {
                let a2 = match alpha {
                    AlphaKind::Euclidean => dot(&alg, y, y),
                    AlphaKind::Klein => {
                        let one = JetScalar::constant(&alg, 1.0);
                        let om = &one - &dot(&alg, x, x);
                        let q = dot(&alg, y, y);
                        let p = dot(&alg, x, y);
                        (&(&om * &q) + &(&p * &p)).try_div(&(&om * &om))?
                    }
                    AlphaKind::Riemannian(a) => riemannian_f2(&alg, a, x, y),
                };
                let mut f = a2.try_sqrt()?;
                for (i, b) in beta.iter().enumerate() {
                    f = &f + &(&b.eval_jets(&alg, x) * &y[i]);
                }
                if f.value() <= 0.0 {
                    return Err(MetricError::BuildRejection {
                        check: "randers_positivity".into(),
                        detail: format!("F = {:.6e} <= 0 at an admissible (x, y)", f.value()),
                    });
                }
                f
            }
            Kind::FunkBall => funk_ball_jet(&alg, x, y)?,
            Kind::HilbertBall => {
                let fwd = funk_ball_jet(&alg, x, y)?;
                let neg: Vec<JetScalar> = y.iter().map(|j| j.scale(-1.0)).collect();
                let bwd = funk_ball_jet(&alg, x, &neg)?;
                (&fwd + &bwd).scale(0.5)
            }
            Kind::FunkConvex(phi) => funk_convex_jet(&alg, phi, x, y)?,
            Kind::Minkowski {
                epsilon,
                quadratic_weight,
            } => {
                let q = dot(&alg, y, y).scale(*quadratic_weight);
                let mut quart = JetScalar::constant(&alg, 0.0);
                for yi in y {
                    quart = &quart + &yi.powi(4)?;
                }
                let inner = if *epsilon > 0.0 {
                    &q + &quart.try_sqrt()?.scale(*epsilon)
                } else {
                    q
                };
                inner.try_sqrt()?
            }
        };
        Ok(if self.scale == 1.0 { f } else { f.scale(self.scale) })
    }

    /// Scalar `F(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
        let alg = jets::algebra(1, 1).expect("trivial algebra");
        let xj: Vec<JetScalar> = x.iter().map(|&v| JetScalar::constant(&alg, v)).collect();
        let yj: Vec<JetScalar> = y.iter().map(|&v| JetScalar::constant(&alg, v)).collect();
        Ok(self.eval_jets(&xj, &yj)?.value())
    }
}

/// Smallest eigenvalue of the fundamental form `g_ij(x, y)`; positive iff
/// the metric is strongly convex at `(x, y)`.
pub fn strong_convexity_check(m: &Metric, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    let n = m.dim();
    let alg = jets::algebra(n, 2)?;
    let xj: Vec<JetScalar> = x.iter().map(|&v| JetScalar::constant(&alg, v)).collect();
    let yj = jets::lift_in(&alg, y, 0);
    let f = m.eval_jets(&xj, &yj)?;
    let f2 = &f * &f;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut e = vec![0u8; n];
            e[i] += 1;
            e[j] += 1;
            let v = 0.5 * f2.partial(&e)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let eigs = g.symmetric_eigenvalues();
    Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min))
}

fn reject(check: &str, detail: String) -> MetricError {
    MetricError::BuildRejection {
        check: check.to_string(),
        detail,
    }
}

fn validate_coefficient_matrix(a: &[Vec<Polynomial>], n: usize) -> Result<(), MetricError> {
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(reject(
            "riemannian_coefficients",
            format!("coefficient matrix must be {n}x{n}"),
        ));
    }
    for row in a {
        for p in row {
            if p.n_vars != n {
                return Err(reject(
                    "riemannian_coefficients",
                    format!("coefficient polynomial has {} variables, expected {n}", p.n_vars),
                ));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut lhs = a[i][j].clone();
            let mut rhs = a[j][i].clone();
            lhs.canonicalize();
            rhs.canonicalize();
            if lhs != rhs {
                return Err(reject(
                    "riemannian_symmetry",
                    format!("a[{i}][{j}] != a[{j}][{i}] as polynomials"),
                ));
            }
        }
    }
    Ok(())
}

fn resolve_one_form(form: &OneForm, n: usize) -> Result<Vec<Polynomial>, MetricError> {
    let mut beta: Vec<Polynomial> = match &form.potential {
        Some(p) => {
            if p.n_vars != n {
                return Err(reject(
                    "randers_beta",
                    format!("potential has {} variables, expected {n}", p.n_vars),
                ));
            }
            (0..n).map(|i| p.partial(i)).collect()
        }
        None => (0..n).map(|_| Polynomial::zero(n)).collect(),
    };
    if let Some(c) = &form.constant {
        if c.len() != n {
            return Err(reject(
                "randers_beta",
                format!("constant covector has {} entries, expected {n}", c.len()),
            ));
        }
        for (b, &ci) in beta.iter_mut().zip(c) {
            let mut terms = b.terms.clone();
            terms.push(crate::poly::Term {
                coef: ci,
                exps: vec![0; n],
            });
            *b = Polynomial::new(n, terms);
        }
    }
    if beta.iter().all(|p| p.terms.is_empty()) {
        return Err(reject(
            "randers_beta",
            "one-form is identically zero; use the base family directly".into(),
        ));
    }
    Ok(beta)
}

/// Values of the base Riemannian matrix `a_ij(x)` for a Randers alpha.
fn alpha_matrix(alpha: &AlphaKind, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    match alpha {
        AlphaKind::Euclidean => DMatrix::identity(n, n),
        AlphaKind::Klein => {
            let s: f64 = x.iter().map(|v| v * v).sum();
            let om = 1.0 - s;
            DMatrix::from_fn(n, n, |i, j| {
                let kron = if i == j { 1.0 } else { 0.0 };
                (kron * om + x[i] * x[j]) / (om * om)
            })
        }
        AlphaKind::Riemannian(a) => DMatrix::from_fn(n, n, |i, j| a[i][j].eval(x)),
    }
}

/// Build-time positivity guard: the alpha-norm of beta must stay below 1 on
/// a 100-point probe sample, otherwise F is not positive definite.
fn check_randers_norm(alpha: &AlphaKind, beta: &[Polynomial], n: usize) -> Result<(), MetricError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x52414e44);
    let radius = match alpha {
        AlphaKind::Klein => 0.9,
        _ => 1.0,
    };
    for probe in 0..100 {
        // probe 0 is the origin; the rest fill the ball of the given radius
        let x: Vec<f64> = if probe == 0 {
            vec![0.0; n]
        } else {
            (0..n)
                .map(|_| rng.random_range(-radius..radius))
                .collect()
        };
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > radius {
            continue;
        }
        let a = alpha_matrix(alpha, &x);
        let b: Vec<f64> = beta.iter().map(|p| p.eval(&x)).collect();
        let inv = a.clone().try_inverse().ok_or_else(|| {
            reject(
                "randers_alpha_regularity",
                format!("alpha matrix not invertible at probe {probe}"),
            )
        })?;
        let mut norm2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                norm2 += inv[(i, j)] * b[i] * b[j];
            }
        }
        if norm2 >= 1.0 - 1e-9 {
            return Err(reject(
                "randers_beta_alpha_norm",
                format!(
                    "|beta|_alpha = {:.6} >= 1 at probe point {:?}",
                    norm2.sqrt(),
                    x
                ),
            ));
        }
    }
    Ok(())
}

/// Build-time convexity guard for `funk_convex`: `phi(0) < 1` and a positive
/// definite Hessian at 20 boundary-directed probes.
fn check_funk_domain(phi: &Polynomial, n: usize) -> Result<(), MetricError> {
    let at_origin = phi.eval(&vec![0.0; n]);
    if at_origin >= 1.0 {
        return Err(reject(
            "funk_domain_origin",
            format!("phi(0) = {at_origin} must be < 1"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x46554e4b);
    for probe in 0..20 {
        let d = random_unit(&mut rng, n);
        let t = ray_boundary(phi, &vec![0.0; n], &d).map_err(|e| {
            reject(
                "funk_domain_boundary",
                format!("no boundary crossing along probe {probe}: {e}"),
            )
        })?;
        let bx: Vec<f64> = d.iter().map(|v| v * t).collect();
        let h = phi.hessian(&bx);
        let hm = DMatrix::from_fn(n, n, |i, j| h[i][j]);
        let min_eig = hm
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(reject(
                "funk_domain_convexity",
                format!("Hessian of phi not positive definite at boundary probe {probe} (min eigenvalue {min_eig:.3e})"),
            ));
        }
    }
    Ok(())
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    use rand_distr::StandardNormal;
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}

/// Solve `phi(x0 + t d) = 1` for `t > 0` by bracketing and bisection with a
/// Newton polish. Requires `phi(x0) < 1` and coercive growth along the ray.
fn ray_boundary(phi: &Polynomial, x0: &[f64], d: &[f64]) -> Result<f64, String> {
    let f = |t: f64| {
        let p: Vec<f64> = x0.iter().zip(d).map(|(&a, &b)| a + t * b).collect();
        phi.eval(&p) - 1.0
    };
    if f(0.0) >= 0.0 {
        return Err("ray base point already outside the domain".into());
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err("domain functional does not reach 1 along the ray".into());
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn dot(alg: &Arc<Algebra>, a: &[JetScalar], b: &[JetScalar]) -> JetScalar {
    let mut acc = JetScalar::constant(alg, 0.0);
    for (ai, bi) in a.iter().zip(b) {
        acc = &acc + &(ai * bi);
    }
    acc
}

/// `a_ij(x) y^i y^j` for a polynomial coefficient matrix.
fn riemannian_f2(
    alg: &Arc<Algebra>,
    a: &[Vec<Polynomial>],
    x: &[JetScalar],
    y: &[JetScalar],
) -> JetScalar {
    let n = y.len();
    let mut acc = JetScalar::constant(alg, 0.0);
    for i in 0..n {
        for j in 0..n {
            if a[i][j].terms.is_empty() {
                continue;
            }
            acc = &acc + &(&a[i][j].eval_jets(alg, x) * &(&y[i] * &y[j]));
        }
    }
    acc
}

/// Closed-form Funk metric of the unit ball:
/// `F = (sqrt((1-|x|^2)|y|^2 + <x,y>^2) + <x,y>) / (1-|x|^2)`.
fn funk_ball_jet(
    alg: &Arc<Algebra>,
    x: &[JetScalar],
    y: &[JetScalar],
) -> Result<JetScalar, MetricError> {
    let one = JetScalar::constant(alg, 1.0);
    let om = &one - &dot(alg, x, x);
    let q = dot(alg, y, y);
    let p = dot(alg, x, y);
    let root = (&(&om * &q) + &(&p * &p)).try_sqrt()?;
    Ok((&root + &p).try_div(&om)?)
}

/// Funk metric of `{phi < 1}` by the jet-level implicit solve of
/// `phi(x + y/F) = 1` with `F > 0`.
fn funk_convex_jet(
    alg: &Arc<Algebra>,
    phi: &Polynomial,
    x: &[JetScalar],
    y: &[JetScalar],
) -> Result<JetScalar, MetricError> {
    let x0: Vec<f64> = x.iter().map(|j| j.value()).collect();
    let y0: Vec<f64> = y.iter().map(|j| j.value()).collect();
    let y_norm = y0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dir: Vec<f64> = y0.iter().map(|v| v / y_norm).collect();
    // The ray from x in direction y/|y| meets the boundary at x + t* y/|y|,
    // so F = |y| / t* exactly; the jet solve then only polishes derivatives.
    let t_star = ray_boundary(phi, &x0, &dir)
        .map_err(|detail| MetricError::OutOfDomain { detail })?;
    let seed = y_norm / t_star;
    let jet = jets::implicit_solve(
        alg,
        |u| {
            let inv = u.recip()?;
            let arg: Vec<JetScalar> = x
                .iter()
                .zip(y)
                .map(|(xi, yi)| xi + &(yi * &inv))
                .collect();
            let one = JetScalar::constant(alg, 1.0);
            Ok(&phi.eval_jets(alg, &arg) - &one)
        },
        seed,
    )?;
    Ok(jet)
}
