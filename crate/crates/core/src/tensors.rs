//! Pointwise tensor quantities at a fixed `(x, y)`.
//!
//! A [`TensorContext`] lifts the base point into the jet algebra once,
//! evaluates `F` there, and then reads every tensor off the same expansion:
//! fundamental form `g_ij = 1/2 [F^2]_{y^i y^j}`, Cartan torsion
//! `C_ijk = 1/4 [F^2]_{y^i y^j y^k}`, mean Cartan torsion `I_i = g^{jk} C_ijk`,
//! angular metric `h_ij = F F_{y^i y^j}`, Matsumoto torsion, spray
//! coefficients `G^i`, nonlinear connection `N^i_j`, and mean Berwald
//! curvature `E_ij`. Symmetric tensors are constructed symmetric (computed on
//! ordered index triples and mirrored), never symmetrized after the fact.

use std::sync::Arc;

use nalgebra::DMatrix;
use once_cell::unsync::OnceCell;
use rand::Rng;

use crate::error::{GeomError, Result};
use crate::jets::{self, Algebra, JetScalar};
use crate::metrics::{self, Metric};

/// Jet order needed for spray/connection values only.
pub const ORDER_VALUES: usize = 2;
/// Jet order for connection values and pure-`y` tensors (g, C, h, I, M).
pub const ORDER_CONNECTION: usize = 3;
/// Jet order for the Riemann curvature values.
pub const ORDER_CURVATURE: usize = 4;
/// Jet order for everything including vertical curvature derivatives,
/// Landsberg closed form, and mean Berwald curvature.
pub const ORDER_FULL: usize = 5;

/// Identity residual allowed on `g * g^{-1}`.
pub const INVERSE_TOL: f64 = 1e-11;
/// Agreement required between the two defining formulas of the angular
/// metric (internal dual oracle).
pub const ANGULAR_DUAL_TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Rank-1 component array at a base point.
#[derive(Clone, Debug)]
pub struct Tensor1 {
    pub base: BasePoint,
    pub c: Vec<f64>,
}

/// Rank-2 component array at a base point.
#[derive(Clone, Debug)]
pub struct Tensor2 {
    pub base: BasePoint,
    pub m: DMatrix<f64>,
}

/// Rank-3 component array at a base point (flat storage).
#[derive(Clone, Debug)]
pub struct Tensor3 {
    pub base: BasePoint,
    pub n: usize,
    c: Vec<f64>,
}

impl Tensor3 {
    /// Build a totally symmetric rank-3 tensor: `f` is evaluated on ordered
    /// triples `i <= j <= k` and mirrored to all permutations.
    pub fn symmetric(base: BasePoint, n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Tensor3 {
        let mut c = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = f(i, j, k);
                    for (a, b, d) in [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ] {
                        c[(a * n + b) * n + d] = v;
                    }
                }
            }
        }
        Tensor3 { base, n, c }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Contract the last slot with a vector.
    pub fn contract3(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            (0..self.n).map(|k| self.get(i, j, k) * v[k]).sum()
        })
    }

    /// Full cubic form `T(u, u, u)`.
    pub fn cubic(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    acc += self.get(i, j, k) * u[i] * u[j] * u[k];
                }
            }
        }
        acc
    }
}

/// Jet evaluation context at one `(x, y)`: the metric lifted into a jet
/// algebra with lazily derived tensor caches.
pub struct TensorContext<'m> {
    metric: &'m Metric,
    n: usize,
    /// Whether the `x` axes are lifted (axes `0..n` are `x`, `n..2n` are `y`)
    /// or only `y` is active (axes `0..n` are `y`).
    xy: bool,
    alg: Arc<Algebra>,
    x: Vec<f64>,
    y: Vec<f64>,
    f_jet: JetScalar,
    f2_jet: JetScalar,
    g_vals: OnceCell<DMatrix<f64>>,
    g_inv_vals: OnceCell<DMatrix<f64>>,
    g_jets: OnceCell<Vec<Vec<JetScalar>>>,
    g_inv_jets: OnceCell<Vec<Vec<JetScalar>>>,
    spray_jets: OnceCell<Vec<JetScalar>>,
}

impl<'m> TensorContext<'m> {
    /// Context with both `x` and `y` lifted; needed for spray, connection,
    /// Berwald, curvature, and Landsberg quantities.
    pub fn new(metric: &'m Metric, x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        let n = metric.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let alg = jets::algebra(2 * n, order)?;
        let xj = jets::lift_in(&alg, x, 0);
        let yj = jets::lift_in(&alg, y, n);
        let f_jet = metric.eval_jets(&xj, &yj)?;
        let f2_jet = &f_jet * &f_jet;
        Ok(Self::from_parts(metric, x, y, true, alg, f_jet, f2_jet))
    }

    /// Context with only `y` lifted (x held constant); serves the pure-`y`
    /// tensors at a fraction of the cost.
    pub fn new_y_only(metric: &'m Metric, x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        let n = metric.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let alg = jets::algebra(n, order)?;
        let xj: Vec<JetScalar> = x.iter().map(|&v| JetScalar::constant(&alg, v)).collect();
        let yj = jets::lift_in(&alg, y, 0);
        let f_jet = metric.eval_jets(&xj, &yj)?;
        let f2_jet = &f_jet * &f_jet;
        Ok(Self::from_parts(metric, x, y, false, alg, f_jet, f2_jet))
    }

    fn from_parts(
        metric: &'m Metric,
        x: &[f64],
        y: &[f64],
        xy: bool,
        alg: Arc<Algebra>,
        f_jet: JetScalar,
        f2_jet: JetScalar,
    ) -> Self {
        TensorContext {
            metric,
            n: metric.dim(),
            xy,
            alg,
            x: x.to_vec(),
            y: y.to_vec(),
            f_jet,
            f2_jet,
            g_vals: OnceCell::new(),
            g_inv_vals: OnceCell::new(),
            g_jets: OnceCell::new(),
            g_inv_jets: OnceCell::new(),
            spray_jets: OnceCell::new(),
        }
    }

    pub fn metric(&self) -> &Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.alg.order()
    }

    pub fn base(&self) -> BasePoint {
        BasePoint {
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn f(&self) -> f64 {
        self.f_jet.value()
    }

    pub fn f_jet(&self) -> &JetScalar {
        &self.f_jet
    }

    pub fn f2_jet(&self) -> &JetScalar {
        &self.f2_jet
    }

    pub(crate) fn y_axis(&self, i: usize) -> usize {
        if self.xy {
            self.n + i
        } else {
            i
        }
    }

    pub(crate) fn x_axis(&self, i: usize) -> usize {
        assert!(self.xy, "x axes are not lifted in a y-only context");
        i
    }

    /// Partial of a jet with respect to listed `y` indices.
    pub(crate) fn y_partial(&self, jet: &JetScalar, ys: &[usize]) -> Result<f64> {
        let axes: Vec<usize> = ys.iter().map(|&i| self.y_axis(i)).collect();
        let mut e = vec![0u8; jet.n_vars()];
        for a in axes {
            e[a] += 1;
        }
        Ok(jet.partial(&e)?)
    }

    /// Fundamental form values `g_ij = 1/2 [F^2]_{y^i y^j}`.
    pub fn g(&self) -> Result<&DMatrix<f64>> {
        self.g_vals.get_or_try_init(|| {
            let n = self.n;
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * self.y_partial(&self.f2_jet, &[i, j])?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(m)
        })
    }

    /// Inverse metric values, with the `g * g^{-1} = id` residual enforced.
    pub fn g_inv(&self) -> Result<&DMatrix<f64>> {
        let g = self.g()?.clone();
        self.g_inv_vals.get_or_try_init(|| {
            let min_eig = g
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min_eig <= 0.0 {
                return Err(GeomError::DegenerateMetric { min_eig });
            }
            let inv = g
                .clone()
                .try_inverse()
                .ok_or(GeomError::DegenerateMetric { min_eig })?;
            let dev = (&g * &inv - DMatrix::<f64>::identity(self.n, self.n))
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if dev > INVERSE_TOL {
                return Err(GeomError::Inconsistency {
                    what: "g * g^{-1} = id".into(),
                    deviation: dev,
                    tolerance: INVERSE_TOL,
                });
            }
            Ok(inv)
        })
    }

    /// `y_i = g_ij y^j` (equivalently `F F_{y^i}`).
    pub fn y_lower(&self) -> Result<Vec<f64>> {
        let g = self.g()?;
        Ok((0..self.n)
            .map(|i| (0..self.n).map(|j| g[(i, j)] * self.y[j]).sum())
            .collect())
    }

    /// Fundamental form as jets of order `order - 2`.
    pub fn g_jets(&self) -> Result<&Vec<Vec<JetScalar>>> {
        self.g_jets.get_or_try_init(|| {
            let n = self.n;
            let mut rows: Vec<Vec<JetScalar>> = vec![Vec::with_capacity(n); n];
            for i in 0..n {
                for j in 0..n {
                    let jet = if j < i {
                        rows[j][i].clone()
                    } else {
                        self.f2_jet
                            .derive(self.y_axis(i))
                            .derive(self.y_axis(j))
                            .scale(0.5)
                    };
                    rows[i].push(jet);
                }
            }
            Ok(rows)
        })
    }

    /// Inverse metric as jets (Gauss–Jordan in the jet ring).
    pub fn g_inv_jets(&self) -> Result<&Vec<Vec<JetScalar>>> {
        let g = self.g_jets()?.clone();
        self.g_inv_jets.get_or_try_init(|| {
            let n = self.n;
            let sub = g[0][0].algebra().clone();
            let mut a = g;
            let mut inv: Vec<Vec<JetScalar>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| JetScalar::constant(&sub, if i == j { 1.0 } else { 0.0 }))
                        .collect()
                })
                .collect();
            for col in 0..n {
                let pivot_row = (col..n)
                    .max_by(|&r, &s| {
                        a[r][col]
                            .value()
                            .abs()
                            .partial_cmp(&a[s][col].value().abs())
                            .unwrap()
                    })
                    .unwrap();
                a.swap(col, pivot_row);
                inv.swap(col, pivot_row);
                let pivot_inv = a[col][col].recip().map_err(|_| GeomError::DegenerateMetric {
                    min_eig: a[col][col].value(),
                })?;
                for j in 0..n {
                    a[col][j] = &a[col][j] * &pivot_inv;
                    inv[col][j] = &inv[col][j] * &pivot_inv;
                }
                for r in 0..n {
                    if r == col {
                        continue;
                    }
                    let factor = a[r][col].clone();
                    if factor.value() == 0.0 && factor.coefficients().iter().all(|c| *c == 0.0) {
                        continue;
                    }
                    for j in 0..n {
                        a[r][j] = &a[r][j] - &(&factor * &a[col][j]);
                        inv[r][j] = &inv[r][j] - &(&factor * &inv[col][j]);
                    }
                }
            }
            Ok(inv)
        })
    }

    /// Spray coefficients as jets of order `order - 2`:
    /// `G^i = 1/4 g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} )`.
    pub fn spray_jets(&self) -> Result<&Vec<JetScalar>> {
        assert!(self.xy, "spray requires an (x, y) context");
        let ginv = self.g_inv_jets()?.clone();
        self.spray_jets.get_or_try_init(|| {
            let n = self.n;
            let sub_order = self.alg.order() - 2;
            let sub = ginv[0][0].algebra().clone();
            let y_tr: Vec<JetScalar> = (0..n)
                .map(|k| {
                    jets::lift_in(&self.alg, &[self.y[k]], self.y_axis(k))
                        .remove(0)
                        .truncate(sub_order)
                })
                .collect();
            let mut rights = Vec::with_capacity(n);
            for l in 0..n {
                let mut acc = JetScalar::constant(&sub, 0.0);
                for (k, yk) in y_tr.iter().enumerate() {
                    let mixed = self.f2_jet.derive(self.x_axis(k)).derive(self.y_axis(l));
                    acc = &acc + &(&mixed * yk);
                }
                let fx = self.f2_jet.derive(self.x_axis(l)).truncate(sub_order);
                rights.push(&acc - &fx);
            }
            let mut sprays = Vec::with_capacity(n);
            for i in 0..n {
                let mut acc = JetScalar::constant(&sub, 0.0);
                for (l, right) in rights.iter().enumerate() {
                    acc = &acc + &(&ginv[i][l] * right);
                }
                sprays.push(acc.scale(0.25));
            }
            Ok(sprays)
        })
    }

    /// Spray values `G^i(x, y)`.
    pub fn spray_values(&self) -> Result<Vec<f64>> {
        Ok(self.spray_jets()?.iter().map(|j| j.value()).collect())
    }

    /// Nonlinear connection values `N^i_j = dG^i/dy^j`.
    pub fn connection_values(&self) -> Result<DMatrix<f64>> {
        let sprays = self.spray_jets()?;
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.y_partial(&sprays[i], &[j])?;
            }
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// Public tensor operations
// ---------------------------------------------------------------------------

/// `g_ij(x, y) = 1/2 [F^2]_{y^i y^j}`, checked positive definite.
pub fn fundamental_form(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor2> {
    let ctx = TensorContext::new_y_only(m, x, y, ORDER_VALUES)?;
    fundamental_form_ctx(&ctx)
}

pub fn fundamental_form_ctx(ctx: &TensorContext) -> Result<Tensor2> {
    let g = ctx.g()?.clone();
    let min_eig = g
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(GeomError::DegenerateMetric { min_eig });
    }
    Ok(Tensor2 {
        base: ctx.base(),
        m: g,
    })
}

/// Inverse of the fundamental form with the identity residual check.
pub fn inverse_metric(g: &Tensor2) -> Result<Tensor2> {
    let n = g.m.nrows();
    let min_eig = g
        .m
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(GeomError::DegenerateMetric { min_eig });
    }
    let inv = g
        .m
        .clone()
        .try_inverse()
        .ok_or(GeomError::DegenerateMetric { min_eig })?;
    let dev = (&g.m * &inv - DMatrix::<f64>::identity(n, n))
        .iter()
        .fold(0.0f64, |mx, v| mx.max(v.abs()));
    if dev > INVERSE_TOL {
        return Err(GeomError::Inconsistency {
            what: "g * g^{-1} = id".into(),
            deviation: dev,
            tolerance: INVERSE_TOL,
        });
    }
    Ok(Tensor2 {
        base: g.base.clone(),
        m: inv,
    })
}

/// Cartan torsion `C_ijk = 1/4 [F^2]_{y^i y^j y^k}`.
pub fn cartan_torsion(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let ctx = TensorContext::new_y_only(m, x, y, ORDER_CONNECTION)?;
    cartan_torsion_ctx(&ctx)
}

pub fn cartan_torsion_ctx(ctx: &TensorContext) -> Result<Tensor3> {
    let n = ctx.dim();
    let mut err = None;
    let t = Tensor3::symmetric(ctx.base(), n, |i, j, k| {
        match ctx.y_partial(ctx.f2_jet(), &[i, j, k]) {
            Ok(v) => 0.25 * v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(t),
    }
}

/// Mean Cartan torsion `I_i = g^{jk} C_ijk`.
pub fn mean_cartan(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor1> {
    let ctx = TensorContext::new_y_only(m, x, y, ORDER_CONNECTION)?;
    mean_cartan_ctx(&ctx)
}

pub fn mean_cartan_ctx(ctx: &TensorContext) -> Result<Tensor1> {
    let c = cartan_torsion_ctx(ctx)?;
    let ginv = ctx.g_inv()?;
    let n = ctx.dim();
    let comps = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += ginv[(j, k)] * c.get(i, j, k);
                }
            }
            acc
        })
        .collect();
    Ok(Tensor1 {
        base: ctx.base(),
        c: comps,
    })
}

/// Angular metric `h_ij = F F_{y^i y^j}`, cross-checked against
/// `g_ij - y_i y_j / F^2` (both defining formulas must agree).
pub fn angular_metric(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor2> {
    let ctx = TensorContext::new_y_only(m, x, y, ORDER_VALUES)?;
    angular_metric_ctx(&ctx)
}

pub fn angular_metric_ctx(ctx: &TensorContext) -> Result<Tensor2> {
    let n = ctx.dim();
    let f = ctx.f();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = f * ctx.y_partial(ctx.f_jet(), &[i, j])?;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let g = ctx.g()?;
    let yl = ctx.y_lower()?;
    let mut dev = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..n {
        for j in 0..n {
            let alt = g[(i, j)] - yl[i] * yl[j] / (f * f);
            dev = dev.max((alt - h[(i, j)]).abs());
            scale = scale.max(h[(i, j)].abs());
        }
    }
    if dev > ANGULAR_DUAL_TOL * scale {
        return Err(GeomError::Inconsistency {
            what: "angular metric dual formulas".into(),
            deviation: dev,
            tolerance: ANGULAR_DUAL_TOL,
        });
    }
    Ok(Tensor2 {
        base: ctx.base(),
        m: h,
    })
}

/// Matsumoto torsion
/// `M_ijk = C_ijk - (I_i h_jk + I_j h_ik + I_k h_ij) / (n + 1)`.
///
/// The Randers classification built on it needs `n >= 3`; the computation
/// itself is defined for `n = 2` as well (callers gate on dimension).
pub fn matsumoto_torsion(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let ctx = TensorContext::new_y_only(m, x, y, ORDER_CONNECTION)?;
    matsumoto_torsion_ctx(&ctx)
}

pub fn matsumoto_torsion_ctx(ctx: &TensorContext) -> Result<Tensor3> {
    let n = ctx.dim();
    let c = cartan_torsion_ctx(ctx)?;
    let i_mean = mean_cartan_ctx(ctx)?;
    let h = angular_metric_ctx(ctx)?;
    let denom = (n + 1) as f64;
    Ok(Tensor3::symmetric(ctx.base(), n, |i, j, k| {
        c.get(i, j, k)
            - (i_mean.c[i] * h.m[(j, k)] + i_mean.c[j] * h.m[(i, k)] + i_mean.c[k] * h.m[(i, j)])
                / denom
    }))
}

/// Spray coefficients `G^i`.
pub fn spray(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor1> {
    let ctx = TensorContext::new(m, x, y, ORDER_VALUES)?;
    Ok(Tensor1 {
        base: ctx.base(),
        c: ctx.spray_values()?,
    })
}

/// Nonlinear connection `N^i_j = dG^i / dy^j`, with the Euler check
/// `G^i = 1/2 N^i_j y^j` enforced (2-homogeneity of the spray).
pub fn nonlinear_connection(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor2> {
    let ctx = TensorContext::new(m, x, y, ORDER_CONNECTION)?;
    let nmat = ctx.connection_values()?;
    let g = ctx.spray_values()?;
    let n = ctx.dim();
    let mut dev = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..n {
        let recon: f64 = (0..n).map(|j| nmat[(i, j)] * y[j]).sum::<f64>() * 0.5;
        dev = dev.max((recon - g[i]).abs());
        scale = scale.max(g[i].abs());
    }
    if dev > 1e-10 * scale {
        return Err(GeomError::Inconsistency {
            what: "G^i = 1/2 N^i_j y^j".into(),
            deviation: dev,
            tolerance: 1e-10,
        });
    }
    Ok(Tensor2 {
        base: ctx.base(),
        m: nmat,
    })
}

/// Mean Berwald curvature
/// `E_ij = 1/2 d^2/dy^i dy^j [ dG^m / dy^m ]`.
pub fn mean_berwald(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor2> {
    let ctx = TensorContext::new(m, x, y, ORDER_FULL)?;
    mean_berwald_ctx(&ctx)
}

pub fn mean_berwald_ctx(ctx: &TensorContext) -> Result<Tensor2> {
    let sprays = ctx.spray_jets()?;
    let n = ctx.dim();
    let mut e = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (m_idx, gm) in sprays.iter().enumerate() {
                acc += ctx.y_partial(gm, &[i, j, m_idx])?;
            }
            let v = 0.5 * acc;
            e[(i, j)] = v;
            e[(j, i)] = v;
        }
    }
    Ok(Tensor2 {
        base: ctx.base(),
        m: e,
    })
}

/// Landsberg curvature by the closed form
/// `L_ijk = -1/2 y_l [G^l]_{y^i y^j y^k}` (requires an order-5 context).
pub fn landsberg_closed_form_ctx(ctx: &TensorContext) -> Result<Tensor3> {
    let sprays = ctx.spray_jets()?.clone();
    let yl = ctx.y_lower()?;
    let n = ctx.dim();
    let mut err = None;
    let t = Tensor3::symmetric(ctx.base(), n, |i, j, k| {
        let mut acc = 0.0;
        for (l, gl) in sprays.iter().enumerate() {
            match ctx.y_partial(gl, &[i, j, k]) {
                Ok(v) => acc += yl[l] * v,
                Err(e) => err = Some(e),
            }
        }
        -0.5 * acc
    });
    match err {
        Some(e) => Err(e),
        None => Ok(t),
    }
}

/// Estimated torsion norms at `x`: the supremum over flagpoles and rank-one
/// probe directions of `F(y) |T_y(u,u,u)| / g_y(u,u)^{3/2}`, for both the
/// Matsumoto and Cartan torsions. Lower bounds by construction.
#[derive(Clone, Copy, Debug)]
pub struct TorsionNormEstimate {
    pub matsumoto: f64,
    pub cartan: f64,
}

pub fn torsion_norm_estimate<R: Rng>(
    m: &Metric,
    x: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<TorsionNormEstimate> {
    assert!(n_samples >= 1);
    let n = m.dim();
    let mut best_m = 0.0f64;
    let mut best_c = 0.0f64;
    for _ in 0..n_samples {
        let y = metrics::random_unit(rng, n);
        let ctx = TensorContext::new_y_only(m, x, &y, ORDER_CONNECTION)?;
        let f = ctx.f();
        let g = ctx.g()?.clone();
        let ginv = ctx.g_inv()?.clone();
        let mt = matsumoto_torsion_ctx(&ctx)?;
        let ct = cartan_torsion_ctx(&ctx)?;
        let u0 = metrics::random_unit(rng, n);
        best_m = best_m.max(f * ascend_cubic_ratio(&mt, &g, &ginv, &u0));
        best_c = best_c.max(f * ascend_cubic_ratio(&ct, &g, &ginv, &u0));
    }
    Ok(TorsionNormEstimate {
        matsumoto: best_m,
        cartan: best_c,
    })
}

/// Lower-bound estimate of the Matsumoto torsion norm at `x`.
pub fn matsumoto_norm<R: Rng>(m: &Metric, x: &[f64], n_samples: usize, rng: &mut R) -> Result<f64> {
    Ok(torsion_norm_estimate(m, x, n_samples, rng)?.matsumoto)
}

/// Power-iteration-style ascent of `|T(u,u,u)| / g(u,u)^{3/2}` over rank-one
/// probes: iterate `u <- g^{-1} T(u, u, .)` with a sign flip toward the
/// ascent direction, renormalized in `g`. 20 steps; returns the best ratio
/// seen (monotonicity is not guaranteed for symmetric 3-forms).
fn ascend_cubic_ratio(t: &Tensor3, g: &DMatrix<f64>, ginv: &DMatrix<f64>, u0: &[f64]) -> f64 {
    let n = t.n;
    let g_norm = |u: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g[(i, j)] * u[i] * u[j];
            }
        }
        acc.sqrt()
    };
    let mut u: Vec<f64> = u0.to_vec();
    let nu = g_norm(&u);
    for c in u.iter_mut() {
        *c /= nu;
    }
    let mut best = t.cubic(&u).abs();
    for _ in 0..20 {
        // v_i = g^{il} T_ljk u^j u^k
        let mut v = vec![0.0; n];
        for i in 0..n {
            for l in 0..n {
                let mut tl = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        tl += t.get(l, j, k) * u[j] * u[k];
                    }
                }
                v[i] += ginv[(i, l)] * tl;
            }
        }
        if t.cubic(&u) < 0.0 {
            for c in v.iter_mut() {
                *c = -*c;
            }
        }
        let nv = g_norm(&v);
        if nv < 1e-14 {
            break;
        }
        for c in v.iter_mut() {
            *c /= nv;
        }
        u = v;
        best = best.max(t.cubic(&u).abs());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Metric, MetricSpec};
    use crate::poly::{Polynomial, Term};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * 1.0f64.max(a.abs().max(b.abs()))
    }

    fn sample_xy(m: &Metric, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let n = m.dim();
        let r = m.sample_radius();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-r / 1.8..r / 1.8)).collect();
        let y = crate::metrics::random_unit(rng, n);
        (x, y)
    }

    #[test]
    fn euclidean_g_is_identity() {
        let m = Metric::build(&MetricSpec::euclidean(3)).unwrap();
        let g = fundamental_form(&m, &[0.4, -0.7, 0.2], &[0.3, 0.5, -0.9]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(close(g.m[(i, j)], want, 1e-12));
            }
        }
    }

    #[test]
    fn klein_g_identity_at_origin() {
        let m = Metric::build(&MetricSpec::klein(3)).unwrap();
        let g = fundamental_form(&m, &[0.0; 3], &[0.2, -0.4, 1.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(close(g.m[(i, j)], want, 1e-11), "g[{i}{j}] = {}", g.m[(i, j)]);
            }
        }
    }

    #[test]
    fn inverse_metric_identity_residual() {
        let m = Metric::build(&MetricSpec::funk_ball(3)).unwrap();
        let g = fundamental_form(&m, &[0.2, 0.1, -0.3], &[0.5, 0.5, 0.2]).unwrap();
        let ginv = inverse_metric(&g).unwrap();
        let id = &g.m * &ginv.m;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn riemannian_cartan_vanishes() {
        for spec in [MetricSpec::klein(3), MetricSpec::euclidean(3)] {
            let m = Metric::build(&spec).unwrap();
            let c = cartan_torsion(&m, &[0.3, 0.0, -0.2], &[0.4, 0.8, -0.1]).unwrap();
            assert!(c.max_abs() < 1e-12, "{:?}: |C| = {}", m.family(), c.max_abs());
        }
    }

    #[test]
    fn cartan_contraction_with_y_vanishes() {
        let specs = vec![
            MetricSpec::funk_ball(3),
            MetricSpec::funk_convex_quartic(3),
            MetricSpec::minkowski_quartic(3, 0.1),
            MetricSpec::randers(MetricSpec::klein(3), None, vec![0.1, 0.0, 0.0]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in specs {
            let m = Metric::build(&spec).unwrap();
            for _ in 0..10 {
                let (x, y) = sample_xy(&m, &mut rng);
                let c = cartan_torsion(&m, &x, &y).unwrap();
                let contracted = c.contract3(&y);
                let dev = contracted.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                assert!(dev <= 1e-11 * (1.0 + c.max_abs()), "{:?}: {dev}", m.family());
            }
        }
    }

    #[test]
    fn minkowski_cartan_is_nonzero() {
        let m = Metric::build(&MetricSpec::minkowski_quartic(3, 0.1)).unwrap();
        let c = cartan_torsion(&m, &[0.0; 3], &[1.0, 1.0, 1.0]).unwrap();
        assert!(c.max_abs() > 1e-3, "|C| = {}", c.max_abs());
    }

    #[test]
    fn angular_metric_euclidean_projector() {
        let m = Metric::build(&MetricSpec::euclidean(3)).unwrap();
        let h = angular_metric(&m, &[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        let want = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(h.m[(i, j)], want[i][j], 1e-12));
            }
        }
    }

    #[test]
    fn angular_trace_is_n_minus_one() {
        let specs = vec![
            MetricSpec::euclidean(3),
            MetricSpec::klein(3),
            MetricSpec::funk_ball(3),
            MetricSpec::hilbert_ball(3),
            MetricSpec::funk_convex_quartic(3),
            MetricSpec::minkowski_quartic(3, 0.1),
            MetricSpec::randers(MetricSpec::klein(3), None, vec![0.1, 0.0, 0.0]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in specs {
            let m = Metric::build(&spec).unwrap();
            let (x, y) = sample_xy(&m, &mut rng);
            let ctx = TensorContext::new_y_only(&m, &x, &y, ORDER_VALUES).unwrap();
            let h = angular_metric_ctx(&ctx).unwrap();
            let ginv = ctx.g_inv().unwrap();
            let trace: f64 = (0..3)
                .map(|i| {
                    (0..3)
                        .map(|j| ginv[(i, j)] * h.m[(j, i)])
                        .sum::<f64>()
                })
                .sum();
            assert!(close(trace, 2.0, 1e-10), "{:?}: trace = {trace}", m.family());
        }
    }

    #[test]
    fn matsumoto_vanishes_for_randers_and_riemannian() {
        let specs = vec![
            MetricSpec::randers(MetricSpec::klein(3), None, vec![0.1, 0.0, 0.0]),
            MetricSpec::klein(3),
            MetricSpec::funk_ball(3), // unit ball is an ellipsoid: Randers
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for spec in specs {
            let m = Metric::build(&spec).unwrap();
            for _ in 0..10 {
                let (x, y) = sample_xy(&m, &mut rng);
                let mt = matsumoto_torsion(&m, &x, &y).unwrap();
                let c = cartan_torsion(&m, &x, &y).unwrap();
                assert!(
                    mt.max_abs() <= 1e-8 * (1.0 + c.max_abs()),
                    "{:?}: |M| = {:.3e}",
                    m.family(),
                    mt.max_abs()
                );
            }
        }
    }

    #[test]
    fn matsumoto_nonzero_for_quartic_witnesses() {
        let m = Metric::build(&MetricSpec::minkowski_quartic(3, 0.1)).unwrap();
        let mt = matsumoto_torsion(&m, &[0.0; 3], &[1.0, 1.0, 1.0]).unwrap();
        assert!(mt.max_abs() > 1e-4, "|M| = {}", mt.max_abs());
    }

    #[test]
    fn matsumoto_y_contraction_vanishes() {
        let m = Metric::build(&MetricSpec::funk_convex_quartic(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let (x, y) = sample_xy(&m, &mut rng);
            let mt = matsumoto_torsion(&m, &x, &y).unwrap();
            let contracted = mt.contract3(&y);
            let dev = contracted.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            assert!(dev <= 1e-10 * (1.0 + mt.max_abs()));
        }
    }

    #[test]
    fn spray_vanishes_without_x_dependence() {
        for spec in [
            MetricSpec::euclidean(3),
            MetricSpec::minkowski_quartic(3, 0.1),
        ] {
            let m = Metric::build(&spec).unwrap();
            let g = spray(&m, &[0.3, -0.1, 0.6], &[0.7, 0.2, -0.4]).unwrap();
            for v in &g.c {
                assert!(v.abs() < 1e-13, "{:?}: G = {:?}", m.family(), g.c);
            }
        }
    }

    #[test]
    fn klein_spray_is_projectively_flat() {
        // straight-chord geodesics force G^i proportional to y^i
        let m = Metric::build(&MetricSpec::klein(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let (x, y) = sample_xy(&m, &mut rng);
            let g = spray(&m, &x, &y).unwrap();
            let mut dev = 0.0f64;
            let mut scale = 1.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    dev = dev.max((g.c[i] * y[j] - g.c[j] * y[i]).abs());
                    scale = scale.max(g.c[i].abs());
                }
            }
            assert!(dev <= 1e-10 * scale, "antisymmetry dev {dev}");
        }
    }

    #[test]
    fn spray_two_homogeneity() {
        let specs = vec![
            MetricSpec::klein(3),
            MetricSpec::funk_ball(3),
            MetricSpec::funk_convex_quartic(3),
            MetricSpec::randers(MetricSpec::klein(3), None, vec![0.1, 0.0, 0.0]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for spec in specs {
            let m = Metric::build(&spec).unwrap();
            let (x, y) = sample_xy(&m, &mut rng);
            let g1 = spray(&m, &x, &y).unwrap();
            let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
            let g2 = spray(&m, &x, &y2).unwrap();
            for i in 0..3 {
                assert!(
                    close(g2.c[i], 4.0 * g1.c[i], 1e-11),
                    "{:?}: {} vs {}",
                    m.family(),
                    g2.c[i],
                    4.0 * g1.c[i]
                );
            }
        }
    }

    #[test]
    fn connection_euler_check_is_enforced() {
        let m = Metric::build(&MetricSpec::funk_ball(3)).unwrap();
        assert!(nonlinear_connection(&m, &[0.2, 0.0, 0.1], &[1.0, -0.2, 0.4]).is_ok());
    }

    #[test]
    fn mean_berwald_vanishes_for_riemannian_and_minkowski() {
        for spec in [
            MetricSpec::klein(3),
            MetricSpec::minkowski_quartic(3, 0.1),
        ] {
            let m = Metric::build(&spec).unwrap();
            let e = mean_berwald(&m, &[0.2, -0.1, 0.0], &[0.6, 0.3, -0.5]).unwrap();
            let dev = e.m.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            assert!(dev < 1e-10, "{:?}: |E| = {dev}", m.family());
        }
    }

    #[test]
    fn mean_berwald_funk_witness() {
        let m = Metric::build(&MetricSpec::funk_ball(3)).unwrap();
        let e = mean_berwald(&m, &[0.2, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        let dev = e.m.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        assert!(dev > 1e-3, "|E| = {dev}");
    }

    #[test]
    fn mean_berwald_y_contraction() {
        let m = Metric::build(&MetricSpec::funk_convex_quartic(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let (x, y) = sample_xy(&m, &mut rng);
            let e = mean_berwald(&m, &x, &y).unwrap();
            let scale = e.m.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            for i in 0..3 {
                let dot: f64 = (0..3).map(|j| e.m[(i, j)] * y[j]).sum();
                assert!(dot.abs() <= 1e-10 * (1.0 + scale));
            }
        }
    }

    #[test]
    fn torsion_norms_riemannian_zero_quartic_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let klein = Metric::build(&MetricSpec::klein(3)).unwrap();
        let est = torsion_norm_estimate(&klein, &[0.2, 0.1, 0.0], 20, &mut rng).unwrap();
        assert!(est.matsumoto < 1e-12);
        assert!(est.cartan < 1e-12);

        let quartic = Metric::build(&MetricSpec::minkowski_quartic(3, 0.1)).unwrap();
        let est = torsion_norm_estimate(&quartic, &[0.0; 3], 50, &mut rng).unwrap();
        assert!(est.matsumoto > 1e-3, "matsumoto {}", est.matsumoto);
        assert!(est.cartan > est.matsumoto);
    }

    #[test]
    fn euler_identities_across_catalog() {
        let specs = vec![
            MetricSpec::euclidean(3),
            MetricSpec::klein(3),
            MetricSpec::funk_ball(3),
            MetricSpec::hilbert_ball(3),
            MetricSpec::funk_convex_quartic(3),
            MetricSpec::minkowski_quartic(3, 0.1),
            MetricSpec::randers(MetricSpec::klein(3), None, vec![0.1, 0.0, 0.0]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for spec in specs {
            let m = Metric::build(&spec).unwrap();
            for _ in 0..10 {
                let (x, y) = sample_xy(&m, &mut rng);
                let ctx = TensorContext::new_y_only(&m, &x, &y, ORDER_CONNECTION).unwrap();
                let f = ctx.f();
                // y^i g_ij = F F_{y^j}
                let yl = ctx.y_lower().unwrap();
                for j in 0..3 {
                    let mut e = [0u8; 3];
                    e[j] = 1;
                    let ffy = f * ctx.f_jet().partial(&e).unwrap();
                    assert!(close(yl[j], ffy, 1e-10));
                }
                // y^i I_i = 0
                let im = mean_cartan_ctx(&ctx).unwrap();
                let iy: f64 = im.c.iter().zip(&y).map(|(a, b)| a * b).sum();
                assert!(iy.abs() <= 1e-10 * (1.0 + im.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
                // h_ij y^j = 0
                let h = angular_metric_ctx(&ctx).unwrap();
                for i in 0..3 {
                    let hy: f64 = (0..3).map(|j| h.m[(i, j)] * y[j]).sum();
                    assert!(hy.abs() <= 1e-10 * (1.0 + f * f));
                }
            }
        }
    }

    #[test]
    fn g_and_cartan_homogeneity() {
        let specs = vec![
            MetricSpec::funk_ball(3),
            MetricSpec::funk_convex_quartic(3),
            MetricSpec::minkowski_quartic(3, 0.1),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for spec in specs {
            let m = Metric::build(&spec).unwrap();
            let (x, y) = sample_xy(&m, &mut rng);
            for lambda in [0.5, 3.0] {
                let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
                let g1 = fundamental_form(&m, &x, &y).unwrap();
                let g2 = fundamental_form(&m, &x, &ys).unwrap();
                let c1 = cartan_torsion(&m, &x, &y).unwrap();
                let c2 = cartan_torsion(&m, &x, &ys).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        assert!(close(g1.m[(i, j)], g2.m[(i, j)], 1e-11));
                        for k in 0..3 {
                            assert!(close(c2.get(i, j, k), c1.get(i, j, k) / lambda, 1e-11));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mean_cartan_assembly_order_independent() {
        // recompute I_i from raw jet coefficients with a fresh inverse
        let m = Metric::build(&MetricSpec::funk_convex_quartic(3)).unwrap();
        let x = [0.1, -0.2, 0.15];
        let y = [0.8, 0.1, -0.5];
        let ctx = TensorContext::new_y_only(&m, &x, &y, ORDER_CONNECTION).unwrap();
        let i_fast = mean_cartan_ctx(&ctx).unwrap();

        let g = fundamental_form(&m, &x, &y).unwrap();
        let ginv = inverse_metric(&g).unwrap();
        for i in 0..3 {
            let mut acc = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    let mut e = [0u8; 3];
                    e[i] += 1;
                    e[j] += 1;
                    e[k] += 1;
                    acc += ginv.m[(j, k)] * 0.25 * ctx.f2_jet().partial(&e).unwrap();
                }
            }
            assert!(close(acc, i_fast.c[i], 1e-11));
        }
    }

    #[test]
    fn riemannian_polynomial_metric_g_matches_coefficients() {
        // a = diag(1, 1 + x1^2, 1): g must equal a at every (x, y)
        let one = Polynomial::constant(3, 1.0);
        let zero = Polynomial::zero(3);
        let a22 = Polynomial::new(
            3,
            vec![
                Term {
                    coef: 1.0,
                    exps: vec![0, 0, 0],
                },
                Term {
                    coef: 1.0,
                    exps: vec![2, 0, 0],
                },
            ],
        );
        let a = vec![
            vec![one.clone(), zero.clone(), zero.clone()],
            vec![zero.clone(), a22, zero.clone()],
            vec![zero.clone(), zero.clone(), one],
        ];
        let m = Metric::build(&MetricSpec::riemannian(3, a)).unwrap();
        let x = [0.4, 0.2, -0.3];
        let g = fundamental_form(&m, &x, &[0.3, -0.8, 0.2]).unwrap();
        assert!(close(g.m[(0, 0)], 1.0, 1e-12));
        assert!(close(g.m[(1, 1)], 1.0 + 0.16, 1e-12));
        assert!(close(g.m[(2, 2)], 1.0, 1e-12));
        assert!(g.m[(0, 1)].abs() < 1e-12);
    }
}
