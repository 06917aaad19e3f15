//! Riemann and flag curvature, the scalar-curvature characterization and its
//! derivative identities, and the Matsumoto-torsion profile along geodesics.
//!
//! The Riemann curvature comes from the standard spray formula
//!
//! ```text
//! K^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
//!         - dG^i/dy^j dG^j/dy^k
//! ```
//!
//! with every derivative read off jets. Horizontal derivatives along the
//! geodesic flow (the `|m y^m` pieces of the identity chain) are realized as
//! Richardson-extrapolated time-derivatives with parallel frames; vertical
//! derivatives (`.l` pieces) are jet partials of the curvature expression.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::geodesics::{self, flow_frame};
use crate::jets::{self, JetScalar};
use crate::metrics::Metric;
use crate::tensors::{
    self, BasePoint, TensorContext, ORDER_CONNECTION, ORDER_CURVATURE, ORDER_FULL,
};
use crate::tol;

/// Riemann curvature `K^i_k` at a base point, with its two structural
/// invariants (`K_y(y) = 0`, g-self-adjointness) enforced at construction.
#[derive(Clone, Debug)]
pub struct CurvatureValue {
    pub base: BasePoint,
    pub k_mat: DMatrix<f64>,
}

impl CurvatureValue {
    /// Max-abs norm of the curvature matrix.
    pub fn norm(&self) -> f64 {
        self.k_mat.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

enum Axis {
    X(usize),
    Y(usize),
}

fn jet_partial(ctx: &TensorContext, jet: &JetScalar, axes: &[Axis]) -> Result<f64> {
    let mut e = vec![0u8; jet.n_vars()];
    for a in axes {
        let idx = match a {
            Axis::X(i) => ctx.x_axis(*i),
            Axis::Y(i) => ctx.y_axis(*i),
        };
        e[idx] += 1;
    }
    Ok(jet.partial(&e)?)
}

/// Curvature matrix values from a context of order >= 4.
fn riemann_values(ctx: &TensorContext) -> Result<DMatrix<f64>> {
    assert!(ctx.order() >= ORDER_CURVATURE, "curvature needs an order-4 context");
    let n = ctx.dim();
    let sprays = ctx.spray_jets()?;
    let y = ctx.y().to_vec();
    let g_vals: Vec<f64> = sprays.iter().map(|j| j.value()).collect();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for c in 0..n {
            let mut acc = 2.0 * jet_partial(ctx, &sprays[i], &[Axis::X(c)])?;
            for j in 0..n {
                acc -= y[j] * jet_partial(ctx, &sprays[i], &[Axis::X(j), Axis::Y(c)])?;
                acc += 2.0 * g_vals[j] * jet_partial(ctx, &sprays[i], &[Axis::Y(j), Axis::Y(c)])?;
                acc -= jet_partial(ctx, &sprays[i], &[Axis::Y(j)])?
                    * jet_partial(ctx, &sprays[j], &[Axis::Y(c)])?;
            }
            k[(i, c)] = acc;
        }
    }
    Ok(k)
}

/// Curvature matrix as order-1 jets (for vertical derivatives); needs an
/// order-5 context.
fn riemann_jets(ctx: &TensorContext) -> Result<Vec<Vec<JetScalar>>> {
    assert!(ctx.order() >= ORDER_FULL, "curvature jets need an order-5 context");
    let n = ctx.dim();
    let sprays = ctx.spray_jets()?;
    let a1 = jets::algebra(2 * n, 1)?;
    let y_lift: Vec<JetScalar> = (0..n)
        .map(|j| jets::lift_in(&a1, &[ctx.y()[j]], ctx.y_axis(j)).remove(0))
        .collect();
    let g1: Vec<JetScalar> = sprays.iter().map(|s| s.truncate(1)).collect();
    // first derivatives, truncated to order 1
    let dg_x: Vec<Vec<JetScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| sprays[i].derive(ctx.x_axis(k)).truncate(1))
                .collect()
        })
        .collect();
    let dg_y: Vec<Vec<JetScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| sprays[i].derive(ctx.y_axis(k)).truncate(1))
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<JetScalar>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for c in 0..n {
            let mut acc = dg_x[i][c].scale(2.0);
            for j in 0..n {
                let d2_xy = sprays[i].derive(ctx.x_axis(j)).derive(ctx.y_axis(c)).truncate(1);
                acc = &acc - &(&y_lift[j] * &d2_xy);
                let d2_yy = sprays[i].derive(ctx.y_axis(j)).derive(ctx.y_axis(c)).truncate(1);
                acc = &acc + &(&g1[j] * &d2_yy).scale(2.0);
                acc = &acc - &(&dg_y[i][j] * &dg_y[j][c]);
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(out)
}

fn check_structure(ctx: &TensorContext, k: &DMatrix<f64>) -> Result<()> {
    let n = ctx.dim();
    let y = ctx.y();
    let norm = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let y_inf = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ky = 0.0f64;
    for i in 0..n {
        let v: f64 = (0..n).map(|c| k[(i, c)] * y[c]).sum();
        ky = ky.max(v.abs());
    }
    if ky > tol::STRUCTURAL_CURVATURE_REL * norm * (1.0 + y_inf) {
        return Err(GeomError::Inconsistency {
            what: "K_y(y) = 0".into(),
            deviation: ky,
            tolerance: tol::STRUCTURAL_CURVATURE_REL * norm * (1.0 + y_inf),
        });
    }
    let g = ctx.g()?;
    let b = g * k;
    let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((b[(i, j)] - b[(j, i)]).abs());
        }
    }
    if dev > tol::STRUCTURAL_CURVATURE_REL * b_norm {
        return Err(GeomError::Inconsistency {
            what: "g-self-adjointness of K_y".into(),
            deviation: dev,
            tolerance: tol::STRUCTURAL_CURVATURE_REL * b_norm,
        });
    }
    Ok(())
}

/// Riemann curvature at `(x, y)` by the spray formula.
pub fn riemann_curvature(m: &Metric, x: &[f64], y: &[f64]) -> Result<CurvatureValue> {
    let ctx = TensorContext::new(m, x, y, ORDER_CURVATURE)?;
    riemann_curvature_ctx(&ctx)
}

/// Normalized deviations of the two structural invariants, without failing:
/// `(|K_y(y)| / (|K| (1 + |y|)), asym(g K) / |g K|)`. Both should sit at jet
/// precision for a correct implementation.
pub fn structural_deviations(m: &Metric, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let ctx = TensorContext::new(m, x, y, ORDER_CURVATURE)?;
    let k = riemann_values(&ctx)?;
    let n = ctx.dim();
    let norm = k.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let y_inf = y.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let mut ky = 0.0f64;
    for i in 0..n {
        let v: f64 = (0..n).map(|c| k[(i, c)] * y[c]).sum();
        ky = ky.max(v.abs());
    }
    let ky_rel = ky / (norm * (1.0 + y_inf)).max(1e-300);
    let g = ctx.g()?;
    let b = g * &k;
    let b_norm = b.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((b[(i, j)] - b[(j, i)]).abs());
        }
    }
    let asym_rel = asym / b_norm.max(1e-300);
    Ok((ky_rel, asym_rel))
}

pub fn riemann_curvature_ctx(ctx: &TensorContext) -> Result<CurvatureValue> {
    let k = riemann_values(ctx)?;
    check_structure(ctx, &k)?;
    Ok(CurvatureValue {
        base: ctx.base(),
        k_mat: k,
    })
}

/// Flag curvature `K(P, y)` of the flag spanned by `y` and `u`.
///
/// The flagpole is normalized to `F = 1`, `u` is g-orthonormalized against
/// it, and the value is `g_y(K_y(y^perp), y^perp)`; invariant under
/// `u -> a u + b y` with `a != 0`.
pub fn flag_curvature(m: &Metric, x: &[f64], y: &[f64], u: &[f64]) -> Result<f64> {
    let f = m.eval(x, y)?;
    let y_unit: Vec<f64> = y.iter().map(|v| v / f).collect();
    let ctx = TensorContext::new(m, x, &y_unit, ORDER_CURVATURE)?;
    flag_curvature_ctx(&ctx, u)
}

/// Flag curvature from a context whose base direction already has `F = 1`.
pub fn flag_curvature_ctx(ctx: &TensorContext, u: &[f64]) -> Result<f64> {
    let n = ctx.dim();
    let g = ctx.g()?.clone();
    let y = ctx.y();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g[(i, j)] * a[i] * b[j];
            }
        }
        acc
    };
    // Gram-Schmidt against the unit flagpole: g(y, y) = F^2 = 1.
    let uy = ip(u, y);
    let mut w: Vec<f64> = u.iter().zip(y).map(|(ui, yi)| ui - uy * yi).collect();
    let ww = ip(&w, &w);
    if ww.sqrt() <= 1e-10 {
        return Err(GeomError::DegenerateFlag);
    }
    let inv = 1.0 / ww.sqrt();
    for c in w.iter_mut() {
        *c *= inv;
    }
    let kv = riemann_curvature_ctx(ctx)?;
    let kw: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|c| kv.k_mat[(i, c)] * w[c]).sum())
        .collect();
    Ok(ip(&kw, &w))
}

/// Scalar flag curvature `K := trace(K^m_m) / ((n-1) F^2)` (the value forced
/// by tracing the scalar-curvature characterization, since `h^m_m = n - 1`).
pub fn scalar_flag(m: &Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    let ctx = TensorContext::new(m, x, y, ORDER_CURVATURE)?;
    scalar_flag_ctx(&ctx)
}

pub fn scalar_flag_ctx(ctx: &TensorContext) -> Result<f64> {
    let k = riemann_values(ctx)?;
    let n = ctx.dim();
    let f2 = ctx.f() * ctx.f();
    Ok(k.trace() / ((n - 1) as f64 * f2))
}

/// Residual of `K^i_k = K F^2 h^i_k`; zero iff the metric is of scalar
/// curvature at `(x, y)`.
pub fn scalar_residual(m: &Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    let ctx = TensorContext::new(m, x, y, ORDER_CURVATURE)?;
    scalar_residual_ctx(&ctx)
}

pub fn scalar_residual_ctx(ctx: &TensorContext) -> Result<f64> {
    let k = riemann_values(ctx)?;
    check_structure(ctx, &k)?;
    let n = ctx.dim();
    let f2 = ctx.f() * ctx.f();
    let kappa = k.trace() / ((n - 1) as f64 * f2);
    let yl = ctx.y_lower()?;
    let y = ctx.y();
    let mut dev = 0.0f64;
    for i in 0..n {
        for c in 0..n {
            let h_ud = (if i == c { 1.0 } else { 0.0 }) - y[i] * yl[c] / f2;
            dev = dev.max((k[(i, c)] - kappa * f2 * h_ud).abs());
        }
    }
    Ok(dev)
}

/// Vertical derivative of the curvature, `K^i_{k.l}`, plus the scalar flag
/// curvature's vertical derivative `K_{.l}`.
pub struct VerticalCurvature {
    pub base: BasePoint,
    n: usize,
    kl: Vec<f64>,
    pub flag_derivative: Vec<f64>,
}

impl VerticalCurvature {
    pub fn get(&self, i: usize, k: usize, l: usize) -> f64 {
        self.kl[(i * self.n + k) * self.n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.kl.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub fn vertical_curvature_derivative(m: &Metric, x: &[f64], y: &[f64]) -> Result<VerticalCurvature> {
    let ctx = TensorContext::new(m, x, y, ORDER_FULL)?;
    vertical_curvature_derivative_ctx(&ctx)
}

pub fn vertical_curvature_derivative_ctx(ctx: &TensorContext) -> Result<VerticalCurvature> {
    let n = ctx.dim();
    let kjets = riemann_jets(ctx)?;
    let mut kl = vec![0.0; n * n * n];
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                kl[(i * n + k) * n + l] = jet_partial(ctx, &kjets[i][k], &[Axis::Y(l)])?;
            }
        }
    }
    // K_{.l} from the scalar-flag jet
    let mut trace = JetScalar::constant(kjets[0][0].algebra(), 0.0);
    for (m_idx, row) in kjets.iter().enumerate() {
        trace = &trace + &row[m_idx];
    }
    let f2_1 = ctx.f2_jet().truncate(1);
    let kappa_jet = trace.try_div(&f2_1.scale((n - 1) as f64))?;
    let mut flag_derivative = Vec::with_capacity(n);
    for l in 0..n {
        flag_derivative.push(jet_partial(ctx, &kappa_jet, &[Axis::Y(l)])?);
    }
    Ok(VerticalCurvature {
        base: ctx.base(),
        n,
        kl,
        flag_derivative,
    })
}

/// Residual of the differentiated scalar-curvature identity
/// `K^i_{k.l} = K_{.l} F^2 h^i_k + K { 2 g_{lp} y^p d^i_k - g_{kp} y^p d^i_l - g_{kl} y^i }`.
///
/// Only valid for metrics of scalar curvature; the precondition is checked
/// and its failure reported as [`GeomError::NotScalarCurvature`].
pub fn mkdiff_residual(m: &Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    let ctx = TensorContext::new(m, x, y, ORDER_FULL)?;
    mkdiff_residual_ctx(&ctx)
}

pub fn mkdiff_residual_ctx(ctx: &TensorContext) -> Result<f64> {
    let n = ctx.dim();
    let k = riemann_values(ctx)?;
    let k_norm = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sres = scalar_residual_ctx(ctx)?;
    if sres > tol::SCALAR_PRECONDITION_REL * k_norm {
        return Err(GeomError::NotScalarCurvature {
            residual: sres,
            tolerance: tol::SCALAR_PRECONDITION_REL * k_norm,
        });
    }
    let vert = vertical_curvature_derivative_ctx(ctx)?;
    let f2 = ctx.f() * ctx.f();
    let kappa = k.trace() / ((n - 1) as f64 * f2);
    let g = ctx.g()?;
    let yl = ctx.y_lower()?;
    let y = ctx.y();
    let mut dev = 0.0f64;
    for i in 0..n {
        for c in 0..n {
            let h_ud = (if i == c { 1.0 } else { 0.0 }) - y[i] * yl[c] / f2;
            for l in 0..n {
                let lhs = vert.get(i, c, l);
                let delta_ik = if i == c { 1.0 } else { 0.0 };
                let delta_il = if i == l { 1.0 } else { 0.0 };
                let rhs = vert.flag_derivative[l] * f2 * h_ud
                    + kappa * (2.0 * yl[l] * delta_ik - yl[c] * delta_il - g[(c, l)] * y[i]);
                dev = dev.max((lhs - rhs).abs());
            }
        }
    }
    Ok(dev)
}

/// One identity residual: max componentwise deviation, the scale of the
/// dominant term (floored by the curvature scale `‖K‖ F^2`, so that
/// trivially-vanishing identities on Riemannian metrics normalize against
/// the cancelling contractions rather than their noise), and the
/// finite-difference error estimate of the horizontal derivative.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualEntry {
    pub residual: f64,
    pub scale: f64,
    pub fd_error: f64,
}

impl ResidualEntry {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale.max(1e-300)
    }
}

/// Residual record for the curvature identities along the flow.
///
/// `landsberg_rate` and `mean_rate` (the `L_{ijk|m} y^m` / `J_{k|m} y^m`
/// identities) hold for every Finsler metric; `flag_rate_*` additionally
/// assume scalar curvature and are `None` (skipped) when the precondition
/// fails.
#[derive(Clone, Debug)]
pub struct IdentityResiduals {
    /// `L_{ijk|m} y^m + C_ijm K^m_k` against the vertical-curvature terms.
    pub landsberg_rate: ResidualEntry,
    /// Its `g^{ij}` contraction.
    pub mean_rate: ResidualEntry,
    /// `L_{ijk|m} y^m` against `-F^2/3 { K_{.i} h_jk + ... + 3 K C_ijk }`.
    pub flag_rate_full: Option<ResidualEntry>,
    /// `J_{k|m} y^m` against `-F^2/3 { (n+1) K_{.k} + 3 K I_k }`.
    pub flag_rate_mean: Option<ResidualEntry>,
    pub scalar_residual: f64,
    pub curvature_norm: f64,
}

pub fn identity_residuals(m: &Metric, x: &[f64], y: &[f64]) -> Result<IdentityResiduals> {
    let ctx = TensorContext::new(m, x, y, ORDER_FULL)?;
    let n = ctx.dim();
    let k = riemann_values(&ctx)?;
    let k_norm = k.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let sres = scalar_residual_ctx(&ctx)?;
    let scalar_ok = sres <= tol::SCALAR_PRECONDITION_REL * k_norm;

    // Horizontal derivatives of L and J along the flow with parallel frames.
    let flow = flow_frame(m, x, y, None)?;
    let mut l_vals: [Vec<f64>; 5] = Default::default();
    let mut j_vals: [Vec<f64>; 5] = Default::default();
    for s in 0..5 {
        let sctx = TensorContext::new(m, &flow.x[s], &flow.y[s], ORDER_FULL)?;
        let l = tensors::landsberg_closed_form_ctx(&sctx)?;
        let ginv = sctx.g_inv()?;
        let frame = &flow.frame[s];
        let mut lv = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            for kk in 0..n {
                                acc += l.get(i, j, kk) * frame[a][i] * frame[b][j] * frame[d][kk];
                            }
                        }
                    }
                    lv.push(acc);
                }
            }
        }
        // J_i = g^{jk} L_ijk contracted with the frame
        let mut jv = Vec::with_capacity(n);
        for a in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                let mut ji = 0.0;
                for j in 0..n {
                    for kk in 0..n {
                        ji += ginv[(j, kk)] * l.get(i, j, kk);
                    }
                }
                acc += ji * frame[a][i];
            }
            jv.push(acc);
        }
        l_vals[s] = lv;
        j_vals[s] = jv;
    }
    let (l_rate, l_fd) = flow.derivative(&l_vals);
    let (j_rate, j_fd) = flow.derivative(&j_vals);

    // Base-point ingredients.
    let c = tensors::cartan_torsion_ctx(&ctx)?;
    let im = tensors::mean_cartan_ctx(&ctx)?;
    let h = tensors::angular_metric_ctx(&ctx)?;
    let g = ctx.g()?.clone();
    let vert = vertical_curvature_derivative_ctx(&ctx)?;
    let f2 = ctx.f() * ctx.f();
    let kappa = k.trace() / ((n - 1) as f64 * f2);

    // natural magnitude of the curvature contractions in these identities
    let scale_floor = k_norm * f2;

    // L_{ijk|m} y^m + C_ijm K^m_k
    //   = -1/3 (g_im K^m_{k.j} + g_jm K^m_{k.i}) - 1/6 (g_im K^m_{j.k} + g_jm K^m_{i.k})
    let mut dev1 = 0.0f64;
    let mut scale1 = scale_floor;
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let lp = l_rate[(i * n + j) * n + kk];
                let ck: f64 = (0..n).map(|mm| c.get(i, j, mm) * k[(mm, kk)]).sum();
                let gik_kj: f64 = (0..n).map(|mm| g[(i, mm)] * vert.get(mm, kk, j)).sum();
                let gjk_ki: f64 = (0..n).map(|mm| g[(j, mm)] * vert.get(mm, kk, i)).sum();
                let gik_jk: f64 = (0..n).map(|mm| g[(i, mm)] * vert.get(mm, j, kk)).sum();
                let gjk_ik: f64 = (0..n).map(|mm| g[(j, mm)] * vert.get(mm, i, kk)).sum();
                let rhs = -(gik_kj + gjk_ki) / 3.0 - (gik_jk + gjk_ik) / 6.0;
                dev1 = dev1.max((lp + ck - rhs).abs());
                for term in [lp, ck, gik_kj / 3.0, gjk_ki / 3.0, gik_jk / 6.0, gjk_ik / 6.0] {
                    scale1 = scale1.max(term.abs());
                }
            }
        }
    }
    let landsberg_rate = ResidualEntry {
        residual: dev1,
        scale: scale1.max(1.0e-30),
        fd_error: l_fd,
    };

    // J_{k|m} y^m + I_m K^m_k = -1/3 { 2 K^m_{k.m} + K^m_{m.k} }
    let mut dev2 = 0.0f64;
    let mut scale2 = scale_floor;
    for kk in 0..n {
        let jp = j_rate[kk];
        let ik: f64 = (0..n).map(|mm| im.c[mm] * k[(mm, kk)]).sum();
        let t1: f64 = (0..n).map(|mm| vert.get(mm, kk, mm)).sum();
        let t2: f64 = (0..n).map(|mm| vert.get(mm, mm, kk)).sum();
        let rhs = -(2.0 * t1 + t2) / 3.0;
        dev2 = dev2.max((jp + ik - rhs).abs());
        for term in [jp, ik, 2.0 * t1 / 3.0, t2 / 3.0] {
            scale2 = scale2.max(term.abs());
        }
    }
    let mean_rate = ResidualEntry {
        residual: dev2,
        scale: scale2.max(1.0e-30),
        fd_error: j_fd,
    };

    // The flag-rate forms additionally assume scalar curvature.
    let (flag_rate_full, flag_rate_mean) = if scalar_ok {
        let kd = &vert.flag_derivative;
        let mut dev3 = 0.0f64;
        let mut scale3 = scale_floor;
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    let lp = l_rate[(i * n + j) * n + kk];
                    let rhs = -(f2 / 3.0)
                        * (kd[i] * h.m[(j, kk)]
                            + kd[j] * h.m[(i, kk)]
                            + kd[kk] * h.m[(i, j)]
                            + 3.0 * kappa * c.get(i, j, kk));
                    dev3 = dev3.max((lp - rhs).abs());
                    scale3 = scale3.max(lp.abs().max(rhs.abs()));
                }
            }
        }
        let mut dev4 = 0.0f64;
        let mut scale4 = scale_floor;
        for kk in 0..n {
            let jp = j_rate[kk];
            let rhs = -(f2 / 3.0) * ((n as f64 + 1.0) * kd[kk] + 3.0 * kappa * im.c[kk]);
            dev4 = dev4.max((jp - rhs).abs());
            scale4 = scale4.max(jp.abs().max(rhs.abs()));
        }
        (
            Some(ResidualEntry {
                residual: dev3,
                scale: scale3.max(1.0e-30),
                fd_error: l_fd,
            }),
            Some(ResidualEntry {
                residual: dev4,
                scale: scale4.max(1.0e-30),
                fd_error: j_fd,
            }),
        )
    } else {
        (None, None)
    };

    Ok(IdentityResiduals {
        landsberg_rate,
        mean_rate,
        flag_rate_full,
        flag_rate_mean,
        scalar_residual: sres,
        curvature_norm: k_norm,
    })
}

/// Per-profile verdicts.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileVerdicts {
    /// `max |M'' + K F^2 M| <= tol * max |M|` (vacuously true when the
    /// torsion vanishes identically along the geodesic).
    pub ode_pass: bool,
    pub ode_residual_rel: f64,
    pub vacuous_torsion: bool,
    /// Comparison margin verdict; `None` when no bound was supplied, the
    /// observed curvature violates it, or the comparison function vanishes.
    pub mvc_pass: Option<bool>,
    pub mvc_min_margin: Option<f64>,
}

/// Matsumoto-torsion profile along a unit-speed geodesic: samples of
/// `M(t) = M(U(t), U(t), U(t))` with a parallel `U`, the flag curvature
/// `K(t)`, the ODE residual `M'' + K F^2 M`, and (given a curvature bound
/// `K <= -a^2`) the margin against the cosh/sinh comparison function.
#[derive(Clone, Debug)]
pub struct ProfileReport {
    pub t: Vec<f64>,
    pub torsion: Vec<f64>,
    pub curvature: Vec<f64>,
    pub speed: Vec<f64>,
    pub residual: Vec<f64>,
    /// Margin values on the maximal comparison interval (`None` outside it
    /// or when no bound applies).
    pub margin: Vec<Option<f64>>,
    pub margin_interval: Option<(f64, f64)>,
    /// `M'(0)` (5-point stencil).
    pub torsion_rate0: f64,
    pub bound: Option<f64>,
    pub bound_note: Option<String>,
    pub fd_error_estimate: f64,
    pub verdicts: ProfileVerdicts,
}

impl ProfileReport {
    /// CSV export: columns `t, M, K, residual, margin` (margin empty outside
    /// its interval).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,M,K,residual,margin\n");
        for k in 0..self.t.len() {
            let margin = self.margin[k]
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.t[k], self.torsion[k], self.curvature[k], self.residual[k], margin
            ));
        }
        out
    }
}

/// Compute the profile. `y` is rescaled to unit speed; the metric must be of
/// scalar curvature at the start point; `bound` is the `a` of `K <= -a^2`.
pub fn matsumoto_profile(
    m: &Metric,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    t_max: f64,
    steps: usize,
    bound: Option<f64>,
) -> Result<ProfileReport> {
    assert!(t_max > 0.0, "profile span must be positive");
    assert!(steps >= 16, "profile needs at least 16 steps");
    let f0 = m.eval(x, y)?;
    let y_unit: Vec<f64> = y.iter().map(|v| v / f0).collect();

    {
        let ctx = TensorContext::new(m, x, &y_unit, ORDER_CURVATURE)?;
        let k = riemann_values(&ctx)?;
        let k_norm = k.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        let sres = scalar_residual_ctx(&ctx)?;
        if sres > tol::SCALAR_PRECONDITION_REL * k_norm {
            return Err(GeomError::NotScalarCurvature {
                residual: sres,
                tolerance: tol::SCALAR_PRECONDITION_REL * k_norm,
            });
        }
    }

    let h = t_max / steps as f64;
    // Extend two steps on both ends so every reported point has a central
    // 5-point stencil.
    let (bx, by, bu) = geodesics::flow_with_transport(m, x, &y_unit, u, -h, 2)?;
    let (fx, fy, fu) = geodesics::flow_with_transport(m, x, &y_unit, u, h, steps + 2)?;
    let total = steps + 5;
    let mut xs = Vec::with_capacity(total);
    let mut ys = Vec::with_capacity(total);
    let mut us = Vec::with_capacity(total);
    for s in (1..=2).rev() {
        xs.push(bx[s].clone());
        ys.push(by[s].clone());
        us.push(bu[s].clone());
    }
    for s in 0..=steps + 2 {
        xs.push(fx[s].clone());
        ys.push(fy[s].clone());
        us.push(fu[s].clone());
    }

    // Samples along the extended grid.
    let mut m_ext = Vec::with_capacity(total);
    let mut k_ext = Vec::with_capacity(total);
    let mut f_ext = Vec::with_capacity(total);
    for s in 0..total {
        let yctx = TensorContext::new_y_only(m, &xs[s], &ys[s], ORDER_CONNECTION)?;
        let mt = tensors::matsumoto_torsion_ctx(&yctx)?;
        m_ext.push(mt.cubic(&us[s]));
        f_ext.push(yctx.f());
        let kctx = TensorContext::new(m, &xs[s], &ys[s], ORDER_CURVATURE)?;
        k_ext.push(scalar_flag_ctx(&kctx)?);
    }

    // Unit-speed conservation.
    let drift = f_ext
        .iter()
        .map(|f| (f - 1.0).abs())
        .fold(0.0f64, f64::max);
    if drift > geodesics::SPEED_DRIFT_LIMIT {
        return Err(GeomError::Accuracy {
            what: "profile geodesic speed drift".into(),
            estimate: drift,
            limit: geodesics::SPEED_DRIFT_LIMIT,
            hint: format!("increase steps above {steps}"),
        });
    }

    let m_max = m_ext.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let vacuous = m_max < tol::PROFILE_VACUOUS_FLOOR;

    // 5-point second derivative on the reported grid (global offset 2).
    let d2 = |j: usize| -> f64 {
        (-m_ext[j - 2] + 16.0 * m_ext[j - 1] - 30.0 * m_ext[j] + 16.0 * m_ext[j + 1]
            - m_ext[j + 2])
            / (12.0 * h * h)
    };
    let mut t_grid = Vec::with_capacity(steps + 1);
    let mut torsion = Vec::with_capacity(steps + 1);
    let mut curvature = Vec::with_capacity(steps + 1);
    let mut speed = Vec::with_capacity(steps + 1);
    let mut residual = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let j = k + 2;
        t_grid.push(k as f64 * h);
        torsion.push(m_ext[j]);
        curvature.push(k_ext[j]);
        speed.push(f_ext[j]);
        residual.push(d2(j) + k_ext[j] * f_ext[j] * f_ext[j] * m_ext[j]);
    }

    // FD error estimate: compare against the stride-2 stencil where it fits,
    // plus the rounding floor of a second-derivative stencil.
    let mut fd_err = 5.0 * f64::EPSILON * m_max / (h * h);
    for j in 4..=(total - 5) {
        let d2_wide = (-m_ext[j - 4] + 16.0 * m_ext[j - 2] - 30.0 * m_ext[j]
            + 16.0 * m_ext[j + 2]
            - m_ext[j + 4])
            / (48.0 * h * h);
        fd_err = fd_err.max((d2_wide - d2(j)).abs() / 15.0);
    }
    if !vacuous && fd_err > tol::PROFILE_FD_ERROR_FRACTION * m_max {
        return Err(GeomError::Accuracy {
            what: "profile grid too coarse".into(),
            estimate: fd_err,
            limit: tol::PROFILE_FD_ERROR_FRACTION * m_max,
            hint: format!("increase steps above {steps}"),
        });
    }

    // M'(0) by the 5-point first-derivative stencil at global index 2.
    let torsion_rate0 =
        (m_ext[0] - 8.0 * m_ext[1] + 8.0 * m_ext[3] - m_ext[4]) / (12.0 * h);

    let ode_residual_rel = if vacuous {
        0.0
    } else {
        residual.iter().fold(0.0f64, |mx, v| mx.max(v.abs())) / m_max
    };
    let ode_pass = ode_residual_rel <= tol::ODE_RESIDUAL_REL;

    // Comparison margin against |M(0) cosh(a t) + M'(0) sinh(a t) / a| on
    // the maximal interval where the comparison function keeps one sign.
    let mut margin: Vec<Option<f64>> = vec![None; t_grid.len()];
    let mut margin_interval = None;
    let mut bound_note = None;
    let mut mvc_pass = None;
    let mut mvc_min_margin = None;
    if let Some(a) = bound {
        assert!(a > 0.0, "curvature bound must be positive");
        let k_max = curvature.iter().fold(f64::NEG_INFINITY, |mx, v| mx.max(*v));
        if k_max > -a * a + 1e-6 {
            bound_note = Some(format!(
                "observed K(t) reaches {k_max:.6}, violating K <= -{:.6}",
                a * a
            ));
        } else if vacuous {
            bound_note = Some("torsion vanishes along the geodesic; comparison is vacuous".into());
        } else {
            let m0 = torsion[0];
            let c = |t: f64| m0 * (a * t).cosh() + torsion_rate0 * (a * t).sinh() / a;
            let c0 = c(0.0);
            if c0.abs() <= 1e-12 {
                bound_note =
                    Some("comparison function vanishes at t = 0; interval is empty".into());
            } else {
                let sign = c0.signum();
                let mut stop = t_grid.len();
                for (k, &t) in t_grid.iter().enumerate() {
                    let ck = c(t);
                    if ck.abs() <= 1e-12 || ck.signum() != sign {
                        stop = k;
                        break;
                    }
                }
                let mut worst = f64::INFINITY;
                for k in 0..stop {
                    let mk = torsion[k].abs() - c(t_grid[k]).abs();
                    margin[k] = Some(mk);
                    worst = worst.min(mk);
                }
                if stop > 0 {
                    margin_interval = Some((0.0, t_grid[stop - 1]));
                    mvc_min_margin = Some(worst);
                    mvc_pass = Some(worst >= -tol::MVC_MARGIN_TOL);
                }
            }
        }
    }

    Ok(ProfileReport {
        t: t_grid,
        torsion,
        curvature,
        speed,
        residual,
        margin,
        margin_interval,
        torsion_rate0,
        bound,
        bound_note,
        fd_error_estimate: fd_err,
        verdicts: ProfileVerdicts {
            ode_pass,
            ode_residual_rel,
            vacuous_torsion: vacuous,
            mvc_pass,
            mvc_min_margin,
        },
    })
}
