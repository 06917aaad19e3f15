//! Geodesic flow, linear parallel transport, and the transport-based
//! Landsberg quantities.
//!
//! Geodesics integrate `x' = y`, `y' = -2 G(x, y)` with classic fixed-step
//! RK4; paths are short (|t| <= 5) and the test tolerances are set against
//! known step-halving behavior, so adaptivity would only hurt
//! reproducibility. Parallel transport solves the linear ODE
//! `dU^i/dt = -N^i_j(x(t), y(t)) U^j` jointly with the geodesic, so the
//! connection at RK substages comes from re-evaluation, not interpolation.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::metrics::{Metric, MetricError};
use crate::tensors::{
    self, landsberg_closed_form_ctx, BasePoint, Tensor1, Tensor3, TensorContext, ORDER_CONNECTION,
    ORDER_FULL, ORDER_VALUES,
};

/// Speed drift (relative) beyond which a path is rejected as under-resolved.
pub const SPEED_DRIFT_LIMIT: f64 = 1e-5;
/// Maximum disagreement tolerated between the transport-based and
/// closed-form Landsberg paths before an inconsistency error is raised.
pub const LANDSBERG_PATH_TOL: f64 = 1e-5;

/// Discretized geodesic with tangent samples at uniform parameter steps.
///
/// `t[0] = 0` always; samples run in flow order (`t` increases for forward
/// flow, decreases for backward flow).
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// Signed integration step.
    pub step: f64,
    /// Exit time if the path left the admissible region early.
    pub exited_at: Option<f64>,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV export: columns `t, x^1..x^n, y^1..y^n`.
    pub fn to_csv(&self) -> String {
        let n = self.x[0].len();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x^{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",y^{i}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!("{}", self.t[k]));
            for v in &self.x[k] {
                out.push_str(&format!(",{v}"));
            }
            for v in &self.y[k] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Vector fields transported along a geodesic.
#[derive(Clone, Debug)]
pub struct ParallelFrame {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `u[k][a]` is the a-th transported vector at sample `k`.
    pub u: Vec<Vec<Vec<f64>>>,
}

fn spray_at(m: &Metric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let ctx = TensorContext::new(m, x, y, ORDER_VALUES)?;
    ctx.spray_values()
}

fn connection_at(m: &Metric, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let ctx = TensorContext::new(m, x, y, ORDER_CONNECTION)?;
    Ok((ctx.spray_values()?, ctx.connection_values()?))
}

/// One classic RK4 step of `state' = f(state)`.
fn rk4_step<F>(f: &F, state: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let add = |s: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        s.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    let k1 = f(state)?;
    let k2 = f(&add(state, &k1, 0.5 * h))?;
    let k3 = f(&add(state, &k2, 0.5 * h))?;
    let k4 = f(&add(state, &k3, h))?;
    Ok(state
        .iter()
        .enumerate()
        .map(|(i, s)| s + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrate the geodesic from `(x0, y0)` to parameter `T` in `steps`
/// uniform RK4 steps. `T` may be negative (backward flow). Leaving the
/// admissible region truncates the path (recording the exit time); a speed
/// drift beyond [`SPEED_DRIFT_LIMIT`] is an accuracy error.
pub fn integrate_geodesic(
    m: &Metric,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<GeodesicPath> {
    assert!(steps >= 16, "integrate_geodesic requires steps >= 16");
    assert!(t_end != 0.0, "integration span must be nonzero");
    let n = m.dim();
    let f0 = m.eval(x0, y0)?;
    if !(f0 > 0.0) {
        return Err(GeomError::Metric(MetricError::ApexDirection));
    }
    let h = t_end / steps as f64;

    let deriv = |s: &[f64]| -> Result<Vec<f64>> {
        let (x, y) = s.split_at(n);
        let g = spray_at(m, x, y)?;
        let mut out = Vec::with_capacity(2 * n);
        out.extend_from_slice(y);
        out.extend(g.iter().map(|v| -2.0 * v));
        Ok(out)
    };

    let mut t = vec![0.0];
    let mut xs = vec![x0.to_vec()];
    let mut ys = vec![y0.to_vec()];
    let mut state: Vec<f64> = x0.iter().chain(y0).cloned().collect();
    let mut exited_at = None;
    for k in 0..steps {
        match rk4_step(&deriv, &state, h) {
            Ok(next) => {
                if m.check_domain(&next[..n]).is_err() {
                    exited_at = Some(k as f64 * h);
                    break;
                }
                state = next;
                t.push((k + 1) as f64 * h);
                xs.push(state[..n].to_vec());
                ys.push(state[n..].to_vec());
            }
            Err(GeomError::Metric(MetricError::OutOfDomain { .. })) => {
                exited_at = Some(k as f64 * h);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    // speed conservation check on the integrated portion
    let mut drift = 0.0f64;
    for (xk, yk) in xs.iter().zip(&ys) {
        let fk = m.eval(xk, yk)?;
        drift = drift.max((fk - f0).abs() / f0);
    }
    if drift > SPEED_DRIFT_LIMIT {
        return Err(GeomError::Accuracy {
            what: "geodesic speed drift".into(),
            estimate: drift,
            limit: SPEED_DRIFT_LIMIT,
            hint: format!("increase steps above {steps}"),
        });
    }

    Ok(GeodesicPath {
        t,
        x: xs,
        y: ys,
        step: h,
        exited_at,
    })
}

/// Transport one or more vectors along a path by re-integrating the joint
/// system (geodesic + linear transport ODE) with the path's own step, so the
/// connection at RK substages is re-evaluated rather than interpolated.
pub fn parallel_transport(m: &Metric, path: &GeodesicPath, u0: &[Vec<f64>]) -> Result<ParallelFrame> {
    let n = m.dim();
    assert!(u0.iter().all(|u| u.len() == n));
    let n_vec = u0.len();

    let deriv = |s: &[f64]| -> Result<Vec<f64>> {
        let (x, rest) = s.split_at(n);
        let (y, us) = rest.split_at(n);
        let (g, nmat) = connection_at(m, x, y)?;
        let mut out = Vec::with_capacity(s.len());
        out.extend_from_slice(y);
        out.extend(g.iter().map(|v| -2.0 * v));
        for a in 0..n_vec {
            let u = &us[a * n..(a + 1) * n];
            for i in 0..n {
                let mut du = 0.0;
                for j in 0..n {
                    du -= nmat[(i, j)] * u[j];
                }
                out.push(du);
            }
        }
        Ok(out)
    };

    let mut state: Vec<f64> = path.x[0]
        .iter()
        .chain(&path.y[0])
        .cloned()
        .collect();
    for u in u0 {
        state.extend_from_slice(u);
    }

    let mut frame = ParallelFrame {
        t: vec![path.t[0]],
        x: vec![path.x[0].clone()],
        y: vec![path.y[0].clone()],
        u: vec![u0.to_vec()],
    };
    for k in 1..path.len() {
        state = rk4_step(&deriv, &state, path.step)?;
        frame.t.push(path.t[k]);
        frame.x.push(state[..n].to_vec());
        frame.y.push(state[n..2 * n].to_vec());
        frame.u.push(
            (0..n_vec)
                .map(|a| state[2 * n + a * n..2 * n + (a + 1) * n].to_vec())
                .collect(),
        );
    }
    Ok(frame)
}

/// Joint geodesic + transport integration at a raw step count (no minimum),
/// for callers that manage their own grids. Returns per-sample `(x, y, u)`
/// including the initial state; a domain exit is an error carrying the exit
/// time.
pub(crate) fn flow_with_transport(
    m: &Metric,
    x0: &[f64],
    y0: &[f64],
    u0: &[f64],
    h: f64,
    count: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = m.dim();
    let deriv = |s: &[f64]| -> Result<Vec<f64>> {
        let (x, rest) = s.split_at(n);
        let (y, u) = rest.split_at(n);
        let (g, nmat) = connection_at(m, x, y)?;
        let mut out = Vec::with_capacity(3 * n);
        out.extend_from_slice(y);
        out.extend(g.iter().map(|v| -2.0 * v));
        for i in 0..n {
            let mut du = 0.0;
            for j in 0..n {
                du -= nmat[(i, j)] * u[j];
            }
            out.push(du);
        }
        Ok(out)
    };
    let mut state: Vec<f64> = x0.iter().chain(y0).chain(u0).cloned().collect();
    let mut xs = vec![x0.to_vec()];
    let mut ys = vec![y0.to_vec()];
    let mut us = vec![u0.to_vec()];
    for k in 0..count {
        let exit = GeomError::DomainExit {
            exit_time: k as f64 * h,
        };
        match rk4_step(&deriv, &state, h) {
            Ok(next) => {
                if m.check_domain(&next[..n]).is_err() {
                    return Err(exit);
                }
                state = next;
                xs.push(state[..n].to_vec());
                ys.push(state[n..2 * n].to_vec());
                us.push(state[2 * n..].to_vec());
            }
            Err(GeomError::Metric(MetricError::OutOfDomain { .. })) => return Err(exit),
            Err(e) => return Err(e),
        }
    }
    Ok((xs, ys, us))
}

/// A two-sided micro-flow around `(x, y)`: states at `t = -h, -h/2, 0, h/2, h`
/// with the coordinate frame transported from `t = 0`, for Richardson
/// time-derivatives of tensors along the flow.
pub struct FlowFrame {
    pub h: f64,
    /// states ordered `[-h, -h/2, 0, h/2, h]`
    pub x: [Vec<f64>; 5],
    pub y: [Vec<f64>; 5],
    /// `frame[s][a]` = transported basis vector `e_a` at state `s`.
    pub frame: [Vec<Vec<f64>>; 5],
}

impl FlowFrame {
    /// Richardson-extrapolated `d/dt` at `t = 0` of per-state values, with an
    /// error estimate (the magnitude of the Richardson correction).
    pub fn derivative(&self, values: &[Vec<f64>; 5]) -> (Vec<f64>, f64) {
        let h = self.h;
        let len = values[2].len();
        let mut out = Vec::with_capacity(len);
        let mut err = 0.0f64;
        for i in 0..len {
            let d_h = (values[4][i] - values[0][i]) / (2.0 * h);
            let d_h2 = (values[3][i] - values[1][i]) / h;
            out.push((4.0 * d_h2 - d_h) / 3.0);
            err = err.max((d_h2 - d_h).abs() / 3.0);
        }
        (out, err)
    }
}

/// Build the micro-flow with transported coordinate frame. `h` defaults to
/// `1e-3 / F(x, y)` so the arc-length step is metric-independent.
pub fn flow_frame(m: &Metric, x: &[f64], y: &[f64], h: Option<f64>) -> Result<FlowFrame> {
    let n = m.dim();
    let f = m.eval(x, y)?;
    let h = h.unwrap_or(1e-3 / f.max(1e-6));
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect())
        .collect();

    let n_vec = basis.len();
    let deriv = |s: &[f64]| -> Result<Vec<f64>> {
        let (xs, rest) = s.split_at(n);
        let (ys, us) = rest.split_at(n);
        let (g, nmat) = connection_at(m, xs, ys)?;
        let mut out = Vec::with_capacity(s.len());
        out.extend_from_slice(ys);
        out.extend(g.iter().map(|v| -2.0 * v));
        for a in 0..n_vec {
            let u = &us[a * n..(a + 1) * n];
            for i in 0..n {
                let mut du = 0.0;
                for j in 0..n {
                    du -= nmat[(i, j)] * u[j];
                }
                out.push(du);
            }
        }
        Ok(out)
    };

    let state0: Vec<f64> = x
        .iter()
        .chain(y)
        .cloned()
        .chain(basis.iter().flatten().cloned())
        .collect();

    let unpack = |s: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        (
            s[..n].to_vec(),
            s[n..2 * n].to_vec(),
            (0..n_vec)
                .map(|a| s[2 * n + a * n..2 * n + (a + 1) * n].to_vec())
                .collect(),
        )
    };

    // two RK4 substeps of h/2 per side reach +-h through +-h/2
    let fwd_half = rk4_step(&deriv, &state0, 0.5 * h)?;
    let fwd_full = rk4_step(&deriv, &fwd_half, 0.5 * h)?;
    let bwd_half = rk4_step(&deriv, &state0, -0.5 * h)?;
    let bwd_full = rk4_step(&deriv, &bwd_half, -0.5 * h)?;

    let states = [bwd_full, bwd_half, state0, fwd_half, fwd_full];
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(5);
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(5);
    let mut frames: Vec<Vec<Vec<f64>>> = Vec::with_capacity(5);
    for s in &states {
        let (xv, yv, fv) = unpack(s);
        xs.push(xv);
        ys.push(yv);
        frames.push(fv);
    }
    Ok(FlowFrame {
        h,
        x: xs.try_into().expect("five states"),
        y: ys.try_into().expect("five states"),
        frame: frames.try_into().expect("five states"),
    })
}

/// Landsberg curvature `L_ijk`, computed along two independent routes:
///
/// (a) transport route — central differences in `t` of the Cartan torsion
///     contracted with a parallel frame along the geodesic, Richardson
///     extrapolated;
/// (b) closed form — `L_ijk = -1/2 y_l [G^l]_{y^i y^j y^k}`.
///
/// The two must agree to [`LANDSBERG_PATH_TOL`]; the returned tensor is the
/// closed form. A disagreement signals an integration or jet bug.
pub fn landsberg(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let ctx = TensorContext::new(m, x, y, ORDER_FULL)?;
    let closed = landsberg_closed_form_ctx(&ctx)?;
    let transported = landsberg_transport(m, x, y)?;
    let n = m.dim();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                dev = dev.max((closed.get(i, j, k) - transported.get(i, j, k)).abs());
            }
        }
    }
    if dev > LANDSBERG_PATH_TOL {
        return Err(GeomError::Inconsistency {
            what: "Landsberg transport vs closed form".into(),
            deviation: dev,
            tolerance: LANDSBERG_PATH_TOL,
        });
    }
    Ok(closed)
}

/// Transport-route Landsberg curvature alone (exposed for the dual-oracle
/// checks).
pub fn landsberg_transport(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor3> {
    let n = m.dim();
    let flow = flow_frame(m, x, y, None)?;
    let mut values: [Vec<f64>; 5] = Default::default();
    for s in 0..5 {
        let ctx = TensorContext::new_y_only(m, &flow.x[s], &flow.y[s], ORDER_CONNECTION)?;
        let c = tensors::cartan_torsion_ctx(&ctx)?;
        let frame = &flow.frame[s];
        let mut v = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                acc += c.get(i, j, k) * frame[a][i] * frame[b][j] * frame[d][k];
                            }
                        }
                    }
                    v.push(acc);
                }
            }
        }
        values[s] = v;
    }
    let (deriv, _err) = flow.derivative(&values);
    let base = BasePoint {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    Ok(Tensor3::symmetric(base, n, |i, j, k| {
        deriv[(i * n + j) * n + k]
    }))
}

/// Mean Landsberg curvature `J_i = g^{jk} L_ijk` (closed-form route with the
/// dual-path check of [`landsberg`]).
pub fn mean_landsberg(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor1> {
    let l = landsberg(m, x, y)?;
    let ctx = TensorContext::new_y_only(m, x, y, ORDER_VALUES)?;
    let ginv = ctx.g_inv()?;
    let n = m.dim();
    let c = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += ginv[(j, k)] * l.get(i, j, k);
                }
            }
            acc
        })
        .collect();
    Ok(Tensor1 { base: l.base, c })
}

/// Third route to `J`: difference the mean Cartan torsion along the flow,
/// per the trace relation `J_i = I_{i|m} y^m`.
pub fn mean_landsberg_flow(m: &Metric, x: &[f64], y: &[f64]) -> Result<Tensor1> {
    let n = m.dim();
    let flow = flow_frame(m, x, y, None)?;
    let mut values: [Vec<f64>; 5] = Default::default();
    for s in 0..5 {
        let ctx = TensorContext::new_y_only(m, &flow.x[s], &flow.y[s], ORDER_CONNECTION)?;
        let im = tensors::mean_cartan_ctx(&ctx)?;
        let frame = &flow.frame[s];
        values[s] = (0..n)
            .map(|a| (0..n).map(|i| im.c[i] * frame[a][i]).sum())
            .collect();
    }
    let (deriv, _err) = flow.derivative(&values);
    Ok(Tensor1 {
        base: BasePoint {
            x: x.to_vec(),
            y: y.to_vec(),
        },
        c: deriv,
    })
}
