//! Shared test oracles, independent of the production computation paths
//! they check: finite-difference differentiation with Richardson
//! extrapolation, a classical Levi-Civita curvature implementation, scalar
//! closed-form metric evaluations, a dense grid search for torsion norms,
//! and a forward ODE solver.

#![allow(dead_code)]

use std::sync::Arc;

use finsler::jets::{self, Algebra, JetScalar};
use finsler::metrics::MetricSpec;
use finsler::poly::{Polynomial, Term};
use nalgebra::DMatrix;
use rand::Rng;

// ---------------------------------------------------------------------------
// Finite differences (4th order, Richardson extrapolated)
// ---------------------------------------------------------------------------

/// 4th-order central first derivative.
fn fd1<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], i: usize, h: f64) -> f64 {
    let mut probe = |s: f64| {
        let mut p = x.to_vec();
        p[i] += s;
        f(&p)
    };
    (probe(-2.0 * h) - 8.0 * probe(-h) + 8.0 * probe(h) - probe(2.0 * h)) / (12.0 * h)
}

/// Richardson-extrapolated second partial (two 4th-order stencils).
pub fn fd_partial2<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let d = |h: f64| -> f64 {
        if i == j {
            let mut probe = |s: f64| {
                let mut p = x.to_vec();
                p[i] += s;
                f(&p)
            };
            (-probe(-2.0 * h) + 16.0 * probe(-h) - 30.0 * probe(0.0) + 16.0 * probe(h)
                - probe(2.0 * h))
                / (12.0 * h * h)
        } else {
            let g = |p: &[f64]| fd1(f, p, j, h);
            fd1(&g, x, i, h)
        }
    };
    let d_h = d(h);
    let d_h2 = d(0.5 * h);
    (16.0 * d_h2 - d_h) / 15.0
}

/// Third partial by nesting 4th-order first-derivative stencils.
pub fn fd_partial3<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    i: usize,
    j: usize,
    k: usize,
    h: f64,
) -> f64 {
    let g1 = |p: &[f64]| fd1(f, p, k, h);
    let g2 = |p: &[f64]| fd1(&g1, p, j, h);
    fd1(&g2, x, i, h)
}

// ---------------------------------------------------------------------------
// Scalar closed-form metric evaluations (no jets, no production code)
// ---------------------------------------------------------------------------

pub fn scalar_funk_ball(x: &[f64], y: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    let q: f64 = y.iter().map(|v| v * v).sum();
    let p: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let om = 1.0 - s;
    (((om * q + p * p).sqrt()) + p) / om
}

pub fn scalar_klein(x: &[f64], y: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    let q: f64 = y.iter().map(|v| v * v).sum();
    let p: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let om = 1.0 - s;
    ((om * q + p * p).sqrt()) / om
}

pub fn scalar_randers_klein(beta: &[f64], x: &[f64], y: &[f64]) -> f64 {
    scalar_klein(x, y) + beta.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
}

pub fn scalar_minkowski(epsilon: f64, _x: &[f64], y: &[f64]) -> f64 {
    let q: f64 = y.iter().map(|v| v * v).sum();
    let quart: f64 = y.iter().map(|v| v.powi(4)).sum();
    (q + epsilon * quart.sqrt()).sqrt()
}

// ---------------------------------------------------------------------------
// Levi-Civita curvature oracle for Riemannian metrics
// ---------------------------------------------------------------------------

/// Coefficient matrix `a_ij(x)` as jets; the closure receives lifted `x`.
pub type CoefficientJets = dyn Fn(&Arc<Algebra>, &[JetScalar]) -> Vec<Vec<JetScalar>>;

/// Jet-valued matrix inverse by Gauss-Jordan (test-local so the oracle does
/// not share the production inversion path).
fn invert_jet_matrix(a: &[Vec<JetScalar>]) -> Vec<Vec<JetScalar>> {
    let n = a.len();
    let alg = a[0][0].algebra().clone();
    let mut m: Vec<Vec<JetScalar>> = a.to_vec();
    let mut inv: Vec<Vec<JetScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| JetScalar::constant(&alg, if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| {
                m[r][col]
                    .value()
                    .abs()
                    .partial_cmp(&m[s][col].value().abs())
                    .unwrap()
            })
            .unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col].recip().expect("invertible coefficient matrix");
        for j in 0..n {
            m[col][j] = &m[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                m[r][j] = &m[r][j] - &(&f * &m[col][j]);
                inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
            }
        }
    }
    inv
}

/// Classical Riemann curvature of a Riemannian metric `a_ij(x)`:
/// Christoffel symbols, curvature tensor, and `K^i_k = R^i_{jkl} y^j y^l`.
pub fn levi_civita_k_matrix(coeffs: &CoefficientJets, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let alg = jets::algebra(n, 2).expect("order-2 algebra");
    let xj = jets::lift_in(&alg, x, 0);
    let a = coeffs(&alg, &xj);
    let a_inv = invert_jet_matrix(&a);

    // Christoffels as order-1 jets
    let da = |l: usize, k: usize, j: usize| a[l][k].derive(j); // d_j a_lk, order 1
    let mut gamma: Vec<Vec<Vec<JetScalar>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut plane = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                let a1 = jets::algebra(n, 1).expect("order-1 algebra");
                let mut acc = JetScalar::constant(&a1, 0.0);
                for l in 0..n {
                    let term = &(&da(l, k, j) + &da(j, l, k)) - &da(j, k, l);
                    acc = &acc + &(&a_inv[i][l].truncate(1) * &term);
                }
                row.push(acc.scale(0.5));
            }
            plane.push(row);
        }
        gamma.push(plane);
    }

    let gamma_val = |i: usize, j: usize, k: usize| gamma[i][j][k].value();
    let dgamma = |i: usize, j: usize, k: usize, d: usize| {
        let mut e = vec![0u8; n];
        e[d] = 1;
        gamma[i][j][k].partial(&e).unwrap()
    };

    // R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj}
    //            + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
    let riem = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let mut v = dgamma(i, l, j, k) - dgamma(i, k, j, l);
        for m in 0..n {
            v += gamma_val(i, k, m) * gamma_val(m, l, j) - gamma_val(i, l, m) * gamma_val(m, k, j);
        }
        v
    };

    DMatrix::from_fn(n, n, |i, c| {
        let mut acc = 0.0;
        for j in 0..n {
            for l in 0..n {
                acc += riem(i, j, c, l) * y[j] * y[l];
            }
        }
        acc
    })
}

/// Klein-model coefficient matrix as jets.
pub fn klein_coefficients(alg: &Arc<Algebra>, x: &[JetScalar]) -> Vec<Vec<JetScalar>> {
    let n = x.len();
    let one = JetScalar::constant(alg, 1.0);
    let mut s = JetScalar::constant(alg, 0.0);
    for xi in x {
        s = &s + &(xi * xi);
    }
    let om = &one - &s;
    let om2 = &om * &om;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let kron = JetScalar::constant(alg, if i == j { 1.0 } else { 0.0 });
            let num = &(&kron * &om) + &(&x[i] * &x[j]);
            row.push(num.try_div(&om2).unwrap());
        }
        out.push(row);
    }
    out
}

/// Polynomial coefficient matrix as jets.
pub fn polynomial_coefficients(
    a: Vec<Vec<Polynomial>>,
) -> impl Fn(&Arc<Algebra>, &[JetScalar]) -> Vec<Vec<JetScalar>> {
    move |alg, x| {
        a.iter()
            .map(|row| row.iter().map(|p| p.eval_jets(alg, x)).collect())
            .collect()
    }
}

/// Seeded random symmetric positive-definite polynomial metric spec:
/// identity plus small quadratic perturbations (PD on |x| <= 0.7).
pub fn random_polynomial_metric<R: Rng>(n: usize, rng: &mut R) -> MetricSpec {
    let mut a: Vec<Vec<Polynomial>> = vec![vec![Polynomial::zero(n); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut terms = Vec::new();
            if i == j {
                terms.push(Term {
                    coef: 1.0,
                    exps: vec![0; n],
                });
            }
            // a few random low-degree terms with small coefficients
            for _ in 0..2 {
                let mut exps = vec![0u32; n];
                exps[rng.random_range(0..n)] += 1;
                if rng.random_bool(0.5) {
                    exps[rng.random_range(0..n)] += 1;
                }
                terms.push(Term {
                    coef: rng.random_range(-0.05..0.05),
                    exps,
                });
            }
            let p = Polynomial::new(n, terms);
            a[i][j] = p.clone();
            a[j][i] = p;
        }
    }
    MetricSpec::riemannian(n, a)
}

// ---------------------------------------------------------------------------
// Dense grid search for torsion norms (oracle for the power-ascent estimate)
// ---------------------------------------------------------------------------

/// Fibonacci sphere points in dimension 3.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Exhaustive ratio search: `max F(y) |M_y(u,u,u)| / g_y(u,u)^{3/2}` over
/// grid flagpoles and probe directions.
pub fn matsumoto_norm_grid(
    m: &finsler::Metric,
    x: &[f64],
    n_flagpoles: usize,
    n_probes: usize,
) -> f64 {
    use finsler::tensors::{matsumoto_torsion_ctx, TensorContext, ORDER_CONNECTION};
    let probes = fibonacci_sphere(n_probes);
    let mut best = 0.0f64;
    for y in fibonacci_sphere(n_flagpoles) {
        let ctx = TensorContext::new_y_only(m, x, &y, ORDER_CONNECTION).unwrap();
        let f = ctx.f();
        let g = ctx.g().unwrap().clone();
        let mt = matsumoto_torsion_ctx(&ctx).unwrap();
        for u in &probes {
            let mut gu = 0.0;
            for i in 0..u.len() {
                for j in 0..u.len() {
                    gu += g[(i, j)] * u[i] * u[j];
                }
            }
            best = best.max(f * mt.cubic(u).abs() / gu.powf(1.5));
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Forward ODE solver for the comparison cross-check
// ---------------------------------------------------------------------------

/// Solve `z'' = -k(t) z` forward from `(z0, z0')` on a uniform grid carrying
/// sampled `k` values (linear interpolation between samples), RK4.
pub fn solve_torsion_ode(k_samples: &[f64], h: f64, z0: f64, dz0: f64) -> Vec<f64> {
    let k_at = |t: f64| -> f64 {
        let pos = t / h;
        let i = (pos.floor() as usize).min(k_samples.len() - 2);
        let w = pos - i as f64;
        k_samples[i] * (1.0 - w) + k_samples[i + 1] * w
    };
    let mut out = Vec::with_capacity(k_samples.len());
    let mut z = z0;
    let mut dz = dz0;
    out.push(z);
    for step in 0..k_samples.len() - 1 {
        let t = step as f64 * h;
        let f = |t: f64, z: f64, dz: f64| (dz, -k_at(t) * z);
        let (k1z, k1d) = f(t, z, dz);
        let (k2z, k2d) = f(t + 0.5 * h, z + 0.5 * h * k1z, dz + 0.5 * h * k1d);
        let (k3z, k3d) = f(t + 0.5 * h, z + 0.5 * h * k2z, dz + 0.5 * h * k2d);
        let (k4z, k4d) = f(t + h, z + h * k3z, dz + h * k3d);
        z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        dz += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        out.push(z);
    }
    out
}

/// Sample an admissible base point for a metric, uniformly in its sampling
/// ball.
pub fn sample_point<R: Rng>(m: &finsler::Metric, rng: &mut R) -> Vec<f64> {
    let n = m.dim();
    let r = m.sample_radius();
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-r..r)).collect();
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= r && m.admissible(&x) {
            return x;
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}
