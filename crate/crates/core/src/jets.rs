//! Truncated multivariate Taylor-jet algebra.
//!
//! Every derivative in this crate comes from these jets: a [`JetScalar`]
//! stores all partial derivatives of a scalar quantity up to a fixed total
//! order, and arithmetic on jets propagates them exactly (no finite
//! differencing in the metric variables). A jet over `n_vars` variables of
//! order `p` stores one coefficient per multi-index of total degree `<= p`,
//! densely, in graded-lex order, so the order-`q` algebra (`q < p`) is a
//! prefix of the order-`p` one and truncation is a slice copy.
//!
//! Order is capped at [`MAX_ORDER`]. The deepest consumers are the vertical
//! derivative of the spray curvature and the mean Berwald curvature, both of
//! which read fifth-order data of `F^2` (second derivatives through the spray
//! coefficients, differentiated three more times in `y`). Anything deeper
//! fails loudly with [`JetError::InvalidOrder`] rather than silently
//! truncating.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 5;
/// Largest supported number of active variables (metric dimension 4 lifts
/// both `x` and `y`).
pub const MAX_VARS: usize = 8;

/// Newton tolerance for the constant term of [`implicit_solve`]; the root
/// feeds fourth and fifth derivatives downstream, so it must sit well below
/// every tensor tolerance.
pub const IMPLICIT_NEWTON_TOL: f64 = 1e-14;
const IMPLICIT_NEWTON_MAX_ITER: usize = 50;
/// Minimum |dR/du| at the seed for the implicit function theorem to apply.
pub const IMPLICIT_SLOPE_MIN: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("jet order {order} outside supported range 1..={MAX_ORDER}")]
    InvalidOrder { order: usize },
    #[error("variable count {n_vars} outside supported range 1..={MAX_VARS}")]
    InvalidVarCount { n_vars: usize },
    #[error("partial of total degree {requested} exceeds jet order {order}")]
    OrderExceeded { requested: usize, order: usize },
    #[error("non-finite value in jet construction")]
    NonFinite,
    #[error("division by jet with zero constant term")]
    SingularJet,
    #[error("sqrt of jet with nonpositive constant term {value}")]
    SqrtDomain { value: f64 },
    #[error("implicit solve did not converge after {iterations} Newton steps (residual {residual:.3e})")]
    RootFailure { iterations: usize, residual: f64 },
    #[error("implicit residual has near-vanishing derivative {derivative:.3e} in the unknown")]
    DegenerateImplicit { derivative: f64 },
}

/// Shared tables for one `(n_vars, order)` truncated polynomial algebra.
pub struct Algebra {
    n_vars: usize,
    order: usize,
    /// Exponent vectors in graded-lex order.
    exps: Vec<Vec<u8>>,
    /// Ordered factor pairs per product index: `prod[k]` lists all `(i, j)`
    /// with `exps[i] + exps[j] == exps[k]`.
    prod: Vec<Vec<(u32, u32)>>,
    /// `shift_up[v][t]` = index of `exps[t] + e_v`; defined for
    /// `t < len_by_order[order - 1]`.
    shift_up: Vec<Vec<u32>>,
    /// Product of exponent factorials per index (partial-derivative scaling).
    factorial: Vec<f64>,
    /// Packed exponent key -> index.
    key_map: HashMap<u64, u32>,
}

impl Algebra {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx]
    }

    fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.key_map.get(&pack_key(exps)).map(|&i| i as usize)
    }
}

fn pack_key(exps: &[u8]) -> u64 {
    let mut key = 0u64;
    for (i, &e) in exps.iter().enumerate() {
        key |= (e as u64) << (8 * i);
    }
    key
}

impl Algebra {
    fn build(n_vars: usize, order: usize) -> Algebra {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut len_by_order = Vec::with_capacity(order + 1);
        for deg in 0..=order {
            let mut current = vec![0u8; n_vars];
            enumerate_degree(&mut exps, &mut current, 0, deg as u8);
            len_by_order.push(exps.len());
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut key_map = HashMap::with_capacity(exps.len());
        for (i, e) in exps.iter().enumerate() {
            key_map.insert(pack_key(e), i as u32);
        }

        let mut prod = vec![Vec::new(); exps.len()];
        for i in 0..exps.len() {
            for j in 0..exps.len() {
                if (degree[i] + degree[j]) as usize > order {
                    continue;
                }
                let sum: Vec<u8> = exps[i]
                    .iter()
                    .zip(&exps[j])
                    .map(|(a, b)| a + b)
                    .collect();
                let k = key_map[&pack_key(&sum)] as usize;
                prod[k].push((i as u32, j as u32));
            }
        }

        let lower_len = if order == 0 {
            0
        } else {
            len_by_order[order - 1]
        };
        let mut shift_up = vec![vec![0u32; lower_len]; n_vars];
        for v in 0..n_vars {
            for t in 0..lower_len {
                let mut e = exps[t].clone();
                e[v] += 1;
                shift_up[v][t] = key_map[&pack_key(&e)];
            }
        }

        let factorial: Vec<f64> = exps
            .iter()
            .map(|e| e.iter().map(|&k| fact(k)).product())
            .collect();

        Algebra {
            n_vars,
            order,
            exps,
            prod,
            shift_up,
            factorial,
            key_map,
        }
    }
}

fn fact(k: u8) -> f64 {
    (1..=k as u64).product::<u64>() as f64
}

/// Emit all exponent vectors of exact total degree `remaining` over the
/// suffix starting at `pos`, in lex order.
fn enumerate_degree(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, remaining: u8) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        enumerate_degree(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

/// Fetch (building on first use) the shared tables for `(n_vars, order)`.
/// Order 0 (bare values) is allowed here so that derivative extraction can
/// bottom out; [`lift`] enforces the public `1..=MAX_ORDER` contract.
pub fn algebra(n_vars: usize, order: usize) -> Result<Arc<Algebra>, JetError> {
    if order > MAX_ORDER {
        return Err(JetError::InvalidOrder { order });
    }
    if !(1..=MAX_VARS).contains(&n_vars) {
        return Err(JetError::InvalidVarCount { n_vars });
    }
    static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), Arc<Algebra>>>> = OnceLock::new();
    let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = registry.lock().expect("algebra registry poisoned");
    Ok(guard
        .entry((n_vars, order))
        .or_insert_with(|| Arc::new(Algebra::build(n_vars, order)))
        .clone())
}

/// One truncated Taylor expansion: coefficients over every multi-index of
/// total degree up to the algebra's order.
#[derive(Clone)]
pub struct JetScalar {
    alg: Arc<Algebra>,
    c: Vec<f64>,
}

impl fmt::Debug for JetScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "JetScalar(n_vars={}, order={}, value={})",
            self.alg.n_vars, self.alg.order, self.c[0]
        )
    }
}

impl JetScalar {
    pub fn constant(alg: &Arc<Algebra>, value: f64) -> JetScalar {
        let mut c = vec![0.0; alg.len()];
        c[0] = value;
        JetScalar {
            alg: alg.clone(),
            c,
        }
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    pub fn n_vars(&self) -> usize {
        self.alg.n_vars
    }

    pub fn order(&self) -> usize {
        self.alg.order
    }

    /// Constant term (the value of the modeled quantity).
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// True partial derivative for the given exponent vector: stored
    /// coefficient times the multi-index factorial.
    pub fn partial(&self, idx: &[u8]) -> Result<f64, JetError> {
        assert_eq!(idx.len(), self.alg.n_vars, "partial index arity mismatch");
        let total: usize = idx.iter().map(|&e| e as usize).sum();
        if total > self.alg.order {
            return Err(JetError::OrderExceeded {
                requested: total,
                order: self.alg.order,
            });
        }
        let k = self
            .alg
            .index_of(idx)
            .expect("multi-index within order must be present");
        Ok(self.c[k] * self.alg.factorial[k])
    }

    /// Jet of the partial derivative with respect to variable `var`, one
    /// order lower.
    pub fn derive(&self, var: usize) -> JetScalar {
        assert!(var < self.alg.n_vars);
        assert!(self.alg.order >= 1, "cannot derive an order-0 jet");
        let lower = algebra(self.alg.n_vars, self.alg.order - 1)
            .expect("lower algebra exists for order >= 2");
        let mut c = vec![0.0; lower.len()];
        for (t, out) in c.iter_mut().enumerate() {
            let src = self.alg.shift_up[var][t] as usize;
            let e = self.alg.exps[t][var] as f64;
            *out = self.c[src] * (e + 1.0);
        }
        JetScalar { alg: lower, c }
    }

    /// Same expansion truncated to a lower order.
    pub fn truncate(&self, order: usize) -> JetScalar {
        assert!(order <= self.alg.order, "cannot truncate upward");
        if order == self.alg.order {
            return self.clone();
        }
        let alg = algebra(self.alg.n_vars, order).expect("valid truncation order");
        JetScalar {
            c: self.c[..alg.len()].to_vec(),
            alg,
        }
    }

    pub fn scale(&self, s: f64) -> JetScalar {
        JetScalar {
            alg: self.alg.clone(),
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    fn assert_compatible(&self, rhs: &JetScalar) {
        assert!(
            Arc::ptr_eq(&self.alg, &rhs.alg)
                || (self.alg.n_vars == rhs.alg.n_vars && self.alg.order == rhs.alg.order),
            "jet algebra mismatch: ({}, {}) vs ({}, {})",
            self.alg.n_vars,
            self.alg.order,
            rhs.alg.n_vars,
            rhs.alg.order
        );
    }

    fn mul_impl(&self, rhs: &JetScalar) -> JetScalar {
        self.assert_compatible(rhs);
        let mut c = vec![0.0; self.alg.len()];
        for (k, pairs) in self.alg.prod.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, j) in pairs {
                acc += self.c[i as usize] * rhs.c[j as usize];
            }
            c[k] = acc;
        }
        JetScalar {
            alg: self.alg.clone(),
            c,
        }
    }

    /// Truncated quotient; fails on a divisor with zero constant term.
    pub fn try_div(&self, rhs: &JetScalar) -> Result<JetScalar, JetError> {
        self.assert_compatible(rhs);
        if rhs.c[0] == 0.0 {
            return Err(JetError::SingularJet);
        }
        let inv0 = 1.0 / rhs.c[0];
        let mut c = vec![0.0; self.alg.len()];
        for k in 0..self.alg.len() {
            let mut acc = self.c[k];
            for &(i, j) in &self.alg.prod[k] {
                // b_0 * c_k is the unknown; everything else is known because
                // deg(j) < deg(k) whenever i != 0.
                if i == 0 {
                    continue;
                }
                acc -= rhs.c[i as usize] * c[j as usize];
            }
            c[k] = acc * inv0;
        }
        Ok(JetScalar {
            alg: self.alg.clone(),
            c,
        })
    }

    pub fn recip(&self) -> Result<JetScalar, JetError> {
        JetScalar::constant(&self.alg, 1.0).try_div(self)
    }

    /// Truncated square root; requires a strictly positive constant term.
    pub fn try_sqrt(&self) -> Result<JetScalar, JetError> {
        if self.c[0] <= 0.0 {
            return Err(JetError::SqrtDomain { value: self.c[0] });
        }
        let s0 = self.c[0].sqrt();
        let half_inv = 0.5 / s0;
        let mut c = vec![0.0; self.alg.len()];
        c[0] = s0;
        for k in 1..self.alg.len() {
            let mut acc = self.c[k];
            for &(i, j) in &self.alg.prod[k] {
                if i == 0 || j == 0 {
                    continue;
                }
                acc -= c[i as usize] * c[j as usize];
            }
            c[k] = acc * half_inv;
        }
        Ok(JetScalar {
            alg: self.alg.clone(),
            c,
        })
    }

    /// Integer power by repeated multiplication (exact on the truncation).
    pub fn powi(&self, k: i32) -> Result<JetScalar, JetError> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = JetScalar::constant(&self.alg, 1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_impl(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_impl(&base);
            }
        }
        Ok(acc)
    }

    /// Rational power with denominator 1 or 2: integer powers by repeated
    /// multiplication, half-powers through the square root. That covers the
    /// whole metric catalog without exp/log series.
    pub fn pow_rational(&self, num: i32, den: u32) -> Result<JetScalar, JetError> {
        match den {
            1 => self.powi(num),
            2 => self.try_sqrt()?.powi(num),
            _ => panic!("pow_rational supports denominators 1 and 2, got {den}"),
        }
    }
}

impl Add for &JetScalar {
    type Output = JetScalar;
    fn add(self, rhs: &JetScalar) -> JetScalar {
        self.assert_compatible(rhs);
        JetScalar {
            alg: self.alg.clone(),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &JetScalar {
    type Output = JetScalar;
    fn sub(self, rhs: &JetScalar) -> JetScalar {
        self.assert_compatible(rhs);
        JetScalar {
            alg: self.alg.clone(),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &JetScalar {
    type Output = JetScalar;
    fn mul(self, rhs: &JetScalar) -> JetScalar {
        self.mul_impl(rhs)
    }
}

impl Neg for &JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        self.scale(-1.0)
    }
}

impl Add for JetScalar {
    type Output = JetScalar;
    fn add(self, rhs: JetScalar) -> JetScalar {
        &self + &rhs
    }
}

impl Sub for JetScalar {
    type Output = JetScalar;
    fn sub(self, rhs: JetScalar) -> JetScalar {
        &self - &rhs
    }
}

impl Mul for JetScalar {
    type Output = JetScalar;
    fn mul(self, rhs: JetScalar) -> JetScalar {
        &self * &rhs
    }
}

impl Div for &JetScalar {
    type Output = JetScalar;
    /// Panicking division for expression-heavy code paths; use
    /// [`JetScalar::try_div`] where a singular divisor is a recoverable
    /// condition.
    fn div(self, rhs: &JetScalar) -> JetScalar {
        self.try_div(rhs).expect("division by singular jet")
    }
}

/// Lift plain values into jets: one jet per variable, constant term the
/// value, unit first-order seed on its own axis.
pub fn lift(values: &[f64], order: usize) -> Result<Vec<JetScalar>, JetError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(JetError::InvalidOrder { order });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(JetError::NonFinite);
    }
    let alg = algebra(values.len(), order)?;
    Ok(lift_in(&alg, values, 0))
}

/// Lift `values` onto consecutive variable axes starting at `first_axis` of
/// an existing algebra (the remaining axes stay passive).
pub fn lift_in(alg: &Arc<Algebra>, values: &[f64], first_axis: usize) -> Vec<JetScalar> {
    assert!(alg.order() >= 1, "cannot lift variables into an order-0 algebra");
    assert!(first_axis + values.len() <= alg.n_vars());
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut jet = JetScalar::constant(alg, v);
            let mut e = vec![0u8; alg.n_vars()];
            e[first_axis + i] = 1;
            let k = alg.index_of(&e).expect("first-order index present");
            jet.c[k] = 1.0;
            jet
        })
        .collect()
}

/// Solve `residual(u) = 0` for a jet `u`: constant term by scalar Newton
/// iteration, higher coefficients order by order (the implicit function
/// theorem at jet level). The residual closure must be jet-polymorphic over
/// the given algebra.
pub fn implicit_solve<F>(alg: &Arc<Algebra>, residual: F, seed: f64) -> Result<JetScalar, JetError>
where
    F: Fn(&JetScalar) -> Result<JetScalar, JetError>,
{
    let value_at = |u: f64| -> Result<f64, JetError> {
        Ok(residual(&JetScalar::constant(alg, u))?.value())
    };
    let slope_at = |u: f64| -> Result<f64, JetError> {
        let h = 1e-6 * u.abs().max(1.0);
        Ok((value_at(u + h)? - value_at(u - h)?) / (2.0 * h))
    };

    // Newton for the constant term.
    let mut u = seed;
    let mut converged = false;
    let mut last_residual = f64::INFINITY;
    for _ in 0..IMPLICIT_NEWTON_MAX_ITER {
        let r = value_at(u)?;
        last_residual = r.abs();
        if last_residual <= IMPLICIT_NEWTON_TOL {
            converged = true;
            break;
        }
        let dr = slope_at(u)?;
        if dr.abs() < IMPLICIT_SLOPE_MIN {
            return Err(JetError::DegenerateImplicit { derivative: dr });
        }
        u -= r / dr;
    }
    if !converged {
        return Err(JetError::RootFailure {
            iterations: IMPLICIT_NEWTON_MAX_ITER,
            residual: last_residual,
        });
    }

    let slope = slope_at(u)?;
    if slope.abs() < IMPLICIT_SLOPE_MIN {
        return Err(JetError::DegenerateImplicit { derivative: slope });
    }

    // Graded sweeps: each pass determines the next total degree exactly (the
    // unknown coefficient enters linearly through the constant slope), and
    // polishes the slope's finite-difference error on the lower degrees.
    let inv_slope = 1.0 / slope;
    let mut jet = JetScalar::constant(alg, u);
    for _ in 0..alg.order() + 3 {
        let r = residual(&jet)?;
        jet = &jet - &r.scale(inv_slope);
    }
    Ok(jet)
}
