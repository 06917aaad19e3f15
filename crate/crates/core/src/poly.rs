//! Multivariate polynomials with exact jet evaluation.
//!
//! Riemannian coefficient functions, Randers one-form potentials, and convex
//! domain functionals are all restricted to polynomials in the base point, so
//! jet evaluation stays exact and configurations stay serializable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::jets::{Algebra, JetScalar};

/// One monomial: `coef * prod_i x_i^{exps[i]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Term {
    #[serde(rename = "c")]
    pub coef: f64,
    #[serde(rename = "e")]
    pub exps: Vec<u32>,
}

/// Polynomial in `n_vars` variables, stored as a term list.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Polynomial {
    pub n_vars: usize,
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(n_vars: usize, terms: Vec<Term>) -> Polynomial {
        let mut p = Polynomial { n_vars, terms };
        p.canonicalize();
        p
    }

    pub fn zero(n_vars: usize) -> Polynomial {
        Polynomial {
            n_vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Polynomial {
        Polynomial::new(
            n_vars,
            vec![Term {
                coef: c,
                exps: vec![0; n_vars],
            }],
        )
    }

    /// `sum_i x_i^2`.
    pub fn norm_squared(n_vars: usize) -> Polynomial {
        let terms = (0..n_vars)
            .map(|i| {
                let mut e = vec![0u32; n_vars];
                e[i] = 2;
                Term { coef: 1.0, exps: e }
            })
            .collect();
        Polynomial::new(n_vars, terms)
    }

    /// The default convex domain functional `|u|^2 + 0.5 * sum u_i^4`
    /// (convex, non-ellipsoidal).
    pub fn quartic_domain(n_vars: usize) -> Polynomial {
        let mut terms = Polynomial::norm_squared(n_vars).terms;
        for i in 0..n_vars {
            let mut e = vec![0u32; n_vars];
            e[i] = 4;
            terms.push(Term { coef: 0.5, exps: e });
        }
        Polynomial::new(n_vars, terms)
    }

    /// Merge duplicate monomials and drop zero terms; sorts by exponent
    /// vector so structural equality is meaningful.
    pub fn canonicalize(&mut self) {
        for t in &self.terms {
            assert_eq!(t.exps.len(), self.n_vars, "term arity mismatch");
        }
        self.terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        self.terms = merged;
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_vars);
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * t.exps
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn eval_jets(&self, alg: &Arc<Algebra>, x: &[JetScalar]) -> JetScalar {
        assert_eq!(x.len(), self.n_vars);
        let mut acc = JetScalar::constant(alg, 0.0);
        for t in &self.terms {
            let mut m = JetScalar::constant(alg, t.coef);
            for (xi, &e) in x.iter().zip(&t.exps) {
                if e > 0 {
                    m = &m * &xi.powi(e as i32).expect("nonnegative power");
                }
            }
            acc = &acc + &m;
        }
        acc
    }

    /// Exact partial derivative polynomial.
    pub fn partial(&self, var: usize) -> Polynomial {
        assert!(var < self.n_vars);
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[var] > 0)
            .map(|t| {
                let mut e = t.exps.clone();
                e[var] -= 1;
                Term {
                    coef: t.coef * t.exps[var] as f64,
                    exps: e,
                }
            })
            .collect();
        Polynomial::new(self.n_vars, terms)
    }

    /// Scalar Hessian matrix at a point.
    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n_vars;
        let firsts: Vec<Polynomial> = (0..n).map(|i| self.partial(i)).collect();
        (0..n)
            .map(|i| (0..n).map(|j| firsts[i].partial(j).eval(x)).collect())
            .collect()
    }
}
