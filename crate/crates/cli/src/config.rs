//! Run configuration: JSON schema, defaults, and validation that reports
//! every violation (not just the first) with a JSON-pointer-style path.

use finsler::metrics::{self, Family, MetricSpec};
use finsler::tol;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Sample counts and grid sizes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Base points per check.
    pub points: usize,
    /// Flagpole directions per point (norm estimates, flag spreads).
    pub directions: usize,
    /// Steps for the torsion profile grid.
    pub profile_steps: usize,
    /// Parameter span of the profile geodesic.
    pub profile_span: f64,
}

impl Default for Samples {
    fn default() -> Self {
        Samples {
            points: 20,
            directions: 50,
            profile_steps: 400,
            profile_span: 2.0,
        }
    }
}

/// Check tolerances; defaults come from the crate-wide table so the CLI and
/// the acceptance tests agree by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub euler_rel: f64,
    pub structural_rel: f64,
    pub landsberg_dual: f64,
    pub randers_matsumoto_rel: f64,
    pub scalar_residual_rel: f64,
    pub mkdiff_rel: f64,
    pub identity_residual_rel: f64,
    pub ode_residual_rel: f64,
    pub mvc_margin: f64,
    pub inverse_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            euler_rel: tol::EULER_REL,
            structural_rel: tol::STRUCTURAL_CURVATURE_REL,
            landsberg_dual: tol::LANDSBERG_DUAL_TOL,
            randers_matsumoto_rel: tol::RANDERS_MATSUMOTO_REL,
            scalar_residual_rel: tol::SCALAR_RESIDUAL_REL,
            mkdiff_rel: tol::MKDIFF_REL,
            identity_residual_rel: tol::IDENTITY_RESIDUAL_REL,
            ode_residual_rel: tol::ODE_RESIDUAL_REL,
            mvc_margin: tol::MVC_MARGIN_TOL,
            inverse_identity: finsler::tensors::INVERSE_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub metric: MetricSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// One schema violation, addressed by a JSON-pointer-style path.
#[derive(Clone, Debug)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

const FAMILIES: &[&str] = &[
    "euclidean",
    "riemannian",
    "klein",
    "randers",
    "funk_ball",
    "hilbert_ball",
    "funk_convex",
    "minkowski_quartic_perturbed",
];

/// Parse and validate a config, reporting all violations.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<Violation>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![Violation {
            path: "".into(),
            message: format!("not valid JSON: {e}"),
        }]
    })?;

    let mut violations = Vec::new();
    schema_check(&value, &mut violations);
    if !violations.is_empty() {
        return Err(violations);
    }

    let config: RunConfig = serde_json::from_value(value).map_err(|e| {
        vec![Violation {
            path: "".into(),
            message: format!("schema mismatch: {e}"),
        }]
    })?;

    // Build-time invariants (positivity guards, convexity probes) surface as
    // violations against the metric subtree.
    if let Err(e) = metrics::build_metric(&config.metric) {
        violations.push(Violation {
            path: "/metric".into(),
            message: e.to_string(),
        });
    }
    tolerance_check(&config.tolerances, &mut violations);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(violations)
    }
}

fn tolerance_check(t: &Tolerances, out: &mut Vec<Violation>) {
    let entries = [
        ("euler_rel", t.euler_rel),
        ("structural_rel", t.structural_rel),
        ("landsberg_dual", t.landsberg_dual),
        ("randers_matsumoto_rel", t.randers_matsumoto_rel),
        ("scalar_residual_rel", t.scalar_residual_rel),
        ("mkdiff_rel", t.mkdiff_rel),
        ("identity_residual_rel", t.identity_residual_rel),
        ("ode_residual_rel", t.ode_residual_rel),
        ("mvc_margin", t.mvc_margin),
        ("inverse_identity", t.inverse_identity),
    ];
    for (name, v) in entries {
        if !(v.is_finite() && v > 0.0) {
            out.push(Violation {
                path: format!("/tolerances/{name}"),
                message: format!("tolerance must be positive, got {v}"),
            });
        }
    }
}

/// Structural walk of the JSON value collecting every schema problem.
fn schema_check(value: &Value, out: &mut Vec<Violation>) {
    let Some(root) = value.as_object() else {
        out.push(Violation {
            path: "".into(),
            message: "config must be a JSON object".into(),
        });
        return;
    };
    for key in root.keys() {
        if !["metric", "seed", "samples", "tolerances"].contains(&key.as_str()) {
            out.push(Violation {
                path: format!("/{key}"),
                message: "unknown field".into(),
            });
        }
    }
    match root.get("metric") {
        None => out.push(Violation {
            path: "/metric".into(),
            message: "missing required field".into(),
        }),
        Some(m) => metric_check(m, "/metric", out),
    }
    if let Some(seed) = root.get("seed") {
        if !seed.is_u64() {
            out.push(Violation {
                path: "/seed".into(),
                message: "seed must be a nonnegative integer".into(),
            });
        }
    }
    if let Some(samples) = root.get("samples") {
        if let Some(obj) = samples.as_object() {
            for (key, v) in obj {
                let path = format!("/samples/{key}");
                match key.as_str() {
                    "points" | "directions" | "profile_steps" => {
                        if !v.as_u64().is_some_and(|n| n >= 1) {
                            out.push(Violation {
                                path,
                                message: "must be a positive integer".into(),
                            });
                        }
                    }
                    "profile_span" => {
                        if !v.as_f64().is_some_and(|x| x > 0.0) {
                            out.push(Violation {
                                path,
                                message: "must be a positive number".into(),
                            });
                        }
                    }
                    _ => out.push(Violation {
                        path,
                        message: "unknown field".into(),
                    }),
                }
            }
        } else {
            out.push(Violation {
                path: "/samples".into(),
                message: "must be an object".into(),
            });
        }
    }
}

fn metric_check(value: &Value, path: &str, out: &mut Vec<Violation>) {
    let Some(obj) = value.as_object() else {
        out.push(Violation {
            path: path.into(),
            message: "metric must be a JSON object".into(),
        });
        return;
    };
    let family = match obj.get("family") {
        None => {
            out.push(Violation {
                path: format!("{path}/family"),
                message: "missing required field".into(),
            });
            None
        }
        Some(Value::String(s)) if FAMILIES.contains(&s.as_str()) => Some(s.clone()),
        Some(Value::String(s)) => {
            out.push(Violation {
                path: format!("{path}/family"),
                message: format!("unknown family `{s}` (expected one of {FAMILIES:?})"),
            });
            None
        }
        Some(_) => {
            out.push(Violation {
                path: format!("{path}/family"),
                message: "family must be a string".into(),
            });
            None
        }
    };
    match obj.get("n") {
        None => out.push(Violation {
            path: format!("{path}/n"),
            message: "missing required field".into(),
        }),
        Some(v) => {
            let ok = v
                .as_u64()
                .is_some_and(|n| (metrics::MIN_DIM as u64..=metrics::MAX_DIM as u64).contains(&n));
            if !ok {
                out.push(Violation {
                    path: format!("{path}/n"),
                    message: format!(
                        "dimension must be an integer in {}..={}",
                        metrics::MIN_DIM,
                        metrics::MAX_DIM
                    ),
                });
            }
        }
    }
    let params = obj.get("params");
    if let Some(p) = params {
        if !p.is_object() {
            out.push(Violation {
                path: format!("{path}/params"),
                message: "params must be an object".into(),
            });
            return;
        }
    }
    let get = |key: &str| params.and_then(|p| p.get(key));
    match family.as_deref() {
        Some("randers") => {
            match get("alpha") {
                None => out.push(Violation {
                    path: format!("{path}/params/alpha"),
                    message: "randers requires a nested base metric".into(),
                }),
                Some(a) => metric_check(a, &format!("{path}/params/alpha"), out),
            }
            if get("beta").is_none() {
                out.push(Violation {
                    path: format!("{path}/params/beta"),
                    message: "randers requires a one-form (potential and/or constant)".into(),
                });
            }
        }
        Some("riemannian") => {
            if get("a").is_none() {
                out.push(Violation {
                    path: format!("{path}/params/a"),
                    message: "riemannian requires a coefficient matrix".into(),
                });
            }
        }
        Some("minkowski_quartic_perturbed") => {
            if let Some(eps) = get("epsilon") {
                if !eps.as_f64().is_some_and(|v| v >= 0.0) {
                    out.push(Violation {
                        path: format!("{path}/params/epsilon"),
                        message: "epsilon must be a nonnegative number".into(),
                    });
                }
            }
        }
        _ => {}
    }
    if let Some(scale) = get("scale") {
        if !scale.as_f64().is_some_and(|v| v > 0.0) {
            out.push(Violation {
                path: format!("{path}/params/scale"),
                message: "scale must be a positive number".into(),
            });
        }
    }
}

/// True when the family is one on which the Matsumoto torsion must vanish
/// (Randers-type and Riemannian families; the unit-ball Funk metric is the
/// ellipsoid case and therefore Randers).
pub fn expects_vanishing_matsumoto(family: Family) -> bool {
    matches!(
        family,
        Family::Euclidean
            | Family::Riemannian
            | Family::Klein
            | Family::Randers
            | Family::FunkBall
            | Family::HilbertBall
    )
}
