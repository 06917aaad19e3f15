//! Command implementations: evaluate, verify, profile, classify.

use finsler::curvature::{
    self, flag_curvature, identity_residuals, matsumoto_profile, mkdiff_residual,
    riemann_curvature, scalar_flag, structural_deviations,
};
use finsler::geodesics::{landsberg_transport, mean_landsberg, mean_landsberg_flow};
use finsler::metrics::{build_metric, Metric};
use finsler::tensors::{
    self, landsberg_closed_form_ctx, TensorContext, ORDER_FULL, ORDER_VALUES,
};
use finsler::GeomError;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{expects_vanishing_matsumoto, RunConfig};
use crate::report::VerificationReport;

/// Errors with distinct exit semantics: configuration errors exit 2,
/// runtime/check failures exit 1.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Run(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn parse_vector(text: &str, n: usize, flag: &str) -> Result<Vec<f64>, Failure> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == n => Ok(v),
        Ok(v) => Err(Failure::Config(format!(
            "--{flag} must have {n} components, got {}",
            v.len()
        ))),
        Err(e) => Err(Failure::Config(format!("--{flag}: {e}"))),
    }
}

fn build(cfg: &RunConfig) -> Result<Metric, Failure> {
    build_metric(&cfg.metric).map_err(|e| Failure::Config(e.to_string()))
}

fn sample_point<R: Rng>(m: &Metric, rng: &mut R) -> Vec<f64> {
    let n = m.dim();
    let r = m.sample_radius();
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-r..r)).collect();
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= r && m.admissible(&x) {
            return x;
        }
    }
}

fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}

fn format_table(rows: &[(String, f64)], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::from("key,value\n");
            for (k, v) in rows {
                out.push_str(&format!("{k},{v}\n"));
            }
            out
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .iter()
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect();
            serde_json::to_string_pretty(&map).expect("table serializes")
        }
    }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

/// Flat key -> value table of every pointwise quantity at `(x, y)`.
pub fn run_eval(cfg: &RunConfig, x: &[f64], y: &[f64], format: Format) -> Result<String, Failure> {
    let m = build(cfg)?;
    let n = m.dim();
    let fail = |what: &str, e: GeomError| Failure::Run(format!("{what}: {e}"));

    let ctx = TensorContext::new(&m, x, y, ORDER_FULL)
        .map_err(|e| fail("metric evaluation", e))?;
    let mut rows: Vec<(String, f64)> = vec![("F".into(), ctx.f())];

    let g = tensors::fundamental_form_ctx(&ctx).map_err(|e| fail("fundamental form", e))?;
    for i in 0..n {
        for j in i..n {
            rows.push((format!("g_{i}{j}"), g.m[(i, j)]));
        }
    }
    let c = tensors::cartan_torsion_ctx(&ctx).map_err(|e| fail("Cartan torsion", e))?;
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                rows.push((format!("C_{i}{j}{k}"), c.get(i, j, k)));
            }
        }
    }
    let im = tensors::mean_cartan_ctx(&ctx).map_err(|e| fail("mean Cartan torsion", e))?;
    for i in 0..n {
        rows.push((format!("I_{i}"), im.c[i]));
    }
    let h = tensors::angular_metric_ctx(&ctx).map_err(|e| fail("angular metric", e))?;
    for i in 0..n {
        for j in i..n {
            rows.push((format!("h_{i}{j}"), h.m[(i, j)]));
        }
    }
    let mt = tensors::matsumoto_torsion_ctx(&ctx).map_err(|e| fail("Matsumoto torsion", e))?;
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                rows.push((format!("M_{i}{j}{k}"), mt.get(i, j, k)));
            }
        }
    }
    let spray = ctx.spray_values().map_err(|e| fail("spray", e))?;
    for i in 0..n {
        rows.push((format!("G_{i}"), spray[i]));
    }
    let nmat = ctx.connection_values().map_err(|e| fail("nonlinear connection", e))?;
    for i in 0..n {
        for j in 0..n {
            rows.push((format!("N_{i}_{j}"), nmat[(i, j)]));
        }
    }
    let e = tensors::mean_berwald_ctx(&ctx).map_err(|e| fail("mean Berwald curvature", e))?;
    for i in 0..n {
        for j in i..n {
            rows.push((format!("E_{i}{j}"), e.m[(i, j)]));
        }
    }
    let l = landsberg_closed_form_ctx(&ctx).map_err(|e| fail("Landsberg curvature", e))?;
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                rows.push((format!("L_{i}{j}{k}"), l.get(i, j, k)));
            }
        }
    }
    let jm = mean_landsberg(&m, x, y).map_err(|e| fail("mean Landsberg curvature", e))?;
    for i in 0..n {
        rows.push((format!("J_{i}"), jm.c[i]));
    }
    let kv = riemann_curvature(&m, x, y).map_err(|e| fail("Riemann curvature", e))?;
    for i in 0..n {
        for k in 0..n {
            rows.push((format!("K_{i}_{k}"), kv.k_mat[(i, k)]));
        }
    }
    rows.push((
        "scalar_flag".into(),
        scalar_flag(&m, x, y).map_err(|e| fail("scalar flag curvature", e))?,
    ));
    // a few seeded flag samples
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut done = 0;
    while done < 3 {
        let u = random_unit(&mut rng, n);
        match flag_curvature(&m, x, y, &u) {
            Ok(f) => {
                rows.push((format!("flag_{done}"), f));
                done += 1;
            }
            Err(GeomError::DegenerateFlag) => continue,
            Err(e) => return Err(fail("flag curvature", e)),
        }
    }
    Ok(format_table(&rows, format))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Run the identity suite; returns the rendered report and the overall
/// verdict. Evaluation errors become failed checks, never a crash.
pub fn run_verify(cfg: &RunConfig, format: Format) -> Result<(String, String, bool), Failure> {
    let m = build(cfg)?;
    let n = m.dim();
    let t = &cfg.tolerances;
    let points = cfg.samples.points;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = VerificationReport::default();

    let sites: Vec<(Vec<f64>, Vec<f64>)> = (0..points)
        .map(|_| (sample_point(&m, &mut rng), random_unit(&mut rng, n)))
        .collect();

    // fundamental regularity: g positive definite, g g^{-1} = id
    {
        let mut worst = 0.0f64;
        let mut failure = None;
        for (x, y) in &sites {
            match TensorContext::new_y_only(&m, x, y, ORDER_VALUES)
                .and_then(|ctx| {
                    let g = tensors::fundamental_form_ctx(&ctx)?;
                    let ginv = tensors::inverse_metric(&g)?;
                    let id = &g.m * &ginv.m;
                    let mut dev = 0.0f64;
                    for i in 0..n {
                        for j in 0..n {
                            let want = if i == j { 1.0 } else { 0.0 };
                            dev = dev.max((id[(i, j)] - want).abs());
                        }
                    }
                    Ok(dev)
                }) {
                Ok(dev) => worst = worst.max(dev),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        match failure {
            None => {
                report.record(
                    "fundamental_regularity",
                    "g positive definite; g g^{-1} = id",
                    worst,
                    t.inverse_identity,
                    points,
                );
            }
            Some(msg) => {
                report.record(
                    "fundamental_regularity",
                    &format!("g positive definite; g g^{{-1}} = id [{msg}]"),
                    f64::MAX,
                    t.inverse_identity,
                    points,
                );
            }
        }
    }

    // Euler contractions and homogeneity
    {
        let mut worst = 0.0f64;
        let mut failure = None;
        for (x, y) in &sites {
            let r: finsler::Result<f64> = (|| {
                let ctx = TensorContext::new(&m, x, y, ORDER_FULL)?;
                let f = ctx.f();
                let mut dev = 0.0f64;
                let h = tensors::angular_metric_ctx(&ctx)?;
                let im = tensors::mean_cartan_ctx(&ctx)?;
                let mt = tensors::matsumoto_torsion_ctx(&ctx)?;
                let e = tensors::mean_berwald_ctx(&ctx)?;
                let escale = e.m.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                for i in 0..n {
                    let hy: f64 = (0..n).map(|j| h.m[(i, j)] * y[j]).sum();
                    dev = dev.max(hy.abs() / (1.0 + f * f));
                    let ey: f64 = (0..n).map(|j| e.m[(i, j)] * y[j]).sum();
                    dev = dev.max(ey.abs() / (1.0 + escale));
                    for j in 0..n {
                        let my: f64 = (0..n).map(|k| mt.get(i, j, k) * y[k]).sum();
                        dev = dev.max(my.abs() / (1.0 + mt.max_abs()));
                    }
                }
                let iy: f64 = im.c.iter().zip(y).map(|(a, b)| a * b).sum();
                dev = dev.max(iy.abs());
                // spray 2-homogeneity
                let g1 = ctx.spray_values()?;
                let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
                let ctx2 = TensorContext::new(&m, x, &y2, ORDER_VALUES)?;
                let g2 = ctx2.spray_values()?;
                let sscale = g1.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                for i in 0..n {
                    dev = dev.max((g2[i] - 4.0 * g1[i]).abs() / (1.0 + sscale));
                }
                Ok(dev)
            })();
            match r {
                Ok(dev) => worst = worst.max(dev),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let residual = if failure.is_some() { f64::MAX } else { worst };
        report.record(
            "euler_homogeneity",
            "h y = I y = M y = E y = 0; spray 2-homogeneous",
            residual,
            t.euler_rel,
            points,
        );
    }

    // curvature structure: K_y(y) = 0 and g-self-adjointness
    {
        let mut worst = 0.0f64;
        let mut failure = None;
        for (x, y) in &sites {
            match structural_deviations(&m, x, y) {
                Ok((a, b)) => worst = worst.max(a).max(b),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let residual = if failure.is_some() { f64::MAX } else { worst };
        report.record(
            "curvature_structure",
            "K_y(y) = 0; g_y(K_y u, v) = g_y(u, K_y v)",
            residual,
            t.structural_rel,
            points,
        );
    }

    // Landsberg dual route and the J trace relation
    {
        let mut worst = 0.0f64;
        let mut failure = None;
        for (x, y) in sites.iter().take(points.min(10)) {
            let r: finsler::Result<f64> = (|| {
                let ctx = TensorContext::new(&m, x, y, ORDER_FULL)?;
                let closed = landsberg_closed_form_ctx(&ctx)?;
                let transported = landsberg_transport(&m, x, y)?;
                let mut dev = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            dev = dev.max((closed.get(i, j, k) - transported.get(i, j, k)).abs());
                        }
                    }
                }
                let j_trace = mean_landsberg(&m, x, y)?;
                let j_flow = mean_landsberg_flow(&m, x, y)?;
                for i in 0..n {
                    dev = dev.max((j_trace.c[i] - j_flow.c[i]).abs());
                }
                Ok(dev)
            })();
            match r {
                Ok(dev) => worst = worst.max(dev),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let residual = if failure.is_some() { f64::MAX } else { worst };
        report.record(
            "landsberg_dual_route",
            "L transport = L closed form; J trace = J flow",
            residual,
            t.landsberg_dual,
            points.min(10),
        );
    }

    // Matsumoto norm: a vanishing test on Randers-type families, an
    // informational measurement otherwise.
    {
        let mut worst_ratio = 0.0f64;
        let mut worst_norm = 0.0f64;
        let mut failure = None;
        for (x, _) in &sites {
            match tensors::torsion_norm_estimate(&m, x, cfg.samples.directions, &mut rng) {
                Ok(est) => {
                    worst_ratio = worst_ratio.max(est.matsumoto / (1.0 + est.cartan));
                    worst_norm = worst_norm.max(est.matsumoto);
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
        if expects_vanishing_matsumoto(m.family()) {
            let residual = if failure.is_some() { f64::MAX } else { worst_ratio };
            report.record(
                "matsumoto_vanishing",
                "|M| <= tol (1 + |C|) for Randers-type metrics",
                residual,
                t.randers_matsumoto_rel,
                points,
            );
        } else {
            report.skip(
                "matsumoto_vanishing",
                format!(
                    "family `{}` is not Randers-type; measured |M| = {:.6e} (informational)",
                    m.family().as_str(),
                    worst_norm
                ),
            );
        }
    }

    // scalar-curvature characterization
    let mut scalar_ok = true;
    {
        let mut worst = 0.0f64;
        let mut failure = None;
        for (x, y) in &sites {
            let r: finsler::Result<f64> = (|| {
                let res = curvature::scalar_residual(&m, x, y)?;
                let kv = riemann_curvature(&m, x, y)?;
                Ok(res / kv.norm().max(1e-300))
            })();
            match r {
                Ok(rel) => worst = worst.max(rel),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let residual = if failure.is_some() { f64::MAX } else { worst };
        scalar_ok = report.record(
            "scalar_curvature",
            "K^i_k = K F^2 h^i_k",
            residual,
            t.scalar_residual_rel,
            points,
        );
    }

    // derivative of the characterization
    if scalar_ok {
        let mut worst = 0.0f64;
        let mut failure = None;
        for (x, y) in &sites {
            let r: finsler::Result<f64> = (|| {
                let res = mkdiff_residual(&m, x, y)?;
                let kv = riemann_curvature(&m, x, y)?;
                Ok(res / kv.norm().max(1e-300))
            })();
            match r {
                Ok(rel) => worst = worst.max(rel),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let residual = if failure.is_some() { f64::MAX } else { worst };
        report.record(
            "scalar_curvature_derivative",
            "K^i_{k.l} = K_{.l} F^2 h^i_k + K {2 y_l d^i_k - y_k d^i_l - g_kl y^i}",
            residual,
            t.mkdiff_rel,
            points,
        );
    } else {
        report.skip(
            "scalar_curvature_derivative",
            "metric is not of scalar curvature at the sampled points".into(),
        );
    }

    // flow identities
    {
        let mut worst_l = 0.0f64;
        let mut worst_j = 0.0f64;
        let mut worst_fl = 0.0f64;
        let mut worst_fj = 0.0f64;
        let mut any_flag = false;
        let mut failure = None;
        for (x, y) in &sites {
            match identity_residuals(&m, x, y) {
                Ok(ids) => {
                    worst_l = worst_l.max(ids.landsberg_rate.relative());
                    worst_j = worst_j.max(ids.mean_rate.relative());
                    if let (Some(a), Some(b)) = (ids.flag_rate_full, ids.flag_rate_mean) {
                        any_flag = true;
                        worst_fl = worst_fl.max(a.relative());
                        worst_fj = worst_fj.max(b.relative());
                    }
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let fix = |v: f64| if failure.is_some() { f64::MAX } else { v };
        report.record(
            "landsberg_rate",
            "(L along flow)' + C K = curvature contractions",
            fix(worst_l),
            t.identity_residual_rel,
            points,
        );
        report.record(
            "mean_landsberg_rate",
            "(J along flow)' + I K = curvature trace",
            fix(worst_j),
            t.identity_residual_rel,
            points,
        );
        if any_flag && scalar_ok {
            report.record(
                "landsberg_rate_scalar_form",
                "(L along flow)' = -F^2/3 {K_{.i} h_jk + ... + 3 K C_ijk}",
                fix(worst_fl),
                t.identity_residual_rel,
                points,
            );
            report.record(
                "mean_landsberg_rate_scalar_form",
                "(J along flow)' = -F^2/3 {(n+1) K_{.k} + 3 K I_k}",
                fix(worst_fj),
                t.identity_residual_rel,
                points,
            );
        } else {
            report.skip(
                "landsberg_rate_scalar_form",
                "requires scalar curvature".into(),
            );
            report.skip(
                "mean_landsberg_rate_scalar_form",
                "requires scalar curvature".into(),
            );
        }
    }

    // torsion ODE and the comparison margin along profiles
    {
        let mut worst_ode = 0.0f64;
        let mut worst_margin = f64::INFINITY;
        let mut margin_applicable = false;
        let mut skip_reason: Option<String> = None;
        let mut failure = None;
        for _ in 0..points.min(3) {
            let x = sample_point(&m, &mut rng);
            let y = random_unit(&mut rng, n);
            let u = random_unit(&mut rng, n);
            let first = matsumoto_profile(
                &m,
                &x,
                &y,
                &u,
                cfg.samples.profile_span,
                cfg.samples.profile_steps,
                None,
            );
            match first {
                Ok(rep) => {
                    worst_ode = worst_ode.max(rep.verdicts.ode_residual_rel);
                    // choose the bound from the observed curvature
                    let k_max = rep
                        .curvature
                        .iter()
                        .fold(f64::NEG_INFINITY, |mx, v| mx.max(*v));
                    if k_max < -1e-9 && !rep.verdicts.vacuous_torsion {
                        let a = (-k_max).sqrt() * (1.0 - 1e-9);
                        if let Ok(rep2) = matsumoto_profile(
                            &m,
                            &x,
                            &y,
                            &u,
                            cfg.samples.profile_span,
                            cfg.samples.profile_steps,
                            Some(a),
                        ) {
                            if let Some(margin) = rep2.verdicts.mvc_min_margin {
                                margin_applicable = true;
                                worst_margin = worst_margin.min(margin);
                            }
                        }
                    } else if skip_reason.is_none() {
                        skip_reason = Some(if rep.verdicts.vacuous_torsion {
                            "torsion vanishes along sampled geodesics".into()
                        } else {
                            "flag curvature is not negative along sampled geodesics".into()
                        });
                    }
                }
                Err(GeomError::NotScalarCurvature { .. }) => {
                    skip_reason = Some("metric is not of scalar curvature".into());
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
        if scalar_ok && failure.is_none() {
            report.record(
                "torsion_ode",
                "M'' + K F^2 M = 0 along unit-speed geodesics",
                worst_ode,
                t.ode_residual_rel,
                points.min(3),
            );
        } else if let Some(msg) = failure {
            report.record(
                "torsion_ode",
                &format!("M'' + K F^2 M = 0 [{msg}]"),
                f64::MAX,
                t.ode_residual_rel,
                points.min(3),
            );
        } else {
            report.skip("torsion_ode", "requires scalar curvature".into());
        }
        if margin_applicable {
            report.record(
                "comparison_margin",
                "|M(t)| >= |M(0) cosh(a t) + M'(0) sinh(a t)/a| for K <= -a^2",
                (-worst_margin).max(0.0),
                t.mvc_margin,
                points.min(3),
            );
        } else {
            report.skip(
                "comparison_margin",
                skip_reason.unwrap_or_else(|| "no negative curvature bound applies".into()),
            );
        }
    }

    report.finalize();
    let rendered = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    Ok((rendered, report.to_table(), report.overall_pass))
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

pub struct ProfileOutput {
    pub csv: String,
    pub verdict_json: String,
    pub pass: bool,
}

pub fn run_profile(
    cfg: &RunConfig,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    t_max: Option<f64>,
    steps: Option<usize>,
    bound: Option<f64>,
) -> Result<ProfileOutput, Failure> {
    let m = build(cfg)?;
    let span = t_max.unwrap_or(cfg.samples.profile_span);
    let steps = steps.unwrap_or(cfg.samples.profile_steps);
    let report = matsumoto_profile(&m, x, y, u, span, steps, bound)
        .map_err(|e| Failure::Run(e.to_string()))?;
    let pass = report.verdicts.ode_pass && report.verdicts.mvc_pass.unwrap_or(true);
    let verdict_json = serde_json::to_string_pretty(&serde_json::json!({
        "verdicts": report.verdicts,
        "bound": report.bound,
        "bound_note": report.bound_note,
        "margin_interval": report.margin_interval,
        "fd_error_estimate": report.fd_error_estimate,
        "torsion_rate0": report.torsion_rate0,
    }))
    .expect("verdict serializes");
    Ok(ProfileOutput {
        csv: report.to_csv(),
        verdict_json,
        pass,
    })
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

/// Randers classification by the vanishing criterion: a one-sided numerical
/// necessary-condition test (estimates are lower bounds of the norm).
pub fn run_classify(
    cfg: &RunConfig,
    points: Option<usize>,
    dirs: Option<usize>,
    format: Format,
) -> Result<String, Failure> {
    let m = build(cfg)?;
    if m.dim() < 3 {
        return Err(Failure::Config(format!(
            "classification requires dimension n >= 3, got n = {}",
            m.dim()
        )));
    }
    let points = points.unwrap_or(cfg.samples.points);
    let dirs = dirs.unwrap_or(cfg.samples.directions);
    let threshold = cfg.tolerances.randers_matsumoto_rel;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_ratio = 0.0f64;
    let mut witness: Option<(Vec<f64>, f64)> = None;
    for _ in 0..points {
        let x = sample_point(&m, &mut rng);
        let est = tensors::torsion_norm_estimate(&m, &x, dirs, &mut rng)
            .map_err(|e| Failure::Run(e.to_string()))?;
        let ratio = est.matsumoto / (1.0 + est.cartan);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            witness = Some((x, est.matsumoto));
        }
    }
    let compatible = worst_ratio <= threshold;
    let verdict = if compatible {
        "randers-compatible"
    } else {
        "not-randers"
    };
    match format {
        Format::Json => {
            let mut body = serde_json::json!({
                "verdict": verdict,
                "max_ratio": worst_ratio,
                "threshold": threshold,
                "points": points,
                "directions": dirs,
            });
            if !compatible {
                if let Some((x, norm)) = witness {
                    body["witness"] = serde_json::json!({"x": x, "matsumoto_norm": norm});
                }
            }
            Ok(serde_json::to_string_pretty(&body).expect("verdict serializes"))
        }
        Format::Csv => {
            let mut out = String::from("key,value\n");
            out.push_str(&format!("verdict,{verdict}\n"));
            out.push_str(&format!("max_ratio,{worst_ratio}\n"));
            out.push_str(&format!("threshold,{threshold}\n"));
            out.push_str(&format!("points,{points}\n"));
            out.push_str(&format!("directions,{dirs}\n"));
            if !compatible {
                if let Some((x, norm)) = witness {
                    let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                    out.push_str(&format!("witness_x,\"{}\"\n", coords.join(";")));
                    out.push_str(&format!("witness_matsumoto_norm,{norm}\n"));
                }
            }
            Ok(out)
        }
    }
}
