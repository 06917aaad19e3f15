//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured margin. Criterion 11 (the CLI contract) lives in the CLI
//! crate's own acceptance target.

mod common;

use std::time::Instant;

use finsler::curvature::{
    flag_curvature, identity_residuals, matsumoto_profile, mkdiff_residual, riemann_curvature,
    scalar_residual,
};
use finsler::geodesics::{landsberg_transport, mean_landsberg, mean_landsberg_flow};
use finsler::metrics::{Metric, MetricSpec};
use finsler::poly::{Polynomial, Term};
use finsler::tensors::{
    self, landsberg_closed_form_ctx, TensorContext, ORDER_CONNECTION, ORDER_FULL,
};
use finsler::tol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn randers_dx1() -> MetricSpec {
    MetricSpec::randers(MetricSpec::klein(3), None, vec![0.1, 0.0, 0.0])
}

/// beta = d(0.05 x1 x2) + 0.05 dx2
fn randers_potential() -> MetricSpec {
    MetricSpec::randers(
        MetricSpec::klein(3),
        Some(Polynomial::new(
            3,
            vec![Term {
                coef: 0.05,
                exps: vec![1, 1, 0],
            }],
        )),
        vec![0.0, 0.05, 0.0],
    )
}

fn non_scalar_control() -> MetricSpec {
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
    MetricSpec::riemannian(
        3,
        vec![
            vec![one.clone(), zero.clone(), zero.clone()],
            vec![zero.clone(), a22, zero.clone()],
            vec![zero.clone(), zero.clone(), one],
        ],
    )
}

#[test]
fn criterion_01_randers_matsumoto_vanishing() {
    let start = Instant::now();
    for (tag, spec) in [("0.1 dx1", randers_dx1()), ("potential", randers_potential())] {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1001);
        let mut worst_ratio = 0.0f64;
        for _ in 0..50 {
            let x = common::sample_point(&m, &mut rng);
            let est = tensors::torsion_norm_estimate(&m, &x, 100, &mut rng).unwrap();
            worst_ratio = worst_ratio.max(est.matsumoto / (1.0 + est.cartan));
        }
        assert!(
            worst_ratio <= tol::RANDERS_MATSUMOTO_REL,
            "randers ({tag}): |M| ratio {worst_ratio:.3e}"
        );
        println!("CRITERION 1 ({tag}): PASS, max |M|/(1+|C|) = {worst_ratio:.3e}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.1}s over budget");
    println!("CRITERION 1 runtime: {elapsed:.1}s");
}

#[test]
fn criterion_02_non_randers_witnesses() {
    let start = Instant::now();
    for (tag, spec) in [
        ("funk_convex", MetricSpec::funk_convex_quartic(3)),
        ("minkowski", MetricSpec::minkowski_quartic(3, 0.1)),
    ] {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1002);
        let mut witness = 0.0f64;
        for _ in 0..5 {
            let x = common::sample_point(&m, &mut rng);
            let est = tensors::matsumoto_norm(&m, &x, 100, &mut rng).unwrap();
            witness = witness.max(est);
        }
        assert!(
            witness > tol::NON_RANDERS_WITNESS_MIN,
            "{tag}: best witness {witness:.3e}"
        );
        println!("CRITERION 2 ({tag}): PASS, |M| witness = {witness:.3e}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.1}s over budget");
    println!("CRITERION 2 runtime: {elapsed:.1}s");
}

#[test]
fn criterion_03_constant_flag_curvature() {
    let cases = [
        ("funk_ball", MetricSpec::funk_ball(3), -0.25, 1e-6, 200),
        ("hilbert_ball", MetricSpec::hilbert_ball(3), -1.0, 1e-6, 200),
        (
            "funk_convex",
            MetricSpec::funk_convex_quartic(3),
            -0.25,
            1e-5,
            50,
        ),
    ];
    for (tag, spec, expect, tolerance, flags) in cases {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1003);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < flags {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            let u = common::random_unit(&mut rng, 3);
            match flag_curvature(&m, &x, &y, &u) {
                Ok(f) => {
                    worst = worst.max((f - expect).abs());
                    done += 1;
                }
                Err(finsler::GeomError::DegenerateFlag) => continue,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(
            worst <= tolerance,
            "{tag}: max |flag - ({expect})| = {worst:.3e}"
        );
        println!("CRITERION 3 ({tag}): PASS, max deviation {worst:.3e} over {flags} flags");
    }
}

#[test]
fn criterion_04_scalar_curvature_characterization() {
    let scalar_specs = [
        ("klein", MetricSpec::klein(3)),
        ("funk_ball", MetricSpec::funk_ball(3)),
        ("hilbert_ball", MetricSpec::hilbert_ball(3)),
        ("funk_convex", MetricSpec::funk_convex_quartic(3)),
        ("randers_closed", randers_potential()),
    ];
    for (tag, spec) in scalar_specs {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1004);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            let res = scalar_residual(&m, &x, &y).unwrap();
            let kv = riemann_curvature(&m, &x, &y).unwrap();
            worst = worst.max(res / kv.norm().max(1e-300));
        }
        assert!(
            worst <= tol::SCALAR_RESIDUAL_REL,
            "{tag}: worst relative residual {worst:.3e}"
        );
        println!("CRITERION 4 ({tag}): PASS, worst residual {worst:.3e}");
    }

    // negative control: product-type metric with unequal sectional curvatures
    let m = Metric::build(&non_scalar_control()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut best = 0.0f64;
    for _ in 0..50 {
        let x = common::sample_point(&m, &mut rng);
        let y = common::random_unit(&mut rng, 3);
        let res = scalar_residual(&m, &x, &y).unwrap();
        let kv = riemann_curvature(&m, &x, &y).unwrap();
        if kv.norm() > 1e-10 {
            best = best.max(res / kv.norm());
        }
    }
    assert!(best > 1e-2, "negative control relative residual {best:.3e}");
    println!("CRITERION 4 (negative control): PASS, residual {best:.3e} > 1e-2");
}

#[test]
fn criterion_05_identity_suite() {
    let start = Instant::now();
    for (tag, spec) in [
        ("funk_ball", MetricSpec::funk_ball(3)),
        ("funk_convex", MetricSpec::funk_convex_quartic(3)),
    ] {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1005);
        let mut worst = 0.0f64;
        let mut worst_mkdiff = 0.0f64;
        for _ in 0..20 {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            let ids = identity_residuals(&m, &x, &y).unwrap();
            worst = worst
                .max(ids.landsberg_rate.relative())
                .max(ids.mean_rate.relative())
                .max(ids.flag_rate_full.unwrap().relative())
                .max(ids.flag_rate_mean.unwrap().relative());
            let mk = mkdiff_residual(&m, &x, &y).unwrap();
            let kv = riemann_curvature(&m, &x, &y).unwrap();
            worst_mkdiff = worst_mkdiff.max(mk / kv.norm().max(1e-300));
        }
        assert!(
            worst <= tol::IDENTITY_RESIDUAL_REL,
            "{tag}: flow identities rel {worst:.3e}"
        );
        assert!(
            worst_mkdiff <= tol::IDENTITY_RESIDUAL_REL,
            "{tag}: vertical-derivative identity rel {worst_mkdiff:.3e}"
        );
        println!(
            "CRITERION 5 ({tag}): PASS, flow identities {worst:.3e}, vertical {worst_mkdiff:.3e}"
        );
    }

    // trivial-vanishing paths on Riemannian metrics
    for (tag, spec) in [("euclidean", MetricSpec::euclidean(3)), ("klein", MetricSpec::klein(3))] {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1005);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            let ids = identity_residuals(&m, &x, &y).unwrap();
            worst = worst
                .max(ids.landsberg_rate.relative())
                .max(ids.mean_rate.relative());
            if let (Some(f1), Some(f2)) = (ids.flag_rate_full, ids.flag_rate_mean) {
                worst = worst.max(f1.relative()).max(f2.relative());
            }
            let mk = mkdiff_residual(&m, &x, &y).unwrap();
            let kv = riemann_curvature(&m, &x, &y).unwrap();
            worst = worst.max(mk / kv.norm().max(1.0));
        }
        assert!(
            worst <= tol::RIEMANNIAN_IDENTITY_REL,
            "{tag}: residual {worst:.3e}"
        );
        println!("CRITERION 5 ({tag}): PASS, residual {worst:.3e}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "runtime {elapsed:.1}s over budget");
    println!("CRITERION 5 runtime: {elapsed:.1}s");
}

#[test]
fn criterion_06_torsion_ode_along_geodesics() {
    let m = Metric::build(&MetricSpec::funk_convex_quartic(3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mut worst_rel = 0.0f64;
    let mut worst_shrink = f64::INFINITY;
    for i in 0..10 {
        let x = common::sample_point(&m, &mut rng);
        let y = common::random_unit(&mut rng, 3);
        let u = common::random_unit(&mut rng, 3);
        let report = matsumoto_profile(&m, &x, &y, &u, 2.0, 400, None).unwrap();
        assert!(!report.verdicts.vacuous_torsion);
        worst_rel = worst_rel.max(report.verdicts.ode_residual_rel);
        assert!(
            report.verdicts.ode_residual_rel <= tol::ODE_RESIDUAL_REL,
            "profile {i}: residual rel {:.3e}",
            report.verdicts.ode_residual_rel
        );
        // Convergence order: at 400 steps the residual already sits at the
        // f64 rounding floor of the second-derivative stencil (~eps M / h^2,
        // observed ~1e-10 M, four orders below the tolerance), so the O(h^4)
        // shrink is demonstrated on a coarse pair where truncation still
        // dominates (measured ~16x for every profile at 25 -> 50).
        let coarse = matsumoto_profile(&m, &x, &y, &u, 2.0, 25, None).unwrap();
        let fine = matsumoto_profile(&m, &x, &y, &u, 2.0, 50, None).unwrap();
        let coarse_max = coarse.residual.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        let fine_max = fine.residual.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        let shrink = coarse_max / fine_max.max(1e-300);
        worst_shrink = worst_shrink.min(shrink);
        assert!(
            shrink >= 8.0,
            "profile {i}: halving shrank the residual only {shrink:.2}x ({coarse_max:.3e} -> {fine_max:.3e})"
        );
    }
    println!(
        "CRITERION 6: PASS, worst residual rel {worst_rel:.3e}, worst halving shrink {worst_shrink:.1}x"
    );
}

#[test]
fn criterion_07_comparison_margin_on_rescaled_metric() {
    // F/2 multiplies flag curvature by 4, so measured K(t) <= -1 + 1e-6 and
    // the bound a = 1 applies (the verbatim comparison inequality).
    let m = Metric::build(&MetricSpec::funk_convex_quartic(3).with_scale(0.5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let mut worst_margin = f64::INFINITY;
    for i in 0..10 {
        let x = common::sample_point(&m, &mut rng);
        let y = common::random_unit(&mut rng, 3);
        let u = common::random_unit(&mut rng, 3);
        let report = matsumoto_profile(&m, &x, &y, &u, 2.0, 400, Some(1.0)).unwrap();
        let k_max = report
            .curvature
            .iter()
            .fold(f64::NEG_INFINITY, |mx, v| mx.max(*v));
        assert!(k_max <= -1.0 + 1e-6, "profile {i}: K reaches {k_max}");
        let pass = report
            .verdicts
            .mvc_pass
            .unwrap_or_else(|| panic!("profile {i}: margin skipped: {:?}", report.bound_note));
        let margin = report.verdicts.mvc_min_margin.unwrap();
        worst_margin = worst_margin.min(margin);
        assert!(pass, "profile {i}: min margin {margin:.3e}");
    }
    println!("CRITERION 7: PASS, worst margin {worst_margin:.3e} >= -1e-6");
}

#[test]
fn criterion_08_structural_curvature_invariants() {
    let catalog = [
        MetricSpec::euclidean(3),
        MetricSpec::klein(3),
        MetricSpec::funk_ball(3),
        MetricSpec::hilbert_ball(3),
        MetricSpec::funk_convex_quartic(3),
        MetricSpec::minkowski_quartic(3, 0.1),
        randers_dx1(),
        randers_potential(),
    ];
    for spec in catalog {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1008);
        for _ in 0..100 {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            // the constructor enforces K_y(y) = 0 and g-self-adjointness
            riemann_curvature(&m, &x, &y).unwrap_or_else(|e| {
                panic!("{:?}: structural invariant failed: {e}", m.family())
            });
        }
        println!(
            "CRITERION 8 ({}): PASS, structural invariants at 100 samples",
            m.family().as_str()
        );
    }

    // spray formula vs Levi-Civita on two random polynomial metrics
    let mut rng = ChaCha8Rng::seed_from_u64(10088);
    for t in 0..2 {
        let spec = common::random_polynomial_metric(3, &mut rng);
        let m = Metric::build(&spec).unwrap();
        let coeffs = common::polynomial_coefficients(spec.params.a.clone().unwrap());
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            let kv = riemann_curvature(&m, &x, &y).unwrap();
            let oracle = common::levi_civita_k_matrix(&coeffs, &x, &y);
            let scale = 1.0 + kv.norm();
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((kv.k_mat[(i, j)] - oracle[(i, j)]).abs() / scale);
                }
            }
        }
        assert!(
            worst <= tol::LEVI_CIVITA_ORACLE_TOL,
            "random metric {t}: deviation {worst:.3e}"
        );
        println!("CRITERION 8 (random polynomial {t}): PASS, deviation {worst:.3e}");
    }
}

#[test]
fn criterion_09_dual_oracle_landsberg() {
    let m = Metric::build(&MetricSpec::funk_ball(3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let mut worst_pair = 0.0f64;
    let mut worst_trace = 0.0f64;
    for _ in 0..50 {
        let x = common::sample_point(&m, &mut rng);
        let y = common::random_unit(&mut rng, 3);
        let ctx = TensorContext::new(&m, &x, &y, ORDER_FULL).unwrap();
        let closed = landsberg_closed_form_ctx(&ctx).unwrap();
        let transported = landsberg_transport(&m, &x, &y).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst_pair =
                        worst_pair.max((closed.get(i, j, k) - transported.get(i, j, k)).abs());
                }
            }
        }
        // J = g^{jk} L_ijk vs J from differencing I along the flow
        let j_trace = mean_landsberg(&m, &x, &y).unwrap();
        let j_flow = mean_landsberg_flow(&m, &x, &y).unwrap();
        for i in 0..3 {
            worst_trace = worst_trace.max((j_trace.c[i] - j_flow.c[i]).abs());
        }
    }
    assert!(
        worst_pair <= tol::LANDSBERG_DUAL_TOL,
        "transport vs closed form deviation {worst_pair:.3e}"
    );
    assert!(
        worst_trace <= tol::LANDSBERG_DUAL_TOL,
        "J trace vs flow deviation {worst_trace:.3e}"
    );
    println!(
        "CRITERION 9: PASS, dual-path {worst_pair:.3e}, trace relation {worst_trace:.3e}"
    );
}

#[test]
fn criterion_10_homogeneity_and_euler_suite() {
    let start = Instant::now();
    let catalog = [
        MetricSpec::euclidean(3),
        MetricSpec::klein(3),
        MetricSpec::funk_ball(3),
        MetricSpec::hilbert_ball(3),
        MetricSpec::funk_convex_quartic(3),
        MetricSpec::minkowski_quartic(3, 0.1),
        randers_dx1(),
    ];
    for spec in catalog {
        let m = Metric::build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1010);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let x = common::sample_point(&m, &mut rng);
            let y = common::random_unit(&mut rng, 3);
            let ctx = TensorContext::new(&m, &x, &y, ORDER_FULL).unwrap();

            // g 0-homogeneity and C (-1)-homogeneity under y -> 2y
            let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
            let ctx2 = TensorContext::new_y_only(&m, &x, &y2, ORDER_CONNECTION).unwrap();
            let g1 = ctx.g().unwrap();
            let g2 = ctx2.g().unwrap();
            let c1 = tensors::cartan_torsion_ctx(&ctx).unwrap();
            let c2 = tensors::cartan_torsion_ctx(&ctx2).unwrap();
            let gscale = g1.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((g1[(i, j)] - g2[(i, j)]).abs() / (1.0 + gscale));
                    for k in 0..3 {
                        worst = worst.max(
                            (c2.get(i, j, k) - 0.5 * c1.get(i, j, k)).abs()
                                / (1.0 + c1.max_abs()),
                        );
                    }
                }
            }

            // Euler contractions
            let f = ctx.f();
            let h = tensors::angular_metric_ctx(&ctx).unwrap();
            let im = tensors::mean_cartan_ctx(&ctx).unwrap();
            let mt = tensors::matsumoto_torsion_ctx(&ctx).unwrap();
            let e = tensors::mean_berwald_ctx(&ctx).unwrap();
            let escale = e.m.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            for i in 0..3 {
                let hy: f64 = (0..3).map(|j| h.m[(i, j)] * y[j]).sum();
                worst = worst.max(hy.abs() / (1.0 + f * f));
                let ey: f64 = (0..3).map(|j| e.m[(i, j)] * y[j]).sum();
                worst = worst.max(ey.abs() / (1.0 + escale));
                for j in 0..3 {
                    let my: f64 = (0..3).map(|k| mt.get(i, j, k) * y[k]).sum();
                    worst = worst.max(my.abs() / (1.0 + mt.max_abs()));
                }
            }
            let iy: f64 = im.c.iter().zip(&y).map(|(a, b)| a * b).sum();
            worst = worst.max(iy.abs());

            // spray 2-homogeneity
            let gx1 = ctx.spray_values().unwrap();
            let cts = TensorContext::new(&m, &x, &y2, tensors::ORDER_VALUES).unwrap();
            let gx2 = cts.spray_values().unwrap();
            let sscale = gx1.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            for i in 0..3 {
                worst = worst.max((gx2[i] - 4.0 * gx1[i]).abs() / (1.0 + sscale));
            }
        }
        assert!(
            worst <= tol::EULER_REL,
            "{:?}: homogeneity/Euler deviation {worst:.3e}",
            m.family()
        );
        println!(
            "CRITERION 10 ({}): PASS, worst deviation {worst:.3e}",
            m.family().as_str()
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime {elapsed:.1}s over budget");
    println!("CRITERION 10 runtime: {elapsed:.1}s");
}
