//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (visible with `--nocapture`).
//!
//! The expensive intermediate tables (nine-grid Psi rows, the solved
//! systems) are shared across criteria through lazy statics. The
//! optional four-hundred-row refinement run is gated behind
//! `CHEN_ACCEPT_FOURHUNDRED=1`.

use chen_core::buchstab::{build_spline, error_bound, ode_reference, omega_closed, omega_limit};
use chen_core::cache::{cache_key, PsiCache};
use chen_core::chen::{
    build_grid, interpolation_experiment, solve_grid, BSource, ChenCtx, GridKind, GridReport,
};
use chen_core::goldbach::{comet_records, d_count, goldbach_witness, sieve, twin_prime_constant, CometFilter};
use chen_core::quadrature::{integrate_ordered, QmcPoints, QuadratureConfig};
use chen_core::wu::{
    alpha_set, i1_domain, i2_domain, phi_low, wu_rows, PsiKind, WuCtx, WuOptions, WuParams,
    WU_PUBLISHED_PSI,
};
use std::sync::OnceLock;
use std::time::Instant;

/// Recomputed `Psi_1` column, rows 5..9.
const REF_PSI1: [f64; 5] = [0.00947409, 0.00659089, 0.00354796, 0.00105838, 0.00000000];
/// Recomputed `Psi_2` column, rows 1..4.
const REF_PSI2: [f64; 4] = [0.01615180, 0.01547663, 0.01406834, 0.01187935];
/// Nine-grid solution and constant from the same pipeline.
const REF_X1_NINE: f64 = 0.0227656;
const REF_C_STAR_NINE: f64 = 7.8178752;
/// From Wu's published table.
const REF_X1_WU: f64 = 0.0223939;
const REF_C_STAR_WU: f64 = 7.82085;
const REF_C_STAR_FORTY: f64 = 7.81696;
/// Wu's published solution vector.
const REF_X_WU: [f64; 9] = [
    0.0223939, 0.0217196, 0.0202876, 0.0181433, 0.0158644, 0.0129923, 0.0100686, 0.0078162,
    0.0072943,
];

fn wu_ctx() -> &'static WuCtx {
    static CTX: OnceLock<WuCtx> = OnceLock::new();
    CTX.get_or_init(|| {
        let spline = build_spline(20, 10).expect("spline build");
        WuCtx::new(spline, QuadratureConfig::default(), WuOptions::default()).expect("wu context")
    })
}

struct NineGrid {
    report: GridReport,
    rows_psi: Vec<f64>,
}

fn nine_grid() -> &'static NineGrid {
    static NINE: OnceLock<NineGrid> = OnceLock::new();
    NINE.get_or_init(|| {
        let ctx = ChenCtx::new(wu_ctx(), None);
        let d = build_grid(GridKind::Nine).expect("nine grid");
        let rows = ctx.build_b(&d).expect("nine-grid B");
        let rows_psi: Vec<f64> = rows.iter().map(|r| r.psi_value).collect();
        let (report, _) = solve_grid(&ctx, GridKind::Nine, BSource::Computed).expect("nine solve");
        NineGrid { report, rows_psi }
    })
}

fn verdict(criterion: &str, pass: bool, detail: &str, started: Instant) -> bool {
    println!(
        "criterion {criterion}: {} ({:.1}s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    pass
}

#[test]
fn criterion_01_spline_matches_closed_form() {
    let started = Instant::now();
    let mut worst = (0.0f64, 0.0f64); // (diff/bound ratio, at u)
    for degree in [10usize, 20] {
        let spline = build_spline(degree, 10).unwrap();
        let bound = error_bound(degree);
        let mut k = 0usize;
        loop {
            let u = 2.0 + 1e-3 * k as f64;
            if u > 3.0 {
                break;
            }
            let diff = (spline.eval(u).unwrap() - omega_closed(u).unwrap()).abs();
            if diff / bound > worst.0 {
                worst = (diff / bound, u);
            }
            k += 1;
        }
    }
    let in_time = started.elapsed().as_secs_f64() < 1.0;
    let pass = worst.0 <= 1.0 && in_time;
    assert!(
        verdict(
            "1 (spline vs closed form)",
            pass,
            &format!("max diff/bound = {:.3} at u = {:.3}", worst.0, worst.1),
            started
        ),
        "worst ratio {} at u = {}, in_time = {in_time}",
        worst.0,
        worst.1
    );
}

#[test]
fn criterion_02_spline_matches_ode_reference() {
    let started = Instant::now();
    let spline = build_spline(20, 10).unwrap();
    let ode = ode_reference(10.5, 1e-9).unwrap();
    let mut worst = 0.0f64;
    for k in 0..=900usize {
        let u = 1.0 + 0.01 * k as f64;
        let diff = (spline.eval(u).unwrap() - ode.eval(u).unwrap()).abs();
        worst = worst.max(diff);
    }
    let in_time = started.elapsed().as_secs_f64() < 10.0;
    let pass = worst <= 1e-8 && in_time;
    assert!(
        verdict(
            "2 (spline vs ODE)",
            pass,
            &format!("max deviation {worst:.3e}"),
            started
        ),
        "max deviation {worst:.3e}, in_time = {in_time}"
    );
}

#[test]
fn criterion_03_constant_tail() {
    let started = Instant::now();
    let spline = build_spline(20, 10).unwrap();
    let lim = omega_limit();
    let mut worst = 0.0f64;
    let mut u = 11.0;
    while u <= 40.0 {
        worst = worst.max((spline.eval(u).unwrap() - lim).abs());
        u += 0.25;
    }
    let pass = worst <= 1e-12;
    assert!(
        verdict("3 (tail)", pass, &format!("max |eval - e^-gamma| = {worst:.1e}"), started),
        "worst {worst:.3e}"
    );
}

#[test]
fn criterion_04_psi1_rows() {
    let started = Instant::now();
    let rows = &nine_grid().rows_psi;
    let mut detail = String::new();
    let mut pass = true;
    for (k, want) in REF_PSI1.iter().enumerate() {
        let got = rows[4 + k];
        let ok = (got - want).abs() <= 1e-4;
        pass &= ok;
        detail.push_str(&format!("row {}: {:.8} (ref {:.8}) ", k + 5, got, want));
    }
    let in_time = started.elapsed().as_secs_f64() < 600.0;
    assert!(
        verdict("4 (Psi_1 rows 5-9)", pass && in_time, detail.trim(), started),
        "{detail}"
    );
}

#[test]
fn criterion_05_psi2_rows() {
    let started = Instant::now();
    let rows = &nine_grid().rows_psi;
    let mut detail = String::new();
    let mut pass = true;
    for (k, want) in REF_PSI2.iter().enumerate() {
        let got = rows[k];
        let ok = (got - want).abs() <= 1e-3;
        pass &= ok;
        detail.push_str(&format!("row {}: {:.8} (ref {:.8}) ", k + 1, got, want));
    }
    let in_time = started.elapsed().as_secs_f64() < 3600.0;
    assert!(
        verdict("5 (Psi_2 rows 1-4)", pass && in_time, detail.trim(), started),
        "{detail}"
    );
}

#[test]
fn criterion_06_nine_grid_solve() {
    let started = Instant::now();
    let report = &nine_grid().report;
    let x1_ok = (report.x1 - REF_X1_NINE).abs() <= 5e-4;
    let c_ok = (report.c_star - REF_C_STAR_NINE).abs() <= 4e-3;

    // warm cache must reproduce the identical constant
    let dir = tempfile::tempdir().unwrap();
    let ctx = wu_ctx();
    let key = cache_key(20, 10, ctx.cfg(), ctx.options());
    let cache = PsiCache::open(dir.path(), &key).unwrap();
    let chen_cold = ChenCtx::new(ctx, Some(&cache));
    let (cold, _) = solve_grid(&chen_cold, GridKind::Nine, BSource::Computed).unwrap();
    let cache_warm = PsiCache::open(dir.path(), &key).unwrap();
    let chen_warm = ChenCtx::new(ctx, Some(&cache_warm));
    let (warm, _) = solve_grid(&chen_warm, GridKind::Nine, BSource::Computed).unwrap();
    let cache_ok = cold.c_star == warm.c_star && cold.canonical_json() == warm.canonical_json();

    let pass = x1_ok && c_ok && cache_ok;
    assert!(
        verdict(
            "6 (nine-grid solve)",
            pass,
            &format!(
                "x1 = {:.7} (ref {REF_X1_NINE}), C* = {:.7} (ref {REF_C_STAR_NINE}), warm cache identical: {cache_ok}",
                report.x1, report.c_star
            ),
            started
        ),
        "x1 = {}, c_star = {}, cache_ok = {cache_ok}",
        report.x1,
        report.c_star
    );
}

#[test]
fn criterion_07_wu_cross_validation() {
    let started = Instant::now();
    let ctx = ChenCtx::new(wu_ctx(), None);
    let (report, system) = solve_grid(&ctx, GridKind::Nine, BSource::WuPublished).unwrap();
    let x1_ok = (report.x1 - REF_X1_WU).abs() <= 5e-4;
    let c_ok = (report.c_star - REF_C_STAR_WU).abs() <= 4e-3;
    let mut vec_ok = true;
    let mut worst = 0.0f64;
    for (i, want) in REF_X_WU.iter().enumerate() {
        let diff = (system.x[i] - want).abs();
        worst = worst.max(diff);
        vec_ok &= diff <= 5e-4;
    }
    let pass = x1_ok && c_ok && vec_ok;
    assert!(
        verdict(
            "7 (Wu cross-validation)",
            pass,
            &format!(
                "x1 = {:.7} (ref {REF_X1_WU}), C* = {:.5} (ref {REF_C_STAR_WU}), max |X - X_Wu| = {worst:.2e}",
                report.x1, report.c_star
            ),
            started
        ),
        "x1 = {}, c_star = {}, worst vector deviation {worst:.3e}",
        report.x1,
        report.c_star
    );
}

#[test]
fn criterion_08_refinement_trend() {
    let started = Instant::now();
    let nine_c = nine_grid().report.c_star;
    let ctx = ChenCtx::new(wu_ctx(), None);
    let (forty, _) = solve_grid(&ctx, GridKind::Forty, BSource::Computed).unwrap();
    let forty_ok = (forty.c_star - REF_C_STAR_FORTY).abs() <= 4e-3;
    let order_ok = nine_c > forty.c_star;

    let mut detail = format!(
        "C*(nine) = {:.7}, C*(forty) = {:.7} (ref {REF_C_STAR_FORTY})",
        nine_c, forty.c_star
    );
    let mut fourhundred_ok = true;
    if std::env::var("CHEN_ACCEPT_FOURHUNDRED").as_deref() == Ok("1") {
        let (fh, _) = solve_grid(&ctx, GridKind::FourHundred, BSource::Computed).unwrap();
        fourhundred_ok = forty.c_star >= fh.c_star;
        detail.push_str(&format!(", C*(fourhundred) = {:.7}", fh.c_star));
    } else {
        detail.push_str(", fourhundred skipped (set CHEN_ACCEPT_FOURHUNDRED=1)");
    }
    let in_time = started.elapsed().as_secs_f64() < 2700.0;
    let pass = forty_ok && order_ok && fourhundred_ok && in_time;
    assert!(
        verdict("8 (refinement trend)", pass, &detail, started),
        "{detail}"
    );
}

#[test]
fn criterion_09_interpolation_experiment() {
    let started = Instant::now();
    let ctx = ChenCtx::new(wu_ctx(), None);
    let mut c_stars = Vec::new();
    let mut root = f64::NAN;
    for n in [9usize, 45, 100, 200] {
        let rep = interpolation_experiment(&ctx, n).unwrap();
        root = rep.crossing_root;
        c_stars.push(rep.c_star);
    }
    let root_ok = (2.50..=2.60).contains(&root);
    let non_increasing = c_stars.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let total_drop = c_stars.first().unwrap() - c_stars.last().unwrap();
    let drop_ok = total_drop >= 0.0 && total_drop < 0.01;
    let in_time = started.elapsed().as_secs_f64() < 900.0;
    let pass = root_ok && non_increasing && drop_ok && in_time;
    assert!(
        verdict(
            "9 (interpolation experiment)",
            pass,
            &format!("crossing = {root:.4}, C* over n: {c_stars:?}, drop = {total_drop:.5}"),
            started
        ),
        "root = {root}, c_stars = {c_stars:?}"
    );
}

#[test]
fn criterion_10_goldbach_counts() {
    let started = Instant::now();
    let pt = sieve(1_000_000).unwrap();
    let exact_ok = d_count(10, &pt).unwrap() == 2
        && d_count(36, &pt).unwrap() == 4
        && d_count(66, &pt).unwrap() == 6
        && d_count(90, &pt).unwrap() == 9;
    let mut all_decompose = true;
    for n in (4..=1_000_000usize).step_by(2) {
        if goldbach_witness(n, &pt).unwrap().is_none() {
            all_decompose = false;
            break;
        }
    }
    let in_time = started.elapsed().as_secs_f64() < 30.0;
    let pass = exact_ok && all_decompose && in_time;
    assert!(
        verdict(
            "10 (Goldbach counts)",
            pass,
            &format!("exact counts ok: {exact_ok}, D(N) >= 1 up to 1e6: {all_decompose}"),
            started
        ),
        "exact_ok = {exact_ok}, all_decompose = {all_decompose}, in_time = {in_time}"
    );
}

#[test]
fn criterion_11_twin_prime_constant() {
    let started = Instant::now();
    let c0 = twin_prime_constant(1_000_000).unwrap();
    let in_time = started.elapsed().as_secs_f64() < 5.0;
    let pass = (c0 - 0.66016).abs() <= 5e-5 && in_time;
    assert!(
        verdict("11 (twin-prime constant)", pass, &format!("C_0 = {c0:.7}"), started),
        "C_0 = {c0}, in_time = {in_time}"
    );
}

#[test]
fn criterion_12_property_suites() {
    let started = Instant::now();
    let ctx = wu_ctx();
    let cfg = ctx.cfg();
    let mut failures: Vec<String> = Vec::new();

    // ordered-simplex volumes: the 3-D I_1 domain and a 4-D chain
    let dom = i1_domain(2.6, 3.58);
    let vol = integrate_ordered(|_| 1.0, &dom, cfg).unwrap();
    let side: f64 = 1.0 / 2.6 - 1.0 / 3.58;
    let exact = side.powi(3) / 6.0;
    if ((vol - exact) / exact).abs() > 1e-6 {
        failures.push(format!("I_1 simplex volume {vol} vs {exact}"));
    }
    let row1 = wu_rows()[0].params;
    for i in [16usize, 20, 21] {
        let d = i2_domain(i, &row1).unwrap();
        let pts = QmcPoints::generate(&d, 200_000).unwrap();
        let qmc = pts.integrate(|_| 1.0).unwrap();
        let ex = exact_domain_volume(i, &row1);
        if ((qmc - ex) / ex).abs() > 1e-3 {
            failures.push(format!("D_2,{i} volume {qmc:.6e} vs {ex:.6e}"));
        }
    }

    // constant-tail factorisation at phi = 30 (rel 1e-3)
    let full = ctx.i1(30.0, 2.6, 3.58).unwrap();
    let weight = integrate_ordered(|a| 1.0 / (a[0] * a[1] * a[1] * a[2]), &dom, cfg).unwrap();
    if ((full - omega_limit() * weight) / full).abs() > 1e-3 {
        failures.push("I_1 tail factorisation".to_string());
    }

    // phi feasibility: bisection vs analytic corner on every pipeline
    // domain with the row-1 parameters
    for i in 9..=21usize {
        let d = i2_domain(i, &row1).unwrap();
        let divisor = match i {
            9..=15 => 1,
            16..=19 => 2,
            20 => 3,
            _ => 4,
        };
        let analytic = phi_low(&d, divisor);
        let numeric = ctx.i2_phi_low_bisect(i, &row1, 0.001).unwrap();
        if (analytic - numeric).abs() > 0.002 {
            failures.push(format!(
                "I_2,{i} phi_low: analytic {analytic:.4} vs bisect {numeric:.4}"
            ));
        }
    }

    // indicator-zero: with k1 = k2 the interval [alpha_9, alpha_1]
    // degenerates to a point, and at t = k1 - 1 its log term is singular;
    // the kernel must stay finite because the dead indicator suppresses
    // the term entirely
    let degenerate = WuParams::psi2(2.2, 4.54, 3.2, 3.2, 2.44);
    let al = alpha_set(&degenerate).unwrap();
    assert_eq!(al.a(9), al.a(1));
    let probe = ctx.xi2(3.2 - 1.0, &degenerate).unwrap();
    if !probe.is_finite() {
        failures.push(format!("xi2 at the dead-indicator probe: {probe}"));
    }

    // solver residual and dominant first coordinate on the nine grid
    let nine = nine_grid();
    let b_inf = nine
        .rows_psi
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if nine.report.residual > 1e-10 * (1.0 + b_inf) {
        failures.push(format!("residual {:.2e}", nine.report.residual));
    }
    if !nine.report.x1_is_max {
        failures.push("x1 is not the largest coordinate".to_string());
    }

    let in_time = started.elapsed().as_secs_f64() < 300.0;
    let pass = failures.is_empty() && in_time;
    let detail = if failures.is_empty() {
        "all properties hold".to_string()
    } else {
        failures.join("; ")
    };
    assert!(
        verdict("12 (property suites)", pass, &detail, started),
        "failures: {failures:?}"
    );
}

/// Exact volume of the pipeline domains used in criterion 12, computed
/// from the chain structure (products of box widths and ordered-run
/// simplex volumes).
fn exact_domain_volume(i: usize, p: &WuParams) -> f64 {
    let [_, k2, k3] = p.ks.unwrap();
    let s = p.s;
    match i {
        16 => {
            let w = 1.0 / k3 - 1.0 / k2;
            w.powi(4) / 24.0
        }
        20 => {
            let t = 1.0 / k3 - 1.0 / k2;
            let w = 1.0 / s - 1.0 / k3;
            t * w.powi(4) / 24.0
        }
        21 => {
            let w = 1.0 / s - 1.0 / k3;
            w.powi(6) / 720.0
        }
        _ => unreachable!(),
    }
}

#[test]
fn nine_grid_row_kinds_match_published_layout() {
    // sanity on the shared fixture: kinds and parameters line up with the
    // published table
    let d = build_grid(GridKind::Nine).unwrap();
    assert_eq!(d.len(), 9);
    for (row, published) in d.rows.iter().zip(wu_rows()) {
        assert_eq!(row.kind(), published.kind);
        assert!((row.s() - published.params.s).abs() < 1e-12);
    }
    assert_eq!(WU_PUBLISHED_PSI.len(), 9);
    assert_eq!(PsiKind::Psi2, wu_rows()[0].kind);
}

#[test]
fn comet_dataset_shape() {
    // dataset used by the comet plots: row counts and the 12p filter
    let pt = sieve(25_000).unwrap();
    let c0 = twin_prime_constant(1_000_000).unwrap();
    let all = comet_records(25_000, CometFilter::All, &pt, c0).unwrap();
    assert_eq!(all.len(), 12_499);
    let twelve = comet_records(25_000, CometFilter::MultiplesOf12P, &pt, c0).unwrap();
    assert!(twelve.iter().all(|r| r.n % 12 == 0));
    // D/(2 Theta) stays in a sane band for large N
    for r in all.iter().filter(|r| r.n >= 1000) {
        let ratio = r.d as f64 / r.two_theta;
        assert!(
            (0.5..=1.5).contains(&ratio),
            "N = {}: D/(2 Theta) = {ratio}",
            r.n
        );
    }
}
