//! One check per acceptance criterion; each prints a single PASS/FAIL line.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofold::ensemble::{first_crossing_spread, follows_cycle_grammar, run_ensemble, EnsembleConfig};
use twofold::filippov::{integrate, lambda_star, EventKind, IntegratorOptions};
use twofold::model::{eval_h, f_and_f_lambda, field_with_forces, grad_h, ContactKind};
use twofold::scan::{combined_cells_are_case1, scan, ScanWindow};
use twofold::singularity::*;
use twofold::tyre::{force_moment_raw, force_moment_scaled, TyreParams};
use twofold::{BaseParams, SystemParams};

use common::{designed, free_body_field, rel_err, sliding_points_in, OMEGA_STAR, R_STAR};

fn report(n: u32, name: &str, pass: bool, details: String) {
    println!("ACCEPTANCE {n} {name}: {} ({details})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {details}");
}

#[test]
fn criterion_1_designer_reproduction() {
    let base = BaseParams::reference();
    let d = design_singularity(R_STAR, OMEGA_STAR, &base).unwrap();
    // independent evaluation: h = 0 for v, h_x . f_lambda = 0 for kappa
    let (sg, cg) = base.gamma.sin_cos();
    let v_oracle = (OMEGA_STAR - base.omega0) * (base.d - R_STAR * cg / sg);
    let kappa_oracle = -(base.beta * base.beta * sg * sg + R_STAR * R_STAR) / (R_STAR * cg);
    let worst = d.residual_h.abs().max(d.residual_plus.abs()).max(d.residual_minus.abs());
    let pass = (d.v_star - -0.0301217).abs() <= 1e-6
        && (d.kappa - 0.272415).abs() <= 1e-5
        && (d.v_star - v_oracle).abs() <= 1e-12
        && (d.kappa - kappa_oracle).abs() <= 1e-12
        && worst <= 1e-9;
    report(
        1,
        "designer reproduction",
        pass,
        format!("v* = {:.7}, kappa = {:.6}, k2 = {:.6}, max residual = {worst:.1e}", d.v_star, d.kappa, d.k2),
    );
}

#[test]
fn criterion_2_teixeira_classification() {
    let (p, d) = designed();
    let r = normal_form(&d.x_star, &p);
    let (l1, l2) = (r.eig1.unwrap_or(f64::NAN), r.eig2.unwrap_or(f64::NAN));
    let pass = r.case_tag == CaseTag::Case1
        && r.kpp < 0.0
        && 0.0 < r.kmm
        && r.j1 < 0.0
        && r.j2 < 0.0
        && r.j1 * r.j2 > 1.0
        && l1 < 0.0
        && l2 < 0.0;
    report(
        2,
        "Teixeira classification",
        pass,
        format!(
            "{:?}: K++ = {:.4e}, K-- = {:.4e}, J1 = {:.4}, J2 = {:.4}, eigenvalues {l1:.4}, {l2:.4}",
            r.case_tag, r.kpp, r.kmm, r.j1, r.j2
        ),
    );
}

#[test]
fn criterion_3_scan() {
    let res = scan(&BaseParams::reference(), &ScanWindow::default(), 8);
    let combined = res.cells.iter().filter(|c| c.combined() == Some(true)).count();
    let near = res.nearest(R_STAR, OMEGA_STAR);
    let all_case1 = combined_cells_are_case1(&res);
    let pass = res.cells.len() == 64 && combined > 0 && near.combined() == Some(true) && all_case1;
    report(
        3,
        "condition scan",
        pass,
        format!(
            "{combined}/64 combined cells, nearest node ({:.4}, {:.4}) combined = {:?}, all combined case 1 = {all_case1}",
            near.r_star,
            near.omega_star,
            near.combined()
        ),
    );
}

#[test]
fn criterion_4_special_cases() {
    let side = BaseParams { gamma: FRAC_PI_2, ..BaseParams::reference() }.with_design(2.2, 0.27).unwrap();
    let side_roots = find_singularities(&side, &SearchGrid::around(&side));

    let p = BaseParams { gamma: 0.0, ..BaseParams::reference() }.with_design(2.2, 0.3).unwrap();
    let roots = find_singularities(&p, &SearchGrid::around(&p));
    let (k, w0) = (p.kappa, p.omega0);
    let v_closed =
        (p.d * (p.k2 / p.m * (k + p.r0) - k * w0 * w0) - p.c1 / p.m * w0) / (p.d * p.c2 / p.m - 2.0 * k * w0);
    let (mut jump, mut dv, mut omega_exact) = (f64::INFINITY, f64::INFINITY, false);
    if let Some(x) = roots.first() {
        let (f0, fl) = f_and_f_lambda(x, &p);
        jump = ((f0 + p.mu * fl) - (f0 - p.mu * fl)).norm();
        dv = (x.v - v_closed).abs();
        omega_exact = x.omega == p.omega0;
    }
    let pass = side_roots.is_empty() && roots.len() == 1 && jump <= 1e-12 && omega_exact && dv <= 1e-10;
    report(
        4,
        "special cases",
        pass,
        format!(
            "gamma = pi/2: {} roots; gamma = 0: {} roots, |f+ - f-| = {jump:.1e}, omega* = omega0 {omega_exact}, |v* - closed form| = {dv:.1e}",
            side_roots.len(),
            roots.len()
        ),
    );
}

#[test]
fn criterion_5_sliding_integrity() {
    let (p, _) = designed();
    let opts = IntegratorOptions { t_max: 30.0, ..Default::default() };
    let (mut max_h, mut max_l, mut max_exit, mut exits, mut segments) = (0.0f64, 0.0f64, 0.0f64, 0, 0);
    let mut ok = true;
    for s in sliding_points_in(&p, (0.05, 0.6), (-2.0, 0.5), 10, 2024) {
        let Ok(segs) = integrate(s, ContactKind::Stick, &p, &opts) else {
            ok = false;
            continue;
        };
        for seg in segs.iter().filter(|s| s.mode == ContactKind::Stick) {
            segments += 1;
            for smp in &seg.samples {
                max_h = max_h.max(eval_h(&smp.state, &p).abs());
                max_l = max_l.max(smp.lambda.map_or(f64::INFINITY, f64::abs));
            }
            if seg.terminal.kind == EventKind::SlidingExit {
                exits += 1;
                let l = lambda_star(&seg.terminal.state, &p).unwrap_or(f64::INFINITY);
                max_exit = max_exit.max((l.abs() - p.mu).abs());
            }
        }
    }
    let pass = ok && segments >= 10 && max_h <= 1e-8 && max_l <= p.mu + 1e-9 && max_exit <= 1e-8;
    report(
        5,
        "sliding integrity",
        pass,
        format!(
            "{segments} stick segments, max |h| = {max_h:.1e}, max |lambda*| = {max_l:.10}, {exits} exits with max ||lambda*| - mu| = {max_exit:.1e}"
        ),
    );
}

#[test]
fn criterion_6_tyre_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_jump: f64 = 0.0;
    for _ in 0..50 {
        let tp = TyreParams::new(
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.1..3.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.05..1.0),
        )
        .unwrap();
        let (enter, leave) = tp.boundary_angles();
        for phi in [enter, leave] {
            let lo = force_moment_raw((phi - 1e-12).max(0.0), &tp).unwrap();
            let hi = force_moment_raw((phi + 1e-12).min(FRAC_PI_2), &tp).unwrap();
            let scale = lo.force.abs().max(1.0);
            worst_jump = worst_jump.max((lo.force - hi.force).abs() / scale);
            worst_jump = worst_jump.max((lo.moment - hi.moment).abs() / lo.moment.abs().max(1.0));
        }
    }
    let (p, _) = designed();
    let mut worst_limit: f64 = 0.0;
    for g in [0.3, -0.3, 2.0, -2.0] {
        for side in [1.0, -1.0] {
            let (f, m) = force_moment_scaled(side * 1e-14, g, &p).unwrap();
            worst_limit = worst_limit.max((f - side * p.mu).abs());
            worst_limit = worst_limit.max((m - side * f64::signum(g) * p.mu * p.kappa).abs());
        }
    }
    let pass = worst_jump <= 1e-8 && worst_limit <= 1e-10;
    report(
        6,
        "tyre model consistency",
        pass,
        format!("max relative jump at regime boundaries = {worst_jump:.1e}, max surface-limit error = {worst_limit:.1e}"),
    );
}

#[test]
fn criterion_7_recurrence() {
    let (p, d) = designed();
    let cfg = EnsembleConfig { n: 32, eps: 1e-3, seed: 1, t_max: 200.0, return_radius: 5e-3 };
    let out = run_ensemble(&d.x_star, &p, &cfg, &IntegratorOptions::default()).unwrap();
    let good = out.iter().filter(|o| o.returned && follows_cycle_grammar(o)).count();
    let spread = first_crossing_spread(&out);
    let mut terminals = std::collections::BTreeMap::new();
    for o in &out {
        let key = o.terminal().map_or("error", |e| e.kind.label());
        *terminals.entry(key).or_insert(0) += 1;
    }
    let fraction = good as f64 / cfg.n as f64;
    let pass = fraction >= 0.75 && spread > 0.0;
    report(
        7,
        "recurrence",
        pass,
        format!("{good}/{} members follow the cycle and return, first-crossing spread = {spread:.2e}, terminal events {terminals:?}", cfg.n),
    );
}

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams::new(SystemParams {
        d: rng.gen_range(-2.0..2.0),
        m: rng.gen_range(0.1..5.0),
        beta: rng.gen_range(0.01..1.0),
        c1: rng.gen_range(0.0..0.1),
        c2: rng.gen_range(0.0..0.1),
        k2: rng.gen_range(0.0..5.0),
        r0: rng.gen_range(-0.5..0.5),
        omega0: rng.gen_range(-3.0..3.0),
        mu: rng.gen_range(0.1..3.0),
        gamma: rng.gen_range(-PI + 1e-9..PI),
        kappa: rng.gen_range(0.01..1.0),
    })
    .unwrap()
}

#[test]
fn criterion_8_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_field: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let s = twofold::State::new(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        let (f, m) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let a = field_with_forces(&s, f, m, &p);
        let b = free_body_field(&s, f, m, &p);
        worst_field = worst_field.max((a - b).norm() / b.norm());
    }
    let base = BaseParams::reference();
    let mut worst_k: f64 = 0.0;
    let mut points = vec![(R_STAR, OMEGA_STAR)];
    for _ in 0..10 {
        points.push((rng.gen_range(0.15..0.5), rng.gen_range(-2.0..-0.1)));
    }
    for (r, w) in points {
        let d = design_singularity(r, w, &base).unwrap();
        let p = base.with_design(d.k2, d.kappa).unwrap();
        let an = kappa_constants(&d.x_star, &p);
        let fd = kappa_constants_fd(&d.x_star, &p);
        for (x, y) in [(an.kpp, fd.kpp), (an.kpm, fd.kpm), (an.kmp, fd.kmp), (an.kmm, fd.kmm)] {
            worst_k = worst_k.max(rel_err(x, y));
        }
        // the designed point stays a two-fold of the projected field
        let (f0, fl) = f_and_f_lambda(&d.x_star, &p);
        assert!(grad_h(&d.x_star, &p).dot(&f0).abs() < 1e-9 && grad_h(&d.x_star, &p).dot(&fl).abs() < 1e-9);
    }
    let pass = worst_field <= 1e-10 && worst_k <= 1e-6;
    report(
        8,
        "oracle equivalence",
        pass,
        format!("max relative field error = {worst_field:.1e}, max relative curvature-constant error = {worst_k:.1e}"),
    );
}
