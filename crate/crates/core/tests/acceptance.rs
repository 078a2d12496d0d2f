//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `cargo test --test acceptance -- --nocapture`).

mod common;

use std::time::Instant;

use common::{golden_corpus, kepler_2d, kepler_perturbed, oscillator_1d, oscillator_2d};

use noether_core::bracket::{
    pbracket, verify_commutator_homomorphism, verify_symmetry_action,
};
use noether_core::diff::diff;
use noether_core::eval::{eval, Assignment};
use noether_core::expr::Expr;
use noether_core::flows::{
    flow_gauge, flow_ode, integrate, monitor, radius_minima, InitialState, MonitorOptions,
    SeriesFlow,
};
use noether_core::lagrangian::LagrangianSystem;
use noether_core::liouville::{autonomous_integrals, build_chart, verify_family};
use noether_core::noether::{
    c_to_p, classify, is_conserved, is_eom_symmetry, is_variational_symmetry, p_to_c,
    ConservationStatus, SymmetryClass, SymmetryGenerator,
};
use noether_core::parse::parse;
use noether_core::sample::{random_polynomial, NumericEq};
use noether_core::sym::{Sym, VariableSpace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn verdict(id: &str, detail: &str, pass: bool) {
    println!(
        "[{}] criterion {id}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn state_of(golden: &common::Golden) -> InitialState {
    InitialState {
        t: golden.probe_state.0,
        q: golden.probe_state.1.clone(),
        qd: golden.probe_state.2.clone(),
    }
}

/// 1. Noether roundtrip over the golden corpus: `p_to_c(c_to_p(C))`
///    reproduces each declared conserved quantity up to an additive
///    constant (64 points, tol 1e-9), in under 10 s total.
#[test]
fn acceptance_01_noether_roundtrip() {
    let started = Instant::now();
    let template = NumericEq::default(); // 64 trials, tol 1e-9
    let mut all = true;
    let mut detail = String::new();
    for golden in golden_corpus(&template) {
        let chk = golden.checker(&template);
        for (name, cq) in &golden.conserved {
            let gen = c_to_p(&golden.sys, cq).expect("golden generators exist");
            let rebuilt = match p_to_c(&golden.sys, &gen, &golden.base, &chk.salted(7)) {
                Ok(c) => c,
                Err(e) => {
                    all = false;
                    detail = format!("{}/{name}: {e}", golden.name);
                    break;
                }
            };
            // Difference must be an additive constant (64 points, 1e-9).
            let d = Expr::sub(rebuilt.expr.clone(), cq.expr.clone());
            if !chk.salted(0x72d).is_constant(&d).is_equal() {
                all = false;
                detail = format!("{}/{name}: roundtrip differs beyond a constant", golden.name);
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        all = false;
    }
    if detail.is_empty() {
        detail = format!("all declared quantities reproduced, {elapsed:.2} s (< 10 s)");
    }
    verdict("1 (Noether roundtrip)", &detail, all);
}

/// 2. Symmetry action `X_(C) _| dF == {F, C}` for every golden (system,
///    C) pair against 20 random polynomial observables of degree <= 3.
#[test]
fn acceptance_02_symmetry_action() {
    let template = NumericEq::default();
    let mut all = true;
    let mut detail = String::new();
    for golden in golden_corpus(&template) {
        let chk = golden.checker(&template);
        let n = golden.sys.dof();
        let mut syms = vec![Sym::Time];
        for i in 0..n {
            syms.push(Sym::coord(i));
            syms.push(Sym::vel(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5_2);
        for (name, cq) in &golden.conserved {
            for k in 0..20 {
                let f = random_polynomial(&syms, 3, 4, &mut rng);
                let ok = verify_symmetry_action(&golden.sys, cq, &f, &chk.salted(k))
                    .unwrap_or(false);
                if !ok {
                    all = false;
                    detail = format!("{}/{name} failed on observable #{k}", golden.name);
                }
            }
        }
    }
    if detail.is_empty() {
        detail = "20 random degree-3 observables per (system, C) pair, tol 1e-9".into();
    }
    verdict("2 (symmetry action via bracket)", &detail, all);
}

/// 3. Commutator homomorphism for all pairs within each golden family,
///    including the non-commuting free-particle pair {qd, q - t qd}.
#[test]
fn acceptance_03_commutator_homomorphism() {
    let template = NumericEq::default();
    let mut all = true;
    let mut detail = String::new();
    let mut pairs = 0usize;
    for golden in golden_corpus(&template) {
        let chk = golden.checker(&template);
        for i in 0..golden.conserved.len() {
            for j in (i + 1)..golden.conserved.len() {
                pairs += 1;
                let ok = verify_commutator_homomorphism(
                    &golden.sys,
                    &golden.conserved[i].1,
                    &golden.conserved[j].1,
                    &chk.salted((i * 31 + j) as u64),
                )
                .unwrap_or(false);
                if !ok {
                    all = false;
                    detail = format!(
                        "{}: pair ({}, {})",
                        golden.name, golden.conserved[i].0, golden.conserved[j].0
                    );
                }
            }
        }
    }
    // The free-particle pair {qd, q - t qd} has bracket -1 (constant):
    // both commutator sides must be the zero generator.
    let free = common::free_particle_1d(&template);
    let br = pbracket(&free.sys, &free.conserved[0].1.expr, &free.conserved[1].1.expr);
    let constant_bracket = template.check(&br, &Expr::int(-1)).is_equal();
    if !constant_bracket {
        all = false;
        detail = "free-particle bracket {p, b} is not the constant -1".into();
    }
    if detail.is_empty() {
        detail = format!("{pairs} in-family pairs plus the constant-bracket pair, tol 1e-9");
    }
    verdict("3 (commutator homomorphism)", &detail, all);
}

/// 4. Bracket axioms: antisymmetry, Leibniz, Jacobi, 100 randomized
///    trials per golden system at tol 1e-8.
#[test]
fn acceptance_04_bracket_axioms() {
    let template = NumericEq::default().tol(1e-8).trials(5);
    let mut all = true;
    let mut detail = String::new();
    for golden in golden_corpus(&template) {
        let chk = golden.checker(&template);
        let n = golden.sys.dof();
        let mut syms = vec![Sym::Time];
        for i in 0..n {
            syms.push(Sym::coord(i));
            syms.push(Sym::vel(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xa415);
        // 20 random triples x 5 sample points each = 100 point trials
        // per axiom per system.
        for round in 0..20u64 {
            let f = random_polynomial(&syms, 3, 3, &mut rng);
            let g = random_polynomial(&syms, 3, 3, &mut rng);
            let h = random_polynomial(&syms, 2, 3, &mut rng);
            let anti = Expr::add(
                pbracket(&golden.sys, &f, &g),
                pbracket(&golden.sys, &g, &f),
            );
            let leibniz_l = pbracket(&golden.sys, &f, &Expr::mul(g.clone(), h.clone()));
            let leibniz_r = Expr::add(
                Expr::mul(g.clone(), pbracket(&golden.sys, &f, &h)),
                Expr::mul(pbracket(&golden.sys, &f, &g), h.clone()),
            );
            let jacobi = Expr::sum(vec![
                pbracket(&golden.sys, &pbracket(&golden.sys, &f, &g), &h),
                pbracket(&golden.sys, &pbracket(&golden.sys, &g, &h), &f),
                pbracket(&golden.sys, &pbracket(&golden.sys, &h, &f), &g),
            ]);
            if !chk.salted(round).is_zero(&anti).is_equal()
                || !chk.salted(100 + round).holds(&leibniz_l, &leibniz_r)
                || !chk.salted(200 + round).is_zero(&jacobi).is_equal()
            {
                all = false;
                detail = format!("{}: axiom violated in round {round}", golden.name);
            }
        }
    }
    if detail.is_empty() {
        detail = "antisymmetry, Leibniz, Jacobi: 100 randomized trials per system, tol 1e-8".into();
    }
    verdict("4 (bracket axioms)", &detail, all);
}

/// 5. Runge-Lenz phenomenology: globally conserved on the Kepler orbit,
///    locally conserved with one jump per periapsis on the perturbed
///    orbit, with jump count matching the radius-minimum count exactly;
///    under 30 s.
#[test]
fn acceptance_05_lrl_phenomenology() {
    let started = Instant::now();
    let template = NumericEq::default();
    let no_params: Vec<Option<f64>> = Vec::new();

    // E = -0.3 ellipse: r0 = 1 tangential start, v = sqrt(1.4).
    let v0 = (2.0f64 * 0.7).sqrt();
    let init = InitialState { t: 0.0, q: vec![1.0, 0.0], qd: vec![0.0, v0] };
    let a_axis: f64 = 1.0 / (2.0 * 0.3);
    let period = 2.0 * std::f64::consts::PI * a_axis.powf(1.5);

    let kepler = kepler_2d(&template);
    let traj = integrate(&kepler.sys, &init, 5.0 * period, 1e-10, &no_params);
    let mut all = traj.truncated.is_none();
    let a1 = kepler.conserved.iter().find(|(n, _)| *n == "A1").unwrap();
    let a2 = kepler.conserved.iter().find(|(n, _)| *n == "A2").unwrap();
    let verdicts = monitor(
        &kepler.sys,
        &traj,
        &[&a1.1, &a2.1],
        &MonitorOptions { drift_tol: 1e-7, ..Default::default() },
        &no_params,
    );
    let mut detail = String::new();
    for v in &verdicts {
        if v.classification != ConservationStatus::NumericGlobal
            || !v.jump_times.is_empty()
            || v.max_segment_drift >= 1e-7
        {
            all = false;
            detail = format!(
                "Kepler LRL component not global: {:?}, drift {:.2e}, {} jumps",
                v.classification,
                v.max_segment_drift,
                v.jump_times.len()
            );
        }
    }

    // Perturbed potential, same setup: the periapsis angle jumps once
    // per periapsis passage.
    let perturbed = kepler_perturbed(&template);
    let ptraj = integrate(&perturbed.sys, &init, 5.0 * period, 1e-10, &no_params);
    all &= ptraj.truncated.is_none();
    let angle = is_conserved(
        &perturbed.sys,
        &common::perturbed_lrl_angle(&perturbed.sys),
        &perturbed.checker(&template),
    );
    let e_lz: Vec<_> = perturbed.conserved.iter().map(|(_, c)| c).collect();
    let pverdicts = monitor(
        &perturbed.sys,
        &ptraj,
        &[e_lz[0], e_lz[1], &angle],
        &MonitorOptions::default(),
        &no_params,
    );
    for v in &pverdicts[..2] {
        if v.classification != ConservationStatus::NumericGlobal {
            all = false;
            detail = format!("perturbed E/Lz not global: {:?}", v.classification);
        }
    }
    let angle_verdict = &pverdicts[2];
    if angle_verdict.classification != ConservationStatus::NumericLocal
        || angle_verdict.max_segment_drift >= 1e-6
    {
        all = false;
        detail = format!(
            "perturbed LRL angle: {:?}, drift {:.2e}, {} jumps",
            angle_verdict.classification,
            angle_verdict.max_segment_drift,
            angle_verdict.jump_times.len()
        );
    }
    // Jump count must equal the periapsis-passage count exactly, and
    // each jump must sit at a radius minimum.
    let minima = radius_minima(&ptraj, 1200);
    if angle_verdict.jump_times.len() != minima.len() {
        all = false;
        detail = format!(
            "{} jumps vs {} radius minima",
            angle_verdict.jump_times.len(),
            minima.len()
        );
    } else {
        for (jump, peri) in angle_verdict.jump_times.iter().zip(&minima) {
            if (jump - peri).abs() > 1e-2 {
                all = false;
                detail = format!("jump at {jump} vs periapsis at {peri}");
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        all = false;
        detail = format!("took {elapsed:.1} s (>= 30 s)");
    }
    if detail.is_empty() {
        detail = format!(
            "Kepler LRL global (drift < 1e-7, 0 jumps); perturbed angle local with \
             {} jumps == {} periapses, {elapsed:.1} s (< 30 s)",
            angle_verdict.jump_times.len(),
            minima.len()
        );
    }
    verdict("5 (LRL phenomenology)", &detail, all);
}

/// 6. Energy/time translation: `c_to_p(H)` gives exactly `P^i = qd^i`
///    for every autonomous golden system, and the gauge flow with
///    `tau = -1` moves `t` by `-eps` while freezing the state.
#[test]
fn acceptance_06_energy_time_translation() {
    let template = NumericEq::default();
    let no_params: Vec<Option<f64>> = Vec::new();
    let mut all = true;
    let mut detail = String::new();
    for golden in golden_corpus(&template) {
        if !golden.sys.is_autonomous() {
            continue;
        }
        let chk = golden.checker(&template);
        let h = golden.sys.hamiltonian_lagrangian_vars();
        let cq = is_conserved(&golden.sys, &h, &chk);
        let gen = c_to_p(&golden.sys, &cq).unwrap();
        for (i, p) in gen.components().iter().enumerate() {
            if *p != Expr::vel(i) {
                all = false;
                detail = format!("{}: P^{} != qd{}", golden.name, i + 1, i + 1);
            }
        }
        let state = state_of(&golden);
        for eps in [0.5, 2.0] {
            let map = flow_gauge(
                &golden.sys,
                &gen,
                &Expr::int(-1),
                &state,
                eps,
                1e-12,
                &no_params,
            );
            let (t_end, end) = map.end_state();
            let mut delta = (t_end - (state.t - eps)).abs();
            for i in 0..golden.sys.dof() {
                delta += (end[i] - state.q[i]).abs();
                delta += (end[golden.sys.dof() + i] - state.qd[i]).abs();
            }
            if delta >= 1e-9 {
                all = false;
                detail = format!("{}: gauge flow moved the state by {delta:.2e}", golden.name);
            }
        }
    }
    if detail.is_empty() {
        detail = "P == qd exactly and tau = -1 gauge flow is a pure time shift up to eps = 2".into();
    }
    verdict("6 (energy is time translation)", &detail, all);
}

/// 7. Liouville pipeline: 1D oscillator temporal integral drift < 1e-8
///    over a quarter period in-chart; 2D separable oscillator gives 4
///    integrals with full-rank Jacobian and canonical pairs on-chart.
#[test]
fn acceptance_07_liouville_pipeline() {
    let template = NumericEq::default();
    let no_params: Vec<Option<f64>> = Vec::new();
    let mut all = true;
    let mut detail = String::new();

    // 1D oscillator: quarter period inside the qd > 0 chart.
    let osc = oscillator_1d(&template);
    let energy = osc.conserved[0].1.clone();
    let family = verify_family(&osc.sys, vec![energy], &template).unwrap();
    let seed = InitialState { t: 0.0, q: vec![-(0.25f64 * std::f64::consts::PI).sin()], qd: vec![(0.25f64 * std::f64::consts::PI).cos()] };
    let chart = build_chart(&osc.sys, &family, &seed, &[0.0], 0.0, &no_params).unwrap();
    let integrals = autonomous_integrals(&osc.sys, &family, &chart, &template, &no_params).unwrap();
    let temporal = &integrals[0];
    let traj = integrate(
        &osc.sys,
        &seed,
        0.5 * std::f64::consts::PI,
        1e-12,
        &no_params,
    );
    let mut base = None;
    let mut drift: f64 = 0.0;
    for k in 0..traj.len() {
        let a = Assignment::state(traj.times()[k], traj.q_at_node(k), traj.qd_at_node(k));
        match eval(&temporal.expr, &a) {
            Ok(v) => match base {
                None => base = Some(v),
                Some(b) => drift = drift.max((v - b).abs()),
            },
            Err(e) => {
                all = false;
                detail = format!("temporal integral left its chart: {e}");
                break;
            }
        }
    }
    if drift >= 1e-8 {
        all = false;
        detail = format!("oscillator T drift {drift:.2e} >= 1e-8");
    }

    // 2D separable oscillator: completeness and canonical pairs.
    let osc2 = oscillator_2d(&template);
    let h = osc2.conserved[0].1.clone();
    let e2 = osc2.conserved[1].1.clone();
    let family2 = verify_family(&osc2.sys, vec![h, e2], &template).unwrap();
    let seed2 = InitialState { t: 0.0, q: vec![0.0, 0.0], qd: vec![1.0, 0.8] };
    let chart2 = build_chart(&osc2.sys, &family2, &seed2, &[0.0, 0.0], 0.0, &no_params).unwrap();
    let integrals2 =
        autonomous_integrals(&osc2.sys, &family2, &chart2, &template, &no_params).unwrap();
    let full: Vec<Expr> = family2
        .integrals
        .iter()
        .map(|c| c.expr.clone())
        .chain(integrals2.iter().map(|i| i.expr.clone()))
        .collect();
    if full.len() != 4 {
        all = false;
        detail = format!("expected 4 integrals, got {}", full.len());
    }
    // Jacobian rank 4 at 20 in-chart samples.
    let chart_chk = chart2.chart_checker(&template);
    let state_syms = [Sym::coord(0), Sym::coord(1), Sym::vel(0), Sym::vel(1)];
    let grad: Vec<Vec<Expr>> = full
        .iter()
        .map(|c| state_syms.iter().map(|s| diff(c, *s)).collect())
        .collect();
    let grad_refs: Vec<&Expr> = grad.iter().flatten().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x2a11);
    let mut rank_ok = 0;
    for _ in 0..20 {
        if let Some((_, vals)) = chart_chk.sample_point(&grad_refs, &mut rng) {
            let mut m = vals.clone();
            let mut c = vec![0.0; 4];
            c[0] = 1.0;
            if noether_core::matrix::solve_in_place(&mut m, &mut c, 4) {
                rank_ok += 1;
            }
        }
    }
    if rank_ok < 20 {
        all = false;
        detail = format!("full-rank check passed at only {rank_ok}/20 points");
    }
    // {Theta^i, C_j} == delta within 1e-7 on-chart.
    let pair_chk = chart2.chart_checker(&template).tol(1e-7);
    for (i, th) in chart2.theta_pullbacks.iter().enumerate() {
        for (j, c) in family2.integrals.iter().enumerate() {
            let br = pbracket(&osc2.sys, th, &c.expr);
            let expect = Expr::int(if i == j { 1 } else { 0 });
            if !pair_chk.salted((40 + i * 2 + j) as u64).holds(&br, &expect) {
                all = false;
                detail = format!("{{Theta{}, C{}}} != delta", i + 1, j + 1);
            }
        }
    }
    if detail.is_empty() {
        detail = format!(
            "oscillator T drift {drift:.1e} < 1e-8; 2D family complete (rank 4) with \
             canonical pairs within 1e-7"
        );
    }
    verdict("7 (Liouville pipeline)", &detail, all);
}

/// 8. Series flow vs ODE flow: oscillator energy flow at eps = 0.1,
///    series order 8 against ODE tolerance 1e-12, discrepancy < 1e-12.
#[test]
fn acceptance_08_series_vs_ode_flow() {
    let template = NumericEq::default();
    let no_params: Vec<Option<f64>> = Vec::new();
    let osc = oscillator_1d(&template);
    let e = &osc.conserved[0].1;
    let gen = c_to_p(&osc.sys, e).unwrap();
    let state = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
    let map = flow_ode(&osc.sys, &gen, &state, 0.1, 1e-12, &no_params);
    let (_, end) = map.end_state();
    let mut worst: f64 = 0.0;
    for (target, expect) in [(Expr::coord(0), end[0]), (Expr::vel(0), end[1])] {
        let series = SeriesFlow::build(&osc.sys, e, &target, 8).unwrap();
        let got = series.eval_at(&state, 0.1, &no_params).unwrap();
        worst = worst.max((got - expect).abs());
    }
    verdict(
        "8 (series/ODE flow agreement)",
        &format!("state discrepancy {worst:.2e} < 1e-12"),
        worst < 1e-12,
    );
}

/// 9. Gauge equivalence: for 50 random polynomial gauge functions across
///    the golden systems, `tau * D_t C` vanishes identically and the
///    gauge/vertical flows agree on conserved values along solutions
///    within 1e-7.
#[test]
fn acceptance_09_gauge_equivalence() {
    let template = NumericEq::default();
    let no_params: Vec<Option<f64>> = Vec::new();
    let mut all = true;
    let mut detail = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a9e);
    let mut taus_used = 0usize;
    for golden in golden_corpus(&template) {
        let chk = golden.checker(&template);
        let n = golden.sys.dof();
        let mut syms = vec![Sym::Time];
        for i in 0..n {
            syms.push(Sym::coord(i));
            syms.push(Sym::vel(i));
        }
        let state = state_of(&golden);
        for (name, cq) in &golden.conserved {
            for k in 0..4u64 {
                let tau = random_polynomial(&syms, 2, 3, &mut rng);
                taus_used += 1;
                if !noether_core::flows::verify_gauge_equivalence(
                    &golden.sys,
                    &tau,
                    cq,
                    &chk.salted(k),
                ) {
                    all = false;
                    detail = format!("{}/{name}: tau * D_t C != 0", golden.name);
                }
                // Numeric agreement of C along the two flows.
                let gen = c_to_p(&golden.sys, cq).unwrap();
                let eps = 0.4;
                let va = flow_ode(&golden.sys, &gen, &state, eps, 1e-11, &no_params);
                let vb = flow_gauge(&golden.sys, &gen, &tau, &state, eps, 1e-11, &no_params);
                if va.truncated.is_some() || vb.truncated.is_some() {
                    all = false;
                    detail = format!("{}/{name}: flow truncated", golden.name);
                    continue;
                }
                let (ta, ea) = va.end_state();
                let (tb, eb) = vb.end_state();
                let ca = eval(
                    &cq.expr,
                    &Assignment::state(ta, &ea[..n], &ea[n..]),
                );
                let cb = eval(
                    &cq.expr,
                    &Assignment::state(tb, &eb[..n], &eb[n..]),
                );
                match (ca, cb) {
                    (Ok(ca), Ok(cb)) if (ca - cb).abs() < 1e-7 => {}
                    other => {
                        all = false;
                        detail = format!("{}/{name}: C values differ: {other:?}", golden.name);
                    }
                }
            }
        }
    }
    if detail.is_empty() {
        detail = format!(
            "{taus_used} random gauge functions: symbolic identity and numeric flow \
             agreement within 1e-7"
        );
    }
    assert!(taus_used >= 50);
    verdict("9 (gauge equivalence)", &detail, all);
}

/// 10. Negative controls: scaling is an equations-of-motion symmetry of
///     the free particle but not variational; `C = q` fails every
///     conservation check; `L = qd` is rejected as degenerate.
#[test]
fn acceptance_10_negative_controls() {
    let template = NumericEq::default();
    let mut all = true;
    let mut detail = String::new();

    let free = common::free_particle_1d(&template);
    let scaling = SymmetryGenerator::new(&free.sys, vec![Expr::coord(0)], None).unwrap();
    if !is_eom_symmetry(&free.sys, &scaling, &template) {
        all = false;
        detail = "scaling should preserve the free-particle equations".into();
    }
    let report = is_variational_symmetry(&free.sys, &scaling, &template).unwrap();
    if report.verdict {
        all = false;
        detail = "scaling must fail the variational test".into();
    }
    if let SymmetryClass::Dynamical = classify(&free.sys, &scaling, &template) {
        all = false;
        detail = "scaling generator q d/dq is strictly linear, hence point-type".into();
    }

    let osc = oscillator_1d(&template);
    let bad = is_conserved(&osc.sys, &Expr::coord(0), &template);
    if bad.status != ConservationStatus::Failed {
        all = false;
        detail = "C = q must fail the solution-space test".into();
    }
    if noether_core::bracket::conservation_via_bracket(&osc.sys, &Expr::coord(0), &template) {
        all = false;
        detail = "C = q must fail the bracket test".into();
    }

    let sp = VariableSpace::new(1, &[]).unwrap();
    let l = parse("qd1", &sp).unwrap();
    match LagrangianSystem::build(sp, l, &template) {
        Err(noether_core::lagrangian::BuildError::DegenerateHessian(_)) => {}
        other => {
            all = false;
            detail = format!("L = qd must be rejected as degenerate, got {other:?}");
        }
    }
    if detail.is_empty() {
        detail = "scaling: EOM-symmetry yes / variational no; C = q fails everywhere; \
                  L = qd rejected"
            .into();
    }
    verdict("10 (negative controls)", &detail, all);
}
