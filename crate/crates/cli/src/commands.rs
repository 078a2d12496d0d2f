//! The six subcommands.
//!
//! Input problems (unreadable files, parse errors, dangling names)
//! bubble up as `Err` and exit 2; mathematical failures become `Fail`
//! records and exit 1.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use noether_core::bracket::{
    bracket_table, conservation_via_bracket, verify_commutator_homomorphism,
    verify_pair_action, Closure,
};
use noether_core::expr::Expr;
use noether_core::flows::{
    flow_gauge, flow_ode, integrate, monitor as run_monitor, radius_minima,
    solution_mapping_check, FlowMap, MonitorOptions, SeriesFlow, Trajectory,
};
use noether_core::liouville::{
    autonomous_integrals, build_chart, nonautonomous_integrals, verify_family, LiouvilleError,
};
use noether_core::noether::{
    c_to_p, classify, is_eom_symmetry, is_variational_symmetry, p_to_c, recover_w, BasePoint,
    ConservationStatus, ConservedKind, NoetherError, SymmetryClass,
};
use noether_core::parse::parse;
use noether_core::print::pretty;
use noether_core::sample::NumericEq;

use crate::report::{Report, Verdict};
use crate::system::{load, Loaded};

fn report_for(command: &str, loaded: &Loaded, checker: &NumericEq) -> Report {
    Report::new(
        command,
        &loaded.file.name,
        &loaded.digest,
        checker.seed,
        checker.tol,
        checker.trials,
    )
}

fn status_verdict(status: ConservationStatus) -> Verdict {
    match status {
        ConservationStatus::SymbolicVerified
        | ConservationStatus::NumericGlobal
        | ConservationStatus::NumericLocal => Verdict::Pass,
        ConservationStatus::Failed => Verdict::Fail,
    }
}

fn kind_text(kind: ConservedKind) -> &'static str {
    match kind {
        ConservedKind::ConstantOfMotion => "constant of motion",
        ConservedKind::IntegralOfMotion => "integral of motion",
    }
}

// ---- check ---------------------------------------------------------------

pub fn check(path: &Path, checker: &NumericEq) -> Result<Report> {
    let loaded = load(path, checker)?;
    let chk = &loaded.checker;
    let mut report = report_for("check", &loaded, chk);
    for w in loaded.sys.warnings() {
        report.push("system/warnings", Verdict::Info, w.clone());
    }
    let autonomous = if loaded.sys.is_autonomous() { "autonomous" } else { "non-autonomous" };
    report.push("system/build", Verdict::Pass, format!("non-degenerate, {autonomous}"));

    for (name, cq) in &loaded.conserved {
        let mut detail = format!("{:?} ({})", cq.status, kind_text(cq.kind));
        if cq.status == ConservationStatus::Failed {
            if let Ok(dtc) = loaded.sys.solution_derivative(&cq.expr) {
                let _ = write!(detail, "; D_t C = {}", pretty(&dtc, loaded.sys.space()));
            }
        }
        report.push(
            format!("conserved/{name}/solution-space"),
            status_verdict(cq.status),
            detail,
        );
        let via_bracket = conservation_via_bracket(&loaded.sys, &cq.expr, &chk.salted(0xb0));
        let agrees = via_bracket == (cq.status == ConservationStatus::SymbolicVerified);
        report.push(
            format!("conserved/{name}/bracket"),
            if via_bracket { Verdict::Pass } else { Verdict::Fail },
            format!("dC/dt + {{C, H}} == 0: {via_bracket}"),
        );
        if !agrees {
            report.push(
                format!("conserved/{name}/agreement"),
                Verdict::Fail,
                "solution-space and bracket tests disagree",
            );
        }
    }
    for (name, gen) in &loaded.generators {
        let eom = is_eom_symmetry(&loaded.sys, gen, &chk.salted(0xe1));
        report.push(
            format!("generator/{name}/eom-symmetry"),
            if eom { Verdict::Pass } else { Verdict::Fail },
            format!("maps solutions to solutions: {eom}"),
        );
        match is_variational_symmetry(&loaded.sys, gen, &chk.salted(0xe2)) {
            Ok(r) => {
                let class = match classify(&loaded.sys, gen, &chk.salted(0xe3)) {
                    SymmetryClass::Point { tau, .. } => {
                        format!("point (tau = {})", pretty(&tau, loaded.sys.space()))
                    }
                    SymmetryClass::Dynamical => "dynamical".to_string(),
                };
                report.push(
                    format!("generator/{name}/variational"),
                    Verdict::Info,
                    format!("variational: {}; class: {class}", r.verdict),
                );
            }
            Err(e) => {
                report.push(format!("generator/{name}/variational"), Verdict::Fail, e.to_string())
            }
        }
    }
    Ok(report)
}

// ---- noether -------------------------------------------------------------

fn parse_base(spec: &str, n: usize) -> Result<BasePoint> {
    let vals: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("base component `{s}`: {e}")))
        .collect::<Result<_>>()?;
    if vals.len() != 2 * n + 1 {
        bail!("base point needs {} components (t,q1..qN,qd1..qdN)", 2 * n + 1);
    }
    Ok(BasePoint {
        t: vals[0],
        q: vals[1..=n].to_vec(),
        qd: vals[n + 1..].to_vec(),
    })
}

pub fn noether(
    path: &Path,
    checker: &NumericEq,
    to_symmetry: bool,
    name: &str,
    base: Option<&str>,
) -> Result<Report> {
    let loaded = load(path, checker)?;
    let chk = &loaded.checker;
    let n = loaded.sys.dof();
    let mut report = report_for("noether", &loaded, chk);
    let base = match base {
        Some(spec) => parse_base(spec, n)?,
        None => BasePoint::origin(n),
    };
    let space = loaded.sys.space().clone();

    if to_symmetry {
        let cq = loaded
            .conserved
            .get(name)
            .ok_or_else(|| anyhow!("no conserved quantity named `{name}`"))?;
        if cq.status != ConservationStatus::SymbolicVerified {
            report.push(
                format!("noether/{name}/input"),
                Verdict::Fail,
                "the named quantity is not conserved",
            );
            return Ok(report);
        }
        let gen = c_to_p(&loaded.sys, cq)?;
        let comps: Vec<String> = gen.components().iter().map(|p| pretty(p, &space)).collect();
        report.section("generator", json!({ "components": comps }));
        report.push(
            format!("noether/{name}/to-symmetry"),
            Verdict::Pass,
            format!("P = [{}]", comps.join(", ")),
        );
        describe_class(&mut report, &loaded, &gen, name);
        // Roundtrip: P -> C must reproduce the input up to a constant.
        match p_to_c(&loaded.sys, &gen, &base, &chk.salted(0x77)) {
            Ok(back) => {
                let d = Expr::sub(back.expr.clone(), cq.expr.clone());
                let constant = is_constant(&d, &chk.salted(0x78));
                report.push(
                    format!("noether/{name}/roundtrip"),
                    if constant { Verdict::Pass } else { Verdict::Fail },
                    "reconstruction reproduces the quantity up to an additive constant",
                );
            }
            Err(e) => report.push(format!("noether/{name}/roundtrip"), Verdict::Fail, e.to_string()),
        }
    } else {
        let gen = loaded
            .generators
            .get(name)
            .ok_or_else(|| anyhow!("no generator named `{name}`"))?;
        match p_to_c(&loaded.sys, gen, &base, &chk.salted(0x79)) {
            Ok(cq) => {
                let c_text = pretty(&cq.expr, &space);
                let w = recover_w(&loaded.sys, gen, &cq.expr);
                report.section(
                    "integral",
                    json!({
                        "C": c_text,
                        "W": pretty(&w, &space),
                        "base": { "t": base.t, "q": base.q, "qd": base.qd },
                        "kind": kind_text(cq.kind),
                    }),
                );
                report.push(
                    format!("noether/{name}/to-integral"),
                    status_verdict(cq.status),
                    format!("C = {c_text} ({:?})", cq.status),
                );
                describe_class(&mut report, &loaded, gen, name);
                let back = c_to_p(&loaded.sys, &cq)?;
                let mut ok = true;
                for (a, b) in back.components().iter().zip(gen.components()) {
                    ok &= chk.salted(0x7a).holds(a, b);
                }
                report.push(
                    format!("noether/{name}/roundtrip"),
                    if ok { Verdict::Pass } else { Verdict::Fail },
                    "generator of the reconstructed quantity matches componentwise",
                );
            }
            Err(NoetherError::ClosureFailure(detail)) => {
                report.push_witness(
                    format!("noether/{name}/to-integral"),
                    Verdict::Fail,
                    "gradient closure check failed (not a variational symmetry)",
                    Some(json!({ "mixed_partials": detail })),
                );
            }
            Err(NoetherError::NotVariational) => {
                report.push(
                    format!("noether/{name}/to-integral"),
                    Verdict::Fail,
                    "generator is not a variational symmetry",
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(report)
}

fn describe_class(
    report: &mut Report,
    loaded: &Loaded,
    gen: &noether_core::noether::SymmetryGenerator,
    name: &str,
) {
    let space = loaded.sys.space();
    match classify(&loaded.sys, gen, &loaded.checker.salted(0xc1)) {
        SymmetryClass::Point { tau, eta } => {
            let etas: Vec<String> = eta.iter().map(|e| pretty(e, space)).collect();
            report.push(
                format!("noether/{name}/class"),
                Verdict::Info,
                format!("point; tau = {}; eta = [{}]", pretty(&tau, space), etas.join(", ")),
            );
        }
        SymmetryClass::Dynamical => {
            report.push(format!("noether/{name}/class"), Verdict::Info, "dynamical");
        }
    }
}

fn is_constant(e: &Expr, chk: &NumericEq) -> bool {
    chk.is_constant(e).is_equal()
}

// ---- bracket ---------------------------------------------------------------

fn closure_text(c: &Closure) -> String {
    match c {
        Closure::Zero => "zero".to_string(),
        Closure::Constant(v) => format!("constant {v:.6}"),
        Closure::LinearInBasis { constant, coeffs } => {
            let mut s = format!("linear: {constant:.6}");
            for (i, c) in coeffs.iter().enumerate() {
                let _ = write!(s, " + {c:.6}*C{}", i + 1);
            }
            s
        }
        Closure::NonlinearOrUnknown => "nonlinear/unknown".to_string(),
    }
}

pub fn bracket(
    path: &Path,
    checker: &NumericEq,
    names: Option<&[String]>,
    theorems: bool,
) -> Result<Report> {
    let loaded = load(path, checker)?;
    let chk = &loaded.checker;
    let mut report = report_for("bracket", &loaded, chk);
    let selected: Vec<String> = match names {
        Some(ns) => ns.to_vec(),
        None => loaded.conserved.keys().cloned().collect(),
    };
    if selected.is_empty() {
        bail!("no conserved quantities selected");
    }
    let mut items = Vec::new();
    for name in &selected {
        let cq = loaded
            .conserved
            .get(name)
            .ok_or_else(|| anyhow!("no conserved quantity named `{name}`"))?;
        if cq.status != ConservationStatus::SymbolicVerified {
            report.push(
                format!("bracket/{name}/input"),
                Verdict::Fail,
                "not symbolically conserved",
            );
        }
        items.push((name.clone(), cq));
    }
    let table = bracket_table(&loaded.sys, &items, chk);
    let space = loaded.sys.space();
    let mut rows = Vec::new();
    for i in 0..selected.len() {
        let mut row = Vec::new();
        for j in 0..selected.len() {
            row.push(json!({
                "entry": pretty(&table.entries[i][j], space),
                "closure": closure_text(&table.closures[i][j]),
            }));
        }
        rows.push(serde_json::Value::Array(row));
    }
    report.section("table", json!({ "names": table.names, "rows": rows }));
    report.push(
        "bracket/table",
        Verdict::Pass,
        format!("{0} x {0} bracket table computed", selected.len()),
    );

    if theorems {
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                let pair_ok = verify_pair_action(
                    &loaded.sys,
                    items[i].1,
                    items[j].1,
                    &chk.salted((0x51_00 + i * 17 + j) as u64),
                )?;
                report.push(
                    format!("bracket/pair-action/{}-{}", items[i].0, items[j].0),
                    if pair_ok { Verdict::Pass } else { Verdict::Fail },
                    "X_(C1) _| dC2 == -X_(C2) _| dC1 == {C2, C1}",
                );
                let comm_ok = verify_commutator_homomorphism(
                    &loaded.sys,
                    items[i].1,
                    items[j].1,
                    &chk.salted((0x52_00 + i * 17 + j) as u64),
                )?;
                report.push(
                    format!("bracket/commutator/{}-{}", items[i].0, items[j].0),
                    if comm_ok { Verdict::Pass } else { Verdict::Fail },
                    "[X_(C2), X_(C1)] == X_({C1,C2})",
                );
            }
        }
    }
    Ok(report)
}

// ---- flow ------------------------------------------------------------------

fn write_flow_csv(path: &Path, map: &FlowMap, n: usize) -> Result<()> {
    let mut out = String::from("epsilon,t");
    for i in 1..=n {
        let _ = write!(out, ",q{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",qd{i}");
    }
    out.push('\n');
    for k in 0..map.eps.len() {
        let _ = write!(out, "{},{}", map.eps[k], map.ts[k]);
        for v in &map.states[k] {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product::<f64>().max(1.0)
}

pub fn flow(
    path: &Path,
    checker: &NumericEq,
    generator: &str,
    epsilon: Option<f64>,
    gauge: Option<&str>,
    series: Option<usize>,
    csv: Option<&Path>,
) -> Result<Report> {
    let loaded = load(path, checker)?;
    let chk = &loaded.checker;
    let mut report = report_for("flow", &loaded, chk);
    let gen = loaded
        .generators
        .get(generator)
        .ok_or_else(|| anyhow!("no generator named `{generator}`"))?;
    let decl = loaded.file.flows.iter().find(|f| f.generator == generator);
    let state = match decl {
        Some(d) => d.state.to_state(),
        None => loaded
            .file
            .trajectories
            .first()
            .map(|t| t.initial.to_state())
            .ok_or_else(|| anyhow!("no flow block or trajectory to take a state from"))?,
    };
    let eps = epsilon
        .or(decl.map(|d| d.epsilon))
        .ok_or_else(|| anyhow!("no epsilon given (flag or flow block)"))?;
    let tol = decl.map(|d| d.tol).unwrap_or(1e-10);

    // epsilon = 0 must be the identity.
    let id_map = flow_ode(&loaded.sys, gen, &state, 0.0, tol, &loaded.params);
    let (_, id_state) = id_map.end_state();
    let id_ok = id_state[..loaded.sys.dof()] == state.q[..]
        && id_state[loaded.sys.dof()..] == state.qd[..];
    report.push(
        "flow/identity-at-zero",
        if id_ok { Verdict::Pass } else { Verdict::Fail },
        "epsilon = 0 transport is the identity",
    );

    let map = match gauge {
        Some(tau_src) => {
            let tau = parse(tau_src, loaded.sys.space())
                .map_err(|d| anyhow!("gauge expression: {:?}", d))?;
            flow_gauge(&loaded.sys, gen, &tau, &state, eps, tol, &loaded.params)
        }
        None => flow_ode(&loaded.sys, gen, &state, eps, tol, &loaded.params),
    };
    if let Some(reason) = &map.truncated {
        report.push("flow/transport", Verdict::Fail, reason.clone());
        return Ok(report);
    }
    let (t_end, end) = map.end_state();
    report.section(
        "flow",
        json!({
            "generator": generator,
            "epsilon": eps,
            "method": map.method,
            "initial": { "t": state.t, "q": state.q, "qd": state.qd },
            "final": { "t": t_end, "q": end[..loaded.sys.dof()], "qd": end[loaded.sys.dof()..] },
            "nodes": map.eps.len(),
        }),
    );
    report.push(
        "flow/transport",
        Verdict::Pass,
        format!("transported to epsilon = {eps} in {} accepted nodes", map.eps.len()),
    );
    if let Some(p) = csv {
        write_flow_csv(p, &map, loaded.sys.dof())?;
        report.push("flow/csv", Verdict::Info, format!("wrote {}", p.display()));
    }

    if let Some(order) = series {
        // The series flow needs the conserved quantity generating the
        // flow; find a declared one whose Noether generator matches.
        let mut matched = None;
        for (name, cq) in &loaded.conserved {
            if cq.status != ConservationStatus::SymbolicVerified {
                continue;
            }
            let candidate = c_to_p(&loaded.sys, cq)?;
            let same = candidate
                .components()
                .iter()
                .zip(gen.components())
                .all(|(a, b)| chk.salted(0x5e).holds(a, b));
            if same {
                matched = Some((name.clone(), cq.clone()));
                break;
            }
        }
        match matched {
            Some((cname, cq)) => {
                let reference = flow_ode(&loaded.sys, gen, &state, eps, 1e-12, &loaded.params);
                let (_, ref_end) = reference.end_state();
                let mut worst: f64 = 0.0;
                for i in 0..loaded.sys.dof() {
                    for (obs, target) in [
                        (Expr::coord(i), ref_end[i]),
                        (Expr::vel(i), ref_end[loaded.sys.dof() + i]),
                    ] {
                        let sf = SeriesFlow::build(&loaded.sys, &cq, &obs, order)
                            .map_err(|e| anyhow!("{e}"))?;
                        let got = sf.eval_at(&state, eps, &loaded.params)?;
                        worst = worst.max((got - target).abs());
                    }
                }
                let budget = (eps.abs().powi(order as i32 + 1) / factorial(order + 1)) * 10.0
                    + 1e-9;
                report.push(
                    format!("flow/series-vs-ode/{cname}"),
                    if worst < budget { Verdict::Pass } else { Verdict::Fail },
                    format!("order {order}: max discrepancy {worst:.3e} (budget {budget:.3e})"),
                );
            }
            None => report.push(
                "flow/series-vs-ode",
                Verdict::Inconclusive,
                "no declared conserved quantity generates this flow",
            ),
        }
    }

    if let Some(tdecl) = loaded.file.trajectories.first() {
        let traj = integrate(
            &loaded.sys,
            &tdecl.initial.to_state(),
            tdecl.t_end,
            tdecl.tol,
            &loaded.params,
        );
        if traj.truncated.is_none() {
            let rep = solution_mapping_check(&loaded.sys, gen, &traj, eps, tdecl.tol, &loaded.params)
                .map_err(|e| anyhow!("solution mapping check: {e}"))?;
            let budget = 100.0 * rep.h * rep.h + 1e3 * tdecl.tol;
            report.push(
                "flow/solution-mapping",
                if rep.max_residual < budget { Verdict::Pass } else { Verdict::Fail },
                format!(
                    "max EOM residual of the transported trajectory: {:.3e} (budget {budget:.1e}, h = {:.1e})",
                    rep.max_residual, rep.h
                ),
            );
        } else {
            report.push(
                "flow/solution-mapping",
                Verdict::Inconclusive,
                "reference trajectory truncated",
            );
        }
    }
    Ok(report)
}

// ---- liouville ---------------------------------------------------------------

pub fn liouville(path: &Path, checker: &NumericEq) -> Result<Report> {
    let loaded = load(path, checker)?;
    let chk = &loaded.checker;
    let mut report = report_for("liouville", &loaded, chk);
    let decl = loaded
        .file
        .liouville
        .as_ref()
        .ok_or_else(|| anyhow!("the file has no liouville block"))?;
    let members: Vec<_> = decl
        .family
        .iter()
        .map(|n| loaded.conserved.get(n).expect("validated at load").clone())
        .collect();
    let family = match verify_family(&loaded.sys, members, chk) {
        Ok(f) => {
            report.push(
                "liouville/family",
                Verdict::Pass,
                format!("{} commuting independent integrals", decl.family.len()),
            );
            f
        }
        Err(LiouvilleError::WrongCount { expected, got }) => {
            bail!("family must have {expected} members, got {got}")
        }
        Err(e @ LiouvilleError::NonCommuting { .. })
        | Err(e @ LiouvilleError::NotVerified(_))
        | Err(e @ LiouvilleError::RankDeficient(_)) => {
            let text = match &e {
                LiouvilleError::NonCommuting { i, j } => format!(
                    "pair ({}, {}) does not commute",
                    decl.family[*i], decl.family[*j]
                ),
                other => other.to_string(),
            };
            report.push("liouville/family", Verdict::Fail, text);
            return Ok(report);
        }
        Err(e) => bail!("{e}"),
    };

    let seed = decl.branch_seed.to_state();
    let (base_q, base_t) = match &decl.base {
        Some(b) => (b.q.clone(), b.t),
        None => (vec![0.0; loaded.sys.dof()], 0.0),
    };
    let chart = match build_chart(&loaded.sys, &family, &seed, &base_q, base_t, &loaded.params) {
        Ok(c) => c,
        Err(e) => {
            report.push("liouville/chart", Verdict::Fail, e.to_string());
            return Ok(report);
        }
    };
    let sp = &chart.space;
    report.section(
        "chart",
        json!({
            "inversion": chart.inversion.iter().map(|e| pretty(e, sp)).collect::<Vec<_>>(),
            "generating_function": pretty(&chart.generating, sp),
            "angles": chart.thetas.iter().map(|e| pretty(e, sp)).collect::<Vec<_>>(),
            "angle_pullbacks": chart.theta_pullbacks.iter().map(|e| pretty(e, sp)).collect::<Vec<_>>(),
            "numeric_inversion": chart.numeric_inversion,
            "base": { "t": chart.base_t, "q": chart.base_q },
            "seed": { "t": seed.t, "q": seed.q, "qd": seed.qd },
        }),
    );
    report.push(
        "liouville/chart",
        Verdict::Pass,
        format!(
            "velocity inversion {} + generating function + {} angles",
            if chart.numeric_inversion { "(Newton-backed)" } else { "(closed form)" },
            chart.thetas.len()
        ),
    );

    let mut drift_stats = Vec::new();
    let outcome = if loaded.sys.is_autonomous() {
        autonomous_integrals(&loaded.sys, &family, &chart, chk, &loaded.params)
            .map(|ints| (ints, Vec::new(), None))
    } else {
        nonautonomous_integrals(&loaded.sys, &family, &chart, chk, &loaded.params)
    };
    match outcome {
        Ok((integrals, constants, note)) => {
            for integral in integrals.iter().chain(&constants) {
                let drift_text = integral
                    .drift
                    .map(|d| format!(", drift {d:.2e}"))
                    .unwrap_or_default();
                report.push(
                    format!("liouville/integral/{}", integral.label),
                    status_verdict(integral.status),
                    format!(
                        "{} = {} ({:?}{drift_text})",
                        integral.label,
                        pretty(&integral.expr, sp),
                        integral.status
                    ),
                );
                drift_stats.push(json!({
                    "label": integral.label,
                    "status": format!("{:?}", integral.status),
                    "drift": integral.drift,
                }));
            }
            if let Some(n) = note {
                report.push("liouville/reduction", Verdict::Info, n);
            }
        }
        Err(e @ LiouvilleError::FirstIntegralNotEnergy)
        | Err(e @ LiouvilleError::KDependsOnQ(_)) => {
            report.push("liouville/integrals", Verdict::Fail, e.to_string());
            return Ok(report);
        }
        Err(e) => bail!("{e}"),
    }
    report.section("drift", serde_json::Value::Array(drift_stats));

    // Canonical pairs on the chart.
    let pair_chk = chart.chart_checker(chk).tol(1e-7);
    let mut pairs_ok = true;
    for (i, th) in chart.theta_pullbacks.iter().enumerate() {
        for (j, c) in family.integrals.iter().enumerate() {
            let br = noether_core::bracket::pbracket(&loaded.sys, th, &c.expr);
            let expect = Expr::int(if i == j { 1 } else { 0 });
            pairs_ok &= pair_chk.salted((i * 7 + j) as u64).holds(&br, &expect);
        }
    }
    report.push(
        "liouville/canonical-pairs",
        if pairs_ok { Verdict::Pass } else { Verdict::Fail },
        "{Theta^i, C_j} == delta^i_j at chart samples (tol 1e-7)",
    );
    Ok(report)
}

// ---- monitor -------------------------------------------------------------

fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let n = traj.dof();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",q{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",qd{i}");
    }
    out.push('\n');
    for k in 0..traj.len() {
        let _ = write!(out, "{}", traj.times()[k]);
        for v in traj.q_at_node(k) {
            let _ = write!(out, ",{v}");
        }
        for v in traj.qd_at_node(k) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn monitor(path: &Path, checker: &NumericEq, csv: Option<&Path>) -> Result<Report> {
    let loaded = load(path, checker)?;
    let chk = &loaded.checker;
    let mut report = report_for("monitor", &loaded, chk);
    if loaded.file.trajectories.is_empty() {
        bail!("the file declares no trajectories");
    }
    let integral_names: Vec<String> = match &loaded.file.monitor {
        Some(m) => m.integrals.clone(),
        None => loaded.conserved.keys().cloned().collect(),
    };
    let mut opts = MonitorOptions::default();
    if let Some(m) = &loaded.file.monitor {
        if let Some(j) = m.jump_threshold {
            opts.jump_threshold = j;
        }
        if let Some(d) = m.drift_tol {
            opts.drift_tol = d;
        }
    }
    for (ti, tdecl) in loaded.file.trajectories.iter().enumerate() {
        let label = tdecl.label.clone().unwrap_or_else(|| format!("trajectory{}", ti + 1));
        let traj = integrate(
            &loaded.sys,
            &tdecl.initial.to_state(),
            tdecl.t_end,
            tdecl.tol,
            &loaded.params,
        );
        if let Some(reason) = &traj.truncated {
            report.push(
                format!("monitor/{label}/integration"),
                Verdict::Info,
                format!("truncated at t = {}: {reason}", traj.end_time()),
            );
        } else {
            report.push(
                format!("monitor/{label}/integration"),
                Verdict::Pass,
                format!("{} accepted nodes to t = {}", traj.len(), traj.end_time()),
            );
        }
        let integrals: Vec<_> = integral_names
            .iter()
            .map(|n| loaded.conserved.get(n).expect("validated at load"))
            .collect();
        let verdicts = run_monitor(&loaded.sys, &traj, &integrals, &opts, &loaded.params);
        for (name, v) in integral_names.iter().zip(&verdicts) {
            let jumps: Vec<f64> = v.jump_times.clone();
            report.push_witness(
                format!("monitor/{label}/{name}"),
                status_verdict(v.classification),
                format!(
                    "{:?}: max segment drift {:.3e}, {} jump(s)",
                    v.classification,
                    v.max_segment_drift,
                    v.jump_times.len()
                ),
                if jumps.is_empty() { None } else { Some(json!({ "jump_times": jumps })) },
            );
        }
        if loaded.sys.dof() == 2 {
            let minima = radius_minima(&traj, 900);
            report.push_witness(
                format!("monitor/{label}/radius-minima"),
                Verdict::Info,
                format!("{} local minima of |q|", minima.len()),
                Some(json!({ "times": minima })),
            );
        }
        if let Some(base) = csv {
            let path = if loaded.file.trajectories.len() == 1 {
                base.to_path_buf()
            } else {
                let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
                let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
                base.with_file_name(format!("{stem}-{}.{ext}", ti + 1))
            };
            write_trajectory_csv(&path, &traj)?;
            report.push(
                format!("monitor/{label}/csv"),
                Verdict::Info,
                format!("wrote {}", path.display()),
            );
        }
    }
    Ok(report)
}
