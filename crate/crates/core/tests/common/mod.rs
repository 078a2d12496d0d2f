//! Golden test systems shared by the integration suites: the classic
//! desk-scale mechanics examples with their known conserved quantities.

#![allow(dead_code)]

use noether_core::expr::Expr;
use noether_core::lagrangian::LagrangianSystem;
use noether_core::noether::{is_conserved, BasePoint, ConservedQuantity};
use noether_core::parse::parse;
use noether_core::sample::NumericEq;
use noether_core::sym::{Sym, VariableSpace};

pub struct Golden {
    pub name: &'static str,
    pub sys: LagrangianSystem,
    /// Named conserved quantities, all symbolically verified.
    pub conserved: Vec<(&'static str, ConservedQuantity)>,
    /// Sampling-box restrictions (singularity avoidance, e.g. Kepler
    /// staying off the collision set along reconstruction paths).
    pub boxes: Vec<(Sym, (f64, f64))>,
    /// Base point for conserved-quantity reconstruction.
    pub base: BasePoint,
    /// A state lying on a generic solution (for flow checks).
    pub probe_state: (f64, Vec<f64>, Vec<f64>),
}

impl Golden {
    pub fn checker(&self, template: &NumericEq) -> NumericEq {
        let mut chk = template.clone();
        for (sym, (lo, hi)) in &self.boxes {
            chk.boxes.insert(*sym, (*lo, *hi));
        }
        chk
    }
}

fn build(name: &'static str, n: usize, lagrangian: &str) -> (LagrangianSystem, VariableSpace) {
    let sp = VariableSpace::new(n, &[]).unwrap();
    let l = parse(lagrangian, &sp).unwrap();
    let sys = LagrangianSystem::build(sp.clone(), l, &NumericEq::default())
        .unwrap_or_else(|e| panic!("{name}: {e}"));
    (sys, sp)
}

fn conserved_list(
    sys: &LagrangianSystem,
    chk: &NumericEq,
    items: &[(&'static str, &str)],
) -> Vec<(&'static str, ConservedQuantity)> {
    items
        .iter()
        .map(|(name, src)| {
            let e = parse(src, sys.space()).unwrap();
            let c = is_conserved(sys, &e, chk);
            assert!(
                c.status == noether_core::noether::ConservationStatus::SymbolicVerified,
                "{name} must verify symbolically"
            );
            (*name, c)
        })
        .collect()
}

pub fn free_particle_1d(chk: &NumericEq) -> Golden {
    let (sys, _) = build("free particle 1D", 1, "qd1^2/2");
    let conserved = conserved_list(&sys, chk, &[("p", "qd1"), ("b", "q1 - t*qd1")]);
    Golden {
        name: "free particle 1D",
        sys,
        conserved,
        boxes: vec![],
        base: BasePoint::origin(1),
        probe_state: (0.0, vec![0.3], vec![0.8]),
    }
}

pub fn free_particle_2d(chk: &NumericEq) -> Golden {
    let (sys, _) = build("free particle 2D", 2, "(qd1^2 + qd2^2)/2");
    let conserved = conserved_list(
        &sys,
        chk,
        &[
            ("p1", "qd1"),
            ("p2", "qd2"),
            ("Lz", "q1*qd2 - q2*qd1"),
            ("b1", "q1 - t*qd1"),
            ("b2", "q2 - t*qd2"),
        ],
    );
    Golden {
        name: "free particle 2D",
        sys,
        conserved,
        boxes: vec![],
        base: BasePoint::origin(2),
        probe_state: (0.0, vec![0.2, -0.4], vec![0.7, 0.5]),
    }
}

pub fn oscillator_1d(chk: &NumericEq) -> Golden {
    let (sys, _) = build("harmonic oscillator 1D", 1, "qd1^2/2 - q1^2/2");
    let conserved = conserved_list(
        &sys,
        chk,
        &[
            ("E", "qd1^2/2 + q1^2/2"),
            ("A", "qd1*cos(t) + q1*sin(t)"),
            ("B", "q1*cos(t) - qd1*sin(t)"),
        ],
    );
    Golden {
        name: "harmonic oscillator 1D",
        sys,
        conserved,
        boxes: vec![],
        base: BasePoint::origin(1),
        probe_state: (0.0, vec![1.0], vec![0.0]),
    }
}

pub fn oscillator_2d(chk: &NumericEq) -> Golden {
    let (sys, _) = build(
        "harmonic oscillator 2D",
        2,
        "(qd1^2 + qd2^2 - q1^2 - q2^2)/2",
    );
    let conserved = conserved_list(
        &sys,
        chk,
        &[
            ("H", "(qd1^2 + qd2^2 + q1^2 + q2^2)/2"),
            ("E2", "(qd2^2 + q2^2)/2"),
            ("Lz", "q1*qd2 - q2*qd1"),
            ("K12", "qd1*qd2 + q1*q2"),
        ],
    );
    Golden {
        name: "harmonic oscillator 2D",
        sys,
        conserved,
        boxes: vec![],
        base: BasePoint::origin(2),
        probe_state: (0.0, vec![0.9, 0.1], vec![0.2, 0.7]),
    }
}

/// Kepler boxes: keep the reconstruction paths and sample points away
/// from the collision set (the q1 leg runs from the base at q1 = 1).
fn kepler_boxes() -> Vec<(Sym, (f64, f64))> {
    vec![
        (Sym::coord(0), (0.5, 1.8)),
        (Sym::coord(1), (-0.6, 0.6)),
        (Sym::vel(0), (-1.2, 1.2)),
        (Sym::vel(1), (-1.2, 1.2)),
    ]
}

fn kepler_base() -> BasePoint {
    BasePoint { t: 0.0, q: vec![1.0, 0.0], qd: vec![0.0, 1.0] }
}

pub fn kepler_2d(chk: &NumericEq) -> Golden {
    let (sys, _) = build(
        "Kepler 2D",
        2,
        "(qd1^2 + qd2^2)/2 + 1/sqrt(q1^2 + q2^2)",
    );
    let mut chk = chk.clone();
    for (sym, (lo, hi)) in kepler_boxes() {
        chk.boxes.insert(sym, (lo, hi));
    }
    let conserved = conserved_list(
        &sys,
        &chk,
        &[
            ("E", "(qd1^2 + qd2^2)/2 - 1/sqrt(q1^2 + q2^2)"),
            ("Lz", "q1*qd2 - q2*qd1"),
            (
                "A1",
                "qd2*(q1*qd2 - q2*qd1) - q1/sqrt(q1^2 + q2^2)",
            ),
            (
                "A2",
                "-qd1*(q1*qd2 - q2*qd1) - q2/sqrt(q1^2 + q2^2)",
            ),
        ],
    );
    Golden {
        name: "Kepler 2D",
        sys,
        conserved,
        boxes: kepler_boxes(),
        base: kepler_base(),
        probe_state: (0.0, vec![1.0, 0.0], vec![0.0, 1.1832159566199232]),
    }
}

/// Perturbed central force `V = -1/r - 1/(20 r^2)`.
pub fn kepler_perturbed(chk: &NumericEq) -> Golden {
    let (sys, _) = build(
        "perturbed Kepler 2D",
        2,
        "(qd1^2 + qd2^2)/2 + 1/sqrt(q1^2 + q2^2) + 1/(20*(q1^2 + q2^2))",
    );
    let mut chk = chk.clone();
    for (sym, (lo, hi)) in kepler_boxes() {
        chk.boxes.insert(sym, (lo, hi));
    }
    let conserved = conserved_list(
        &sys,
        &chk,
        &[
            (
                "E",
                "(qd1^2 + qd2^2)/2 - 1/sqrt(q1^2 + q2^2) - 1/(20*(q1^2 + q2^2))",
            ),
            ("Lz", "q1*qd2 - q2*qd1"),
        ],
    );
    Golden {
        name: "perturbed Kepler 2D",
        sys,
        conserved,
        boxes: kepler_boxes(),
        base: kepler_base(),
        probe_state: (0.0, vec![1.0, 0.0], vec![0.0, 1.1832159566199232]),
    }
}

pub fn driven_free_particle(chk: &NumericEq) -> Golden {
    let (sys, _) = build("driven free particle", 1, "qd1^2/2 + t*q1");
    let conserved = conserved_list(
        &sys,
        chk,
        &[
            ("C", "qd1 - t^2/2"),
            ("B", "q1 - t*qd1 + t^3/3"),
        ],
    );
    Golden {
        name: "driven free particle",
        sys,
        conserved,
        boxes: vec![],
        base: BasePoint::origin(1),
        probe_state: (0.0, vec![0.1], vec![0.6]),
    }
}

/// The full golden corpus of the acceptance suite.
pub fn golden_corpus(chk: &NumericEq) -> Vec<Golden> {
    vec![
        free_particle_1d(chk),
        free_particle_2d(chk),
        oscillator_1d(chk),
        oscillator_2d(chk),
        kepler_2d(chk),
        kepler_perturbed(chk),
        driven_free_particle(chk),
    ]
}

/// Direction angle of the generalized periapsis (Runge-Lenz-like)
/// vector for the perturbed central force `V = -1/r - beta/r^2`,
/// `beta = 1/20`: piecewise constant along solutions, jumping exactly
/// at periapsis passages.
///
/// The bound orbit solves `u = 1/r = uc + B cos(w (phi - phi0))` with
/// `w^2 = 1 - 2 beta / Lz^2` and `uc = 1/(Lz^2 w^2)`; the orbital phase
/// `psi = w (phi - phi0)` is recovered from `(u - uc, rdot/(Lz w))` by
/// `atan2` on the branch `[0, 2 pi)` (cut at periapsis), and the
/// direction angle is `phi - psi/w`, assembled from its cosine and sine
/// so that the winding of `phi` itself drops out.
pub fn perturbed_lrl_angle(sys: &LagrangianSystem) -> Expr {
    let _ = sys;
    let q1 = Expr::coord(0);
    let q2 = Expr::coord(1);
    let qd1 = Expr::vel(0);
    let qd2 = Expr::vel(1);
    let r = Expr::sqrt(Expr::add(
        Expr::powi(q1.clone(), 2),
        Expr::powi(q2.clone(), 2),
    ));
    let lz = Expr::sub(
        Expr::mul(q1.clone(), qd2.clone()),
        Expr::mul(q2.clone(), qd1.clone()),
    );
    let rdot = Expr::div(
        Expr::add(Expr::mul(q1.clone(), qd1), Expr::mul(q2.clone(), qd2)),
        r.clone(),
    );
    // w^2 = 1 - (1/10)/Lz^2, uc = 1/(Lz^2 w^2) = 1/(Lz^2 - 1/10)
    let lz2 = Expr::powi(lz.clone(), 2);
    let w = Expr::sqrt(Expr::sub(
        Expr::int(1),
        Expr::div(Expr::ratio(1, 10), lz2.clone()),
    ));
    let uc = Expr::div(
        Expr::int(1),
        Expr::sub(lz2, Expr::ratio(1, 10)),
    );
    let x0 = Expr::sub(Expr::div(Expr::int(1), r.clone()), uc);
    let y0 = Expr::div(rdot, Expr::mul(lz, w.clone()));
    // psi in [0, 2 pi): atan2(-y, -x) + pi, cut at periapsis (y=0, x>0).
    let pi = Expr::num(
        noether_core::num::Num::from_f64(core::f64::consts::PI).unwrap(),
    );
    let psi = Expr::add(Expr::atan2(Expr::neg(y0), Expr::neg(x0)), pi);
    let ang = Expr::div(psi, w);
    let cos_phi = Expr::div(q1, r.clone());
    let sin_phi = Expr::div(q2, r);
    // cos/sin of (phi - psi/w).
    let a1 = Expr::add(
        Expr::mul(cos_phi.clone(), Expr::cos(ang.clone())),
        Expr::mul(sin_phi.clone(), Expr::sin(ang.clone())),
    );
    let a2 = Expr::sub(
        Expr::mul(sin_phi, Expr::cos(ang.clone())),
        Expr::mul(cos_phi, Expr::sin(ang)),
    );
    Expr::atan2(a2, a1)
}
