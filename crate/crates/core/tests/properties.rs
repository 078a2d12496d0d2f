//! Property tests over generated expressions: simplification
//! idempotence, derivative linearity, the total-derivative commutation
//! identity, Clairaut symmetry, and the print/parse round trip.

use proptest::prelude::*;

use noether_core::diff::{diff, total_derivative};
use noether_core::eval::{eval, Assignment};
use noether_core::expr::Expr;
use noether_core::parse::parse;
use noether_core::print::pretty;
use noether_core::sample::NumericEq;
use noether_core::simplify::simplify;
use noether_core::sym::{Sym, VariableSpace};

fn space() -> VariableSpace {
    VariableSpace::new(2, &["k"]).unwrap()
}

/// Expression generator over (t, q1, q2, qd1, qd2, k) staying inside the
/// grammar (and away from trivially empty domains).
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-6i64..=6).prop_map(Expr::int),
        (1i64..=4, 2i64..=5).prop_map(|(a, b)| Expr::ratio(a, b)),
        Just(Expr::time()),
        Just(Expr::coord(0)),
        Just(Expr::coord(1)),
        Just(Expr::vel(0)),
        Just(Expr::vel(1)),
        Just(Expr::sym(Sym::Param(0))),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), 1i64..=3).prop_map(|(a, n)| Expr::powi(a, n)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(Expr::exp),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::atan2(a, b)),
        ]
    })
}

/// Velocity-only variant for total-derivative laws (inputs must stay at
/// jet order <= 1).
fn arb_state_expr() -> impl Strategy<Value = Expr> {
    arb_expr()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let once = simplify(&e);
        let twice = simplify(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn simplify_preserves_value(e in arb_expr()) {
        let s = simplify(&e);
        let a = Assignment::state(0.37, &[0.81, -0.44], &[1.13, 0.29])
            .with_param(0, 0.67);
        if let (Ok(v1), Ok(v2)) = (eval(&e, &a), eval(&s, &a)) {
            prop_assert!(
                (v1 - v2).abs() <= 1e-9 * (1.0 + v1.abs() + v2.abs()),
                "{} vs {}", v1, v2
            );
        }
    }

    #[test]
    fn diff_is_linear(e1 in arb_expr(), e2 in arb_expr(), a in -3i64..=3, b in -3i64..=3) {
        let combo = Expr::add(
            Expr::mul(Expr::int(a), e1.clone()),
            Expr::mul(Expr::int(b), e2.clone()),
        );
        for v in [Sym::coord(0), Sym::vel(1), Sym::Time] {
            let lhs = diff(&combo, v);
            let rhs = Expr::add(
                Expr::mul(Expr::int(a), diff(&e1, v)),
                Expr::mul(Expr::int(b), diff(&e2, v)),
            );
            let chk = NumericEq::default().trials(8);
            prop_assert!(!matches!(chk.check(&lhs, &rhs), noether_core::sample::EqVerdict::NotEqual(_)));
        }
    }

    #[test]
    fn clairaut_mixed_partials(e in arb_expr()) {
        for (x, y) in [
            (Sym::coord(0), Sym::vel(0)),
            (Sym::coord(1), Sym::Time),
            (Sym::vel(0), Sym::vel(1)),
        ] {
            let lhs = diff(&diff(&e, x), y);
            let rhs = diff(&diff(&e, y), x);
            let chk = NumericEq::default().trials(8);
            prop_assert!(!matches!(chk.check(&lhs, &rhs), noether_core::sample::EqVerdict::NotEqual(_)));
        }
    }

    #[test]
    fn total_derivative_commutation(e in arb_state_expr()) {
        // [D_t, d/dqd^j] F == -dF/dq^j
        for j in 0..2usize {
            let lhs = Expr::sub(
                total_derivative(&diff(&e, Sym::vel(j))).unwrap(),
                diff(&total_derivative(&e).unwrap(), Sym::vel(j)),
            );
            let rhs = Expr::neg(diff(&e, Sym::coord(j)));
            let chk = NumericEq::default().trials(8);
            prop_assert!(!matches!(chk.check(&lhs, &rhs), noether_core::sample::EqVerdict::NotEqual(_)));
        }
    }

    #[test]
    fn print_parse_roundtrip(e in arb_expr()) {
        let sp = space();
        let s = simplify(&e);
        let printed = pretty(&s, &sp);
        let back = match parse(&printed, &sp) {
            Ok(b) => b,
            Err(d) => return Err(TestCaseError::fail(format!("reparse of `{printed}`: {d:?}"))),
        };
        // Numerically equal wherever both evaluate.
        let chk = NumericEq::default().trials(16);
        prop_assert!(!matches!(chk.check(&s, &back), noether_core::sample::EqVerdict::NotEqual(_)));
    }
}
