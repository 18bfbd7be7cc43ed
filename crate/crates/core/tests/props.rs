//! Property tests for the exact core: grammar round-trips, residue
//! calculus and field arithmetic on randomized small instances.

use hyperq_core::grammar::parse;
use hyperq_core::ratexpr::RatExpr;
use hyperq_core::series::{primitive, residue, var_poles, Point};
use hyperq_core::vars::var;
use proptest::prelude::*;

/// Random small expressions over z and u in the shared grammar.
fn expr_strategy() -> impl Strategy<Value = RatExpr> {
    let leaf = prop_oneof![
        (-6i64..=6).prop_map(|n| RatExpr::int(n)),
        Just(RatExpr::var(var("z"))),
        Just(RatExpr::var(var("u"))),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), inner.clone()).prop_filter_map("nonzero divisor", |(a, b)| {
                if b.is_zero() {
                    None
                } else {
                    Some(a.div(&b))
                }
            }),
            (inner, 0u32..4).prop_map(|(a, e)| a.pow(e as i32)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trip(e in expr_strategy()) {
        let printed = e.to_grammar();
        let back = parse(&printed).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_grammar(), printed);
    }

    #[test]
    fn residue_is_additive(a in expr_strategy(), b in expr_strategy()) {
        let z = var("z");
        let pt = Point::Zero;
        let ra = residue(&a, z, &pt).unwrap();
        let rb = residue(&b, z, &pt).unwrap();
        let rab = residue(&a.add(&b), z, &pt).unwrap();
        prop_assert_eq!(rab, ra.add(&rb));
    }

    #[test]
    fn exact_differentials_have_no_residues(e in expr_strategy()) {
        let z = var("z");
        let de = e.derivative(z);
        prop_assert!(residue(&de, z, &Point::Zero).unwrap().is_zero());
        prop_assert!(residue(&de, z, &Point::Infinity).unwrap().is_zero());
    }

    #[test]
    fn global_residue_sum_vanishes(e in expr_strategy()) {
        let z = var("z");
        if let Ok(poles) = var_poles(&e, z) {
            let mut total = residue(&e, z, &Point::Infinity).unwrap();
            for (root, _) in poles {
                let pt = if root.is_zero() { Point::Zero } else { Point::Finite(root) };
                total = total.add(&residue(&e, z, &pt).unwrap());
            }
            prop_assert!(total.is_zero(), "total residue {}", total.to_grammar());
        }
    }

    #[test]
    fn primitive_differentiates_back(e in expr_strategy()) {
        let z = var("z");
        if let Ok(p) = primitive(&e, z) {
            let d = p.derivative(z);
            prop_assert!(d.is_rational());
            prop_assert_eq!(d.rat, e);
        }
    }
}
