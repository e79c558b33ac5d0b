//! Cross-checks of the interior-point solver against independent oracles:
//! vertex enumeration for small boxed LPs and closed forms for ball
//! constraints.

use fairsoc::solver::certificate::verify_primal_infeasibility;
use fairsoc::{solve, Certificate, ConicProgram, LinearExpr, Sense, SolverSettings, Status};
use proptest::prelude::*;

mod common;
use common::vertex_enumeration;

fn build_lp(c: &[f64], g: &[Vec<f64>], h: &[f64], lo: f64, hi: f64) -> ConicProgram {
    let mut p = ConicProgram::new();
    let vars: Vec<_> = c.iter().map(|_| p.add_variable(lo, hi).unwrap()).collect();
    for (row, &rhs) in g.iter().zip(h) {
        let mut e = LinearExpr::new();
        for (&v, &a) in vars.iter().zip(row) {
            e.add_term(v, a);
        }
        p.add_le(e, LinearExpr::constant(rhs)).unwrap();
    }
    let mut obj = LinearExpr::new();
    for (&v, &a) in vars.iter().zip(c) {
        obj.add_term(v, a);
    }
    p.set_objective(Sense::Minimize, obj).unwrap();
    p
}

fn lp_case() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=6, 1usize..=5).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), m),
            prop::collection::vec(-3.0f64..4.0, m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, .. ProptestConfig::default() })]

    #[test]
    fn boxed_lp_matches_vertex_enumeration((c, g, h) in lp_case()) {
        let (lo, hi) = (-5.0, 5.0);
        let oracle = vertex_enumeration(&c, &g, &h, lo, hi);
        let program = build_lp(&c, &g, &h, lo, hi);
        let form = program.to_standard_form();
        let sol = solve(&form, &SolverSettings::default()).unwrap();
        match oracle {
            Some(v) => {
                prop_assert_eq!(sol.status, Status::Optimal);
                let got = form.original_objective(sol.objective);
                prop_assert!((got - v).abs() <= 1e-6 * (1.0 + v.abs()), "solver {} oracle {}", got, v);
                let x = form.recover(&sol.x);
                prop_assert!(program.max_violation(&x) <= 1e-6);
            }
            None => {
                // empty polytopes may be within rounding of feasibility; the
                // solver must then either certify or fall back to unknown
                prop_assert_ne!(sol.status, Status::Optimal);
                if let Some(Certificate::PrimalInfeasible { y }) = &sol.certificate {
                    prop_assert!(verify_primal_infeasibility(&form, y, 1e-8).valid);
                }
            }
        }
    }

    #[test]
    fn ball_minimum_has_closed_form(
        c in prop::collection::vec(-3.0f64..3.0, 1..6),
        center_seed in prop::collection::vec(-2.0f64..2.0, 6),
        r in 0.1f64..3.0,
    ) {
        let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(cn > 1e-3);
        let n = c.len();
        let center = &center_seed[..n];
        let mut p = ConicProgram::new();
        let vars: Vec<_> = (0..n).map(|_| p.add_free_variable()).collect();
        let diffs = vars
            .iter()
            .zip(center)
            .map(|(&v, &x0)| LinearExpr::var(v) - LinearExpr::constant(x0))
            .collect();
        p.add_soc(LinearExpr::constant(r), diffs).unwrap();
        let mut obj = LinearExpr::new();
        for (&v, &a) in vars.iter().zip(&c) {
            obj.add_term(v, a);
        }
        p.set_objective(Sense::Minimize, obj).unwrap();
        let form = p.to_standard_form();
        let sol = solve(&form, &SolverSettings::default()).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        let expected = c.iter().zip(center).map(|(a, b)| a * b).sum::<f64>() - r * cn;
        let got = form.original_objective(sol.objective);
        prop_assert!((got - expected).abs() <= 1e-6 * (1.0 + expected.abs()), "{} vs {}", got, expected);
    }
}

#[test]
fn ball_and_halfspace_that_miss_are_infeasible() {
    // |x| <= 1 and x0 >= 2
    let mut p = ConicProgram::new();
    let x0 = p.add_free_variable();
    let x1 = p.add_free_variable();
    p.add_soc(LinearExpr::constant(1.0), vec![x0.into(), x1.into()]).unwrap();
    p.add_ge(x0.into(), LinearExpr::constant(2.0)).unwrap();
    p.set_objective(Sense::Minimize, x1.into()).unwrap();
    let form = p.to_standard_form();
    let sol = solve(&form, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, Status::PrimalInfeasible);
    let Some(Certificate::PrimalInfeasible { y }) = &sol.certificate else {
        panic!("no certificate");
    };
    assert!(verify_primal_infeasibility(&form, y, 1e-8).valid);
}
