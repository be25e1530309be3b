use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

use surrogate_core::hfmgen::{rod_elastic, RodOutput, RodSpec};
use surrogate_core::lti::{difference_system, eval_transfer, h2_norm, is_stable, to_first_order, StateSpaceSystem};
use surrogate_core::mor::{
    bound_table, bound_table_csv, cure, cure_with, irka, parse_bound_table_csv, spark_objective, CureOptions, IrkaOptions,
    ShiftPair,
};

fn rod(n_elem: usize, alpha: f64, beta: f64) -> StateSpaceSystem {
    let spec = RodSpec {
        n_elem,
        length: 1.0,
        area: 1.0,
        youngs: 1.0,
        density: 1.0,
        rayleigh_alpha: alpha,
        rayleigh_beta: beta,
        output: RodOutput::TipDisplacement,
        pressure: 1.0,
    };
    to_first_order(&rod_elastic(&spec).unwrap()).unwrap()
}

/// Symmetric negative-definite `A` plus a skew part: strictly dissipative.
fn dissipative() -> impl Strategy<Value = StateSpaceSystem> {
    (4usize..16).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(x, y, b, c)| {
                let x = DMatrix::from_vec(n, n, x);
                let y = DMatrix::from_vec(n, n, y);
                let a = -(&x * x.transpose()) - DMatrix::identity(n, n) * 0.1 + (&y - y.transpose());
                StateSpaceSystem::dense(a, DMatrix::from_vec(n, 1, b), DMatrix::from_vec(1, n, c)).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cure_is_stable_monotone_and_sound(sys in dissipative(), la in -2.0f64..2.0, lb in -2.0f64..2.0) {
        let base = ShiftPair::default_for(&sys);
        let opts = CureOptions { init: Some(ShiftPair::new(base.a * la.exp(), base.b * lb.exp()).unwrap()), ..CureOptions::new(1e-9, sys.order() - sys.order() % 2) };
        let ledger = cure_with(&sys, &opts).unwrap();
        let g = h2_norm(&sys).unwrap();
        let history = ledger.bound_history();
        prop_assert!(history.windows(2).all(|w| w[1].1 <= w[0].1));
        for (k, &(_, bound)) in history.iter().enumerate() {
            prop_assert!(is_stable(&ledger.steps()[k].rom).unwrap());
            let acc = ledger.accumulated_after(k + 1).unwrap();
            prop_assert!(is_stable(&acc).unwrap());
            let measured = h2_norm(&difference_system(&sys, &acc).unwrap()).unwrap() / g;
            prop_assert!(measured <= bound + 1e-8, "order {}: {measured} > {bound}", 2 * (k + 1));
        }
    }

    #[test]
    fn spark_objective_is_symmetric(a in 0.01f64..10.0, b in 0.01f64..10.0) {
        let sys = rod(10, 0.2, 1e-3);
        let ab = spark_objective(&sys, ShiftPair::new(a, b).unwrap()).unwrap();
        let ba = spark_objective(&sys, ShiftPair::new(b, a).unwrap()).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1e-300));
    }
}

#[test]
fn bound_table_round_trips_and_matches_ledger() {
    let ledger = cure(&rod(40, 0.5, 1e-3), 1e-3, 20).unwrap();
    let rows = bound_table(&ledger);
    assert_eq!(rows.len(), ledger.steps().len());
    assert_eq!(rows.last().unwrap().order, ledger.order());
    assert!(rows.iter().all(|r| (r.log10_bound - r.bound.log10()).abs() < 1e-12));
    let parsed = parse_bound_table_csv(&bound_table_csv(&rows)).unwrap();
    assert_eq!(parsed, rows);
}

#[test]
fn full_order_irka_recovers_small_system() {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -4.0]);
    let sys = StateSpaceSystem::dense(a, DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), DMatrix::from_row_slice(1, 2, &[1.0, -0.5])).unwrap();
    let res = irka(&sys, 2, &[0.5, 2.0], &IrkaOptions::default()).unwrap();
    assert!(res.converged);
    for w in [0.0, 0.7, 5.0] {
        let s = Complex::new(0.0, w);
        let d = eval_transfer(&sys, s).unwrap()[(0, 0)] - eval_transfer(&res.rom, s).unwrap()[(0, 0)];
        assert!(d.norm() < 1e-10);
    }
}
