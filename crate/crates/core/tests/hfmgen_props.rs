use proptest::prelude::*;

use surrogate_core::hfmgen::{rod_elastic, rod_heat, rod_thermoelastic, CoupledInputs, CoupledRodSpec, HfmSpec, RodOutput, RodSpec, ThermalRodSpec};
use surrogate_core::lti::{is_stable, to_first_order};

fn rod_spec(n_elem: usize, alpha: f64, beta: f64) -> RodSpec {
    RodSpec {
        n_elem,
        length: 1.0,
        area: 1.0,
        youngs: 1.0,
        density: 1.0,
        rayleigh_alpha: alpha,
        rayleigh_beta: beta,
        output: RodOutput::AverageDisplacement,
        pressure: 1.0,
    }
}

#[test]
fn first_frequency_converges_under_refinement() {
    let first = |n| rod_elastic(&rod_spec(n, 0.1, 1e-4)).unwrap().natural_frequencies().unwrap()[0];
    let w: Vec<f64> = [4, 8, 16, 32, 64].iter().map(|&n| first(n)).collect();
    let changes: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    assert!(changes.windows(2).all(|c| c[1] <= c[0]), "{changes:?}");
    // Clamped-free bar: ω₁ = π/2.
    assert!((w[4] - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
}

#[test]
fn spec_json_uses_kind_tag() {
    let spec: HfmSpec = serde_json::from_str(
        r#"{"kind": "thermal_rod", "n_elem": 5, "length": 1, "area": 1, "conductivity": 2, "vol_heat_capacity": 1, "flux": 1}"#,
    )
    .unwrap();
    assert_eq!(spec.generate().unwrap().order(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_models_are_stable(n in 1usize..40, alpha in 0.01f64..5.0, beta in 1e-5f64..0.05, k in 0.01f64..5.0, ex in 0.0f64..0.1) {
        prop_assert!(is_stable(&to_first_order(&rod_elastic(&rod_spec(n, alpha, beta)).unwrap()).unwrap()).unwrap());
        let heat = ThermalRodSpec { n_elem: n, length: 1.0, area: 1.0, conductivity: k, vol_heat_capacity: 1.0, flux: 1.0 };
        prop_assert!(is_stable(&rod_heat(&heat).unwrap()).unwrap());
        let coupled = CoupledRodSpec {
            n_elem: n, length: 1.0, area: 1.0, youngs: 1.0, density: 1.0, rayleigh_alpha: alpha, rayleigh_beta: beta,
            output: RodOutput::TipDisplacement, pressure: -1.0, conductivity: k, vol_heat_capacity: 1.0, flux: 1.0,
            thermal_expansion: ex, inputs: CoupledInputs::Separate,
        };
        let sys = rod_thermoelastic(&coupled).unwrap();
        prop_assert_eq!((sys.order(), sys.inputs()), (3 * n, 2));
        prop_assert!(is_stable(&sys).unwrap());
    }
}
