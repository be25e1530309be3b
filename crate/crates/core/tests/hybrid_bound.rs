use std::path::Path;

use surrogate_core::hfmgen::{rod_elastic, RodOutput, RodSpec};
use surrogate_core::hybrid::{pipeline, HybridConfig};
use surrogate_core::lpm::{ParamSet, Topology};
use surrogate_core::sysid::FitProblem;
use surrogate_core::TimeSeries;

fn load(name: &str) -> Topology {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rod_report_bounds_the_measured_error() {
    let spec = RodSpec {
        n_elem: 60,
        length: 1.0,
        area: 1.0,
        youngs: 1.0,
        density: 1.0,
        rayleigh_alpha: 2.0,
        rayleigh_beta: 0.01,
        output: RodOutput::AverageDisplacement,
        pressure: 1.0,
    };
    let out = pipeline(rod_elastic(&spec).unwrap(), &load("two_dof.json"), &HybridConfig::new(0.01, 40, 0.02, 20.0)).unwrap();
    let r = &out.report;
    assert_eq!(r.eps_total, r.eps_m + r.eps_rel);
    assert!(r.eps_m <= 0.01);
    assert_eq!((r.hfm_order, r.lpm_order), (120, 4));
    assert!(r.measured_total.unwrap() <= r.eps_total + 1e-8);
    assert_eq!(out.training.times(), out.lpm_response.times());
}

/// The network itself as HFM. The ROM has the HFM's order but its poles sit at
/// the mirrored shifts, so it is close rather than exact.
#[test]
fn network_as_its_own_hfm() {
    let topo = load("two_dof.json");
    let truth = ParamSet::from_values([("m1", 1.0), ("m2", 1.0), ("k1", 1.0), ("k2", 1.0), ("d1", 4.0), ("d2", 4.0)]);
    let probe = TimeSeries::scalar(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
    let hfm = FitProblem::new(topo.complex(), probe, vec![1.0], truth.clone(), 0.01).model(&truth).unwrap();
    let topo = Topology::from_parts(topo.complex(), ParamSet::from_values([("m1", 1.5), ("m2", 0.7), ("k1", 1.5), ("k2", 0.7), ("d1", 3.0), ("d2", 6.0)]));
    let out = pipeline(hfm, &topo, &HybridConfig::new(1e-6, 4, 0.01, 30.0)).unwrap();
    let r = &out.report;
    assert_eq!(r.rom_order, 4);
    assert!(r.eps_m < 1e-2, "{}", r.eps_m);
    assert!(r.nrmse < 1e-2, "{}", r.nrmse);
    assert!(r.measured_total.unwrap() <= r.eps_total + 1e-8);
}

#[test]
fn stage_is_named_in_errors() {
    let mut topo = load("two_dof.json");
    topo.params.0.remove("k2");
    let spec = RodSpec {
        n_elem: 4,
        length: 1.0,
        area: 1.0,
        youngs: 1.0,
        density: 1.0,
        rayleigh_alpha: 1.0,
        rayleigh_beta: 0.01,
        output: RodOutput::TipDisplacement,
        pressure: 1.0,
    };
    let err = pipeline(rod_elastic(&spec).unwrap(), &topo, &HybridConfig::new(0.1, 4, 0.1, 1.0)).unwrap_err();
    assert!(err.to_string().contains("topology"), "{err}");
}
