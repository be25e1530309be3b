use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surrogate"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rod_spec(dir: &Path, n_elem: usize) -> PathBuf {
    let path = dir.join("rod.json");
    fs::write(
        &path,
        format!(
            r#"{{"kind": "rod", "n_elem": {n_elem}, "length": 1, "area": 1, "youngs": 1, "density": 1,
                "rayleigh_alpha": 2, "rayleigh_beta": 0.01, "output": "average_displacement"}}"#
        ),
    )
    .unwrap();
    path
}

fn write_lag(dir: &Path, a: f64) {
    fs::create_dir_all(dir).unwrap();
    let mtx = |v: f64| format!("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 {v}\n");
    fs::write(dir.join("A.mtx"), mtx(a)).unwrap();
    fs::write(dir.join("B.mtx"), mtx(1.0)).unwrap();
    fs::write(dir.join("C.mtx"), mtx(1.0)).unwrap();
}

fn assert_valid_svg(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
}

#[test]
fn hfm_gen_writes_quadruple_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let spec = rod_spec(tmp.path(), 20);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&["hfm-gen", p(&spec), "-o", p(&a)]).status.success());
    assert!(run(&["hfm-gen", p(&spec), "-o", p(&b)]).status.success());
    for f in ["E.mtx", "A.mtx", "B.mtx", "C.mtx", "meta.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["order"], 40);
}

#[test]
fn malformed_spec_exits_2_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("bad.json");
    fs::write(&spec, r#"{"kind": "rod", "n_elements": 4}"#).unwrap();
    let out = run(&["hfm-gen", p(&spec), "-o", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_elements"));
}

#[test]
fn reduce_emits_non_increasing_bounds() {
    let tmp = TempDir::new().unwrap();
    let spec = rod_spec(tmp.path(), 100);
    let sys = tmp.path().join("sys");
    assert!(run(&["hfm-gen", p(&spec), "-o", p(&sys)]).status.success());
    let out = tmp.path().join("red");
    let res = run(&["reduce", p(&sys), "--tol", "0.05", "--max-order", "40", "-o", p(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let bounds: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!bounds.is_empty());
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
    assert!(*bounds.last().unwrap() <= 0.05);
    assert_valid_svg(&out.join("bounds.svg"));
    assert!(out.join("rom").join("A.mtx").exists());

    let single = tmp.path().join("single");
    assert!(run(&["reduce", p(&sys), "--tol", "0.5", "-o", p(&single)]).status.success());
    let csv = fs::read_to_string(single.join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn unstable_system_exits_3() {
    let tmp = TempDir::new().unwrap();
    let sys = tmp.path().join("sys");
    write_lag(&sys, 1.0);
    let out = run(&["reduce", p(&sys), "--tol", "0.1", "--max-order", "2", "-o", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_csv_format_and_values() {
    let tmp = TempDir::new().unwrap();
    let sys = tmp.path().join("sys");
    write_lag(&sys, -1.0);
    let out = run(&["simulate", p(&sys), "--step", "0", "--dt", "0.1", "--t-end", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y1"));
    assert!(lines.all(|l| l.split(',').nth(1) == Some("0")));

    let csv = tmp.path().join("step.csv");
    assert!(run(&["simulate", p(&sys), "--dt", "0.001", "--t-end", "1", "-o", p(&csv)]).status.success());
    let last = fs::read_to_string(&csv).unwrap().lines().last().unwrap().to_string();
    let y: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((y - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
}

#[test]
fn lpm_fit_recovers_synthetic_data() {
    use surrogate_core::io::write_time_series_csv;
    use surrogate_core::lpm::{ParamSet, Topology};
    use surrogate_core::sysid::FitProblem;
    use surrogate_core::TimeSeries;

    let tmp = TempDir::new().unwrap();
    let topo: Topology = serde_json::from_str(&fs::read_to_string(data_file("two_dof.json")).unwrap()).unwrap();
    let truth = [("m1", 1.0), ("m2", 0.5), ("k1", 3.0), ("k2", 2.0), ("d1", 1.5), ("d2", 0.8)];
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.025).collect();
    let probe = TimeSeries::scalar(grid.clone(), grid).unwrap();
    let truth_params = ParamSet::from_values(truth);
    let problem = FitProblem::new(topo.complex(), probe, vec![1.0], truth_params.clone(), 0.025);
    let data = tmp.path().join("data.csv");
    write_time_series_csv(&data, &problem.response(&truth_params).unwrap(), "y").unwrap();

    let start = ParamSet::from_values(truth.map(|(k, v)| (k, 2.0 * v)));
    let start_path = tmp.path().join("start.json");
    fs::write(&start_path, serde_json::to_string(&Topology::from_parts(topo.complex(), start)).unwrap()).unwrap();
    let out = tmp.path().join("fit");
    let res = run(&["lpm-fit", p(&start_path), p(&data), "-o", p(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit["nrmse"].as_f64().unwrap() <= 1e-3, "{fit}");
    assert_valid_svg(&out.join("overlay.svg"));
}

#[test]
fn lpm_fit_missing_param_exits_2() {
    let tmp = TempDir::new().unwrap();
    let mut topo: serde_json::Value = serde_json::from_str(&fs::read_to_string(data_file("two_dof.json")).unwrap()).unwrap();
    topo["params"].as_object_mut().unwrap().remove("k2");
    let path = tmp.path().join("t.json");
    fs::write(&path, topo.to_string()).unwrap();
    let csv = tmp.path().join("d.csv");
    fs::write(&csv, "t,y1\n0,0\n1,1\n").unwrap();
    let out = run(&["lpm-fit", p(&path), p(&csv), "-o", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k2"));
}

#[test]
fn hybrid_writes_full_report() {
    let tmp = TempDir::new().unwrap();
    let spec = rod_spec(tmp.path(), 100);
    let out = tmp.path().join("hy");
    let res = run(&["hybrid", p(&spec), p(&data_file("two_dof.json")), "-o", p(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for key in ["eps_m", "eps_rel", "eps_total", "nrmse", "rom_order", "lpm_order", "hfm_order"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let (m, r, t) = (
        report["eps_m"].as_f64().unwrap(),
        report["eps_rel"].as_f64().unwrap(),
        report["eps_total"].as_f64().unwrap(),
    );
    assert_eq!(t, m + r);
    assert!(report["measured_total"].as_f64().unwrap() <= t);
    assert_valid_svg(&out.join("response.svg"));
    assert_valid_svg(&out.join("bounds.svg"));
}
