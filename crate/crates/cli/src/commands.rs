use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use surrogate_core::hfmgen::HfmSpec;
use surrogate_core::hybrid::{pipeline, HybridConfig};
use surrogate_core::io::{read_system, read_time_series_csv, time_series_csv, write_system, write_time_series_csv};
use surrogate_core::lpm::Topology;
use surrogate_core::lti::{h2_norm, simulate as simulate_system, Excitation};
use surrogate_core::mor::{bound_table, bound_table_csv, cure, CureLedger};
use surrogate_core::sysid::{fit_with, FitOptions, FitProblem};
use surrogate_core::{Error, Result, TimeSeries};

use crate::svg::{line_chart, Series};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn parse_step(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::invalid(format!("--step: '{p}' is not a finite number")))
        })
        .collect()
}

fn load_topology(path: &Path) -> Result<Topology> {
    let topo: Topology = read_json(path)?;
    topo.validate()?;
    Ok(topo)
}

fn series_points(ts: &TimeSeries) -> Vec<(f64, f64)> {
    ts.times().iter().copied().zip(ts.channel(0)).collect()
}

fn write_ledger(dir: &Path, ledger: &CureLedger) -> Result<()> {
    let rows = bound_table(ledger);
    write_json(&dir.join("ledger.json"), &ledger.to_document())?;
    fs::write(dir.join("bounds.csv"), bound_table_csv(&rows))?;
    let points = rows.iter().map(|r| (r.order as f64, r.log10_bound)).collect();
    let chart = line_chart(
        "A priori relative H2 error bound",
        "reduced order",
        "log10 bound",
        &[Series {
            name: "CURE bound",
            points,
            dashed: false,
        }],
    );
    fs::write(dir.join("bounds.svg"), chart)?;
    Ok(())
}

pub fn hfm_gen(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: HfmSpec = read_json(spec_path)?;
    let sys = spec.generate()?;
    fs::create_dir_all(out)?;
    write_system(out, &sys)?;
    let kind = match &spec {
        HfmSpec::Rod(_) => "rod",
        HfmSpec::ThermalRod(_) => "thermal_rod",
        HfmSpec::ThermoelasticRod(_) => "thermoelastic_rod",
    };
    let meta = json!({
        "kind": kind,
        "order": sys.order(),
        "inputs": sys.inputs(),
        "outputs": sys.outputs(),
        "h2_norm": h2_norm(&sys)?,
        "spec": spec,
    });
    write_json(&out.join("meta.json"), &meta)?;
    println!("wrote order-{} system to {}", sys.order(), out.display());
    Ok(())
}

pub fn reduce(system: &Path, tol: f64, max_order: usize, out: &Path) -> Result<()> {
    let sys = read_system(system)?;
    let ledger = cure(&sys, tol, max_order)?;
    fs::create_dir_all(out)?;
    write_ledger(out, &ledger)?;
    write_system(out.join("rom"), ledger.accumulated_rom())?;
    println!(
        "order {} -> {}, a priori relative H2 bound {:.4e}",
        sys.order(),
        ledger.order(),
        ledger.final_bound()
    );
    Ok(())
}

pub fn simulate(system: &Path, step: &str, dt: f64, t_end: f64, out: Option<&Path>) -> Result<()> {
    let sys = read_system(system)?;
    let ts = simulate_system(&sys, &Excitation::Step(parse_step(step)?), None, dt, t_end)?;
    match out {
        Some(path) => write_time_series_csv(path, &ts, "y"),
        None => {
            print!("{}", time_series_csv(&ts, "y")?);
            Ok(())
        }
    }
}

pub fn lpm_fit(topology: &Path, data: &Path, step: &str, dt: Option<f64>, starts: usize, seed: u64, out: &Path) -> Result<()> {
    let topo = load_topology(topology)?;
    let data = read_time_series_csv(data)?;
    let dt = match dt {
        Some(dt) => dt,
        None if data.len() >= 2 => data.times()[1] - data.times()[0],
        None => return Err(Error::invalid("--dt is required for single-sample data")),
    };
    let problem = FitProblem::new(topo.complex(), data, parse_step(step)?, topo.params.clone(), dt);
    let opts = FitOptions {
        starts,
        seed,
        ..FitOptions::default()
    };
    let res = fit_with(&problem, &opts)?;
    let fitted = problem.response(&res.params)?;
    fs::create_dir_all(out)?;
    write_json(&out.join("fit.json"), &res)?;
    write_json(&out.join("topology.json"), &Topology::from_parts(problem.complex.clone(), res.params.clone()))?;
    write_time_series_csv(out.join("fitted.csv"), &fitted, "y")?;
    let chart = line_chart(
        "Simulation results comparison",
        "time",
        "output",
        &[
            Series {
                name: "reference",
                points: series_points(&problem.data),
                dashed: false,
            },
            Series {
                name: "fitted network",
                points: series_points(&fitted),
                dashed: true,
            },
        ],
    );
    fs::write(out.join("overlay.svg"), chart)?;
    println!("nrmse {:.4e} after {} iterations ({:?})", res.nrmse, res.iterations, res.termination);
    Ok(())
}

pub struct HybridArgs {
    pub spec: PathBuf,
    pub topology: PathBuf,
    pub tol: f64,
    pub max_order: usize,
    pub dt: f64,
    pub t_end: f64,
    pub step: String,
    pub starts: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn hybrid(args: &HybridArgs) -> Result<()> {
    let spec: HfmSpec = read_json(&args.spec)?;
    let topo = load_topology(&args.topology)?;
    let hfm = spec.generate()?;
    let mut cfg = HybridConfig::new(args.tol, args.max_order, args.dt, args.t_end);
    cfg.step = parse_step(&args.step)?;
    cfg.fit.starts = args.starts;
    cfg.fit.seed = args.seed;
    let outcome = pipeline(hfm, &topo, &cfg)?;
    let out = &args.out;
    fs::create_dir_all(out)?;
    write_json(&out.join("report.json"), &outcome.report)?;
    write_ledger(out, &outcome.ledger)?;
    write_json(&out.join("topology.json"), &Topology::from_parts(topo.complex(), outcome.report.params.clone()))?;
    write_time_series_csv(out.join("training.csv"), &outcome.training, "y")?;
    write_time_series_csv(out.join("lpm_response.csv"), &outcome.lpm_response, "y")?;
    let chart = line_chart(
        "Reduced model vs. lumped network",
        "time",
        "output",
        &[
            Series {
                name: "CURE ROM",
                points: series_points(&outcome.training),
                dashed: false,
            },
            Series {
                name: "fitted network",
                points: series_points(&outcome.lpm_response),
                dashed: true,
            },
        ],
    );
    fs::write(out.join("response.svg"), chart)?;

    let r = &outcome.report;
    println!("{:<16}{:>14}", "quantity", "value");
    println!("{:<16}{:>14}", "hfm_order", r.hfm_order);
    println!("{:<16}{:>14}", "rom_order", r.rom_order);
    println!("{:<16}{:>14}", "lpm_order", r.lpm_order);
    println!("{:<16}{:>14.4e}", "eps_m", r.eps_m);
    println!("{:<16}{:>14.4e}", "eps_rel", r.eps_rel);
    println!("{:<16}{:>14.4e}", "eps_total", r.eps_total);
    println!("{:<16}{:>14.4e}", "nrmse", r.nrmse);
    if let Some(m) = r.measured_total {
        println!("{:<16}{:>14.4e}", "measured", m);
    }
    Ok(())
}
