//! Acceptance checks, one line per criterion. Exits non-zero when any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use vasctherm::geometry::LayoutKind;
use vasctherm::materials::{builtin_material, BuiltinMaterial, PropertyMode};
use vasctherm::mesh::ElementOrder;
use vasctherm::postprocess::mean_surface_temperature;
use vasctherm::scenario::{
    compare_cmp_tdmp, flow_reversal_experiment, run_scenario, write_run, LayoutConfig, MeshConfig, ScenarioConfig,
    ScenarioRun,
};
use vasctherm::solvers::{solve_transient, TransientSettings};
use vasctherm::verification::{jacobian_mask_sweep, mms_convergence, MmsCase};

const AMBIENT: f64 = 296.42;
const H_T: f64 = 21.0;
const SIGMA: f64 = 5.67e-8;
const THICKNESS: f64 = 0.005;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, elapsed: Duration, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2}: {} ({:.1} s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn plate(n: usize, emissivity: f64, steady_only: bool) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        name: "plate".into(),
        layout: LayoutConfig {
            none: true,
            ..LayoutConfig::default()
        },
        mesh: MeshConfig {
            n,
            order: ElementOrder::Linear,
        },
        steady_only,
        ..ScenarioConfig::default()
    };
    c.surface.emissivity = emissivity;
    c
}

fn paper_like(kind: LayoutKind, material: BuiltinMaterial, mode: PropertyMode, flux: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        layout: LayoutConfig::of_kind(kind),
        flux,
        steady_only: true,
        ..ScenarioConfig::default()
    };
    c.name = format!("{}_{}_{}_{flux}", kind.name(), material.name(), mode.label());
    c.material.name = material.name().into();
    c.material.mode = mode;
    c
}

/// Net areal power of the uniform plate balance.
fn net_flux(theta: f64, flux: f64, emissivity: f64) -> f64 {
    flux - H_T * (theta - AMBIENT) - emissivity * SIGMA * (theta.powi(4) - AMBIENT.powi(4))
}

fn bisect_root(flux: f64, emissivity: f64) -> f64 {
    let (mut lo, mut hi) = (AMBIENT, AMBIENT + flux / H_T);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if net_flux(mid, flux, emissivity) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn max_abs_dev(v: &[f64], target: f64) -> f64 {
    v.iter().map(|x| (x - target).abs()).fold(0.0, f64::max)
}

fn c1_closed_form(r: &mut Report) {
    let t0 = Instant::now();
    let exact = 1000.0 / H_T + AMBIENT;
    let mut worst: f64 = 0.0;
    for n in [2, 3, 8, 40] {
        let run = run_scenario(&plate(n, 0.0, true)).expect("plate solve");
        worst = worst.max(max_abs_dev(&run.steady.theta, exact));
    }
    let el = t0.elapsed();
    r.line(
        1,
        worst <= 1e-6 && el < Duration::from_secs(1),
        el,
        format!("exact {exact:.10} K, max nodal deviation {worst:.2e} K over n = 2, 3, 8, 40 (tol 1e-6 K)"),
    );
}

fn c2_radiative(r: &mut Report) {
    let t0 = Instant::now();
    let root = bisect_root(1000.0, 0.97);
    let mut worst: f64 = 0.0;
    for n in [2, 3, 8, 40] {
        let run = run_scenario(&plate(n, 0.97, true)).expect("plate solve");
        worst = worst.max(max_abs_dev(&run.steady.theta, root));
    }
    let el = t0.elapsed();
    r.line(
        2,
        worst <= 1e-4 && el < Duration::from_secs(1),
        el,
        format!("bisection root {root:.10} K, max nodal deviation {worst:.2e} K (tol 1e-4 K)"),
    );
}

fn c3_scalar_transient(r: &mut Report) {
    let t0 = Instant::now();
    let config = plate(4, 0.97, false);
    let problem = config.build_problem().unwrap();
    let ts = TransientSettings::default();
    let series = solve_transient(&problem, &ts, &config.newton).expect("plate transient");

    // independent RK4 at 0.01 s on the same balance
    let material = builtin_material(BuiltinMaterial::CfrpLike, PropertyMode::TemperatureDependent);
    let rate = |th: f64| net_flux(th, 1000.0, 0.97) / (THICKNESS * material.density * material.specific_heat.eval(th));
    let (dt, sub) = (0.01, 100);
    let mut th = AMBIENT;
    let mut reference = vec![th];
    for k in 1..=(ts.steps() * sub) {
        let k1 = rate(th);
        let k2 = rate(th + 0.5 * dt * k1);
        let k3 = rate(th + 0.5 * dt * k2);
        let k4 = rate(th + dt * k3);
        th += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if k % sub == 0 {
            reference.push(th);
        }
    }
    let mut worst_rel: f64 = 0.0;
    for (f, want) in series.fields.iter().zip(&reference) {
        let mst = mean_surface_temperature(f, &problem.mesh);
        worst_rel = worst_rel.max((mst - want).abs() / want);
    }
    let final_gap = (mean_surface_temperature(series.fields.last().unwrap(), &problem.mesh) - reference.last().unwrap()).abs();
    let el = t0.elapsed();
    r.line(
        3,
        series.len() == reference.len() && worst_rel <= 5e-3 && final_gap <= 0.05 && el < Duration::from_secs(10),
        el,
        format!("max relative gap {worst_rel:.2e} (tol 5e-3), gap at 1500 s {final_gap:.2e} K (tol 0.05 K)"),
    );
}

fn c4_jacobian(r: &mut Report) {
    let t0 = Instant::now();
    let sweep = jacobian_mask_sweep(5, 2024).expect("jacobian sweep");
    let worst = sweep.iter().map(|s| s.1).fold(0.0, f64::max);
    let el = t0.elapsed();
    r.line(
        4,
        sweep.len() == 16 && worst <= 1e-5 && el < Duration::from_secs(30),
        el,
        format!("16 masks x 5 states, worst relative error {worst:.2e} (tol 1e-5)"),
    );
}

fn c5_mms(r: &mut Report) {
    let t0 = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for case in MmsCase::standard().into_iter().filter(|c| c.name != "constant") {
        let t = mms_convergence(&case, &[8, 16, 32, 64]).expect("mms");
        let slope = t.slope.unwrap_or(f64::NAN);
        ok &= (slope - 2.0).abs() <= 0.2;
        detail.push(format!("{} {slope:.3}", t.case));
    }
    let el = t0.elapsed();
    r.line(
        5,
        ok && el < Duration::from_secs(60),
        el,
        format!("P1 L2 slopes on n = 8..64: {} (want 2.0 +/- 0.2)", detail.join(", ")),
    );
}

struct SteadyCase {
    config: ScenarioConfig,
    run: ScenarioRun,
}

fn steady_sweep(flux: f64) -> Vec<SteadyCase> {
    let mut out = Vec::new();
    for kind in LayoutKind::ALL {
        for material in BuiltinMaterial::ALL {
            for mode in [PropertyMode::Constant, PropertyMode::TemperatureDependent] {
                let config = paper_like(kind, material, mode, flux);
                let run = run_scenario(&config).expect("steady sweep");
                out.push(SteadyCase { config, run });
            }
        }
    }
    out
}

fn c6_minimum(r: &mut Report, cases: &[SteadyCase], el: Duration) {
    let mut worst = f64::NEG_INFINITY;
    for c in cases {
        let bound = AMBIENT.min(c.run.problem.inlet_temperature);
        let min = c.run.steady.theta.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max(bound - min);
    }
    r.line(
        6,
        worst <= 1e-3 && el < Duration::from_secs(300),
        el,
        format!("{} runs, largest undershoot below min(ambient, inlet) {:.2e} K (tol 1e-3 K)", cases.len(), worst.max(0.0)),
    );
}

fn c7_maximum(r: &mut Report, cases: &[SteadyCase], el: Duration) {
    let mut worst = f64::NEG_INFINITY;
    for c in cases {
        let bound = AMBIENT.max(c.run.problem.inlet_temperature);
        let max = c.run.steady.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(max - bound);
    }
    r.line(
        7,
        worst <= 1e-3,
        el,
        format!("{} runs at -1000 W/m2, largest overshoot above max(ambient, inlet) {:.2e} K (tol 1e-3 K)", cases.len(), worst.max(0.0)),
    );
}

fn c8_reversal(r: &mut Report, balance: &mut Vec<(String, f64)>, dir: &Path) -> ScenarioConfig {
    let t0 = Instant::now();
    let mut ok = true;
    let (mut steady, mut transient): (f64, f64) = (0.0, 0.0);
    let mut keep = None;
    for kind in LayoutKind::ALL {
        for flux in [1000.0, 2000.0] {
            let mut config = paper_like(kind, BuiltinMaterial::CfrpLike, PropertyMode::TemperatureDependent, flux);
            config.steady_only = false;
            let exp = flow_reversal_experiment(&config).expect("flow reversal");
            let rep = &exp.report;
            ok &= rep.pass();
            steady = steady.max(rep.steady_mst_gap).max(rep.steady_outlet_gap);
            transient = transient
                .max(rep.max_transient_mst_gap.unwrap())
                .max(rep.max_transient_outlet_gap.unwrap());
            for run in [&exp.forward, &exp.reverse] {
                balance.push((run.config.name.clone(), run.summary.steady_balance_ratio.unwrap()));
            }
            if keep.is_none() {
                write_run(&exp.forward, dir).unwrap();
                keep = Some(exp.forward.config.clone());
            }
        }
    }
    let el = t0.elapsed();
    r.line(
        8,
        ok && el < Duration::from_secs(900),
        el,
        format!(
            "3 layouts x 2 fluxes, TDMP: max steady gap {steady:.2e} K (tol 0.05 K), max transient gap {transient:.2e} K (tol 0.2 K)"
        ),
    );
    keep.unwrap()
}

fn c9_cmp_tdmp(r: &mut Report, sweeps: &[&[SteadyCase]], el: Duration) {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for cases in sweeps {
        for pair in cases.chunks(2) {
            let [cmp, tdmp] = pair else { unreachable!() };
            assert_eq!(cmp.config.material.mode, PropertyMode::Constant);
            worst = worst.max((cmp.run.summary.steady.mst - tdmp.run.summary.steady.mst).abs());
            n += 1;
        }
    }
    // transient gap is reported only
    let mut config = paper_like(LayoutKind::UShape, BuiltinMaterial::CfrpLike, PropertyMode::Constant, 2000.0);
    config.steady_only = false;
    let exp = compare_cmp_tdmp(&config).expect("comparison");
    let rep = &exp.report;
    let el = el + t0.elapsed();
    r.line(
        9,
        worst <= 1.0,
        el,
        format!(
            "{n} pairs, max steady MST gap {worst:.2e} K (tol 1 K); u_shape cfrp 2000 W/m2 transient: max MST gap {:.2e} K, max eta gap {:.2e} at t = {} s, steady eta gap {:.2e}",
            rep.max_transient_mst_gap.unwrap(),
            rep.max_transient_eta_gap.unwrap(),
            rep.peak_eta_gap_time.unwrap(),
            rep.steady_eta_gap.unwrap()
        ),
    );
}

fn c10_balance(r: &mut Report, balance: &[(String, f64)]) {
    let (name, worst) = balance
        .iter()
        .cloned()
        .fold((String::new(), 0.0), |acc, (n, v)| if v > acc.1 { (n, v) } else { acc });
    r.line(
        10,
        worst <= 5e-3,
        Duration::ZERO,
        format!("{} steady runs, worst |residual| / supplied {worst:.2e} ({name}) (tol 5e-3)", balance.len()),
    );
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c11_determinism(r: &mut Report, first: &Path, second: &Path) {
    let t0 = Instant::now();
    let echoed = ScenarioConfig::load(&first.join("config.json")).expect("echoed config");
    let rerun = run_scenario(&echoed).expect("rerun");
    write_run(&rerun, second).unwrap();
    let a = csv_files(first);
    let b = csv_files(second);
    let differing: Vec<_> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.clone()).collect();
    let csv_count = a.iter().filter(|f| f.0.ends_with(".csv")).count();
    let el = t0.elapsed();
    r.line(
        11,
        a.len() == b.len() && differing.is_empty() && csv_count >= 8,
        el,
        format!("rerun of {} from its echoed config: {} files compared, differing {:?}", echoed.name, a.len(), differing),
    );
}

fn main() {
    // `cargo test` passes harness flags; only a name filter is honoured
    if std::env::args().skip(1).any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let mut r = Report { failures: 0 };
    c1_closed_form(&mut r);
    c2_radiative(&mut r);
    c3_scalar_transient(&mut r);
    c4_jacobian(&mut r);
    c5_mms(&mut r);

    let t0 = Instant::now();
    let mut heated = steady_sweep(1000.0);
    heated.extend(steady_sweep(2000.0));
    let heated_time = t0.elapsed();
    c6_minimum(&mut r, &heated, heated_time);
    let t0 = Instant::now();
    let cooled = steady_sweep(-1000.0);
    c7_maximum(&mut r, &cooled, t0.elapsed());

    let mut balance: Vec<(String, f64)> = heated
        .iter()
        .chain(&cooled)
        .map(|c| (c.config.name.clone(), c.run.summary.steady_balance_ratio.unwrap()))
        .collect();
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    c8_reversal(&mut r, &mut balance, first.path());
    c9_cmp_tdmp(&mut r, &[&heated], heated_time);
    c10_balance(&mut r, &balance);
    c11_determinism(&mut r, first.path(), second.path());

    println!(
        "acceptance: {} of 11 criteria passed in {:.0} s",
        11 - r.failures,
        start.elapsed().as_secs_f64()
    );
    if r.failures > 0 {
        std::process::exit(1);
    }
}
