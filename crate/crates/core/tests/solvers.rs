use vasctherm::geometry::LayoutKind;
use vasctherm::linalg::{GmresSettings, LinearMethod};
use vasctherm::postprocess::mean_surface_temperature;
use vasctherm::scenario::{LayoutConfig, MeshConfig, ScenarioConfig};
use vasctherm::solvers::{solve_steady, solve_transient, NewtonSettings, TransientSettings};
use vasctherm::verification::observed_order;

fn config(kind: Option<LayoutKind>, n: usize) -> ScenarioConfig {
    ScenarioConfig {
        layout: match kind {
            Some(k) => LayoutConfig::of_kind(k),
            None => LayoutConfig {
                none: true,
                ..LayoutConfig::default()
            },
        },
        mesh: MeshConfig { n, ..MeshConfig::default() },
        ..ScenarioConfig::default()
    }
}

fn final_mst(c: &ScenarioConfig, dt: f64, order: u8) -> f64 {
    let p = c.build_problem().unwrap();
    let ts = TransientSettings {
        dt,
        total_time: 200.0,
        bdf_order: order,
    };
    let s = solve_transient(&p, &ts, &NewtonSettings::default()).unwrap();
    mean_surface_temperature(s.last().unwrap().1, &p.mesh)
}

#[test]
fn bdf2_is_second_order_in_time() {
    for kind in [None, Some(LayoutKind::UShape)] {
        let c = config(kind, 8);
        let v: Vec<f64> = [4.0, 2.0, 1.0].iter().map(|&dt| final_mst(&c, dt, 2)).collect();
        let p = observed_order(v[0], v[1], v[2]);
        assert!(p >= 1.8, "{kind:?}: observed order {p}");
    }
}

#[test]
fn bdf1_is_first_order_in_time() {
    let c = config(None, 4);
    let v: Vec<f64> = [4.0, 2.0, 1.0].iter().map(|&dt| final_mst(&c, dt, 1)).collect();
    let p = observed_order(v[0], v[1], v[2]);
    assert!((p - 1.0).abs() < 0.15, "observed order {p}");
}

#[test]
fn direct_and_gmres_agree() {
    for kind in LayoutKind::ALL {
        let p = config(Some(kind), 20).build_problem().unwrap();
        let direct = solve_steady(&p, &NewtonSettings::default(), None).unwrap();
        let krylov = NewtonSettings {
            linear: LinearMethod::Gmres(GmresSettings::default()),
            ..NewtonSettings::default()
        };
        let iterative = solve_steady(&p, &krylov, None).unwrap();
        let gap = direct
            .theta
            .iter()
            .zip(&iterative.theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-8, "{kind:?}: {gap}");
    }
}

#[test]
fn steady_state_is_reached_from_the_transient() {
    // the high-conductivity plate settles well within the simulated window
    let mut c = config(Some(LayoutKind::Serpentine), 16);
    c.transient.total_time = 3000.0;
    let p = c.build_problem().unwrap();
    let steady = solve_steady(&p, &c.newton, None).unwrap();
    let series = solve_transient(&p, &c.transient, &c.newton).unwrap();
    let gap = series
        .last()
        .unwrap()
        .1
        .iter()
        .zip(&steady.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 0.2, "{gap}");
}

#[test]
fn default_mesh_is_self_converged() {
    let mst = |n: usize| {
        let mut c = config(Some(LayoutKind::UShape), n);
        c.steady_only = true;
        let p = c.build_problem().unwrap();
        mean_surface_temperature(&solve_steady(&p, &c.newton, None).unwrap().theta, &p.mesh)
    };
    let (m20, m40, m80) = (mst(20), mst(40), mst(80));
    assert!((m40 - m80).abs() < 0.01, "{m20} {m40} {m80}");
    assert!((m40 - m80).abs() < (m20 - m40).abs());
}
