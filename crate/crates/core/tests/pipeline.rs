use satnls_core::io::{load_field_csv, load_series_csv};
use satnls_core::{catalog, run, run_scenario, RunReport, SolverConfig};

fn find(name: &str) -> satnls_core::Scenario {
    catalog().into_iter().find(|s| s.name == name).unwrap()
}

#[test]
fn report_reproduced_from_written_series() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario("stabilization", dir.path()).unwrap();
    assert!(report.passed);

    let s = find("stabilization");
    let model = s.model.build(&s.grid).unwrap();
    let series = load_series_csv(&dir.path().join("stabilization.csv")).unwrap();
    let recomputed = RunReport::from_series(&series, &model).unwrap();
    assert_eq!(recomputed.extinction_time, report.run_report.extinction_time);
    assert_eq!(recomputed.fitted_c, report.run_report.fitted_c);
    assert_eq!(recomputed.a_priori_ok, report.run_report.a_priori_ok);
    assert_eq!(recomputed.mass_residual_max, report.run_report.mass_residual_max);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stabilization.json")).unwrap())
            .unwrap();
    assert_eq!(json["scenario"], "stabilization");
    assert_eq!(json["passed"], true);
    assert!(json["expectations"].as_array().unwrap().iter().all(|e| e["passed"] == true));
}

#[test]
fn snapshots_round_trip_through_csv() {
    let s = find("extinction_1d");
    let model = s.model.build(&s.grid).unwrap();
    let u0 = s.u0.sample(&s.grid).unwrap();
    let config = SolverConfig::strang(1e-3, 0.05).with_snapshot_stride(25);
    let out = run(&model, &config, &u0).unwrap();
    assert_eq!(out.snapshots.len(), 3);
    assert_eq!(out.snapshots.last().unwrap().field, out.final_state.u);

    let dir = tempfile::tempdir().unwrap();
    for snap in &out.snapshots {
        let path = dir.path().join(format!("{}.csv", snap.step));
        satnls_core::io::save_field_csv(&snap.field, &path).unwrap();
        assert_eq!(load_field_csv(&path, s.grid).unwrap(), snap.field);
    }
}

#[test]
fn implicit_scheme_converges_on_every_catalog_model() {
    for s in catalog() {
        let model = s.model.build(&s.grid).unwrap();
        let u0 = s.u0.sample(&s.grid).unwrap();
        let config = SolverConfig::backward_euler(s.config.dt, 10.0 * s.config.dt, 1e-8);
        let out = run(&model, &config, &u0).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        assert!(
            out.max_fixed_point_iterations < config.fp_max_iter,
            "{}: {} sweeps",
            s.name,
            out.max_fixed_point_iterations
        );
        assert_eq!(out.series.len(), 11, "{}", s.name);
    }
}
