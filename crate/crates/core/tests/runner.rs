use fdmimo_core::runner::{format_number, recipe, run_sweep, write_csv, Axis, Metric, SweepSpec, CSV_HEADER};
use fdmimo_core::{Error, Scheme};
use serde_json::{json, Map, Value};

fn base() -> Map<String, Value> {
    match json!({"n_cells": 2, "m_tx": 8, "m_rx": 8, "k_dl": 2, "k_ul": 2, "p_ref_dbm": 40.0, "cell_radius_m": 1000.0}) {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

#[test]
fn recipes_fix_their_parameters() {
    let s = recipe("fig5").unwrap();
    assert_eq!(s.axis, Axis::C);
    assert_eq!(s.values.len(), 40);
    for (k, v) in [("n_cells", 3.0), ("m_tx", 128.0), ("k_dl", 5.0), ("p_ref_dbm", 40.0), ("cell_radius_m", 2000.0)] {
        assert_eq!(s.fixed[k].as_f64(), Some(v), "{k}");
    }
    let s = recipe("fig7").unwrap();
    assert_eq!(s.axis, Axis::Pr);
    assert_eq!(s.fixed["m_tx"].as_u64(), Some(16));
    assert_eq!(s.fixed["alpha_db"].as_f64(), Some(-50.0));
    assert_eq!(s.fixed["beta_db"].as_f64(), Some(-50.0));
    let radii: Vec<f64> = s.variants.iter().map(|v| v.overrides["cell_radius_m"].as_f64().unwrap()).collect();
    assert_eq!(radii, [500.0, 1000.0, 2000.0]);
    assert_eq!(s.eval.schemes, [Scheme::NonSimultaneous, Scheme::Simultaneous]);
    for name in ["fig3", "fig4", "fig6"] {
        recipe(name).unwrap().validate().unwrap();
    }
    assert!(matches!(recipe("fig9"), Err(Error::Validation(_))));
}

#[test]
fn sweep_files_are_validated() {
    let ok = r#"{"axis": "M", "values": [16, 32], "outputs": ["sum_rate_analytic"]}"#;
    let s = SweepSpec::from_json(ok).unwrap();
    assert_eq!(s.eval.outputs, [Metric::SumRateAnalytic]);
    for bad in [
        r#"{"axis": "M", "values": [16, 8, 32], "outputs": ["nmse"]}"#,
        r#"{"axis": "M", "values": [], "outputs": ["nmse"]}"#,
        r#"{"axis": "M", "values": [16.5], "outputs": ["nmse"]}"#,
        r#"{"axis": "Q", "values": [1], "outputs": ["nmse"]}"#,
        r#"{"axis": "M", "values": [16], "outputs": ["nmse"], "colour": 1}"#,
        r#"{"axis": "M", "values": [16], "outputs": []}"#,
        r#"{"axis": "M", "values": [16], "outputs": ["speed"]}"#,
        "{",
    ] {
        assert!(matches!(SweepSpec::from_json(bad), Err(Error::Validation(_))), "{bad}");
    }
}

#[test]
fn numbers_print_plainly() {
    assert_eq!(format_number(0.1 + 0.2), "0.3");
    assert_eq!(format_number(2.0), "2");
    assert_eq!(format_number(1234567.0), "1234567");
    assert_eq!(format_number(f64::INFINITY), "inf");
    assert_eq!(format_number(f64::NAN), "nan");
    assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
}

fn m_sweep() -> SweepSpec {
    SweepSpec::from_json(
        r#"{"axis": "M", "values": [16, 32, 64], "outputs": ["sum_rate_analytic", "nmse"],
            "scenarios": ["non-cooperative"], "filters": ["ZF"], "links": ["DL"]}"#,
    )
    .unwrap()
}

#[test]
fn sweep_emits_one_row_per_point_and_metric() {
    let rows = run_sweep(&base(), &m_sweep()).unwrap();
    assert_eq!(rows.len(), 6);
    let axis: Vec<f64> = rows.iter().map(|r| r.axis_value.unwrap()).collect();
    assert_eq!(axis, [16.0, 16.0, 32.0, 32.0, 64.0, 64.0]);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 6);
    let nmse_row = text.lines().find(|l| l.contains(",nmse,")).unwrap();
    assert!(nmse_row.starts_with("16,-,nSPT,-,SI,nmse,"), "{nmse_row}");
}

#[test]
fn sweeps_are_reproducible() {
    let mut spec = m_sweep();
    spec.eval.outputs = vec![Metric::SumRateMc];
    spec.eval.trials = 30;
    spec.eval.seed = 11;
    let csv = |rows| {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf).unwrap();
        buf
    };
    let a = run_sweep(&base(), &spec).unwrap();
    let b = run_sweep(&base(), &spec).unwrap();
    assert_eq!(csv(&a), csv(&b));
    spec.eval.seed = 12;
    assert_ne!(csv(&a), csv(&run_sweep(&base(), &spec).unwrap()));
}

#[test]
fn variants_label_the_metric() {
    let mut spec = m_sweep();
    spec.values = vec![16.0];
    spec.eval.outputs = vec![Metric::Nmse];
    spec.variants = recipe("fig7").unwrap().variants;
    let rows = run_sweep(&base(), &spec).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.metric.as_str()).collect();
    assert_eq!(names, ["nmse@r=500", "nmse@r=1000", "nmse@r=2000"]);
}

#[test]
fn axis_resets_tied_pilot_lengths() {
    let mut doc = base();
    doc.insert("tau_si".into(), 8.into());
    Axis::M.apply(&mut doc, 32.0);
    assert!(!doc.contains_key("tau_si"));
    assert_eq!(doc["m_rx"].as_u64(), Some(32));
}
