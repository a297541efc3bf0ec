use hgroupoid_cli::manifest::{parse, validate, Tolerances};
use hgroupoid_cli::CliError;
use serde_json::{json, Value};

fn base() -> Value {
    serde_json::from_str(hgroupoid_cli::builtin::source("heisenberg3").unwrap()).unwrap()
}

fn location(m: Value) -> String {
    match validate(parse(&m.to_string()).unwrap(), None) {
        Err(CliError::Validation { location, .. }) => location,
        Err(other) => panic!("expected a validation error, got {other}"),
        Ok(_) => panic!("manifest unexpectedly valid"),
    }
}

#[test]
fn missing_required_field_is_a_parse_error() {
    let mut m = base();
    m.as_object_mut().unwrap().remove("charts");
    assert!(matches!(parse(&m.to_string()), Err(CliError::Parse(_))));
}

#[test]
fn defaults_fill_an_empty_config() {
    let mut m = base();
    m["config"] = json!({});
    let v = validate(parse(&m.to_string()).unwrap(), None).unwrap();
    assert_eq!(v.config.jet_order, 3);
    assert_eq!(v.config.grid.len(), 11);
    assert_eq!(v.config.random_trials, 1000);
    assert_eq!(v.config.seed, None);
    assert_eq!(v.config.tolerances, Tolerances::default());
}

#[test]
fn structural_errors_carry_locations() {
    let mut m = base();
    m["dimension"] = json!(2);
    assert_eq!(location(m), "dimension");

    let mut m = base();
    m["charts"][0]["domain"]["lo"] = json!([1.0, -4.0, -4.0]);
    m["charts"][0]["domain"]["hi"] = json!([0.0, 4.0, 4.0]);
    assert_eq!(location(m), "charts[0].domain");

    let mut m = base();
    m["charts"][0]["frame"][2][0] = json!([[1.0, [0, 1]]]);
    assert_eq!(location(m), "charts[0].frame[2][0][0]");

    let mut m = base();
    let chart = m["charts"][0].clone();
    m["charts"].as_array_mut().unwrap().push(chart);
    assert_eq!(location(m), "charts[1].name");

    let mut m = base();
    m["charts"][0]["expected_levi"] = json!([[0.0, 1.0], [1.0, 0.0]]);
    assert_eq!(location(m), "charts[0].expected_levi");

    let mut m = base();
    m["diffeos"][0]["target"] = json!("elsewhere");
    assert_eq!(location(m), "diffeos[0].target");
}

#[test]
fn frame_must_be_nonsingular_at_the_center() {
    let mut m = base();
    // X_2 = X_1
    m["charts"][0]["frame"][2] = m["charts"][0]["frame"][1].clone();
    assert_eq!(location(m), "charts[0].frame");
}

#[test]
fn metrics_must_be_symmetric_positive_definite() {
    let mut m = base();
    m["metrics"] = json!([{ "name": "skew", "matrix": [[1.0, 0.5], [0.0, 1.0]] }]);
    assert_eq!(location(m), "metrics[0].matrix");

    let mut m = base();
    m["metrics"] = json!([{ "name": "indefinite", "matrix": [[1.0, 2.0], [2.0, 1.0]] }]);
    assert_eq!(location(m), "metrics[0].matrix");
}

#[test]
fn config_bounds_are_enforced() {
    for (key, value, loc) in [
        ("jet_order", json!(1), "config.jet_order"),
        ("jet_order", json!(7), "config.jet_order"),
        ("t_grid", json!([0.5, 0.25, 0.125]), "config.t_grid"),
        ("t_grid", json!([0.5, 0.25, 0.25, 0.1]), "config.t_grid"),
        ("t_grid", json!([2.0, 0.5, 0.25, 0.1]), "config.t_grid"),
        ("points_per_axis", json!(1), "config.points_per_axis"),
        ("random_trials", json!(0), "config.random_trials"),
        (
            "tolerances",
            json!({ "levi": 0.0 }),
            "config.tolerances.levi",
        ),
        (
            "tolerances",
            json!({ "nope": 1e-3 }),
            "config.tolerances.nope",
        ),
    ] {
        let mut m = base();
        m["config"][key] = value;
        assert_eq!(location(m), loc);
    }
}
