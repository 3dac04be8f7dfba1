use serde_json::Value;
use treecut_wasm_demo::{convergence_json, limit_curve_json, split_law_json};

const ORDERED: &str = "kind=C\nalpha0=1\nalpha1=1";

#[test]
fn split_law_sums_to_one() {
    let v: Value = serde_json::from_str(&split_law_json(ORDERED, 50, false).unwrap()).unwrap();
    let p: Vec<f64> = serde_json::from_value(v["probabilities"].clone()).unwrap();
    assert_eq!(p.len(), 49);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn limit_curve_marks_undefined_points() {
    let v: Value = serde_json::from_str(&limit_curve_json("two", 0.0, 1.0, 3, 2).unwrap()).unwrap();
    let points = v.as_array().unwrap();
    assert!(points[0]["m"].is_null());
    assert_eq!(points[1]["alpha"], 0.5);
    assert!(points[1]["m"][1].as_f64().unwrap().abs() < 1e-12);
    assert!((points[2]["m"][1].as_f64().unwrap() - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
}

#[test]
fn convergence_rows_approach_the_limit() {
    let v: Value = serde_json::from_str(&convergence_json(ORDERED, "two", 1.0, 1000, 1).unwrap()).unwrap();
    let last = v["rows"].as_array().unwrap().iter().find(|r| r["n"] == 1000).unwrap();
    let err = last["relative_error"].as_f64().unwrap();
    assert!(err < 0.01, "{last}");
}

#[test]
fn convergence_fits_the_shift_below_half() {
    let v: Value = serde_json::from_str(&convergence_json(ORDERED, "two", 0.25, 1024, 2).unwrap()).unwrap();
    assert_eq!(v["fitted"][0], "mu");
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(split_law_json("kind=Q", 10, false).is_err());
    assert!(split_law_json(ORDERED, 1, false).is_err());
    assert!(limit_curve_json("sideways", 0.0, 1.0, 5, 2).is_err());
    assert!(convergence_json(ORDERED, "two", 1.0, 100_000, 2).is_err());
}
