//! The exported functions, called natively.

use reptrace_web::{beta_curve, example_input, explore, recency_curve, ExplorerInput};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn explore_with(edit: impl FnOnce(&mut ExplorerInput)) -> Value {
    let mut input: ExplorerInput = serde_json::from_str(&example_input()).unwrap();
    edit(&mut input);
    parse(&explore(&serde_json::to_string(&input).unwrap()))
}

#[test]
fn default_input_reproduces_the_ranking() {
    let out = explore_with(|_| {});
    let ids: Vec<&str> = out["ranking"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["B", "D", "E", "C"]);
    let b = &out["ranking"][0];
    assert!((b["overall"].as_f64().unwrap() - 0.64).abs() <= 0.005);
    assert_eq!(
        out["comparison"]["text"],
        "B has a better reputation than D, mainly due to quality."
    );
    assert_eq!(out["comparison"]["arguments"][0]["kind"], "decisive_tradeoff");
}

#[test]
fn reversed_pair_is_explained_from_the_better_side() {
    let out = explore_with(|i| {
        i.preferred = "C".into();
        i.other = "B".into();
    });
    assert_eq!(out["comparison"]["swapped"], true);
    assert_eq!(out["comparison"]["preferred"], "B");
    assert_eq!(out["comparison"]["arguments"][0]["kind"], "decisive_dominance");
}

#[test]
fn equal_scores_report_an_error_but_keep_the_ranking() {
    let out = explore_with(|i| {
        i.preferred = "B".into();
        i.other = "B".into();
    });
    assert_eq!(out["ranking"].as_array().unwrap().len(), 4);
    assert!(out["comparison"]["error"].is_string());
}

#[test]
fn bad_input_is_reported() {
    assert!(parse(&explore("not json"))["error"].is_string());
    let out = explore_with(|i| i.providers[0].witness[1] = 1.5);
    assert!(out["error"].as_str().unwrap().contains("outside"));
    let out = explore_with(|i| i.providers[0].witness.pop().map(drop).unwrap());
    assert!(out["error"].is_string());
}

#[test]
fn beta_curve_reports_confidence_and_discount() {
    let out = parse(&beta_curve(1.0, 1.0, 0.1, 0.0, 10));
    let c = out["opinion"]["confidence"].as_f64().unwrap();
    assert!((c - 0.2).abs() < 1e-9);
    assert_eq!(out["opinion"]["density"].as_array().unwrap().len(), 11);

    let out = parse(&beta_curve(9.0, 3.0, 0.05, 0.0, 50));
    assert!((out["discounted"]["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let out = parse(&beta_curve(9.0, 3.0, 0.05, 1.0, 50));
    assert!((out["discounted"]["alpha"].as_f64().unwrap() - 9.0).abs() < 1e-6);

    assert!(parse(&beta_curve(0.0, 1.0, 0.05, 0.5, 10))["error"].is_string());
    assert!(parse(&beta_curve(2.0, 1.0, 0.05, 1.5, 10))["error"].is_string());
}

#[test]
fn recency_curve_decays_from_one() {
    let out = parse(&recency_curve(5.0, 20.0, 20));
    let curve = out["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 21);
    assert_eq!(curve[0][1].as_f64().unwrap(), 1.0);
    let weights: Vec<f64> = curve.iter().map(|p| p[1].as_f64().unwrap()).collect();
    assert!(weights.windows(2).all(|w| w[1] < w[0]));
    assert!((out["half_life"].as_f64().unwrap() - 5.0 * std::f64::consts::LN_2).abs() < 1e-12);
    assert!(parse(&recency_curve(0.0, 20.0, 20))["error"].is_string());
}
