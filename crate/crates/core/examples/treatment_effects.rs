// Average and conditional treatment effects, and a counterfactual, along a
// known causal graph.

use std::collections::BTreeMap;

use causalis::datagen::{generate, GenerateOptions, SemSpec, Transform};
use causalis::inference::{ate, cate, counterfactual, InferenceConfig, PredictionModel, Treatment};
use causalis::Dataset;

fn main() -> causalis::Result<()> {
    let sem = SemSpec::tabular(&["price", "demand", "revenue", "season"])
        .with_term("demand", "price", 0, -0.9, Transform::Identity)
        .with_term("demand", "season", 0, 0.5, Transform::Identity)
        .with_term("revenue", "demand", 0, 1.5, Transform::Identity)
        .with_term("revenue", "price", 0, 0.4, Transform::Identity);
    let generated = generate(&sem, &GenerateOptions::new(5000, 21))?;
    let (graph, data) = (generated.graph.clone(), generated.tabular());
    let config = InferenceConfig::default();

    let price_up = [Treatment::new("price", 1.0, 0.0)];
    let effect = ate(&graph, &Dataset::Tabular(data.clone()), "revenue", &price_up, &config)?;
    // closed form: 0.4 + (-0.9)(1.5)
    println!("ATE of price on revenue: {:+.3} (structural {:+.3})", effect.ate, 0.4 - 0.9 * 1.5);

    let in_season = [("season".to_string(), 1.0)];
    let nonlinear = InferenceConfig {
        prediction_model: PredictionModel::Nonlinear,
        ..InferenceConfig::default()
    };
    let conditional = cate(&graph, &data, "revenue", &price_up, &in_season, PredictionModel::Linear, &nonlinear)?;
    println!("CATE given season=1 (boosted trees): {:+.3}", conditional.cate);

    let sample = BTreeMap::from([
        ("price".to_string(), 0.5),
        ("season".to_string(), 1.0),
        ("demand".to_string(), 0.2),
        ("revenue".to_string(), 0.6),
    ]);
    let what_if = BTreeMap::from([("price".to_string(), -0.5)]);
    let revenue = counterfactual(&graph, &data, "revenue", &sample, &what_if, &config)?;
    println!("revenue had price been -0.5 instead of 0.5: {revenue:.3}");
    Ok(())
}
