// LiNGAM and GES on tabular data.

use causalis::datagen::{generate, GenerateOptions, NoiseSpec, SemSpec, Transform};
use causalis::ges::{ges, GesConfig, GesPhase};
use causalis::lingam::{lingam, LingamConfig};

fn main() -> causalis::Result<()> {
    // non-Gaussian noise makes the full order identifiable
    let chain = SemSpec::tabular(&["c", "a", "b"])
        .with_term("b", "a", 0, 0.9, Transform::Identity)
        .with_term("c", "b", 0, -0.5, Transform::Identity)
        .with_all_noise(NoiseSpec::laplace(0.0, 1.0));
    let data = generate(&chain, &GenerateOptions::new(5000, 8))?.tabular();
    let fit = lingam(&data, &LingamConfig::default())?;
    let order: Vec<&str> = fit.causal_order.iter().map(|&i| data.var_names()[i].as_str()).collect();
    println!("lingam order: {order:?}");
    println!("lingam B:\n{:.3}", fit.b);

    let collider = SemSpec::tabular(&["x", "y", "z"])
        .with_term("z", "x", 0, 0.8, Transform::Identity)
        .with_term("z", "y", 0, 0.8, Transform::Identity);
    let data = generate(&collider, &GenerateOptions::new(4000, 8))?.tabular();
    let result = ges(&data, &GesConfig::default())?;
    println!("ges score {:.1} after {} operator(s): {}", result.score, result.trace.len(), result.graph.to_json());

    let forward_only = GesConfig {
        phases: vec![GesPhase::Forward],
        ..GesConfig::default()
    };
    println!("forward phase alone: {}", ges(&data, &forward_only)?.graph.to_json());
    Ok(())
}
