// Sample observational and interventional data from a hand-written SEM.

use causalis::datagen::{generate, GenerateOptions, InterventionValue, NoiseSpec, SemSpec, Transform};

fn main() -> causalis::Result<()> {
    let sem = SemSpec::tabular(&["rain", "sprinkler", "wet"])
        .with_term("sprinkler", "rain", 0, -0.6, Transform::Identity)
        .with_term("wet", "rain", 0, 0.9, Transform::Identity)
        .with_term("wet", "sprinkler", 0, 0.7, Transform::Tanh)
        .with_noise("rain", NoiseSpec::uniform(0.0, 2.0));

    let observed = generate(&sem, &GenerateOptions::new(2000, 7))?;
    println!("true graph: {}", observed.graph.to_json());

    // same seed, so every noise draw is shared with the observational run
    let forced = GenerateOptions::new(2000, 7).intervene("sprinkler", InterventionValue::Constant(1.0));
    let intervened = generate(&sem, &forced)?;

    let mean_wet = |d: &causalis::TabularDataset| {
        let col = d.column(d.index_of("wet").unwrap());
        col.iter().sum::<f64>() / col.len() as f64
    };
    println!("E[wet]             = {:.3}", mean_wet(&observed.tabular()));
    println!("E[wet | do(spr=1)] = {:.3}", mean_wet(&intervened.tabular()));

    let mut csv = Vec::new();
    observed.tabular().select_rows(&[0, 1, 2]).write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));

    let lagged = SemSpec::timeseries(&["x", "y"], 2).with_term("y", "x", -2, 0.8, Transform::Identity);
    let series = generate(&lagged, &GenerateOptions::new(500, 1).discrete(3))?;
    println!("discretized series: {} steps of {:?}", series.timeseries().total_samples(), series.data.var_names());
    Ok(())
}
