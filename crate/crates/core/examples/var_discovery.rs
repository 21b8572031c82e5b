// Granger causality and VARLiNGAM on a small multivariate series.

use causalis::datagen::{generate, GenerateOptions, NoiseSpec, SemSpec, Transform};
use causalis::var::{granger, varlingam, GrangerConfig, VarLingamConfig};
use causalis::{CausalGraph, PriorKnowledge};

fn show(label: &str, g: &CausalGraph) {
    println!("{label}:");
    let names = g.var_names();
    for e in g.directed_edges() {
        let info = g.edge_info(e.from, e.lag, e.to).unwrap();
        println!("  {}(t{}) -> {}(t)  strength {:+.3}", names[e.from], e.lag, names[e.to], info.strength.unwrap_or(f64::NAN));
    }
}

fn main() -> causalis::Result<()> {
    let sem = SemSpec::timeseries(&["cpu", "latency", "errors"], 1)
        .with_term("latency", "cpu", 0, 0.7, Transform::Identity)
        .with_term("errors", "latency", -1, 0.5, Transform::Identity)
        .with_term("cpu", "cpu", -1, 0.4, Transform::Identity)
        .with_all_noise(NoiseSpec::uniform(-1.0, 1.0));
    let ts = generate(&sem, &GenerateOptions::new(8000, 4))?.timeseries();
    let none = PriorKnowledge::default();

    let g = granger(&ts, &none, &GrangerConfig { max_lag: 1, ..GrangerConfig::default() })?;
    show("granger (lagged only)", &g.graph);

    let v = varlingam(&ts, &none, &VarLingamConfig { max_lag: 1, ..VarLingamConfig::default() })?;
    show("varlingam (instantaneous and lagged)", &v.graph);
    Ok(())
}
