// Root cause analysis: a metric whose mechanism shifts during an incident.

use causalis::datagen::{generate, GenerateOptions, InterventionValue, SemSpec, Transform};
use causalis::rca::{rca, RcaConfig, RcaMode};
use causalis::PriorKnowledge;

fn main() -> causalis::Result<()> {
    let n = 2000;
    let sem = SemSpec::tabular(&["traffic", "db_load", "api_latency", "checkout_errors", "incident"])
        .with_term("db_load", "traffic", 0, 0.8, Transform::Identity)
        .with_term("api_latency", "db_load", 0, 0.8, Transform::Identity)
        .with_term("checkout_errors", "api_latency", 0, 0.8, Transform::Identity)
        // the incident changes db_load's mechanism only
        .with_term("db_load", "incident", 0, 3.0, Transform::Identity);
    let incident: Vec<f64> = (0..n).map(|t| if t < n / 2 { 0.0 } else { 1.0 }).collect();
    let opts = GenerateOptions::new(n, 1).intervene("incident", InterventionValue::Sequence(incident));
    let data = generate(&sem, &opts)?.tabular();

    for mode in [RcaMode::TimeSeries, RcaMode::Tabular] {
        let config = RcaConfig {
            return_graph: true,
            ..RcaConfig::default()
        };
        let found = rca(&data, "incident", mode, &PriorKnowledge::default(), &config)?;
        println!("{mode:?} detector: root causes {:?}", found.root_causes);
        if let Some(g) = found.graph {
            println!("  over {} edge(s)", g.edge_count());
        }
    }
    Ok(())
}
