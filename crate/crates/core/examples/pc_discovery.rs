// PC on tabular and lagged time-series data, with a parallel worker pool.

use causalis::datagen::{generate, GenerateOptions, SemSpec, Transform};
use causalis::pc::{pc_single_timeseries, pc_tabular, pc_timeseries, PcConfig};
use causalis::{PriorKnowledge, WorkerPool};

fn main() -> causalis::Result<()> {
    let collider = SemSpec::tabular(&["a", "b", "c", "d"])
        .with_term("c", "a", 0, 0.8, Transform::Identity)
        .with_term("c", "b", 0, 0.8, Transform::Identity)
        .with_term("d", "c", 0, 0.6, Transform::Identity);
    let data = generate(&collider, &GenerateOptions::new(5000, 11))?.tabular();
    let found = pc_tabular(&data, &PriorKnowledge::default(), &PcConfig::default())?;
    println!("tabular PC ({:.3}s): {}", found.wall_time, found.graph.to_json());
    for sep in &found.removed_by {
        println!("  {} _||_ {} given {:?}", sep.from, sep.to, sep.sepset);
    }

    let series = SemSpec::timeseries(&["x", "y", "z"], 2)
        .with_term("x", "x", -1, 0.5, Transform::Identity)
        .with_term("y", "x", -1, 0.8, Transform::Identity)
        .with_term("z", "y", -2, 0.7, Transform::Identity);
    let ts = generate(&series, &GenerateOptions::new(4000, 5))?.timeseries();
    let config = PcConfig {
        max_lag: 2,
        pool: WorkerPool::new(0),
        ..PcConfig::default()
    };
    let lagged = pc_timeseries(&ts, &PriorKnowledge::default(), &config)?;
    for e in lagged.graph.directed_edges() {
        let names = lagged.graph.var_names();
        println!("  {}(t{}) -> {}(t)", names[e.from], e.lag, names[e.to]);
    }

    let z_parents = pc_single_timeseries(&ts, "z", &PriorKnowledge::default(), &config)?;
    println!("parents of z only: {} edge(s)", z_parents.graph.edge_count());
    Ok(())
}
