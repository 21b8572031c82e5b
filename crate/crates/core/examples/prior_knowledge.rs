// Declaring domain knowledge, catching contradictions, and constraining PC.

use std::collections::{BTreeMap, BTreeSet};

use causalis::datagen::{generate, GenerateOptions, SemSpec, Transform};
use causalis::pc::{pc_tabular, PcConfig};
use causalis::PriorKnowledge;

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn main() -> causalis::Result<()> {
    let sem = SemSpec::tabular(&["age", "income", "spend"])
        .with_term("income", "age", 0, 0.7, Transform::Identity)
        .with_term("spend", "income", 0, 0.8, Transform::Identity);
    let data = generate(&sem, &GenerateOptions::new(3000, 2))?.tabular();

    let pk = PriorKnowledge {
        root_variables: set(&["age"]),
        leaf_variables: set(&["spend"]),
        ..PriorKnowledge::default()
    };
    let found = pc_tabular(&data, &pk, &PcConfig::default())?;
    println!("with roots/leaves declared: {}", found.graph.to_json());
    println!("age -> spend allowed? {}", pk.is_edge_allowed("age", "spend")?);

    let contradictory = PriorKnowledge {
        existing_links: BTreeMap::from([("income".to_string(), set(&["age"]))]),
        forbidden_links: BTreeMap::from([("income".to_string(), set(&["age"]))]),
        ..PriorKnowledge::default()
    };
    for c in contradictory.validate() {
        println!("contradiction: {c}");
    }
    match pc_tabular(&data, &contradictory, &PcConfig::default()) {
        Err(e) => println!("rejected before search: {e}"),
        Ok(_) => unreachable!("contradictory knowledge must be rejected"),
    }
    Ok(())
}
