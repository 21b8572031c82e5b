// Grow-Shrink Markov blanket of a target, with the search trace.

use causalis::datagen::{generate, GenerateOptions, SemSpec, Transform};
use causalis::grow_shrink::{grow_shrink, GrowShrinkConfig};
use causalis::PriorKnowledge;

fn main() -> causalis::Result<()> {
    // blanket of t: parent p, child c, co-parent q; far is outside it
    let sem = SemSpec::tabular(&["far", "p", "t", "c", "q"])
        .with_term("p", "far", 0, 0.8, Transform::Identity)
        .with_term("t", "p", 0, 0.8, Transform::Identity)
        .with_term("c", "t", 0, 0.8, Transform::Identity)
        .with_term("c", "q", 0, 0.8, Transform::Identity);
    let data = generate(&sem, &GenerateOptions::new(5000, 9))?.tabular();
    let mb = grow_shrink(&data, "t", &PriorKnowledge::default(), &GrowShrinkConfig::default())?;
    println!("markov blanket of t: {:?}", mb.blanket_set());
    for step in &mb.trace {
        println!("  {step:?}");
    }
    Ok(())
}
