// Sweep PC and GES along the sample axis and add a custom metric.

use causalis::benchmark::{run_benchmark, Axis, AxisValue, BenchmarkConfig, DataKind, Metric};
use causalis::WorkerPool;

fn main() -> causalis::Result<()> {
    let values = [200.0, 1000.0].iter().map(|&n| AxisValue::Number(n)).collect();
    let mut config = BenchmarkConfig::new(DataKind::Continuous, Axis::Samples, values, &["pc", "ges"]);
    config.seeds = 3;
    let algorithms = config.builtin_algorithms()?;
    let edge_count_error = Metric::new("edge_count_error", |pred, truth| {
        (pred.edge_count() as f64 - truth.edge_count() as f64).abs()
    });
    let report = run_benchmark(&config, &algorithms, &[edge_count_error], &WorkerPool::new(0))?;

    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
