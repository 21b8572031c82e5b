//! Causal discovery, causal inference and root cause analysis for tabular and
//! time-series data.

pub mod benchmark;
pub mod boost;
pub mod ci;
pub mod data;
pub mod datagen;
pub mod error;
pub mod ges;
pub mod graph;
pub mod grow_shrink;
pub mod inference;
pub mod kmeans;
pub mod linalg;
pub mod lingam;
pub mod pc;
pub mod pdag;
pub mod pool;
pub mod prior;
pub mod rca;
pub mod result;
pub mod var;

pub use ci::{CITest, CITestResult, DiscreteCITest, DiscreteMethod, PartialCorrelation};
pub use data::{Dataset, TabularDataset, TimeSeriesDataset};
pub use error::{Error, Result};
pub use graph::{CausalGraph, EdgeInfo, GraphKind, ParentRef};
pub use pool::WorkerPool;
pub use prior::{Constraints, Contradiction, PriorKnowledge};
pub use result::{DiscoveryResult, Separation};
