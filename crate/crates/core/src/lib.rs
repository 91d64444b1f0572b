//! Discrete-event model of temporal request fusion for autoregressive
//! inference serving.
//!
//! Requests arrive, are pre-processed off the critical path, and join a single
//! compute stream at the next iteration boundary. Every iteration emits one
//! token per resident request. Finished requests leave orphaned slots in the
//! contiguous buffer; a sliding-window search picks the compacted region that
//! minimizes bytes copied. Dynamic batching and concurrent per-request
//! instances run over the same workloads and cost model for comparison.
//!
//! Start with [`engine::run_fusion`] and [`metrics::compute_metrics`]; the
//! crate's `examples/` directory has one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` also rejects NaN

pub mod arrivals;
pub mod baselines;
pub mod buffer;
pub mod cost;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod request;
pub mod rng;
pub mod trace;
pub mod workload;

pub use arrivals::{ArrivalSchedule, LengthDistribution};
pub use baselines::{run_concurrent_instances, run_dynamic_batching, BatchWindowConfig};
pub use buffer::{BufferLayout, ShufflePlan, Slot};
pub use cost::{CostParams, Placement, TpConfig};
pub use engine::{run_fusion, run_fusion_observed, Compaction};
pub use error::{Error, Result};
pub use metrics::{compute_metrics, Metrics};
pub use request::{Millis, Phase, Request, RequestId, RuntimeInfo};
pub use trace::{Discipline, Event, EventKind, Trace};
pub use workload::Workload;
