//! Desk-scale toolkit for building sequence-similarity graphs end to end:
//! corpus partitioning and pairwise alignment into COO blocks, memory-bounded
//! COO-to-CSC conversion, deduplication and symmetrization, multi-target edge
//! filtering, succinct compression with coupled edge labels, a work-queue
//! dispatcher for running the stages on independent workers, and structural
//! analytics over the results.

pub mod analytics;
pub mod builder;
pub mod compress;
pub mod dispatch;
pub mod error;
pub mod filter;
pub mod model;
pub mod pipeline;
pub mod seqsim;

pub use error::{Error, Result};
pub use model::{
    CooTriple, CscGraph, DirectionKind, Edge, PartitionScheme, RenumberMap, VertexId, Weight,
};

/// Runs `f` inside a rayon pool of `workers` threads; `workers = 0` uses
/// the global pool. Heavy operations take a worker count so results can be
/// shown thread-count independent.
pub(crate) fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("rayon pool")
            .install(f)
    }
}
