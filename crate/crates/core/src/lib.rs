//! Co-citation kinetics toolkit.
//!
//! The pipeline reads a citation graph from neutral CSV files, curates its
//! references, enumerates every co-cited reference pair of the selected
//! source articles, deduplicates the pairs under a memory budget, counts
//! total and per-year co-citation frequencies in parallel, and finally
//! detects delayed co-citations, Sleeping Beauty publications and
//! flash-in-the-pan pairs.
//!
//! | module | role |
//! |--------|------|
//! | [`ingest`] | nodelist/edgelist parsing, curation, source selection |
//! | [`pairgen`] | pair enumeration, external dedup, counting |
//! | [`kinetics`] | series summaries, Beauty Coefficient, detectors |
//! | [`stats`] | histogram, ECDF, percentiles, cohort summaries |
//! | [`subjects`] | subject-area co-occurrence graph and export |
//! | [`synth`] | seeded synthetic corpora with a planting manifest |
//! | [`pipeline`] | configuration, manifests and the end-to-end stages |
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod ingest;
pub mod kinetics;
pub mod pairgen;
pub mod pipeline;
pub mod stats;
pub mod subjects;
pub mod synth;

pub use error::{Error, Result};
