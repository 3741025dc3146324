//! Benchmark-only crate; see `benches/detection.rs`.
