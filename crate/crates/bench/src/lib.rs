//! Benchmark support crate; see `benches/` for the criterion targets.
