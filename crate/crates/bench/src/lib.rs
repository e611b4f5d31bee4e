//! Benchmark-only crate; see `benches/solver_bench.rs`.
