//! Criterion benchmarks for the lab live under `benches/`.
