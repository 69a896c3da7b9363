//! Criterion benchmarks for genie-core live under `benches/`.
