//! Criterion benchmarks for the scoring kernels; see `benches/`.
