//! Criterion benchmarks for the fusion sampler; see `benches/`.
