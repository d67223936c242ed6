//! Criterion benchmarks for the integrator; see `benches/`.
