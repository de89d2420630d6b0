//! Benchmarks for the exhaustive sweeps live in `benches/`.
