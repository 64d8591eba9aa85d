//! Benchmarks for the randnls kernels live in `benches/`.
