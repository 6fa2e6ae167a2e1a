//! Criterion benchmarks for the simulation engine and the numerical kernels.
