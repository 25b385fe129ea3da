//! Criterion benchmarks for `ciscurv-core`; see `benches/`.
