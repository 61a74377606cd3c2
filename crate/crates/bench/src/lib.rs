//! Criterion benchmarks for `mdl-core`; see `benches/`.
