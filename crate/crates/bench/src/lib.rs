//! Benchmarks for slotlab; see `benches/`.
