//! Benchmark-only crate; see the `benches/` targets. Kept as a separate
//! workspace member so heavy measurement deps stay out of the library build.
