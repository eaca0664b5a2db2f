//! Acceptance gate for `ham-core`; see `tests/acceptance.rs`.
