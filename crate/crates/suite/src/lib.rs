//! Acceptance report for `pareto-pl`; see `tests/acceptance.rs`.
