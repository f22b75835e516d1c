//! Acceptance checks live in tests/acceptance.rs. This package sorts last in
//! the workspace so its red lines never hide the other suites.
