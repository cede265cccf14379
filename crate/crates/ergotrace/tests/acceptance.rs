//! End-to-end acceptance suite (filled in alongside the module tests).

#[test]
fn placeholder() {}
