mod support;

use std::time::{Duration, Instant};

const CASES: usize = 40;

#[test]
fn enumeration_and_subclasses_are_inverse() {
    let start = Instant::now();
    let (checked, failures) = support::round_trips(support::enum_subclass_round_trip, CASES);
    assert_eq!(checked, CASES);
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn set_visibility_conversions_are_inverse() {
    let start = Instant::now();
    let (checked, failures) = support::round_trips(support::set_visibility_round_trip, CASES);
    assert_eq!(checked, CASES);
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    assert!(start.elapsed() < Duration::from_secs(5));
}
