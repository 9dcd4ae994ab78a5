//! Fixtures shared by the benchmarks.

use bggcheck_core::bgg::EvalOptions;
use bggcheck_core::field::PolyField;
use bggcheck_core::geometry::{MetricSpec, Signature};
use bggcheck_core::point::Point;
use bggcheck_core::scenario::{builtin, quartic_seed, Scenario};

pub const ORDER: usize = 4;

pub fn split23() -> Signature {
    Signature { p: 2, q: 3 }
}

/// The random quartic metric of signature (2,3) used by the builtins.
pub fn quartic23() -> MetricSpec {
    MetricSpec::random_quartic(split23(), quartic_seed(split23()), 0.2)
}

pub fn x0() -> Vec<f64> {
    vec![0.21, -0.13, 0.08, 0.3, -0.27]
}

pub fn quartic_point() -> Point {
    Point::with_optional_spin(&quartic23(), &x0(), ORDER).expect("point")
}

pub fn flat23() -> Scenario {
    builtin("flat23").expect("builtin")
}

/// A named field of the flat (2,3) builtin.
pub fn flat_field(name: &str) -> PolyField {
    flat23().field(name).expect("field").field.clone()
}

pub fn opts() -> EvalOptions {
    EvalOptions { order: ORDER, tolerance: 1e-8 }
}
