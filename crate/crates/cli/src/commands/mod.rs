pub mod commutant;
pub mod completeness;
pub mod geodesic;
pub mod sweep;
pub mod verify;

use ciconia::stats::{CheckResult, MaxTracker};
use ciconia::Point4;
use rayon::prelude::*;

/// Evaluates `f` at every point in parallel; results keep the point order.
pub fn evaluate<T, F>(pts: &[Point4], f: F) -> Vec<ciconia::Result<T>>
where
    T: Send,
    F: Fn(Point4) -> ciconia::Result<T> + Sync,
{
    pts.par_iter().map(|p| f(*p)).collect()
}

/// Aggregates one scalar per sample in index order; failed evaluations
/// count as skipped.
pub fn aggregate<T>(
    name: &str,
    tolerance: f64,
    pts: &[Point4],
    results: &[ciconia::Result<T>],
    value: impl Fn(&T) -> f64,
) -> CheckResult {
    let mut t = MaxTracker::new(name, tolerance);
    for (p, r) in pts.iter().zip(results) {
        match r {
            Ok(v) => t.push(*p, value(v)),
            Err(_) => t.skip(),
        }
    }
    t.finish()
}

/// First error message among the results, for the report.
pub fn first_error<T>(results: &[ciconia::Result<T>]) -> Option<String> {
    results.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()))
}
