//! Shared inputs for the benchmarks.

use petalstar::{FatouAtlas, Point, StarGeometry, C64};

/// Basin point of the parabolic polynomial with rotation 1/2 used by the
/// solve benchmark.
pub fn solve_inputs() -> (FatouAtlas, StarGeometry, Point) {
    let pq = "1/2".parse().expect("valid rotation");
    let atlas = FatouAtlas::polynomial(pq).expect("atlas");
    let lambda = pq.omega() * 0.8;
    let geometry = StarGeometry::new(pq, lambda, None).expect("geometry");
    let x = atlas.inverse(0, C64::new(0.3, 0.1)).expect("basin point");
    (atlas, geometry, x)
}
