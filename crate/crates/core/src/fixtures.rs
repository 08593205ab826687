//! The three small reference markets used throughout the tests and by
//! `mbp examples`. Ids are 0-based; `i1` is student 0, `s1` is school 0.

use crate::market::Market;

/// Unit capacities; no mutually best pair exists, but the simplified market
/// is fully matched by mutually best pairs.
pub fn example1() -> Market {
    Market::new(
        vec![1, 1, 1],
        vec![vec![0, 2, 1], vec![1, 0], vec![2]],
        vec![vec![1, 0], vec![0, 1], vec![0, 2]],
    )
    .expect("example 1 is valid")
}

/// Multi-seat school s1 (capacity 2). The printed priority list of s2 also
/// ranks i2, who does not find s2 acceptable; it is dropped here.
pub fn example2() -> Market {
    Market::new(
        vec![2, 1, 1],
        vec![vec![1, 0], vec![0], vec![0, 1], vec![0, 1, 2]],
        vec![vec![0, 1, 2, 3], vec![0, 3, 2], vec![3]],
    )
    .expect("example 2 is valid")
}

/// Efficient student-proposing DA that coincides with TTC, yet the
/// generalized mutually-best-pairs condition fails.
pub fn example3() -> Market {
    Market::new(
        vec![1, 1, 1],
        vec![vec![2, 0], vec![1], vec![0, 1, 2]],
        vec![vec![0, 2], vec![1, 2], vec![2, 0]],
    )
    .expect("example 3 is valid")
}
