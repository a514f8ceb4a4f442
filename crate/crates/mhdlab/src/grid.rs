//! Uniform periodic tensor grids on the 3-torus.

use crate::error::{Error, Result};
use std::f64::consts::TAU;

/// Axis labels, in storage order.
pub const AXIS_NAMES: [&str; 3] = ["zeta", "theta", "phi"];

/// Uniform periodic grid on T^3. Node k on axis i sits at `k * period[i] / n[i]`
/// for `k = 0..n[i]` with the endpoint excluded (periodic wrap).
///
/// Axis order is (zeta, theta, phi) throughout the crate; arrays are indexed
/// `[zeta, theta, phi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: [usize; 3],
    period: [f64; 3],
}

impl Grid3 {
    /// Grid with per-axis node counts and the default period 2π on each axis.
    pub fn new(n: [usize; 3]) -> Result<Self> {
        Self::with_periods(n, [TAU; 3])
    }

    /// Cubic grid n^3 with period 2π per axis.
    pub fn cubic(n: usize) -> Result<Self> {
        Self::new([n; 3])
    }

    pub fn with_periods(n: [usize; 3], period: [f64; 3]) -> Result<Self> {
        for (i, &ni) in n.iter().enumerate() {
            if ni < 4 || ni % 2 != 0 {
                return Err(Error::Parameter(format!(
                    "axis {} has {} nodes; need an even count >= 4 for real spectral differentiation",
                    AXIS_NAMES[i], ni
                )));
            }
        }
        for (i, &pi) in period.iter().enumerate() {
            if !(pi.is_finite() && pi > 0.0) {
                return Err(Error::Parameter(format!(
                    "axis {} period must be a positive real, got {}",
                    AXIS_NAMES[i], pi
                )));
            }
        }
        Ok(Grid3 { n, period })
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn period(&self) -> [f64; 3] {
        self.period
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.n[axis] as f64
    }

    /// Coordinate of node `k` on `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        k as f64 * self.period[axis] / self.n[axis] as f64
    }

    /// Coordinates of a node index triple.
    pub fn coords(&self, idx: [usize; 3]) -> [f64; 3] {
        [
            self.coord(0, idx[0]),
            self.coord(1, idx[1]),
            self.coord(2, idx[2]),
        ]
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Index of the grid node nearest to `x` on `axis` (periodic wrap).
    pub fn nearest_node(&self, axis: usize, x: f64) -> usize {
        let h = self.spacing(axis);
        let k = (x / h).round() as i64;
        k.rem_euclid(self.n[axis] as i64) as usize
    }

    /// Signed periodic offset `a - b` on `axis`, wrapped into
    /// `[-period/2, period/2)`.
    pub fn wrap(&self, axis: usize, delta: f64) -> f64 {
        let p = self.period[axis];
        let mut d = delta % p;
        if d < -p / 2.0 {
            d += p;
        } else if d >= p / 2.0 {
            d -= p;
        }
        d
    }

    /// Periodic Euclidean distance between coordinate triples.
    pub fn distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            let d = self.wrap(i, a[i] - b[i]);
            s += d * d;
        }
        s.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid3::new([3, 8, 8]).is_err());
        assert!(Grid3::new([7, 8, 8]).is_err());
        assert!(Grid3::new([0, 8, 8]).is_err());
        assert!(Grid3::with_periods([8, 8, 8], [0.0, TAU, TAU]).is_err());
        assert!(Grid3::new([4, 4, 4]).is_ok());
    }

    #[test]
    fn node_placement_excludes_endpoint() {
        let g = Grid3::cubic(8).unwrap();
        assert_eq!(g.coord(0, 0), 0.0);
        let last = g.coord(0, 7);
        assert!(last < TAU);
        assert!((last - 7.0 * TAU / 8.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_wrap_and_distance() {
        let g = Grid3::cubic(8).unwrap();
        assert!((g.wrap(0, TAU - 0.1) - (-0.1)).abs() < 1e-14);
        let d = g.distance([0.1, 0.0, 0.0], [TAU - 0.1, 0.0, 0.0]);
        assert!((d - 0.2).abs() < 1e-14);
    }

    #[test]
    fn nearest_node_wraps() {
        let g = Grid3::cubic(8).unwrap();
        assert_eq!(g.nearest_node(0, TAU - 1e-9), 0);
        assert_eq!(g.nearest_node(0, g.coord(0, 5) + 1e-9), 5);
    }
}
