use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Discretization of the truncated strip `[-t_cut, t_cut] x [0, pi]`
/// (or cylinder `[-t_cut, t_cut] x [0, 2*pi)`): `nx` horizontal cells of
/// width `dt = 2*t_cut/nx` and `ny` vertical cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_cut: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
}

impl GridSpec {
    pub fn new(t_cut: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(t_cut > 0.0) || !t_cut.is_finite() {
            return Err(Error::param(format!("t_cut must be positive, got {t_cut}")));
        }
        if nx < 8 || nx % 2 != 0 {
            return Err(Error::param(format!(
                "nx must be an even integer >= 8 so t=0 is a grid node, got {nx}"
            )));
        }
        if ny < 4 {
            return Err(Error::param(format!("ny must be at least 4, got {ny}")));
        }
        Ok(GridSpec {
            t_cut,
            nx,
            ny,
            dt: 2.0 * t_cut / nx as f64,
        })
    }

    /// Left edge of horizontal cell `i` (0 <= i < nx).
    pub fn x_left(&self, i: usize) -> f64 {
        -self.t_cut + i as f64 * self.dt
    }

    /// Horizontal node positions (nx + 1 of them, from -t_cut to t_cut).
    pub fn x_nodes(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| -self.t_cut + i as f64 * self.dt).collect()
    }

    /// Vertical cell height for a domain of total height `height`.
    pub fn dy(&self, height: f64) -> f64 {
        height / self.ny as f64
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tiles_strip_exactly() {
        let g = GridSpec::new(4.0, 64, 16).unwrap();
        assert_relative_eq!(g.dt * g.nx as f64, 2.0 * g.t_cut, epsilon = 1e-12);
        assert_eq!(g.n_cells(), 64 * 16);
        assert_relative_eq!(g.x_left(0), -4.0);
        assert_relative_eq!(g.x_left(32), 0.0);
        let nodes = g.x_nodes();
        assert_eq!(nodes.len(), 65);
        assert_relative_eq!(nodes[64], 4.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0.0, 64, 16).is_err());
        assert!(GridSpec::new(-1.0, 64, 16).is_err());
        assert!(GridSpec::new(1.0, 7, 16).is_err());
        assert!(GridSpec::new(1.0, 9, 16).is_err()); // odd: t=0 not a node
        assert!(GridSpec::new(1.0, 64, 3).is_err());
    }
}
