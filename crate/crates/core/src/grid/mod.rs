//! Uniform 1D grids and logically rectangular mapped 2D grids.

mod mapped;

pub use mapped::{
    circular_inclusion_map, mapping_jump, CircleParams, GridCheck, MappedGrid2D, MappingInfo, MappingVariant,
    RegionSpec,
};

use crate::error::{Error, Result};

pub const GHOST_WIDTH: usize = 2;

/// Relative tolerance (in cell widths) for a region boundary to count as
/// lying on a cell edge.
pub(crate) const ALIGN_TOL: f64 = 1e-6;

/// Index of the edge at `x` in a uniform partition starting at `lo` with
/// spacing `h`, or `None` if `x` is not on an edge.
pub(crate) fn aligned_edge(lo: f64, h: f64, x: f64) -> Option<i64> {
    let k = (x - lo) / h;
    let r = k.round();
    ((k - r).abs() <= ALIGN_TOL).then_some(r as i64)
}

/// A material layer `[x0, x1)` of a 1D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub x0: f64,
    pub x1: f64,
    pub material: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub material: Vec<usize>,
}

impl Grid1D {
    pub fn uniform(x_lo: f64, x_hi: f64, n: usize, material: usize) -> Result<Self> {
        if n == 0 || !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Grid(format!("bad 1D grid [{x_lo}, {x_hi}] with {n} cells")));
        }
        Ok(Self {
            x_lo,
            x_hi,
            material: vec![material; n],
        })
    }

    /// Uniform grid filled with `base` and overwritten by `layers` in order.
    /// Every layer boundary inside the domain must fall on a cell edge.
    pub fn layered(x_lo: f64, x_hi: f64, n: usize, base: usize, layers: &[Layer]) -> Result<Self> {
        let mut g = Self::uniform(x_lo, x_hi, n, base)?;
        let dx = g.dx();
        for layer in layers {
            if !(layer.x1 >= layer.x0) {
                return Err(Error::Config(format!("layer [{}, {}] is reversed", layer.x0, layer.x1)));
            }
            let edge = |x: f64| -> Result<usize> {
                if x <= x_lo {
                    return Ok(0);
                }
                if x >= x_hi {
                    return Ok(n);
                }
                aligned_edge(x_lo, dx, x)
                    .map(|k| k as usize)
                    .ok_or_else(|| Error::Config(format!("layer boundary x = {x} is not on a cell edge (dx = {dx})")))
            };
            let (a, b) = (edge(layer.x0)?, edge(layer.x1)?);
            g.material[a..b].iter_mut().for_each(|m| *m = layer.material);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.material.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx()
    }

    /// Position of edge `j`, between cells `j-1` and `j`.
    pub fn edge(&self, j: usize) -> f64 {
        self.x_lo + j as f64 * self.dx()
    }

    /// Edges whose two cells carry different materials.
    pub fn interface_edges(&self) -> Vec<usize> {
        (1..self.n())
            .filter(|&j| self.material[j - 1] != self.material[j])
            .collect()
    }

    /// Cell containing `x`; a point on an edge belongs to the lower cell.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(x >= self.x_lo && x <= self.x_hi) {
            return Err(Error::Grid(format!("point {x} outside [{}, {}]", self.x_lo, self.x_hi)));
        }
        let k = (x - self.x_lo) / self.dx();
        let r = k.round();
        let i = if (k - r).abs() <= 1e-9 && r >= 1.0 {
            r as usize - 1
        } else {
            k.floor() as usize
        };
        Ok(i.min(self.n() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_are_edge_aligned() {
        let g = Grid1D::layered(
            -10.0,
            10.0,
            2000,
            0,
            &[
                Layer {
                    x0: 0.05,
                    x1: 10.0,
                    material: 2,
                },
                Layer {
                    x0: -0.05,
                    x1: 0.05,
                    material: 1,
                },
            ],
        )
        .unwrap();
        assert_eq!(g.interface_edges(), vec![995, 1005]);
        assert_eq!(g.material.iter().filter(|&&m| m == 1).count(), 10);
        assert!((g.edge(995) + 0.05).abs() < 1e-12);
        let bad = Grid1D::layered(
            -10.0,
            10.0,
            2000,
            0,
            &[Layer {
                x0: 0.003,
                x1: 1.0,
                material: 1,
            }],
        );
        assert!(matches!(bad, Err(Error::Config(_))));
    }

    #[test]
    fn single_material_has_no_interfaces() {
        assert!(Grid1D::uniform(0.0, 1.0, 10, 3).unwrap().interface_edges().is_empty());
    }

    #[test]
    fn locate_tie_breaks_low() {
        let g = Grid1D::uniform(0.0, 1.0, 10, 0).unwrap();
        assert_eq!(g.locate(g.center(4)).unwrap(), 4);
        assert_eq!(g.locate(0.3).unwrap(), 2);
        assert_eq!(g.locate(0.0).unwrap(), 0);
        assert_eq!(g.locate(1.0).unwrap(), 9);
        assert!(g.locate(1.01).is_err());
    }
}
