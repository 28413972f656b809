//! Cell-centred Cartesian meshes in one or two dimensions.
//!
//! Cells tile the box `[lower, upper]` exactly, so the midpoint rule with
//! weight `cell_volume()` integrates piecewise-constant data without error.
//! The outermost layer of cells carries the homogeneous Dirichlet condition:
//! unknowns on those cells are pinned to zero.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    lower: [f64; 2],
    upper: [f64; 2],
    spacing: [f64; 2],
    #[serde(skip)]
    boundary: Vec<bool>,
}

impl Grid {
    /// Uniform grid on the interval `[lower, upper]`.
    pub fn new_1d(cells: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(1, [cells, 1], [lower, 0.0], [upper, 1.0])
    }

    /// Uniform grid on `[lower.0, upper.0] × [lower.1, upper.1]`.
    pub fn new_2d(cells: [usize; 2], lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        Self::new(2, cells, lower, upper)
    }

    /// Same box along every axis; convenient for square domains.
    pub fn uniform(dim: usize, cells: usize, lower: f64, upper: f64) -> Result<Self> {
        match dim {
            1 => Self::new_1d(cells, lower, upper),
            2 => Self::new_2d([cells, cells], [lower, lower], [upper, upper]),
            _ => Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}"))),
        }
    }

    fn new(dim: usize, cells: [usize; 2], lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        let mut spacing = [1.0; 2];
        for axis in 0..dim {
            if cells[axis] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} needs at least 3 cells, got {}",
                    cells[axis]
                )));
            }
            if !(lower[axis].is_finite() && upper[axis].is_finite() && upper[axis] > lower[axis]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has an empty or non-finite extent [{}, {}]",
                    lower[axis], upper[axis]
                )));
            }
            spacing[axis] = (upper[axis] - lower[axis]) / cells[axis] as f64;
        }
        let mut grid = Grid { dim, cells, lower, upper, spacing, boundary: Vec::new() };
        grid.boundary = (0..grid.len())
            .map(|idx| {
                let ij = grid.coords(idx);
                (0..dim).any(|a| ij[a] == 0 || ij[a] == cells[a] - 1)
            })
            .collect();
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.upper[axis]
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells[0] * if self.dim == 2 { self.cells[1] } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing[a]).product()
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.upper[a] - self.lower[a]).product()
    }

    /// Axis indices of a linear cell index (axis 0 runs fastest).
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        [idx % self.cells[0], idx / self.cells[0]]
    }

    pub fn index(&self, ij: [usize; 2]) -> usize {
        ij[0] + self.cells[0] * ij[1]
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let ij = self.coords(idx);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.lower[a] + (ij[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary[idx]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_len(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Euclidean distance between two cell centres.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (xa, xb) = (self.center(a), self.center(b));
        (0..self.dim).map(|k| (xa[k] - xb[k]).powi(2)).sum::<f64>().sqrt()
    }

    /// Number of faces normal to `axis` (pairs of axis-adjacent cells).
    pub fn faces(&self, axis: usize) -> usize {
        match (self.dim, axis) {
            (1, 0) => self.cells[0] - 1,
            (2, 0) => (self.cells[0] - 1) * self.cells[1],
            (2, 1) => self.cells[0] * (self.cells[1] - 1),
            _ => 0,
        }
    }

    /// Lower and upper cell of face `f` normal to `axis`.
    pub fn face_cells(&self, axis: usize, f: usize) -> (usize, usize) {
        if axis == 0 {
            let nf = self.cells[0] - 1;
            let (i, j) = (f % nf, f / nf);
            let lo = self.index([i, j]);
            (lo, lo + 1)
        } else {
            let lo = f;
            (lo, lo + self.cells[0])
        }
    }

    /// Face normal to `axis` whose upper cell is `idx`, if any.
    pub fn face_below(&self, axis: usize, idx: usize) -> Option<usize> {
        let ij = self.coords(idx);
        if ij[axis] == 0 {
            return None;
        }
        Some(if axis == 0 { (ij[0] - 1) + (self.cells[0] - 1) * ij[1] } else { idx - self.cells[0] })
    }

    /// Face normal to `axis` whose lower cell is `idx`, if any.
    pub fn face_above(&self, axis: usize, idx: usize) -> Option<usize> {
        let ij = self.coords(idx);
        if ij[axis] + 1 >= self.cells[axis] {
            return None;
        }
        Some(if axis == 0 { ij[0] + (self.cells[0] - 1) * ij[1] } else { idx })
    }

    /// Coarser grid keeping every `factor`-th cell centre along each axis.
    /// Used to probe how exponent statistics depend on the spacing.
    pub(crate) fn subsample_indices(&self, factor: usize) -> Vec<usize> {
        let keep = |n: usize| (0..n).step_by(factor).collect::<Vec<_>>();
        let xs = keep(self.cells[0]);
        if self.dim == 1 {
            return xs;
        }
        let ys = keep(self.cells[1]);
        ys.iter().flat_map(|&j| xs.iter().map(move |&i| (i, j))).map(|(i, j)| self.index([i, j])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new_1d(2, 0.0, 1.0).is_err());
        assert!(Grid::new_1d(8, 1.0, 1.0).is_err());
        assert!(Grid::uniform(3, 8, 0.0, 1.0).is_err());
        assert!(Grid::new_2d([8, 2], [0.0; 2], [1.0; 2]).is_err());
    }

    #[test]
    fn boundary_is_outer_layer() {
        let g = Grid::new_1d(5, 0.0, 1.0).unwrap();
        assert_eq!(g.boundary_mask(), &[true, false, false, false, true]);
        let g = Grid::uniform(2, 4, 0.0, 1.0).unwrap();
        let interior: Vec<usize> = (0..g.len()).filter(|&i| !g.is_boundary(i)).collect();
        assert_eq!(interior, vec![5, 6, 9, 10]);
    }

    #[test]
    fn volumes_tile_the_domain() {
        let g = Grid::new_2d([5, 7], [0.0, -1.0], [2.0, 1.0]).unwrap();
        assert!((g.cell_volume() * g.len() as f64 - g.measure()).abs() < 1e-14);
        assert_eq!(g.center(0), [0.2, -1.0 + 1.0 / 7.0]);
    }

    #[test]
    fn face_topology_is_consistent() {
        let g = Grid::new_2d([4, 3], [0.0; 2], [1.0; 2]).unwrap();
        for axis in 0..2 {
            for f in 0..g.faces(axis) {
                let (lo, hi) = g.face_cells(axis, f);
                assert_eq!(g.face_above(axis, lo), Some(f));
                assert_eq!(g.face_below(axis, hi), Some(f));
            }
        }
        assert_eq!(g.faces(0), 9);
        assert_eq!(g.faces(1), 8);
    }
}
