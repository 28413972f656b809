use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par;

/// A real value per cell of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell });
        }
        Ok(GridFunction { grid, values })
    }

    /// Internal constructor for values known to be finite and of the right length.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFunction { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn<F>(grid: &Arc<Grid>, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64 + Sync + Send,
    {
        let values = par::map_indexed(grid.len(), |i| f(grid.center(i)));
        Self::new(grid.clone(), values)
    }

    /// Like [`from_fn`](Self::from_fn) but forces the boundary layer to zero.
    pub fn from_fn_dirichlet<F>(grid: &Arc<Grid>, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64 + Sync + Send,
    {
        let values = par::map_indexed(grid.len(), |i| if grid.is_boundary(i) { 0.0 } else { f(grid.center(i)) });
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, grid: &Arc<Grid>) -> bool {
        Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid
    }

    pub(crate) fn check_grid(&self, grid: &Arc<Grid>) -> Result<()> {
        if self.same_grid(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map<F>(&self, f: F) -> GridFunction
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        GridFunction::from_raw(self.grid.clone(), par::map_indexed(self.len(), |i| f(self.values[i])))
    }

    /// `alpha * self + beta * other`
    pub fn lincomb(&self, alpha: f64, other: &GridFunction, beta: f64) -> GridFunction {
        let values = par::map_indexed(self.len(), |i| alpha * self.values[i] + beta * other.values[i]);
        GridFunction::from_raw(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn scale(&self, alpha: f64) -> GridFunction {
        self.map(|v| alpha * v)
    }

    /// Copy with the boundary layer set to zero.
    pub fn interior(&self) -> GridFunction {
        let g = &self.grid;
        GridFunction::from_raw(g.clone(), par::map_indexed(self.len(), |i| if g.is_boundary(i) { 0.0 } else { self.values[i] }))
    }

    /// Largest absolute value on the boundary layer, with its cell.
    pub fn boundary_violation(&self) -> Option<(usize, f64)> {
        (0..self.len())
            .filter(|&i| self.grid.is_boundary(i))
            .map(|i| (i, self.values[i].abs()))
            .fold(None, |acc, cur| match acc {
                Some((_, best)) if best >= cur.1 => acc,
                _ if cur.1 > 0.0 => Some(cur),
                _ => acc,
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Discrete L² pairing `Σ a_i b_i |cell|`.
pub fn inner(a: &GridFunction, b: &GridFunction) -> f64 {
    let vol = a.grid.cell_volume();
    vol * par::sum_indexed(a.len(), |i| a.values[i] * b.values[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_values() {
        let g = Arc::new(Grid::new_1d(4, 0.0, 1.0).unwrap());
        assert_eq!(GridFunction::new(g.clone(), vec![0.0, f64::NAN, 0.0, 0.0]), Err(Error::NonFinite { cell: 1 }));
        assert!(GridFunction::new(g.clone(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn dirichlet_sampling_and_violation() {
        let g = Arc::new(Grid::new_1d(5, 0.0, 1.0).unwrap());
        let u = GridFunction::from_fn_dirichlet(&g, |_| 1.0).unwrap();
        assert_eq!(u.values(), &[0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(u.boundary_violation(), None);
        let v = GridFunction::from_fn(&g, |x| x[0]).unwrap();
        assert_eq!(v.boundary_violation(), Some((4, 0.9)));
        assert!((inner(&u, &u) - 0.6).abs() < 1e-15);
    }
}
