//! Cell-centred evaluation grids over a box.
//!
//! Points are ordered row-major with the last axis fastest: index
//! `((i_0 * r_1 + i_1) * r_2 + i_2) ...` holds the centre of cell
//! `(i_0, i_1, ...)`.

use serde::{Deserialize, Serialize};

use crate::semialg::BoxRegion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub region: BoxRegion,
    /// Cells per axis.
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(region: BoxRegion, resolution: Vec<usize>) -> Self {
        assert_eq!(region.dim(), resolution.len(), "grid resolution per axis");
        assert!(resolution.iter().all(|&r| r > 0), "grid resolution must be positive");
        Grid { region, resolution }
    }

    /// The same resolution on every axis.
    pub fn uniform(region: BoxRegion, per_axis: usize) -> Self {
        let n = region.dim();
        Self::new(region, vec![per_axis; n])
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_widths(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| (self.region.upper[k] - self.region.lower[k]) / self.resolution[k] as f64)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_widths().iter().product()
    }

    /// Centre of the cell with flat index `idx`.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let h = self.cell_widths();
        let mut p = vec![0.0; self.dim()];
        for k in (0..self.dim()).rev() {
            let r = self.resolution[k];
            p[k] = self.region.lower[k] + (((idx % r) as f64) + 0.5) * h[k];
            idx /= r;
        }
        p
    }
}
