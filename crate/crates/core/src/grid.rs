use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fastest fragment momentum the default grids must resolve (a.u.).
pub const K_MAX_EXPECTED: f64 = 12.0;

/// Uniform periodic grid in R with its FFT-conjugate momentum grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    n_r: usize,
    r_min: f64,
    r_max: f64,
}

impl RadialGrid {
    pub fn new(n_r: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if n_r < 256 || !n_r.is_power_of_two() {
            return Err(Error::validation(format!(
                "n_r must be a power of two >= 256, got {n_r}"
            )));
        }
        if !(r_min > 0.0) || !(r_max > r_min) {
            return Err(Error::validation(format!(
                "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        let grid = Self { n_r, r_min, r_max };
        if grid.dr() >= PI / K_MAX_EXPECTED {
            return Err(Error::validation(format!(
                "grid spacing {:.4} bohr cannot resolve k = {K_MAX_EXPECTED} a.u.",
                grid.dr()
            )));
        }
        Ok(grid)
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn dr(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_r as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.dr()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_r).map(|i| self.r(i)).collect()
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n_r as f64 * self.dr())
    }

    pub fn k_max(&self) -> f64 {
        PI / self.dr()
    }

    /// Momenta in FFT storage order.
    pub fn k_values(&self) -> Vec<f64> {
        let n = self.n_r;
        let dk = self.dk();
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * dk
                } else {
                    (j as f64 - n as f64) * dk
                }
            })
            .collect()
    }

    /// First grid index with `r >= x`.
    pub fn index_of(&self, x: f64) -> usize {
        (((x - self.r_min) / self.dr()).ceil().max(0.0) as usize).min(self.n_r)
    }
}
