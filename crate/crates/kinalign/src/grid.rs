//! Velocity grids and gridded distribution functions.
//!
//! Densities are cell-centered and piecewise constant: the value stored in a
//! cell is the density at its center, and masses are `h^k`-weighted sums.
//! Symmetric densities (`f_2`, `f_3`) are stored as full arrays and
//! re-symmetrized explicitly after updates rather than exploiting symmetry
//! for storage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform one-dimensional velocity grid with `n` cells on `[v_min, v_max]`.
///
/// Cell centers sit at `v_min + (i + 1/2) h` with `h = (v_max - v_min)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub v_min: f64,
    pub v_max: f64,
    pub n: usize,
}

impl VelocityGrid {
    pub fn new(v_min: f64, v_max: f64, n: usize) -> Result<Self> {
        if !(v_min < v_max) {
            return Err(Error::Config(format!(
                "grid requires v_min < v_max, got [{v_min}, {v_max}]"
            )));
        }
        if n < 2 {
            return Err(Error::Config(format!("grid requires n >= 2, got {n}")));
        }
        Ok(Self { v_min, v_max, n })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        (self.v_max - self.v_min) / self.n as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.v_min + (i as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Piecewise-constant cell lookup: index of the cell containing `v`,
    /// or `None` outside `[v_min, v_max)`.
    #[inline]
    pub fn cell_of(&self, v: f64) -> Option<usize> {
        if v < self.v_min || v >= self.v_max {
            return None;
        }
        let i = ((v - self.v_min) / self.h()) as usize;
        Some(i.min(self.n - 1))
    }

    /// Fractional position of `v` on the cell-center lattice.
    ///
    /// Returns `(i, w)` such that `v = center(i) + w*h` with `0 <= w < 1`,
    /// or `None` when `v` lies outside the span of cell centers.
    #[inline]
    pub fn frac_index(&self, v: f64) -> Option<(usize, f64)> {
        let x = (v - self.v_min) / self.h() - 0.5;
        let top = (self.n - 1) as f64;
        // one ulp of slack so exact cell centers at the boundary survive
        // floating-point division
        if x < -1e-9 || x > top + 1e-9 {
            return None;
        }
        let x = x.clamp(0.0, top);
        let i = (x as usize).min(self.n - 2);
        Some((i, x - i as f64))
    }
}

/// One-particle density `f_1` on a [`VelocityGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Density1 {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
}

/// Symmetric two-particle density `f_2` on the tensor grid, row-major
/// (`values[i * n + j]` is the cell `(v_i, v_j)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Density2 {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
}

/// Symmetric three-particle density `f_3`, row-major
/// (`values[(i * n + j) * n + k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Density3 {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
}

impl Density1 {
    pub fn zeros(grid: VelocityGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_fn(grid: VelocityGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn mass(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    /// First moment `∫ v f dv`.
    pub fn moment1(&self) -> f64 {
        let h = self.grid.h();
        h * self
            .values
            .iter()
            .enumerate()
            .map(|(i, &f)| self.grid.center(i) * f)
            .sum::<f64>()
    }

    /// Second moment `∫ v^2 f dv`.
    pub fn moment2(&self) -> f64 {
        let h = self.grid.h();
        h * self
            .values
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let v = self.grid.center(i);
                v * v * f
            })
            .sum::<f64>()
    }

    /// L1 norm `∫ |f| dv`.
    pub fn l1_norm(&self) -> f64 {
        self.grid.h() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Linear interpolation between cell centers, zero outside their span.
    #[inline]
    pub fn interp(&self, v: f64) -> f64 {
        match self.grid.frac_index(v) {
            Some((i, w)) => self.values[i] * (1.0 - w) + self.values[i + 1] * w,
            None => 0.0,
        }
    }

    /// Piecewise-constant evaluation (cell value), zero outside the grid.
    #[inline]
    pub fn pwc(&self, v: f64) -> f64 {
        match self.grid.cell_of(v) {
            Some(i) => self.values[i],
            None => 0.0,
        }
    }

    /// Clip negative cells to zero; returns the clipped mass (as a
    /// nonnegative number).
    pub fn clip_negative(&mut self) -> f64 {
        let mut clipped = 0.0;
        for v in &mut self.values {
            if *v < 0.0 {
                clipped -= *v;
                *v = 0.0;
            }
        }
        clipped * self.grid.h()
    }
}

impl Density2 {
    pub fn zeros(grid: VelocityGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n * grid.n],
        }
    }

    pub fn from_fn(grid: VelocityGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(grid.center(i), grid.center(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.values[i * self.grid.n + j]
    }

    pub fn mass(&self) -> f64 {
        let h = self.grid.h();
        h * h * self.values.iter().sum::<f64>()
    }

    /// `∫ v_1 f d(v_1,v_2)`.
    pub fn moment1(&self) -> f64 {
        let n = self.grid.n;
        let h = self.grid.h();
        let mut s = 0.0;
        for i in 0..n {
            let vi = self.grid.center(i);
            let row: f64 = self.values[i * n..(i + 1) * n].iter().sum();
            s += vi * row;
        }
        s * h * h
    }

    /// `∫ v_1^2 f d(v_1,v_2)`.
    pub fn moment2(&self) -> f64 {
        let n = self.grid.n;
        let h = self.grid.h();
        let mut s = 0.0;
        for i in 0..n {
            let vi = self.grid.center(i);
            let row: f64 = self.values[i * n..(i + 1) * n].iter().sum();
            s += vi * vi * row;
        }
        s * h * h
    }

    /// Pair dispersion `∫ (v_1 - v_2)^2 f d(v_1,v_2)`.
    pub fn pair_dispersion(&self) -> f64 {
        let n = self.grid.n;
        let h = self.grid.h();
        let mut s = 0.0;
        for i in 0..n {
            let vi = self.grid.center(i);
            for j in 0..n {
                let d = vi - self.grid.center(j);
                s += d * d * self.values[i * n + j];
            }
        }
        s * h * h
    }

    /// Marginal `∫ f dv_2` as a one-particle density.
    pub fn marginal(&self) -> Density1 {
        let n = self.grid.n;
        let h = self.grid.h();
        let values = (0..n)
            .map(|i| h * self.values[i * n..(i + 1) * n].iter().sum::<f64>())
            .collect();
        Density1 {
            grid: self.grid,
            values,
        }
    }

    pub fn l1_norm(&self) -> f64 {
        let h = self.grid.h();
        h * h * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Bilinear interpolation between cell centers, zero outside.
    #[inline]
    pub fn interp(&self, v1: f64, v2: f64) -> f64 {
        let (i, wi) = match self.grid.frac_index(v1) {
            Some(x) => x,
            None => return 0.0,
        };
        let (j, wj) = match self.grid.frac_index(v2) {
            Some(x) => x,
            None => return 0.0,
        };
        let n = self.grid.n;
        let f00 = self.values[i * n + j];
        let f01 = self.values[i * n + j + 1];
        let f10 = self.values[(i + 1) * n + j];
        let f11 = self.values[(i + 1) * n + j + 1];
        f00 * (1.0 - wi) * (1.0 - wj)
            + f01 * (1.0 - wi) * wj
            + f10 * wi * (1.0 - wj)
            + f11 * wi * wj
    }

    /// Force exact permutation symmetry by averaging with the transpose.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.values[i * n + j];
                let b = self.values[j * n + i];
                let m = 0.5 * (a + b);
                self.values[i * n + j] = m;
                self.values[j * n + i] = m;
            }
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.grid.n;
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.values[i * n + j] - self.values[j * n + i]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn clip_negative(&mut self) -> f64 {
        let mut clipped = 0.0;
        for v in &mut self.values {
            if *v < 0.0 {
                clipped -= *v;
                *v = 0.0;
            }
        }
        let h = self.grid.h();
        clipped * h * h
    }
}

impl Density3 {
    pub fn zeros(grid: VelocityGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n * grid.n * grid.n],
        }
    }

    pub fn from_fn(grid: VelocityGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = grid.n;
        let mut values = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    values.push(f(grid.center(i), grid.center(j), grid.center(k)));
                }
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.grid.n;
        self.values[(i * n + j) * n + k]
    }

    pub fn mass(&self) -> f64 {
        let h = self.grid.h();
        h * h * h * self.values.iter().sum::<f64>()
    }

    pub fn l1_norm(&self) -> f64 {
        let h = self.grid.h();
        h * h * h * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Marginal `∫ f dv_3` as a two-particle density.
    pub fn marginal_v3(&self) -> Density2 {
        let n = self.grid.n;
        let h = self.grid.h();
        let mut out = Density2::zeros(self.grid);
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * n;
                out.values[i * n + j] = h * self.values[base..base + n].iter().sum::<f64>();
            }
        }
        out
    }

    /// Trilinear interpolation between cell centers, zero outside.
    #[inline]
    pub fn interp(&self, v1: f64, v2: f64, v3: f64) -> f64 {
        let (i, wi) = match self.grid.frac_index(v1) {
            Some(x) => x,
            None => return 0.0,
        };
        let (j, wj) = match self.grid.frac_index(v2) {
            Some(x) => x,
            None => return 0.0,
        };
        let (k, wk) = match self.grid.frac_index(v3) {
            Some(x) => x,
            None => return 0.0,
        };
        let n = self.grid.n;
        let mut acc = 0.0;
        for (di, wa) in [(0, 1.0 - wi), (1, wi)] {
            for (dj, wb) in [(0, 1.0 - wj), (1, wj)] {
                for (dk, wc) in [(0, 1.0 - wk), (1, wk)] {
                    acc += wa * wb * wc * self.values[((i + di) * n + j + dj) * n + k + dk];
                }
            }
        }
        acc
    }

    /// Force exact permutation symmetry by averaging over all 6
    /// permutations of the indices.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let perms = [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ];
                    let m = perms
                        .iter()
                        .map(|&(a, b, c)| self.values[(a * n + b) * n + c])
                        .sum::<f64>()
                        / 6.0;
                    for &(a, b, c) in &perms {
                        self.values[(a * n + b) * n + c] = m;
                    }
                }
            }
        }
    }

    pub fn clip_negative(&mut self) -> f64 {
        let mut clipped = 0.0;
        for v in &mut self.values {
            if *v < 0.0 {
                clipped -= *v;
                *v = 0.0;
            }
        }
        let h = self.grid.h();
        clipped * h * h * h
    }
}
