use serde::{Deserialize, Serialize};

use super::FieldError;

/// Uniform collocated grid on the flat torus `[-1,1]^d` with `n` points per
/// axis. Points sit at `x_j = -1 + j h`, `h = 2/n`; storage is row-major with
/// axis 0 varying slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points, `n^d`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 / self.n as f64
    }

    /// Quadrature weight of a single grid point, `h^d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `|T^d| = 2^d`.
    #[inline]
    pub fn volume(&self) -> f64 {
        2f64.powi(self.dim as i32)
    }

    /// Stride of `axis` in the flat storage.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.n + (i % self.n))
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.spacing()
    }

    /// Physical coordinates of grid point `flat`; unused trailing entries are 0.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coord(idx[axis]);
        }
        x
    }

    /// Signed integer wavenumber of FFT bin `i` (Nyquist bin reported as `+n/2`).
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Dimension-dependent default for the monitored Sobolev index: the
    /// smallest integer strictly above `d/2 + 1`.
    pub fn default_sobolev_index(&self) -> u32 {
        (self.dim as u32) / 2 + 2
    }
}
