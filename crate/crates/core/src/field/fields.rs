use rayon::prelude::*;

use super::reduce::{max, max_abs, min, pairwise_sum, pairwise_sum_by};
use super::{FieldError, PressureLaw, TorusGrid};

const PAR_MIN_LEN: usize = 1024;

/// Number of stored components of a symmetric `d×d` tensor.
#[inline]
pub const fn sym_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Packed position of entry `(i, j)` of a symmetric tensor: upper triangle,
/// row-major, i.e. `00 01 02 11 12 22` in 3D and `00 01 11` in 2D.
#[inline]
pub const fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * i.saturating_sub(1) / 2 + (j - i)
}

fn tabulate<F>(grid: TorusGrid, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = grid.dim();
    (0..grid.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|k| f(&grid.point(k)[..d]))
        .collect()
}

fn check_len(grid: TorusGrid, len: usize) -> Result<(), FieldError> {
    if len != grid.len() {
        return Err(FieldError::GridMismatch(format!(
            "expected {} samples, got {len}",
            grid.len()
        )));
    }
    Ok(())
}

fn lp_of_magnitudes(grid: TorusGrid, mags: &[f64], p: f64) -> f64 {
    assert!(p >= 1.0 && p.is_finite(), "exponent must lie in [1, inf)");
    let scale = max_abs(mags);
    if scale == 0.0 {
        return 0.0;
    }
    // scale out the sup to keep |f|^p representable for large p
    let s = pairwise_sum_by(mags.len(), &|i| (mags[i].abs() / scale).powf(p));
    scale * (grid.cell_volume() * s).powf(1.0 / p)
}

/// Real samples of a scalar function on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, FieldError> {
        check_len(grid, values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F>(grid: TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self {
            grid,
            values: tabulate(grid, f),
        }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        Self {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .with_min_len(PAR_MIN_LEN)
                .map(|&x| f(x))
                .collect(),
        }
    }

    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .with_min_len(PAR_MIN_LEN)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .with_min_len(PAR_MIN_LEN)
            .for_each(|(x, &y)| *x += a * y);
    }

    pub fn min(&self) -> f64 {
        min(&self.values)
    }

    pub fn max(&self) -> f64 {
        max(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        max_abs(&self.values)
    }

    /// Trapezoidal (= spectral) quadrature over the torus.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * pairwise_sum(&self.values)
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_of_magnitudes(self.grid, &self.values, p)
    }
}

/// A `d`-component field, stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn constant(grid: TorusGrid, c: &[f64]) -> Self {
        assert_eq!(c.len(), grid.dim());
        Self {
            grid,
            comps: c.iter().map(|&ci| vec![ci; grid.len()]).collect(),
        }
    }

    /// Samples a vector-valued `f(x)`; only the first `d` entries are used.
    pub fn from_fn<F>(grid: TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> [f64; 3] + Sync,
    {
        let d = grid.dim();
        let pts: Vec<[f64; 3]> = (0..grid.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|k| f(&grid.point(k)[..d]))
            .collect();
        let comps = (0..d).map(|c| pts.iter().map(|v| v[c]).collect()).collect();
        Self { grid, comps }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self, FieldError> {
        let grid = comps
            .first()
            .map(|c| c.grid())
            .ok_or_else(|| FieldError::GridMismatch("no components".into()))?;
        if comps.len() != grid.dim() || comps.iter().any(|c| c.grid() != grid) {
            return Err(FieldError::GridMismatch(format!(
                "need {} components on a common grid",
                grid.dim()
            )));
        }
        Ok(Self {
            grid,
            comps: comps.into_iter().map(ScalarField::into_values).collect(),
        })
    }

    pub fn from_raw(grid: TorusGrid, comps: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if comps.len() != grid.dim() {
            return Err(FieldError::GridMismatch(format!(
                "need {} components, got {}",
                grid.dim(),
                comps.len()
            )));
        }
        for c in &comps {
            check_len(grid, c.len())?;
        }
        Ok(Self { grid, comps })
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    #[inline]
    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }

    pub fn component_field(&self, i: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.comps[i].clone(),
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (c, comp) in self.comps.iter().enumerate() {
            v[c] = comp[k];
        }
        v
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let d = self.dim();
        let values = (0..self.grid.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|k| {
                let v = self.at(k);
                v[..d].iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn dot(&self, other: &VectorField) -> ScalarField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let d = self.dim();
        let values = (0..self.grid.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|k| (0..d).map(|c| self.comps[c][k] * other.comps[c][k]).sum())
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            x.par_iter_mut()
                .zip(y.par_iter())
                .with_min_len(PAR_MIN_LEN)
                .for_each(|(x, &y)| *x += a * y);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|x| a * x).collect())
                .collect(),
        }
    }

    /// Componentwise integral over the torus.
    pub fn integral(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        self.comps.iter().map(|c| w * pairwise_sum(c)).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.len() as f64;
        self.comps.iter().map(|c| pairwise_sum(c) / n).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitude().sup_norm()
    }

    /// `(∫ |v|^p)^{1/p}` with the pointwise Euclidean norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mags = self.magnitude();
        lp_of_magnitudes(self.grid, mags.values(), p)
    }
}

/// Symmetric `d×d` tensor field, holding the packed upper triangle only.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: TorusGrid,
    comps: Vec<Vec<f64>>,
    traceless: bool,
}

impl SymTensorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; sym_len(grid.dim())],
            traceless: true,
        }
    }

    /// Samples a tensor-valued `f(x)` given in packed order (see [`sym_index`]).
    pub fn from_fn<F>(grid: TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> [f64; 6] + Sync,
    {
        let d = grid.dim();
        let pts: Vec<[f64; 6]> = (0..grid.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|k| f(&grid.point(k)[..d]))
            .collect();
        let comps = (0..sym_len(d))
            .map(|c| pts.iter().map(|v| v[c]).collect())
            .collect();
        Self {
            grid,
            comps,
            traceless: false,
        }
    }

    pub fn from_raw(grid: TorusGrid, comps: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if comps.len() != sym_len(grid.dim()) {
            return Err(FieldError::GridMismatch(format!(
                "need {} packed components, got {}",
                sym_len(grid.dim()),
                comps.len()
            )));
        }
        for c in &comps {
            check_len(grid, c.len())?;
        }
        Ok(Self {
            grid,
            comps,
            traceless: false,
        })
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn is_traceless(&self) -> bool {
        self.traceless
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[sym_index(self.dim(), i, j)]
    }

    #[inline]
    pub fn packed(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn packed_mut(&mut self) -> &mut [Vec<f64>] {
        self.traceless = false;
        &mut self.comps
    }

    /// Packed entries at grid point `k`.
    #[inline]
    pub fn at(&self, k: usize) -> [f64; 6] {
        let mut a = [0.0; 6];
        for (c, comp) in self.comps.iter().enumerate() {
            a[c] = comp[k];
        }
        a
    }

    pub fn trace(&self) -> ScalarField {
        let d = self.dim();
        let values = (0..self.grid.len())
            .map(|k| (0..d).map(|i| self.get(i, i)[k]).sum())
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn frobenius(&self) -> ScalarField {
        let d = self.dim();
        let values = (0..self.grid.len())
            .map(|k| {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        let x = self.get(i, j)[k];
                        s += x * x;
                    }
                }
                s.sqrt()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Largest violation of `|tr| ≤ 1e-12 (|A|_F + 1)` over the grid; a
    /// nonpositive value means the field qualifies as traceless.
    pub fn trace_excess(&self) -> f64 {
        let tr = self.trace();
        let fro = self.frobenius();
        tr.values()
            .iter()
            .zip(fro.values())
            .map(|(t, f)| t.abs() - 1e-12 * (f + 1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Flags the field traceless after checking the pointwise bound.
    pub fn into_traceless(mut self) -> Result<Self, FieldError> {
        let excess = self.trace_excess();
        if excess > 0.0 {
            return Err(FieldError::InvalidGrid(format!(
                "tensor field is not traceless (excess {excess:e})"
            )));
        }
        self.traceless = true;
        Ok(self)
    }

    pub fn axpy(&mut self, a: f64, other: &SymTensorField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in x.iter_mut().zip(y) {
                *x += a * y;
            }
        }
        self.traceless &= other.traceless;
    }
}

/// Conservative variables `(ϱ, m)` at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub rho: ScalarField,
    pub m: VectorField,
    pub time: f64,
}

impl FlowState {
    pub fn new(rho: ScalarField, m: VectorField, time: f64) -> Result<Self, FieldError> {
        if rho.grid() != m.grid() {
            return Err(FieldError::GridMismatch(
                "density and momentum live on different grids".into(),
            ));
        }
        Ok(Self { rho, m, time })
    }

    /// Spatially constant state `(ϱ̄, m̄)`.
    pub fn constant(grid: TorusGrid, rho: f64, m: &[f64]) -> Self {
        Self {
            rho: ScalarField::constant(grid, rho),
            m: VectorField::constant(grid, m),
            time: 0.0,
        }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.rho.grid()
    }

    /// `u = m / ϱ`.
    pub fn velocity(&self) -> VectorField {
        let d = self.grid().dim();
        let comps = (0..d)
            .map(|c| {
                self.m
                    .component(c)
                    .iter()
                    .zip(self.rho.values())
                    .map(|(m, r)| m / r)
                    .collect()
            })
            .collect();
        VectorField {
            grid: self.grid(),
            comps,
        }
    }

    /// Fails with the first density sample outside `(a, b)`.
    pub fn check_density(&self, law: &PressureLaw) -> Result<(), FieldError> {
        let (lo, hi) = (self.rho.min(), self.rho.max());
        for rho in [lo, hi] {
            if !law.contains(rho) {
                return Err(FieldError::DensityOutOfRange {
                    rho,
                    a: law.a(),
                    b: law.b(),
                });
            }
        }
        Ok(())
    }

    /// `(1-θ) a + θ b`, used for off-snapshot sampling.
    pub fn lerp(a: &FlowState, b: &FlowState, theta: f64) -> FlowState {
        let mut rho = a.rho.clone();
        rho.values_mut()
            .iter_mut()
            .zip(b.rho.values())
            .for_each(|(x, y)| *x += theta * (y - *x));
        let mut m = a.m.clone();
        for c in 0..a.grid().dim() {
            m.component_mut(c)
                .iter_mut()
                .zip(b.m.component(c))
                .for_each(|(x, y)| *x += theta * (y - *x));
        }
        FlowState {
            rho,
            m,
            time: a.time + theta * (b.time - a.time),
        }
    }
}
