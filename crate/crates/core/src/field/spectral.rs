use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::reduce::pairwise_sum_by;
use super::{sym_index, ScalarField, SymTensorField, TorusGrid, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralMonitor {
    pub sobolev_sq: f64,
    pub tail: f64,
    pub total: f64,
}

/// FFT-based calculus on a [`TorusGrid`].
///
/// Wavenumbers are `π k` for the period-2 box. Odd derivatives drop the
/// Nyquist bin so that derivatives of real fields stay real; the Laplacian
/// does the same so that `div ∘ grad` and `laplacian` agree exactly.
/// Dealiasing keeps bins with `3|k| < n` on every axis (2/3 rule).
#[derive(Clone)]
pub struct Spectral {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
    kappa: Vec<f64>,
    kappa_full: Vec<f64>,
    keep: Vec<bool>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let kappa_full: Vec<f64> = (0..n)
            .map(|i| std::f64::consts::PI * grid.wavenumber(i) as f64)
            .collect();
        let kappa = (0..n)
            .map(|i| if 2 * i == n { 0.0 } else { kappa_full[i] })
            .collect();
        let keep = (0..n)
            .map(|i| 3 * (grid.wavenumber(i).unsigned_abs() as usize) < n)
            .collect();
        Self {
            grid,
            forward,
            inverse,
            scratch_len,
            kappa,
            kappa_full,
            keep,
        }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let total = data.len();
        let zero = Complex64::new(0.0, 0.0);
        for axis in 0..self.grid.dim() {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                data.par_chunks_mut(n).for_each_init(
                    || vec![zero; self.scratch_len],
                    |scratch, line| fft.process_with_scratch(line, scratch),
                );
                continue;
            }
            let snapshot: &[Complex64] = data;
            let lines: Vec<Vec<Complex64>> = (0..total / n)
                .into_par_iter()
                .map_init(
                    || vec![zero; self.scratch_len],
                    |scratch, l| {
                        let base = (l / stride) * n * stride + l % stride;
                        let mut line: Vec<Complex64> =
                            (0..n).map(|j| snapshot[base + j * stride]).collect();
                        fft.process_with_scratch(&mut line, scratch);
                        line
                    },
                )
                .collect();
            for (l, line) in lines.into_iter().enumerate() {
                let base = (l / stride) * n * stride + l % stride;
                for (j, c) in line.into_iter().enumerate() {
                    data[base + j * stride] = c;
                }
            }
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.grid.len());
        let mut data: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse DFT, normalized, keeping the real part.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut coeffs, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        coeffs.into_iter().map(|c| c.re * scale).collect()
    }

    /// Per-axis bins of spectral index `k`.
    #[inline]
    fn bins(&self, k: usize) -> [usize; 3] {
        self.grid.multi_index(k)
    }

    #[inline]
    fn kept(&self, k: usize) -> bool {
        let b = self.bins(k);
        (0..self.grid.dim()).all(|a| self.keep[b[a]])
    }

    /// `Σ_j ∂_j f_j`, optionally 2/3-truncated, for fields given as raw slices.
    pub(crate) fn divergence_raw(&self, comps: &[&[f64]], dealias: bool) -> Vec<f64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (axis, comp) in comps.iter().enumerate() {
            let hat = self.forward(comp);
            acc.par_iter_mut()
                .zip(hat.par_iter())
                .enumerate()
                .with_min_len(1024)
                .for_each(|(k, (a, h))| {
                    let kap = self.kappa[self.bins(k)[axis]];
                    *a += Complex64::new(0.0, kap) * h;
                });
        }
        if dealias {
            self.truncate(&mut acc);
        }
        self.inverse(acc)
    }

    fn truncate(&self, coeffs: &mut [Complex64]) {
        coeffs
            .par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(k, c)| {
                if !self.kept(k) {
                    *c = Complex64::new(0.0, 0.0);
                }
            });
    }

    pub fn derivative(&self, f: &ScalarField, axis: usize) -> ScalarField {
        assert!(axis < self.grid.dim());
        let mut hat = self.forward(f.values());
        hat.par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(k, c)| *c *= Complex64::new(0.0, self.kappa[self.bins(k)[axis]]));
        ScalarField::new(self.grid, self.inverse(hat)).expect("grid length")
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        let hat = self.forward(f.values());
        let comps = (0..self.grid.dim())
            .map(|axis| {
                let d: Vec<Complex64> = hat
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * Complex64::new(0.0, self.kappa[self.bins(k)[axis]]))
                    .collect();
                self.inverse(d)
            })
            .collect();
        VectorField::from_raw(self.grid, comps).expect("grid length")
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let comps: Vec<&[f64]> = (0..v.dim()).map(|c| v.component(c)).collect();
        ScalarField::new(self.grid, self.divergence_raw(&comps, false)).expect("grid length")
    }

    /// Row divergence `(div F)_i = Σ_j ∂_j F_ij`.
    pub fn tensor_divergence(&self, f: &SymTensorField) -> VectorField {
        self.tensor_divergence_raw(f.packed(), false)
    }

    pub(crate) fn tensor_divergence_raw(&self, packed: &[Vec<f64>], dealias: bool) -> VectorField {
        let d = self.grid.dim();
        let hats: Vec<Vec<Complex64>> = packed.iter().map(|c| self.forward(c)).collect();
        let comps = (0..d)
            .map(|i| {
                let mut acc: Vec<Complex64> = (0..self.grid.len())
                    .into_par_iter()
                    .with_min_len(1024)
                    .map(|k| {
                        let b = self.bins(k);
                        let mut s = Complex64::new(0.0, 0.0);
                        for j in 0..d {
                            s += Complex64::new(0.0, self.kappa[b[j]]) * hats[sym_index(d, i, j)][k];
                        }
                        s
                    })
                    .collect();
                if dealias {
                    self.truncate(&mut acc);
                }
                self.inverse(acc)
            })
            .collect();
        VectorField::from_raw(self.grid, comps).expect("grid length")
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let mut hat = self.forward(f.values());
        hat.par_iter_mut().enumerate().with_min_len(1024).for_each(|(k, c)| {
            let b = self.bins(k);
            let k2: f64 = (0..self.grid.dim()).map(|a| self.kappa[b[a]].powi(2)).sum();
            *c *= -k2;
        });
        ScalarField::new(self.grid, self.inverse(hat)).expect("grid length")
    }

    /// L² projection onto the 2/3-rule band.
    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let mut hat = self.forward(f.values());
        self.truncate(&mut hat);
        ScalarField::new(self.grid, self.inverse(hat)).expect("grid length")
    }

    pub fn dealias_vector(&self, v: &VectorField) -> VectorField {
        let comps = (0..v.dim())
            .map(|c| self.dealias(&v.component_field(c)))
            .collect();
        VectorField::from_components(comps).expect("grid length")
    }

    /// `Σ_m |f̂_m|² w(m)` scaled to an integral over the torus (Parseval).
    fn weighted_energy<W>(&self, values: &[f64], weight: W) -> f64
    where
        W: Fn(usize) -> f64 + Sync,
    {
        let hat = self.forward(values);
        let n = self.grid.len() as f64;
        let s = pairwise_sum_by(hat.len(), &|k| hat[k].norm_sqr() * weight(k));
        s * self.grid.volume() / (n * n)
    }

    fn kappa_sq(&self, k: usize) -> f64 {
        let b = self.bins(k);
        (0..self.grid.dim()).map(|a| self.kappa_full[b[a]].powi(2)).sum()
    }

    /// `‖f‖²_{L²}` from Fourier coefficients.
    pub fn l2_squared_spectral(&self, f: &ScalarField) -> f64 {
        self.weighted_energy(f.values(), |_| 1.0)
    }

    /// `‖f‖_{W^{k,2}} = (Σ_{j≤k} ‖D^j f‖²)^{1/2}`, evaluated as a weighted
    /// sum of Fourier coefficients.
    pub fn sobolev_norm(&self, f: &ScalarField, order: u32) -> f64 {
        self.sobolev_sq(f.values(), order).sqrt()
    }

    fn sobolev_sq(&self, values: &[f64], order: u32) -> f64 {
        self.weighted_energy(values, |k| {
            let k2 = self.kappa_sq(k);
            let mut w = 0.0;
            let mut pow = 1.0;
            for _ in 0..=order {
                w += pow;
                pow *= k2;
            }
            w
        })
    }

    pub fn sobolev_norm_vector(&self, v: &VectorField, order: u32) -> f64 {
        (0..v.dim())
            .map(|c| self.sobolev_sq(v.component(c), order))
            .sum::<f64>()
            .sqrt()
    }

    /// One forward transform feeding both the blow-up monitors: the squared
    /// `W^{k,2}` norm, the energy in the outer third of the retained band,
    /// and the total spectral energy including the mean.
    pub fn monitor(&self, values: &[f64], order: u32) -> SpectralMonitor {
        let kmax = (self.grid.n() - 1) / 3;
        let tail_start = 2 * kmax / 3;
        let hat = self.forward(values);
        let d = self.grid.dim();
        let n = self.grid.len() as f64;
        let scale = self.grid.volume() / (n * n);
        let sobolev_sq = scale
            * pairwise_sum_by(hat.len(), &|k| {
                let k2 = self.kappa_sq(k);
                let mut w = 0.0;
                let mut pow = 1.0;
                for _ in 0..=order {
                    w += pow;
                    pow *= k2;
                }
                hat[k].norm_sqr() * w
            });
        let tail = scale
            * pairwise_sum_by(hat.len(), &|k| {
                let b = self.bins(k);
                let band = (0..d)
                    .map(|a| self.grid.wavenumber(b[a]).unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0);
                if band > tail_start && self.kept(k) {
                    hat[k].norm_sqr()
                } else {
                    0.0
                }
            });
        let total = scale * pairwise_sum_by(hat.len(), &|k| hat[k].norm_sqr());
        SpectralMonitor {
            sobolev_sq,
            tail,
            total,
        }
    }

    /// Energy of the non-mean part of `values` and the share of it sitting in
    /// the outer third of the retained (dealiased) band.
    pub fn tail_energy(&self, values: &[f64]) -> (f64, f64) {
        let kmax = (self.grid.n() - 1) / 3;
        let tail_start = 2 * kmax / 3;
        let hat = self.forward(values);
        let d = self.grid.dim();
        let band = |k: usize| -> usize {
            let b = self.bins(k);
            (0..d)
                .map(|a| self.grid.wavenumber(b[a]).unsigned_abs() as usize)
                .max()
                .unwrap_or(0)
        };
        let total = pairwise_sum_by(hat.len(), &|k| if k == 0 { 0.0 } else { hat[k].norm_sqr() });
        let tail = pairwise_sum_by(hat.len(), &|k| {
            let b = band(k);
            if b > tail_start && self.kept(k) {
                hat[k].norm_sqr()
            } else {
                0.0
            }
        });
        (tail, total)
    }
}
