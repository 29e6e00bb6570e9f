//! Discrete flat torus in one to three dimensions: uniform collocation
//! grid, complex FFT along every axis, wavenumber tables and the norms
//! used throughout the crate (L2, H1 and the dual (H1)* norm).
//!
//! Conventions. Fields are stored row-major with axis 0 slowest. The
//! forward transform is normalized by `1/n^dim`, so coefficients are
//! Fourier-series coefficients: `u_j = sum_k uhat_k exp(i k . x_j)` with
//! angular wavenumbers `k = 2 pi m / L`. With this choice Parseval reads
//! `h^d sum_j |u_j|^2 = L^d sum_k |uhat_k|^2`.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Immutable description of the periodic grid plus cached FFT plans.
/// Cheap to share between threads; all methods take `&self`.
pub struct TorusGrid {
    dim: usize,
    n: usize,
    len: f64,
    h: f64,
    cells: usize,
    /// Per-axis angular wavenumbers `2 pi m / L`, signed, Nyquist kept
    /// positive. Used for even-order operators (Laplacian and inverse).
    k_axis: Vec<f64>,
    /// Per-axis wavenumbers with the Nyquist mode zeroed. Used for
    /// first derivatives, where the Nyquist derivative sign is ambiguous.
    k_axis_grad: Vec<f64>,
    /// Per-cell `|k|^2` with the full table (Laplacian symbol).
    lap: Vec<f64>,
    /// Per-cell `|k|^2` with Nyquist-zeroed wavenumbers (gradient symbol).
    grad_sq: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("len", &self.len)
            .finish()
    }
}

impl TorusGrid {
    /// Build a `dim`-dimensional torus with `n` cells per axis and period
    /// `len`. `n` must be even and at least 8: odd `n` leaves the real
    /// transform without a self-conjugate Nyquist bin, and tiny grids
    /// alias every quantity of interest.
    pub fn new(dim: usize, n: usize, len: f64) -> Result<Arc<TorusGrid>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_per_axis must be even (got {n})")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n_per_axis must be >= 8 (got {n})")));
        }
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidGrid(format!("side_length must be positive (got {len})")));
        }
        let cells = n.pow(dim as u32);
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut k_axis = vec![0.0; n];
        let mut k_axis_grad = vec![0.0; n];
        for m in 0..n {
            let signed = if m <= n / 2 { m as i64 } else { m as i64 - n as i64 };
            let k = two_pi * signed as f64 / len;
            k_axis[m] = k;
            k_axis_grad[m] = if m == n / 2 { 0.0 } else { k };
        }
        let mut lap = vec![0.0; cells];
        let mut grad_sq = vec![0.0; cells];
        for idx in 0..cells {
            let mut rem = idx;
            let mut l = 0.0;
            let mut g = 0.0;
            for _ in 0..dim {
                let m = rem % n;
                rem /= n;
                l += k_axis[m] * k_axis[m];
                g += k_axis_grad[m] * k_axis_grad[m];
            }
            lap[idx] = l;
            grad_sq[idx] = g;
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(TorusGrid {
            dim,
            n,
            len,
            h: len / n as f64,
            cells,
            k_axis,
            k_axis_grad,
            lap,
            grad_sq,
            fft_fwd: planner.plan_fft_forward(n),
            fft_inv: planner.plan_fft_inverse(n),
        }))
    }

    /// Unit torus (`len = 1`), the default domain.
    pub fn unit(dim: usize, n: usize) -> Result<Arc<TorusGrid>> {
        TorusGrid::new(dim, n, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn side_length(&self) -> f64 {
        self.len
    }

    /// Grid spacing `L / n`.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Domain volume `L^dim`.
    pub fn volume(&self) -> f64 {
        self.len.powi(self.dim as i32)
    }

    /// Cell volume `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Per-axis angular wavenumber table (signed, Nyquist positive).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k_axis
    }

    /// Per-cell `|k|^2`, the symbol of `-Laplacian`.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.lap
    }

    /// Per-cell `|k|^2` built from the Nyquist-zeroed gradient table.
    pub fn gradient_symbol_sq(&self) -> &[f64] {
        &self.grad_sq
    }

    pub fn same_shape(&self, other: &TorusGrid) -> bool {
        self.dim == other.dim && self.n == other.n && self.len == other.len
    }

    /// Axis indices of a flat cell index (axis 0 slowest).
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    /// Coordinates of grid point `idx` in `[0, L)^dim`.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let ai = self.axis_indices(idx);
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = ai[a] as f64 * self.h;
        }
        out
    }

    /// Minimum-image offset coordinates of cell `idx`, each component in
    /// `[-L/2, L/2]`.
    pub fn min_image(&self, idx: usize) -> [f64; 3] {
        let ai = self.axis_indices(idx);
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            let m = ai[a];
            let signed = if m <= self.n / 2 { m as i64 } else { m as i64 - self.n as i64 };
            out[a] = signed as f64 * self.h;
        }
        out
    }

    /// In-place unnormalized complex DFT along every axis.
    pub fn fft_inplace(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.cells, "buffer length must equal cell count");
        let fft = if inverse { &self.fft_inv } else { &self.fft_fwd };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // Contiguous (fastest) axis: the whole buffer is a sequence of lines.
        fft.process_with_scratch(buf, &mut scratch);
        // Remaining axes: gather strided lines into a scratch line.
        let mut line = vec![Complex64::default(); self.n];
        for axis in (0..self.dim.saturating_sub(1)).rev() {
            let stride = self.n.pow((self.dim - 1 - axis) as u32);
            let block = stride * self.n;
            for outer in 0..self.cells / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for j in 0..self.n {
                        line[j] = buf[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for j in 0..self.n {
                        buf[base + j * stride] = line[j];
                    }
                }
            }
        }
    }

    /// Forward transform of a real field to normalized coefficients.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_inplace(&mut buf, false);
        let scale = 1.0 / self.cells as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    /// Inverse transform of normalized coefficients back to a real field.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.fft_inplace(&mut buf, true);
        buf.iter().map(|c| c.re).collect()
    }

    /// `L^d sum_k |uhat_k|^2` (equals the squared L2 norm by Parseval).
    pub(crate) fn l2_norm_sq_spectrum(&self, coeffs: &[Complex64]) -> f64 {
        let v = self.volume();
        coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * v
    }

    pub(crate) fn grad_norm_sq_spectrum(&self, coeffs: &[Complex64]) -> f64 {
        let v = self.volume();
        coeffs
            .iter()
            .zip(self.grad_sq.iter())
            .map(|(c, &g)| g * c.norm_sqr())
            .sum::<f64>()
            * v
    }

    pub(crate) fn dual_norm_sq_spectrum(&self, coeffs: &[Complex64]) -> f64 {
        let v = self.volume();
        coeffs
            .iter()
            .zip(self.grad_sq.iter())
            .map(|(c, &g)| c.norm_sqr() / (1.0 + g))
            .sum::<f64>()
            * v
    }
}

/// Real-valued grid function with a lazily computed spectral cache.
/// The cache is invalidated by any access to `values_mut`.
#[derive(Debug)]
pub struct Field {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        let f = Field {
            grid: self.grid.clone(),
            values: self.values.clone(),
            spectral: OnceLock::new(),
        };
        if let Some(s) = self.spectral.get() {
            let _ = f.spectral.set(s.clone());
        }
        f
    }
}

impl Field {
    pub fn from_values(grid: Arc<TorusGrid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("expected {} entries, got {}", grid.cells(), values.len()),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "field values must be finite".into(),
            });
        }
        Ok(Field {
            grid,
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn constant(grid: Arc<TorusGrid>, c: f64) -> Field {
        let values = vec![c; grid.cells()];
        Field {
            grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Sample a function of the grid coordinates.
    pub fn from_fn(grid: Arc<TorusGrid>, f: impl Fn(&[f64]) -> f64) -> Field {
        let dim = grid.dim();
        let values: Vec<f64> = (0..grid.cells())
            .map(|idx| {
                let x = grid.coords(idx);
                f(&x[..dim])
            })
            .collect();
        Field {
            grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Synthesize a field from normalized spectral coefficients. The
    /// coefficients are kept as the (already valid) spectral cache.
    pub fn from_spectrum(grid: Arc<TorusGrid>, coeffs: Vec<Complex64>) -> Field {
        let values = grid.inverse(&coeffs);
        let f = Field {
            grid,
            values,
            spectral: OnceLock::new(),
        };
        let _ = f.spectral.set(coeffs);
        f
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access; drops the spectral cache.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.spectral = OnceLock::new();
        &mut self.values
    }

    /// Normalized spectral coefficients, computed on first use.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| self.grid.forward(&self.values))
    }

    /// Domain average `(1/|O|) int f`, computed as the plain cell average.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.cells() as f64
    }

    /// Discrete L2 norm `(h^d sum f_i^2)^(1/2)`.
    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// L2 norm of the spectral gradient.
    pub fn grad_norm_l2(&self) -> f64 {
        self.grid.grad_norm_sq_spectrum(self.spectrum()).sqrt()
    }

    /// `(||f||_L2^2 + ||grad f||_L2^2)^(1/2)`.
    pub fn norm_h1(&self) -> f64 {
        let l2 = self.norm_l2();
        let g2 = self.grid.grad_norm_sq_spectrum(self.spectrum());
        (l2 * l2 + g2).sqrt()
    }

    /// Dual Sobolev norm: spectral sum with weights `1/(1+|k|^2)`; the
    /// `k = 0` term enters with weight one.
    pub fn norm_h1_dual(&self) -> f64 {
        self.grid.dual_norm_sq_spectrum(self.spectrum()).sqrt()
    }

    /// Spectral partial derivative along `axis` (Nyquist mode zeroed).
    pub fn gradient(&self, axis: usize) -> Field {
        assert!(axis < self.grid.dim());
        let n = self.grid.n_per_axis();
        let spec = self.spectrum();
        let mut out = vec![Complex64::default(); spec.len()];
        let stride = n.pow((self.grid.dim() - 1 - axis) as u32);
        for (idx, c) in spec.iter().enumerate() {
            let m = (idx / stride) % n;
            let k = self.grid.k_axis_grad[m];
            out[idx] = Complex64::new(0.0, k) * c;
        }
        Field::from_spectrum(self.grid.clone(), out)
    }

    /// Spectral Laplacian (full wavenumber table, Nyquist included).
    pub fn laplacian(&self) -> Field {
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .zip(self.grid.laplacian_symbol().iter())
            .map(|(c, &l)| -l * c)
            .collect();
        Field::from_spectrum(self.grid.clone(), out)
    }

    /// Solve `-Laplacian g = f` spectrally for mean-zero `f`; the result
    /// has zero mean. Rejects input whose mean exceeds
    /// `1e-10 * ||f||_L2` since the operator is undefined on constants.
    pub fn inverse_laplacian(&self) -> Result<Field> {
        let mean = self.mean();
        let bound = 1e-10 * self.norm_l2();
        if mean.abs() > bound {
            return Err(Error::NonzeroMean {
                mean: mean.abs(),
                bound,
            });
        }
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .zip(self.grid.laplacian_symbol().iter())
            .map(|(c, &l)| {
                if l == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / l
                }
            })
            .collect();
        Ok(Field::from_spectrum(self.grid.clone(), out))
    }
}
