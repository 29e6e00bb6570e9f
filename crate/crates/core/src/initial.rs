//! Deterministic initial data. The random generator draws one amplitude
//! and phase per Fourier mode in a fixed mode order, so the generated
//! function is independent of the grid resolution: refining the grid
//! samples the same band-limited profile more finely.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// `mean + amplitude * prod_a sin(2 pi x_a / L)`.
    SingleMode,
    /// Two-interface slab profile along axis 0, ranging over (0, 1).
    TanhInterface,
    /// `mean + amplitude * band-limited noise(seed)`.
    SpinodalNoise,
}

impl InitialKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitialKind::SingleMode => "single_mode",
            InitialKind::TanhInterface => "tanh_interface",
            InitialKind::SpinodalNoise => "spinodal_noise",
        }
    }

    pub fn parse(s: &str) -> Option<InitialKind> {
        match s {
            "single_mode" => Some(InitialKind::SingleMode),
            "tanh_interface" => Some(InitialKind::TanhInterface),
            "spinodal_noise" => Some(InitialKind::SpinodalNoise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub kind: InitialKind,
    pub mean: f64,
    pub amplitude: f64,
    pub seed: u64,
    /// Largest per-axis mode index of the noise band.
    pub band_limit: usize,
    /// Interface width of the tanh profile, in units of the period.
    pub interface_width: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            kind: InitialKind::SpinodalNoise,
            mean: 0.5,
            amplitude: 0.01,
            seed: 42,
            band_limit: 8,
            interface_width: 0.05,
        }
    }
}

pub fn generate(grid: &Arc<TorusGrid>, spec: &InitialData) -> Result<Field> {
    let len = grid.side_length();
    match spec.kind {
        InitialKind::SingleMode => {
            let (mean, amp) = (spec.mean, spec.amplitude);
            Ok(Field::from_fn(grid.clone(), move |x| {
                let mut m = 1.0;
                for &xa in x {
                    m *= (2.0 * std::f64::consts::PI * xa / len).sin();
                }
                mean + amp * m
            }))
        }
        InitialKind::TanhInterface => {
            let w = spec.interface_width * len;
            if !(w > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "initial.width",
                    reason: format!("interface width must be positive (got {})", spec.interface_width),
                });
            }
            Ok(Field::from_fn(grid.clone(), move |x| {
                0.5 * (((x[0] - 0.25 * len) / w).tanh() - ((x[0] - 0.75 * len) / w).tanh())
            }))
        }
        InitialKind::SpinodalNoise => {
            let noise = band_limited_noise_checked(grid, spec.seed, spec.band_limit)?;
            let values: Vec<f64> = noise
                .values()
                .iter()
                .map(|&v| spec.mean + spec.amplitude * v)
                .collect();
            Field::from_values(grid.clone(), values)
        }
    }
}

/// Mean-zero band-limited noise of unit scale. Panics on an unresolvable
/// band; use `generate` for checked construction.
pub fn band_limited_noise(grid: &Arc<TorusGrid>, seed: u64, band_limit: usize) -> Field {
    band_limited_noise_checked(grid, seed, band_limit).expect("band limit not resolved by grid")
}

fn band_limited_noise_checked(
    grid: &Arc<TorusGrid>,
    seed: u64,
    band_limit: usize,
) -> Result<Field> {
    let n = grid.n_per_axis();
    if band_limit == 0 || band_limit >= n / 2 {
        return Err(Error::InvalidParameter {
            name: "initial.band_limit",
            reason: format!("band limit must lie in 1..{} (got {band_limit})", n / 2),
        });
    }
    let dim = grid.dim();
    let m = band_limit as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.cells()];

    // Count canonical modes first so every coefficient carries the same
    // normalization regardless of the draw order.
    let count = (((2 * m + 1).pow(dim as u32) - 1) / 2) as f64;
    let scale = 1.0 / count.sqrt();

    let axis_index = |v: i64| -> usize { v.rem_euclid(n as i64) as usize };
    let flat = |mv: &[i64; 3]| -> usize {
        let mut idx = 0;
        for a in 0..dim {
            idx = idx * n + axis_index(mv[a]);
        }
        idx
    };

    let range = -m..=m;
    for i0 in range.clone() {
        let r1 = if dim >= 2 { range.clone() } else { 0..=0 };
        for i1 in r1 {
            let r2 = if dim >= 3 { range.clone() } else { 0..=0 };
            for i2 in r2.clone() {
                let mv = [i0, i1, i2];
                let first = mv.iter().take(dim).find(|&&v| v != 0);
                match first {
                    None => continue,            // zero mode: noise is mean-free
                    Some(&v) if v < 0 => continue, // conjugate partner fills this
                    _ => {}
                }
                let amp: f64 = 2.0 * rng.gen::<f64>() - 1.0;
                let phase: f64 = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                let c = Complex64::from_polar(amp * scale, phase);
                spec[flat(&mv)] = c;
                let neg = [-mv[0], -mv[1], -mv[2]];
                spec[flat(&neg)] = c.conj();
            }
        }
    }
    Ok(Field::from_spectrum(grid.clone(), spec))
}
