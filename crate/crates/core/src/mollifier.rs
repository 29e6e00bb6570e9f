//! Radial mollifier profile `rho(r) = c exp(-1/(r0^2 - r^2))` on `[0, r0)`,
//! with the renormalization constant `c` fixed by a prescribed total mass.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Nonnegative, decreasing, compactly supported radial profile. The
/// constant `c` is chosen so that the full-space integral of `rho(|z|)`
/// equals `sigma_target`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    r0: f64,
    c: f64,
    dim: usize,
    sigma: f64,
}

/// Surface measure factor of the unit sphere: `int_{R^d} g(|z|) dz =
/// s_d int_0^inf g(r) r^(d-1) dr`.
fn sphere_factor(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dim checked at construction"),
    }
}

fn bump(r0: f64, r: f64) -> f64 {
    if r.abs() < r0 {
        (-1.0 / (r0 * r0 - r * r)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    /// Choose `c` so that `int_{R^dim} rho(|z|) dz = sigma_target`,
    /// computing the radial integral by adaptive quadrature to 1e-10
    /// relative tolerance.
    pub fn normalized(r0: f64, dim: usize, sigma_target: f64) -> Result<Mollifier> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "kernel.r0",
                reason: format!("cutoff must be positive (got {r0})"),
            });
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter {
                name: "kernel.dim",
                reason: format!("dimension must be 1, 2 or 3 (got {dim})"),
            });
        }
        if !(sigma_target > 0.0 && sigma_target.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "kernel.sigma_target",
                reason: format!("target mass must be positive (got {sigma_target})"),
            });
        }
        let moment = adaptive_simpson(
            &|r| bump(r0, r) * r.powi(dim as i32 - 1),
            0.0,
            r0,
            1e-12,
        )?;
        let c = sigma_target / (sphere_factor(dim) * moment);
        Ok(Mollifier {
            r0,
            c,
            dim,
            sigma: sigma_target,
        })
    }

    /// Default normalization `sigma = 2 dim`, which makes the limiting
    /// local operator exactly `-Laplacian` (coefficient one).
    pub fn standard(r0: f64, dim: usize) -> Result<Mollifier> {
        Mollifier::normalized(r0, dim, 2.0 * dim as f64)
    }

    /// Profile value `rho(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        self.c * bump(self.r0, r)
    }

    pub fn cutoff(&self) -> f64 {
        self.r0
    }

    pub fn renorm_constant(&self) -> f64 {
        self.c
    }

    /// Total mass `sigma = int rho(|z|) dz`.
    pub fn mass(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of the limiting local operator: the kernel family built
    /// from this profile satisfies `B_eps(u) -> -c_eff Laplacian u`, with
    /// `c_eff = sigma / (2 dim)` by the radial second-moment identity
    /// `int rho(|z|) z_i z_j dz = delta_ij sigma / dim`.
    pub fn local_limit_coefficient(&self) -> f64 {
        self.sigma / (2.0 * self.dim as f64)
    }
}
