//! Energy functionals and seminorms: the gradient (local) energy, the
//! kernel-weighted (nonlocal) energy, the nonlocal gradient seminorm and
//! the empirical constant of the Poincare-type inequality that bounds
//! `||grad u||^2` by the kernel-weighted difference quotient of the
//! gradient.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::kernel::ScaledKernel;
use crate::potential::Potential;

/// Interaction part, bulk potential part and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub interaction: f64,
    pub potential_part: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(interaction: f64, potential_part: f64) -> EnergyBreakdown {
        EnergyBreakdown {
            interaction,
            potential_part,
            total: interaction + potential_part,
        }
    }
}

/// `E(u) = 1/2 ||grad u||^2 + int F(u)`.
pub fn energy_local(u: &Field, p: &Potential) -> Result<EnergyBreakdown> {
    let grad_sq = u.grid().grad_norm_sq_spectrum(u.spectrum());
    let pot = p.f_sum(u.values())? * u.grid().cell_volume();
    Ok(EnergyBreakdown::new(0.5 * grad_sq, pot))
}

/// `E_eps(u) = 1/2 <B_eps u, u> + int F(u)`; the first term equals the
/// quarter double integral of `K_eps(x,y) (u(x)-u(y))^2` by the bilinear
/// form identity.
pub fn energy_nonlocal(u: &Field, k: &ScaledKernel, p: &Potential) -> Result<EnergyBreakdown> {
    if !k.grid().same_shape(u.grid()) {
        return Err(Error::GridMismatch);
    }
    let pot = p.f_sum(u.values())? * u.grid().cell_volume();
    Ok(EnergyBreakdown::new(0.5 * nonlocal_form(u, k), pot))
}

/// `<B_eps u, u> = L^d sum_k bhat(k) |uhat_k|^2`.
fn nonlocal_form(u: &Field, k: &ScaledKernel) -> f64 {
    let vol = u.grid().volume();
    u.spectrum()
        .iter()
        .zip(k.b_symbol().iter())
        .map(|(c, &b)| b * c.norm_sqr())
        .sum::<f64>()
        * vol
}

/// Kernel-weighted difference quotient of the gradient: the full double
/// integral `int int K_eps(x,y) |grad u(x) - grad u(y)|^2`, i.e. the sum
/// over components of `2 <B_eps d_j u, d_j u>`, evaluated spectrally.
pub fn nonlocal_gradient_seminorm(u: &Field, k: &ScaledKernel) -> Result<f64> {
    if !k.grid().same_shape(u.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let vol = grid.volume();
    let val = u
        .spectrum()
        .iter()
        .zip(k.b_symbol().iter())
        .zip(grid.gradient_symbol_sq().iter())
        .map(|((c, &b), &g)| b * g * c.norm_sqr())
        .sum::<f64>()
        * vol
        * 2.0;
    Ok(val)
}

/// `||grad u||^2 / seminorm`: an empirical lower bound for the constant
/// of the Poincare-type inequality when maximized over samples.
pub fn poincare_ratio(u: &Field, k: &ScaledKernel) -> Result<f64> {
    let grad_sq = u.grid().grad_norm_sq_spectrum(u.spectrum());
    if grad_sq == 0.0 {
        return Err(Error::ConstantField);
    }
    let semi = nonlocal_gradient_seminorm(u, k)?;
    Ok(grad_sq / semi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::initial;
    use crate::mollifier::Mollifier;
    use std::f64::consts::PI;

    fn noise(cells: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0xabcd);
        (0..cells)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn local_energy_of_pure_phase_and_constant() {
        let g = TorusGrid::unit(1, 64).unwrap();
        let p = Potential::shifted_quartic(1.0).unwrap();
        let e0 = energy_local(&Field::constant(g.clone(), 0.0), &p).unwrap();
        assert_eq!((e0.interaction, e0.potential_part, e0.total), (0.0, 0.0, 0.0));

        let eh = energy_local(&Field::constant(g, 0.5), &p).unwrap();
        assert_eq!(eh.interaction, 0.0);
        assert!((eh.potential_part - 1.0 / 16.0).abs() < 1e-14);
        assert!((eh.total - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn local_energy_of_single_mode() {
        // u = 1/2 + 1/2 sin(2 pi x): grad u = pi cos(2 pi x), so
        // ||grad u||^2 = pi^2/2 and the interaction part is pi^2/4.
        let g = TorusGrid::unit(1, 256).unwrap();
        let p = Potential::shifted_quartic(1.0).unwrap();
        let u = Field::from_fn(g, |x| 0.5 + 0.5 * (2.0 * PI * x[0]).sin());
        let e = energy_local(&u, &p).unwrap();
        assert!((e.interaction - PI * PI / 4.0).abs() < 1e-12);

        // potential part against a high-resolution quadrature oracle
        let nq = 4096;
        let mut acc = 0.0;
        for i in 0..nq {
            let x = i as f64 / nq as f64;
            let s = 0.5 + 0.5 * (2.0 * PI * x).sin();
            acc += p.f(s).unwrap() / nq as f64;
        }
        assert!((e.potential_part - acc).abs() < 1e-12, "{} vs {}", e.potential_part, acc);
    }

    #[test]
    fn nonlocal_energy_matches_quarter_double_sum() {
        let g = TorusGrid::unit(1, 16).unwrap();
        let m = Mollifier::standard(1.0, 1).unwrap();
        let k = ScaledKernel::build(&m, 0.2, &g).unwrap();
        let p = Potential::shifted_quartic(1.0).unwrap();

        let c = Field::constant(g.clone(), 0.3);
        assert!(energy_nonlocal(&c, &k, &p).unwrap().interaction.abs() < 1e-15);

        let u = Field::from_values(g.clone(), noise(16, 9)).unwrap();
        let e = energy_nonlocal(&u, &k, &p).unwrap();
        let hd = g.cell_volume();
        let mut quarter = 0.0;
        for i in 0..16usize {
            for j in 0..16usize {
                let off = (i as i64 - j as i64).rem_euclid(16) as usize;
                let d = u.values()[i] - u.values()[j];
                quarter += k.samples()[off] * d * d;
            }
        }
        quarter *= 0.25 * hd * hd;
        assert!(
            (e.interaction - quarter).abs() < 1e-10 * quarter.max(1e-30),
            "spectral {} vs double sum {}",
            e.interaction,
            quarter
        );
    }

    #[test]
    fn bilinear_identity_against_double_sum() {
        // 1/2 double-sum of K (u(x)-u(y))^2 equals <B u, u>.
        let g = TorusGrid::unit(2, 8).unwrap();
        let m = Mollifier::standard(1.0, 2).unwrap();
        let k = ScaledKernel::build(&m, 0.2, &g).unwrap();
        let u = Field::from_values(g.clone(), noise(64, 2)).unwrap();
        let form = nonlocal_form(&u, &k);

        let n = 8usize;
        let hd = g.cell_volume();
        let mut half = 0.0;
        for i in 0..64usize {
            let ai = g.axis_indices(i);
            for j in 0..64usize {
                let aj = g.axis_indices(j);
                let o0 = (ai[0] as i64 - aj[0] as i64).rem_euclid(n as i64) as usize;
                let o1 = (ai[1] as i64 - aj[1] as i64).rem_euclid(n as i64) as usize;
                let d = u.values()[i] - u.values()[j];
                half += k.samples()[o0 * n + o1] * d * d;
            }
        }
        half *= 0.5 * hd * hd;
        assert!((form - half).abs() < 1e-10 * half.max(1e-30));
    }

    #[test]
    fn nonlocal_energy_approaches_local_energy() {
        let g = TorusGrid::unit(1, 1024).unwrap();
        let m = Mollifier::standard(1.0, 1).unwrap();
        let p = Potential::shifted_quartic(1.0).unwrap();
        let u = Field::from_fn(g.clone(), |x| 0.5 + 0.1 * (2.0 * PI * x[0]).sin());
        let local = energy_local(&u, &p).unwrap().interaction;
        let mut gaps = Vec::new();
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let k = ScaledKernel::build(&m, eps, &g).unwrap();
            let e = energy_nonlocal(&u, &k, &p).unwrap().interaction;
            gaps.push((e - local).abs());
        }
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "gaps must decrease: {gaps:?}");
        }
        let slope = {
            let xs: Vec<f64> = [0.2f64, 0.1, 0.05, 0.025].iter().map(|e| e.ln()).collect();
            let ys: Vec<f64> = gaps.iter().map(|e| e.ln()).collect();
            let xm = xs.iter().sum::<f64>() / 4.0;
            let ym = ys.iter().sum::<f64>() / 4.0;
            xs.iter()
                .zip(ys.iter())
                .map(|(x, y)| (x - xm) * (y - ym))
                .sum::<f64>()
                / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>()
        };
        assert!(slope >= 1.5, "observed order {slope}, gaps {gaps:?}");
    }

    #[test]
    fn seminorm_closed_form_and_oracle() {
        let g = TorusGrid::unit(1, 16).unwrap();
        let m = Mollifier::standard(1.0, 1).unwrap();
        let k = ScaledKernel::build(&m, 0.2, &g).unwrap();

        assert_eq!(
            nonlocal_gradient_seminorm(&Field::constant(g.clone(), 2.0), &k).unwrap(),
            0.0
        );

        let u = Field::from_fn(g.clone(), |x| (2.0 * PI * x[0]).sin());
        let semi = nonlocal_gradient_seminorm(&u, &k).unwrap();
        // single mode: 2 bhat(2 pi) ||du||^2 with ||du||^2 = (2 pi)^2 / 2
        let closed = 2.0 * k.b_symbol()[1] * (2.0 * PI) * (2.0 * PI) * 0.5;
        assert!((semi - closed).abs() < 1e-10 * closed);

        // brute-force double sum over the spectral derivative
        let du = u.gradient(0);
        let hd = g.cell_volume();
        let mut brute = 0.0;
        for i in 0..16usize {
            for j in 0..16usize {
                let off = (i as i64 - j as i64).rem_euclid(16) as usize;
                let d = du.values()[i] - du.values()[j];
                brute += k.samples()[off] * d * d;
            }
        }
        brute *= hd * hd;
        assert!((semi - brute).abs() < 1e-10 * brute.max(1e-30));

        // random fields: nonnegative
        for seed in 0..5 {
            let f = Field::from_values(g.clone(), noise(16, 100 + seed)).unwrap();
            assert!(nonlocal_gradient_seminorm(&f, &k).unwrap() >= 0.0);
        }
    }

    #[test]
    fn poincare_ratio_properties() {
        let g = TorusGrid::unit(1, 64).unwrap();
        let m = Mollifier::standard(1.0, 1).unwrap();
        let k = ScaledKernel::build(&m, 0.1, &g).unwrap();

        assert!(poincare_ratio(&Field::constant(g.clone(), 1.0), &k).is_err());

        let u = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        assert!(poincare_ratio(&u, &k).unwrap() > 0.0);
    }

    #[test]
    fn poincare_constant_estimate_is_grid_stable() {
        // max ratio over sampled band-limited fields changes by < 10%
        // between n and 2n at fixed eps.
        let m = Mollifier::standard(1.0, 1).unwrap();
        let max_ratio = |n: usize| -> f64 {
            let g = TorusGrid::unit(1, n).unwrap();
            let k = ScaledKernel::build(&m, 0.1, &g).unwrap();
            let mut best: f64 = 0.0;
            for s in 0..100 {
                let f = initial::band_limited_noise(&g, 1000 + s, 8);
                best = best.max(poincare_ratio(&f, &k).unwrap());
            }
            best
        };
        let a = max_ratio(128);
        let b = max_ratio(256);
        assert!(a.is_finite() && b.is_finite());
        assert!(
            (a - b).abs() / a < 0.10,
            "estimate moved by more than 10%: {a} vs {b}"
        );
    }
}
