//! Double-well potentials with certified curvature constants.
//!
//! The default is the shifted quartic `F(s) = a s^2 (1-s)^2`, whose wells
//! sit at the pure phases 0 and 1 with `F(0) = F(1) = 0`. The quartic
//! `F_P(s) = A1 s^4 - A2 s^2` (wells at +-sqrt(A2/2A1)) and the
//! logarithmic free energy are available for comparison; the logarithmic
//! potential is only evaluable strictly inside (0, 1) and is guarded by a
//! configurable barrier.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `F(s) = a s^2 (1-s)^2`.
    ShiftedQuartic { a: f64 },
    /// `F(s) = a1 s^4 - a2 s^2`.
    PaperPolynomial { a1: f64, a2: f64 },
    /// `F(s) = theta0 s(1-s) + theta [s ln s + (1-s) ln(1-s)]` on (0, 1).
    Logarithmic { theta0: f64, theta: f64, barrier: f64 },
}

impl Potential {
    pub fn shifted_quartic(a: f64) -> Result<Potential> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "potential.a",
                reason: format!("amplitude must be positive (got {a})"),
            });
        }
        Ok(Potential::ShiftedQuartic { a })
    }

    pub fn paper_polynomial(a1: f64, a2: f64) -> Result<Potential> {
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "potential.a1",
                reason: format!("coefficients must be positive (got a1 = {a1}, a2 = {a2})"),
            });
        }
        Ok(Potential::PaperPolynomial { a1, a2 })
    }

    pub fn logarithmic(theta0: f64, theta: f64, barrier: f64) -> Result<Potential> {
        if !(theta > 0.0 && theta < theta0 && theta0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "potential.theta",
                reason: format!("need 0 < theta < theta0 (got theta = {theta}, theta0 = {theta0})"),
            });
        }
        if !(barrier > 0.0 && barrier < 0.5) {
            return Err(Error::InvalidParameter {
                name: "potential.barrier",
                reason: format!("barrier must lie in (0, 0.5) (got {barrier})"),
            });
        }
        Ok(Potential::Logarithmic { theta0, theta, barrier })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Potential::ShiftedQuartic { .. } => "shifted_quartic",
            Potential::PaperPolynomial { .. } => "paper_polynomial",
            Potential::Logarithmic { .. } => "logarithmic",
        }
    }

    fn log_domain(&self, r: f64) -> Result<()> {
        if let Potential::Logarithmic { barrier, .. } = self {
            if !(r > *barrier && r < 1.0 - *barrier) {
                return Err(Error::PotentialDomain { value: r });
            }
        }
        Ok(())
    }

    pub fn f(&self, r: f64) -> Result<f64> {
        self.log_domain(r)?;
        Ok(match *self {
            Potential::ShiftedQuartic { a } => {
                let s = r * (1.0 - r);
                a * s * s
            }
            Potential::PaperPolynomial { a1, a2 } => a1 * r.powi(4) - a2 * r * r,
            Potential::Logarithmic { theta0, theta, .. } => {
                theta0 * r * (1.0 - r) + theta * (r * r.ln() + (1.0 - r) * (1.0 - r).ln())
            }
        })
    }

    pub fn df(&self, r: f64) -> Result<f64> {
        self.log_domain(r)?;
        Ok(match *self {
            Potential::ShiftedQuartic { a } => 2.0 * a * r * (1.0 - r) * (1.0 - 2.0 * r),
            Potential::PaperPolynomial { a1, a2 } => 4.0 * a1 * r.powi(3) - 2.0 * a2 * r,
            Potential::Logarithmic { theta0, theta, .. } => {
                theta0 * (1.0 - 2.0 * r) + theta * (r.ln() - (1.0 - r).ln())
            }
        })
    }

    pub fn ddf(&self, r: f64) -> Result<f64> {
        self.log_domain(r)?;
        Ok(match *self {
            Potential::ShiftedQuartic { a } => 2.0 * a * (6.0 * r * r - 6.0 * r + 1.0),
            Potential::PaperPolynomial { a1, a2 } => 12.0 * a1 * r * r - 2.0 * a2,
            Potential::Logarithmic { theta0, theta, .. } => {
                -2.0 * theta0 + theta * (1.0 / r + 1.0 / (1.0 - r))
            }
        })
    }

    /// Evaluate `F'` over a slice. The polynomial kinds are infallible;
    /// the logarithmic kind fails on the first out-of-domain value.
    pub fn df_slice(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        assert_eq!(u.len(), out.len());
        match *self {
            Potential::ShiftedQuartic { a } => {
                for (o, &r) in out.iter_mut().zip(u.iter()) {
                    *o = 2.0 * a * r * (1.0 - r) * (1.0 - 2.0 * r);
                }
            }
            Potential::PaperPolynomial { a1, a2 } => {
                for (o, &r) in out.iter_mut().zip(u.iter()) {
                    *o = 4.0 * a1 * r * r * r - 2.0 * a2 * r;
                }
            }
            Potential::Logarithmic { .. } => {
                for (o, &r) in out.iter_mut().zip(u.iter()) {
                    *o = self.df(r)?;
                }
            }
        }
        Ok(())
    }

    /// Sum of `F(u_i)` over a slice (the integrand of the potential part).
    pub fn f_sum(&self, u: &[f64]) -> Result<f64> {
        match *self {
            Potential::ShiftedQuartic { a } => Ok(u
                .iter()
                .map(|&r| {
                    let s = r * (1.0 - r);
                    a * s * s
                })
                .sum()),
            Potential::PaperPolynomial { a1, a2 } => Ok(u
                .iter()
                .map(|&r| a1 * r.powi(4) - a2 * r * r)
                .sum()),
            Potential::Logarithmic { .. } => {
                let mut acc = 0.0;
                for &r in u {
                    acc += self.f(r)?;
                }
                Ok(acc)
            }
        }
    }

    /// Curvature lower bound: the largest `B1` with `F'' >= -B1`.
    pub fn b1(&self) -> f64 {
        match *self {
            // F'' = 2a(6r^2 - 6r + 1), minimized at r = 1/2.
            Potential::ShiftedQuartic { a } => a,
            // F'' = 12 a1 r^2 - 2 a2, minimized at r = 0.
            Potential::PaperPolynomial { a2, .. } => 2.0 * a2,
            // F'' = -2 theta0 + theta (1/r + 1/(1-r)) >= -2 theta0 + 4 theta.
            Potential::Logarithmic { theta0, theta, .. } => (2.0 * theta0 - 4.0 * theta).max(0.0),
        }
    }

    /// Analytic `(B1, B2)` with `F'' >= -B1` and `|F''| <= B2 (r^2 + 1)`.
    /// Only the polynomial kinds admit such constants; the logarithmic
    /// curvature is unbounded near the endpoints.
    pub fn certify_h3(&self) -> Result<(f64, f64)> {
        match *self {
            // |F''| = 2a|6r^2 - 6r + 1| <= 2a(6r^2 + 6|r| + 1)
            //      <= 2a(9r^2 + 4) <= 18a(r^2 + 1), using 6|r| <= 3r^2 + 3.
            Potential::ShiftedQuartic { a } => Ok((a, 18.0 * a)),
            // |12 a1 r^2 - 2 a2| <= max(12 a1, 2 a2)(r^2 + 1).
            Potential::PaperPolynomial { a1, a2 } => {
                Ok((2.0 * a2, (12.0 * a1).max(2.0 * a2)))
            }
            Potential::Logarithmic { .. } => Err(Error::UnsupportedPotential("logarithmic")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_well_values() {
        let p = Potential::shifted_quartic(1.0).unwrap();
        assert_eq!(p.f(0.0).unwrap(), 0.0);
        assert_eq!(p.f(1.0).unwrap(), 0.0);
        assert!((p.f(0.5).unwrap() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn quartic_curvature_minimum() {
        let p = Potential::shifted_quartic(1.0).unwrap();
        // minimize F'' over a dense sample of [-3, 4]
        let mut min = f64::INFINITY;
        for i in 0..=70000 {
            let r = -3.0 + i as f64 * 1e-4;
            min = min.min(p.ddf(r).unwrap());
        }
        assert!((min + 1.0).abs() < 1e-6, "min F'' = {min}");
        assert_eq!(p.b1(), 1.0);
        assert!((p.ddf(0.5).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn paper_polynomial_curvature() {
        let p = Potential::paper_polynomial(1.0, 1.0).unwrap();
        assert_eq!(p.b1(), 2.0);
        assert_eq!(p.ddf(0.0).unwrap(), -2.0);
        assert_eq!(p.certify_h3().unwrap(), (2.0, 12.0));
    }

    #[test]
    fn certified_bounds_hold_on_samples() {
        for p in [
            Potential::shifted_quartic(1.0).unwrap(),
            Potential::shifted_quartic(2.5).unwrap(),
            Potential::paper_polynomial(1.0, 1.0).unwrap(),
            Potential::paper_polynomial(0.3, 2.0).unwrap(),
        ] {
            let (b1, b2) = p.certify_h3().unwrap();
            let mut max_ratio: f64 = 0.0;
            for i in 0..=200000 {
                let r = -10.0 + i as f64 * 1e-4;
                let dd = p.ddf(r).unwrap();
                assert!(dd >= -b1 - 1e-12, "F''({r}) = {dd} < -B1 = {}", -b1);
                max_ratio = max_ratio.max(dd.abs() / (r * r + 1.0));
            }
            assert!(
                max_ratio <= b2 + 1e-12,
                "sampled |F''|/(r^2+1) max {max_ratio} exceeds B2 = {b2}"
            );
        }
    }

    #[test]
    fn b1_scales_linearly_in_amplitude() {
        let p1 = Potential::shifted_quartic(1.3).unwrap();
        let p2 = Potential::shifted_quartic(2.6).unwrap();
        assert_eq!(p2.b1(), 2.0 * p1.b1());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let quartic = Potential::shifted_quartic(1.0).unwrap();
        let paper = Potential::paper_polynomial(1.0, 1.0).unwrap();
        let delta = 1e-5;
        for p in [&quartic, &paper] {
            for &r in &[-1.5, -0.7, 0.2, 0.31, 0.77, 1.4, 2.5] {
                let fd = (p.f(r + delta).unwrap() - p.f(r - delta).unwrap()) / (2.0 * delta);
                let exact = p.df(r).unwrap();
                assert!(
                    (fd - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                    "kind {} at {r}: fd {fd} vs {exact}",
                    p.kind_name()
                );
            }
        }
    }

    #[test]
    fn quartic_is_nonnegative_with_wells_at_phases() {
        let p = Potential::shifted_quartic(1.0).unwrap();
        for i in 0..=7000 {
            let r = -3.0 + i as f64 * 1e-3;
            let v = p.f(r).unwrap();
            assert!(v >= 0.0);
            if (r - 0.0).abs() > 1e-9 && (r - 1.0).abs() > 1e-9 {
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn logarithmic_domain_guard() {
        let p = Potential::logarithmic(1.0, 0.25, 1e-9).unwrap();
        assert!(p.f(0.5).unwrap().is_finite());
        assert!(p.f(-0.1).is_err());
        assert!(p.f(1.0).is_err());
        assert!(p.f(0.0).is_err());
        assert!(p.certify_h3().is_err());
        // interior formula spot check at s = 1/2
        let expect = 1.0 * 0.25 + 0.25 * (2.0 * 0.5 * 0.5f64.ln());
        assert!((p.f(0.5).unwrap() - expect).abs() < 1e-15);
    }
}
