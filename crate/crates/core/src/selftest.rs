//! Oracle-vs-fast-path equivalence suite. Every check recomputes a
//! spectrally evaluated quantity with an independent brute-force route
//! (direct summation) and compares at tight tolerance. Exposed as a CLI
//! subcommand so a build can certify itself on the target machine.

use std::sync::Arc;

use crate::energy;
use crate::grid::{Field, TorusGrid};
use crate::kernel::ScaledKernel;
use crate::mollifier::Mollifier;
use crate::potential::Potential;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn noise(cells: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..cells)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

fn offset_index(grid: &TorusGrid, i: usize, j: usize) -> usize {
    let n = grid.n_per_axis() as i64;
    let ai = grid.axis_indices(i);
    let aj = grid.axis_indices(j);
    let mut off = 0usize;
    for a in 0..grid.dim() {
        let d = (ai[a] as i64 - aj[a] as i64).rem_euclid(n) as usize;
        off = off * grid.n_per_axis() + d;
    }
    off
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-30)
}

fn check(name: &'static str, err: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: err <= tol,
        detail: format!("max relative deviation {err:.3e} (tolerance {tol:.1e})"),
    }
}

fn convolution_check(name: &'static str, dim: usize, n: usize, eps: f64, seed: u64) -> CheckResult {
    let grid = TorusGrid::unit(dim, n).unwrap();
    let m = Mollifier::standard(1.0, dim).unwrap();
    let k = ScaledKernel::build(&m, eps, &grid).unwrap();
    let f = Field::from_values(grid.clone(), noise(grid.cells(), seed)).unwrap();
    let fast = k.convolve(&f).unwrap();
    let hd = grid.cell_volume();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut direct = vec![0.0; grid.cells()];
    for i in 0..grid.cells() {
        let mut acc = 0.0;
        for j in 0..grid.cells() {
            acc += k.samples()[offset_index(&grid, i, j)] * f.values()[j];
        }
        direct[i] = acc * hd;
        scale = scale.max(direct[i].abs());
    }
    for (a, b) in fast.values().iter().zip(direct.iter()) {
        worst = worst.max((a - b).abs());
    }
    check(name, worst / scale.max(1e-30), 1e-10)
}

fn bilinear_check(name: &'static str, dim: usize, n: usize, eps: f64, seed: u64) -> CheckResult {
    let grid = TorusGrid::unit(dim, n).unwrap();
    let m = Mollifier::standard(1.0, dim).unwrap();
    let k = ScaledKernel::build(&m, eps, &grid).unwrap();
    let p = Potential::shifted_quartic(1.0).unwrap();
    let f = Field::from_values(grid.clone(), noise(grid.cells(), seed)).unwrap();
    let hd = grid.cell_volume();

    // <B f, f> spectrally vs 1/2 double sum; quarter double sum vs the
    // interaction part of the nonlocal energy.
    let bf = k.apply_b(&f).unwrap();
    let pairing: f64 = bf
        .values()
        .iter()
        .zip(f.values().iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * hd;
    let mut double = 0.0;
    for i in 0..grid.cells() {
        for j in 0..grid.cells() {
            let d = f.values()[i] - f.values()[j];
            double += k.samples()[offset_index(&grid, i, j)] * d * d;
        }
    }
    double *= hd * hd;
    let half = 0.5 * double;
    let quarter = 0.25 * double;
    let interaction = energy::energy_nonlocal(&f, &k, &p).unwrap().interaction;
    let err = rel_err(pairing, half).max(rel_err(interaction, quarter));
    check(name, err, 1e-10)
}

fn norm_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let grid = TorusGrid::unit(3, 8).unwrap();
    let f = Field::from_values(grid.clone(), noise(grid.cells(), 17)).unwrap();

    let back = grid.inverse(f.spectrum());
    let scale: f64 = f.values().iter().map(|v| v.abs()).fold(1e-30, f64::max);
    let round: f64 = f
        .values()
        .iter()
        .zip(back.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(check("transform_round_trip_d3", round / scale, 1e-12));

    let phys = f.norm_l2();
    let spec = grid.l2_norm_sq_spectrum(f.spectrum()).sqrt();
    out.push(check("parseval_d3", rel_err(phys, spec), 1e-12));

    let mut ordering_ok = true;
    let mut detail = String::new();
    for seed in 0..10 {
        let g1 = TorusGrid::unit(1, 32).unwrap();
        let f = Field::from_values(g1, noise(32, 100 + seed)).unwrap();
        let (dual, l2, h1) = (f.norm_h1_dual(), f.norm_l2(), f.norm_h1());
        if !(dual <= l2 * (1.0 + 1e-12) && l2 <= h1 * (1.0 + 1e-12)) {
            ordering_ok = false;
            detail = format!("violated at seed {seed}: dual {dual}, L2 {l2}, H1 {h1}");
            break;
        }
    }
    out.push(CheckResult {
        name: "norm_ordering",
        passed: ordering_ok,
        detail: if ordering_ok {
            "dual <= L2 <= H1 on 10 sampled fields".into()
        } else {
            detail
        },
    });

    let mean_field = Field::from_values(
        TorusGrid::unit(2, 16).unwrap(),
        noise(256, 23),
    )
    .unwrap();
    let naive = mean_field.values().iter().sum::<f64>() / 256.0;
    out.push(check(
        "mean_direct_sum",
        (mean_field.mean() - naive).abs(),
        1e-14,
    ));
    out
}

fn symbol_checks() -> CheckResult {
    let mut ok = true;
    let mut detail = String::from("bhat >= 0 and bhat(0) = 0 on the test matrix");
    for (dim, n, eps) in [(1usize, 32usize, 0.2f64), (1, 64, 0.1), (2, 16, 0.15), (3, 8, 0.2)] {
        let grid = TorusGrid::unit(dim, n).unwrap();
        let m = Mollifier::standard(1.0, dim).unwrap();
        let k = ScaledKernel::build(&m, eps, &grid).unwrap();
        if k.b_symbol()[0] != 0.0 || !k.b_symbol().iter().all(|&b| b >= 0.0) {
            ok = false;
            detail = format!("symbol violation at dim {dim}, n {n}, eps {eps}");
            break;
        }
    }
    CheckResult {
        name: "symbol_nonnegative",
        passed: ok,
        detail,
    }
}

fn grids_for_spot_checks() -> (Arc<TorusGrid>, Arc<TorusGrid>) {
    (TorusGrid::unit(1, 16).unwrap(), TorusGrid::unit(2, 8).unwrap())
}

/// Run every equivalence check; each entry reports pass/fail plus detail.
pub fn run_all() -> Vec<CheckResult> {
    let _ = grids_for_spot_checks();
    let mut out = vec![
        convolution_check("convolution_direct_sum_d1", 1, 16, 0.2, 1),
        convolution_check("convolution_direct_sum_d2", 2, 8, 0.2, 2),
        bilinear_check("bilinear_form_d1", 1, 16, 0.2, 3),
        bilinear_check("bilinear_form_d2", 2, 8, 0.2, 4),
    ];
    out.extend(norm_checks());
    out.push(symbol_checks());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
