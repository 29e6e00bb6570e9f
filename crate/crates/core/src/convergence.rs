//! Scale sweeps comparing the nonlocal flow against the local flow on
//! the same grid and time step, so the measured gap isolates the kernel
//! scale from discretization error. Errors are reported in the natural
//! norms of the two trajectories: `L^2(0,T;H^1)` by trapezoid quadrature
//! over records and `C([0,T];(H^1)*)` as the max over records, together
//! with the time integral of the interaction-energy gap.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{self, Scheme, SolverConfig};
use crate::energy;
use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::initial::{self, InitialData};
use crate::kernel::ScaledKernel;
use crate::mollifier::Mollifier;
use crate::potential::Potential;
use crate::report::{csv_row, fmt_g17};

/// Default kernel scales, as fractions of `r0 * L`.
pub const DEFAULT_EPS_FRACTIONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Minimum records per run for the sup-norm column to be meaningful.
pub const MIN_RECORDS: usize = 50;

/// Minimum resolved cells across the kernel support.
pub const MIN_SUPPORT_CELLS: f64 = 8.0;

/// What to put in the `runtime_seconds` column. Wall-clock timing breaks
/// byte determinism of the emitted CSV, so it is opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Zero,
    Wall,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub grid: Arc<TorusGrid>,
    pub eps_list: Vec<f64>,
    pub cfg: SolverConfig,
    pub potential: Potential,
    pub mollifier: Mollifier,
    pub initial: InitialData,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.eps_list.is_empty() {
            return Err(Error::InvalidPlan("eps_list must not be empty".into()));
        }
        if !self.eps_list.iter().all(|&e| e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidPlan("eps_list entries must be positive".into()));
        }
        if !self.eps_list.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::InvalidPlan("eps_list must be strictly decreasing".into()));
        }
        let r0 = self.mollifier.cutoff();
        let len = self.grid.side_length();
        let h = self.grid.spacing();
        let largest = self.eps_list[0] * r0;
        if largest >= 0.5 * len {
            return Err(Error::InvalidPlan(format!(
                "largest kernel support {largest} must be below half the period {}",
                0.5 * len
            )));
        }
        let smallest = self.eps_list[self.eps_list.len() - 1] * r0;
        let cells_across = 2.0 * smallest / h;
        if cells_across < MIN_SUPPORT_CELLS {
            return Err(Error::InvalidPlan(format!(
                "grid does not resolve the smallest kernel: {cells_across:.1} cells across \
                 the support, need at least {MIN_SUPPORT_CELLS}"
            )));
        }
        let records = self.cfg.steps() / self.cfg.record_every;
        if records < MIN_RECORDS {
            return Err(Error::InvalidPlan(format!(
                "only {records} records per run; need at least {MIN_RECORDS} \
                 (lower solver.record_every or raise the horizon)"
            )));
        }
        Ok(())
    }
}

/// One row of the sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub err_l2h1: f64,
    pub err_cdual: f64,
    pub energy_gap: f64,
    pub runtime_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log err_L2H1` against `log eps`.
    pub fitted_rate: Option<f64>,
    pub valid: bool,
    pub failure: Option<String>,
    /// Energy of the shared initial state under the local functional.
    pub initial_energy_local: f64,
    /// Largest nonlocal energy of the initial state over the sweep; the
    /// uniform bound `E_eps(u0) <= 2 E(u0)` is checked per kernel.
    pub initial_energy_nonlocal_max: f64,
    pub h4_bound_ok: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,err_L2H1,err_CdualH1,energy_gap,runtime_seconds\n");
        for r in &self.rows {
            out.push_str(&csv_row(&[
                fmt_g17(r.eps),
                fmt_g17(r.err_l2h1),
                fmt_g17(r.err_cdual),
                fmt_g17(r.energy_gap),
                fmt_g17(r.runtime_seconds),
            ]));
        }
        out
    }

    pub fn summary_json(&self, plan: &SweepPlan) -> String {
        #[derive(Serialize)]
        struct PlanEcho<'a> {
            dim: usize,
            n_per_axis: usize,
            side_length: f64,
            dt: f64,
            t_end: f64,
            stabilization: f64,
            record_every: usize,
            eps_list: &'a [f64],
            kernel_r0: f64,
            kernel_sigma: f64,
            potential: &'a str,
            initial_kind: &'a str,
            seed: u64,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            valid: bool,
            fitted_rate: Option<f64>,
            failure: &'a Option<String>,
            h4_bound_ok: bool,
            initial_energy_local: f64,
            initial_energy_nonlocal_max: f64,
            rows: &'a [SweepRow],
            plan: PlanEcho<'a>,
        }
        let doc = Summary {
            valid: self.valid,
            fitted_rate: self.fitted_rate,
            failure: &self.failure,
            h4_bound_ok: self.h4_bound_ok,
            initial_energy_local: self.initial_energy_local,
            initial_energy_nonlocal_max: self.initial_energy_nonlocal_max,
            rows: &self.rows,
            plan: PlanEcho {
                dim: plan.grid.dim(),
                n_per_axis: plan.grid.n_per_axis(),
                side_length: plan.grid.side_length(),
                dt: plan.cfg.dt,
                t_end: plan.cfg.t_end,
                stabilization: plan.cfg.stabilization,
                record_every: plan.cfg.record_every,
                eps_list: &plan.eps_list,
                kernel_r0: plan.mollifier.cutoff(),
                kernel_sigma: plan.mollifier.mass(),
                potential: plan.potential.kind_name(),
                initial_kind: plan.initial.kind.name(),
                seed: plan.initial.seed,
            },
        };
        serde_json::to_string_pretty(&doc).expect("summary serialization cannot fail")
    }
}

struct LocalRecord {
    time: f64,
    spectrum: Vec<Complex64>,
    tilde_e: f64,
}

/// Run the local flow once and the nonlocal flow per kernel scale,
/// measuring trajectory gaps at shared record times.
pub fn run_sweep(plan: &SweepPlan, timing: TimingMode) -> Result<SweepReport> {
    plan.validate()?;
    let grid = &plan.grid;
    let u0 = initial::generate(grid, &plan.initial)?;
    let e_local0 = energy::energy_local(&u0, &plan.potential)?.total;

    let mut local_records: Vec<LocalRecord> = Vec::new();
    dynamics::run_observed(&u0, Scheme::Local, &plan.potential, &plan.cfg, |rec| {
        local_records.push(LocalRecord {
            time: rec.time,
            spectrum: rec.spectrum.to_vec(),
            tilde_e: 0.5 * grid.grad_norm_sq_spectrum(rec.spectrum),
        });
    })?;

    let outcomes: Vec<Result<(SweepRow, f64)>> = plan
        .eps_list
        .par_iter()
        .map(|&eps| sweep_one(plan, &u0, &local_records, eps, timing))
        .collect();

    let mut rows = Vec::new();
    let mut failure = None;
    let mut e_nl_max = f64::NEG_INFINITY;
    for outcome in outcomes {
        match outcome {
            Ok((row, e_nl0)) => {
                if failure.is_none() {
                    e_nl_max = e_nl_max.max(e_nl0);
                    rows.push(row);
                }
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e.to_string());
                }
            }
        }
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.err_l2h1)).collect();
    let h4_ok = rows.is_empty() || e_nl_max <= 2.0 * e_local0;
    Ok(SweepReport {
        fitted_rate: fit_rate(&pairs),
        valid: failure.is_none(),
        failure,
        initial_energy_local: e_local0,
        initial_energy_nonlocal_max: if rows.is_empty() { 0.0 } else { e_nl_max },
        h4_bound_ok: h4_ok,
        rows,
    })
}

fn sweep_one(
    plan: &SweepPlan,
    u0: &Field,
    local_records: &[LocalRecord],
    eps: f64,
    timing: TimingMode,
) -> Result<(SweepRow, f64)> {
    let started = Instant::now();
    let grid = &plan.grid;
    let kernel = ScaledKernel::build(&plan.mollifier, eps, grid)?;
    let e_nl0 = energy::energy_nonlocal(u0, &kernel, &plan.potential)?.total;

    let mut times: Vec<f64> = Vec::with_capacity(local_records.len());
    let mut h1_sq: Vec<f64> = Vec::with_capacity(local_records.len());
    let mut gap: Vec<f64> = Vec::with_capacity(local_records.len());
    let mut max_dual: f64 = 0.0;
    let mut idx = 0usize;
    let vol = grid.volume();

    dynamics::run_observed(
        u0,
        Scheme::Nonlocal(&kernel),
        &plan.potential,
        &plan.cfg,
        |rec| {
            let local = &local_records[idx];
            debug_assert_eq!(local.time, rec.time, "record schedules must agree");
            let mut l2 = 0.0;
            let mut grad = 0.0;
            let mut dual = 0.0;
            for ((a, b), &g) in rec
                .spectrum
                .iter()
                .zip(local.spectrum.iter())
                .zip(grid.gradient_symbol_sq().iter())
            {
                let d = (a - b).norm_sqr();
                l2 += d;
                grad += g * d;
                dual += d / (1.0 + g);
            }
            let tilde_eps: f64 = 0.5
                * rec
                    .spectrum
                    .iter()
                    .zip(kernel.b_symbol().iter())
                    .map(|(c, &b)| b * c.norm_sqr())
                    .sum::<f64>()
                * vol;
            times.push(rec.time);
            h1_sq.push((l2 + grad) * vol);
            gap.push((tilde_eps - local.tilde_e).abs());
            max_dual = max_dual.max((dual * vol).sqrt());
            idx += 1;
        },
    )?;

    let row = SweepRow {
        eps,
        err_l2h1: trapezoid(&times, &h1_sq).sqrt(),
        err_cdual: max_dual,
        energy_gap: trapezoid(&times, &gap),
        runtime_seconds: match timing {
            TimingMode::Zero => 0.0,
            TimingMode::Wall => started.elapsed().as_secs_f64(),
        },
    };
    Ok((row, e_nl0))
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), y.len());
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
    }
    acc
}

/// Least-squares slope of `log err` against `log eps`. Zero errors are
/// excluded; fewer than three usable pairs leave the rate undefined.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(e, err)| *e > 0.0 && *err > 0.0)
        .map(|&(e, err)| (e.ln(), err.ln()))
        .collect();
    if usable.len() < 3 {
        return None;
    }
    let n = usable.len() as f64;
    let xm = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRow {
    pub field: String,
    pub eps: f64,
    pub err_l2: f64,
    pub err_dual: f64,
}

#[derive(Debug, Serialize)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
    /// Per-field fitted rates of the L2 and dual columns.
    pub rates: Vec<(String, Option<f64>, Option<f64>)>,
}

impl ConsistencyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("field,eps,err_L2,err_H1dual\n");
        for r in &self.rows {
            out.push_str(&csv_row(&[
                r.field.clone(),
                fmt_g17(r.eps),
                fmt_g17(r.err_l2),
                fmt_g17(r.err_dual),
            ]));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialization cannot fail")
    }

    pub fn min_l2_rate(&self) -> Option<f64> {
        self.rates
            .iter()
            .filter_map(|(_, l2, _)| *l2)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

/// Smooth mean-zero-free test fields for operator studies.
fn basket(grid: &Arc<TorusGrid>) -> Vec<(String, Field)> {
    let len = grid.side_length();
    let tau = 2.0 * std::f64::consts::PI / len;
    let mut out = Vec::new();
    out.push((
        "mode_1".to_string(),
        Field::from_fn(grid.clone(), move |x| {
            x.iter().map(|&xa| (tau * xa).sin()).product()
        }),
    ));
    out.push((
        "mode_2".to_string(),
        Field::from_fn(grid.clone(), move |x| (2.0 * tau * x[0]).sin()),
    ));
    out.push((
        "smooth_mix".to_string(),
        Field::from_fn(grid.clone(), move |x| {
            let base = (tau * x[0]).cos().exp();
            if x.len() > 1 {
                base * (tau * x[1]).cos()
            } else {
                base
            }
        }),
    ));
    out
}

/// Tabulate `||B_eps f + Lap f||` in L2 and the dual norm per kernel
/// scale for a basket of smooth fields, with fitted rates per field.
pub fn operator_consistency_study(
    m: &Mollifier,
    grid: &Arc<TorusGrid>,
    eps_list: &[f64],
) -> Result<ConsistencyReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidPlan("eps_list must not be empty".into()));
    }
    let fields = basket(grid);
    let lap = grid.laplacian_symbol();
    let gsq = grid.gradient_symbol_sq();
    let vol = grid.volume();

    let kernels: Vec<ScaledKernel> = eps_list
        .par_iter()
        .map(|&eps| ScaledKernel::build(m, eps, grid))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (name, f) in &fields {
        let spec = f.spectrum();
        for k in &kernels {
            let mut l2 = 0.0;
            let mut dual = 0.0;
            for ((c, (&b, &l)), &g) in spec
                .iter()
                .zip(k.b_symbol().iter().zip(lap.iter()))
                .zip(gsq.iter())
            {
                let d = (b - l) * (b - l) * c.norm_sqr();
                l2 += d;
                dual += d / (1.0 + g);
            }
            rows.push(ConsistencyRow {
                field: name.clone(),
                eps: k.eps(),
                err_l2: (l2 * vol).sqrt(),
                err_dual: (dual * vol).sqrt(),
            });
        }
    }
    let rates = fields
        .iter()
        .map(|(name, _)| {
            let l2_pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| &r.field == name)
                .map(|r| (r.eps, r.err_l2))
                .collect();
            let dual_pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| &r.field == name)
                .map(|r| (r.eps, r.err_dual))
                .collect();
            (name.clone(), fit_rate(&l2_pairs), fit_rate(&dual_pairs))
        })
        .collect();
    Ok(ConsistencyReport { rows, rates })
}

#[derive(Debug, Serialize)]
pub struct PoincareStudy {
    pub eps: f64,
    pub band_limit: usize,
    pub samples: usize,
    /// `(n_per_axis, max ratio over samples)` for the base and refined grid.
    pub rows: Vec<(usize, f64)>,
    pub relative_change: f64,
    /// Empirical lower bound for the constant of the gradient inequality.
    pub cp_estimate: f64,
}

impl PoincareStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,eps,samples,max_ratio\n");
        for (n, ratio) in &self.rows {
            out.push_str(&csv_row(&[
                n.to_string(),
                fmt_g17(self.eps),
                self.samples.to_string(),
                fmt_g17(*ratio),
            ]));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialization cannot fail")
    }
}

/// Sample the gradient-inequality ratio over seeded band-limited fields
/// on the base grid and its refinement, at fixed kernel scale.
pub fn poincare_study(
    dim: usize,
    n: usize,
    side_length: f64,
    m: &Mollifier,
    eps: f64,
    samples: usize,
    band_limit: usize,
    seed: u64,
) -> Result<PoincareStudy> {
    if samples == 0 {
        return Err(Error::InvalidPlan("poincare.samples must be positive".into()));
    }
    let mut rows = Vec::new();
    for grid_n in [n, 2 * n] {
        let grid = TorusGrid::new(dim, grid_n, side_length)?;
        let kernel = ScaledKernel::build(m, eps, &grid)?;
        let ratios: Vec<f64> = (0..samples as u64)
            .into_par_iter()
            .map(|s| {
                let f = initial::band_limited_noise(&grid, seed.wrapping_add(s), band_limit);
                energy::poincare_ratio(&f, &kernel)
            })
            .collect::<Result<_>>()?;
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        rows.push((grid_n, max));
    }
    let (a, b) = (rows[0].1, rows[1].1);
    Ok(PoincareStudy {
        eps,
        band_limit,
        samples,
        relative_change: (a - b).abs() / a.abs().max(f64::MIN_POSITIVE),
        cp_estimate: a.max(b),
        rows,
    })
}

/// The smallness condition on the curvature bound that the convergence
/// argument needs: warn when `2 B1 Cp >= 1`.
pub fn b1_smallness_violated(b1: f64, cp_estimate: f64) -> bool {
    2.0 * b1 * cp_estimate >= 1.0
}
