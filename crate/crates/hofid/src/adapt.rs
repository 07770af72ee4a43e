//! The adaptive driver: truncation-error estimation via the next even
//! order, mesh equidistribution under the block-constant-stepsize rule,
//! the fixed-order solve loop, and the order cascade.

use crate::discretize::{assemble, retained_flags, EndpointPolicy, Grid};
use crate::eigen::{
    count_sign_changes, default_sign_threshold, eig_compute, init_approx, normalize,
};
use crate::error::{Error, Result};
use crate::problem::SlProblem;
use crate::stencil::lagrange_value;
use serde::Serialize;

pub const DEFAULT_MAX_N: usize = 200_000;
/// Hard cap on the bootstrap mesh: the order-2 spectrum is computed densely,
/// so its size must stay small even when restarts double n0.
const BOOT_CAP: usize = 2000;
/// Predicted-error safety factor in mesh-size selection.
const SAFETY: f64 = 0.8;
const HEADROOM: f64 = 1.15;
/// Relative tolerance for the inner eigenvalue iteration. Kept well below
/// the tightest stage tolerance so E_r readings are not iteration-limited.
const EIG_TOL: f64 = 1e-13;
const EIG_MAXIT: usize = 60;

/// Configuration of the order cascade.
///
/// `max_n` defaults to 200000; the environment variable `HOFID_MAX_N`
/// overrides the default (explicitly set values win).
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Ascending even orders, each between 2 and 10.
    pub orders: Vec<usize>,
    /// Exit tolerances per order, strictly decreasing.
    pub tols: Vec<f64>,
    /// Initial interval count; the bootstrap enforces a floor of
    /// max(20, 5k) on top of this.
    pub n0: Option<usize>,
    pub max_n: usize,
    /// Mesh iterations allowed per order stage.
    pub max_mesh_iters: usize,
    /// Largest stepsize ratio allowed between adjacent blocks.
    pub ratio_cap: f64,
    pub policy: EndpointPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let max_n = std::env::var("HOFID_MAX_N")
            .ok()
            .and_then(|s| s.parse().ok())
            .filter(|&v| v >= 64)
            .unwrap_or(DEFAULT_MAX_N);
        SolverConfig {
            orders: vec![4, 6, 8],
            tols: vec![1e-4, 1e-6, 1e-8],
            n0: None,
            max_n,
            max_mesh_iters: 12,
            ratio_cap: 2.0,
            policy: EndpointPolicy::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(Error::BadConfig("orders must not be empty".into()));
        }
        if self.orders.len() != self.tols.len() {
            return Err(Error::BadConfig(format!(
                "{} orders but {} tolerances",
                self.orders.len(),
                self.tols.len()
            )));
        }
        for pair in self.orders.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::BadConfig(
                    "orders must be strictly increasing".into(),
                ));
            }
        }
        for &p in &self.orders {
            if p % 2 != 0 || p < 2 || p > 10 {
                return Err(Error::BadConfig(format!(
                    "order {p} not an even integer in 2..=10"
                )));
            }
        }
        for pair in self.tols.windows(2) {
            if pair[1] >= pair[0] {
                return Err(Error::BadConfig(
                    "tolerances must be strictly decreasing".into(),
                ));
            }
        }
        for &t in &self.tols {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::BadConfig(format!("bad tolerance {t}")));
            }
        }
        if self.max_mesh_iters == 0 {
            return Err(Error::BadConfig("max_mesh_iters must be positive".into()));
        }
        if !(self.ratio_cap >= 1.0) {
            return Err(Error::BadConfig(format!(
                "ratio cap {} below 1",
                self.ratio_cap
            )));
        }
        let need = self.orders.iter().max().unwrap() + 4;
        if self.max_n < need {
            return Err(Error::BadConfig(format!(
                "max_n {} cannot host order {} meshes",
                self.max_n,
                need - 4
            )));
        }
        Ok(())
    }

    /// Interval count handed to the bootstrap for index k.
    pub fn bootstrap_n(&self, k: usize) -> usize {
        self.n0.unwrap_or(0).max(20).max(5 * k).min(BOOT_CAP)
    }
}

/// One mesh iteration within an order stage.
#[derive(Debug, Clone, Serialize)]
pub struct MeshIter {
    pub n: usize,
    pub lambda: f64,
    pub err_inf: f64,
}

/// Outcome of one order stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub order: usize,
    pub tol: f64,
    pub mesh_iters: usize,
    pub n: usize,
    pub lambda: f64,
    pub err_inf: f64,
    pub converged: bool,
    pub mesh_capped: bool,
    pub trace: Vec<MeshIter>,
}

/// Final result of a solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub lambda: f64,
    /// Normalized eigenfunction values on every grid point, boundary
    /// values included.
    pub y: Vec<f64>,
    pub grid: Grid,
    pub zero_count: usize,
    /// Relative eigenvalue error estimate from the final order-(p+2) run.
    pub e_r: f64,
    /// Max-norm eigenfunction error estimate from the same run.
    pub e_a: f64,
    pub converged: bool,
    /// True when the bootstrap fell back to positional selection because
    /// no coarse eigenvector had exactly k sign changes.
    pub bootstrap_fallback: bool,
    pub history: Vec<StageRecord>,
}

/// Discrete error function: the pointwise difference between the order-p
/// eigenvector and the order-(p+2) eigenvector recomputed on the same grid,
/// both normalized. This is the quantity the mesh loop drives below the
/// stage tolerance, so the tolerance reads directly as eigenfunction
/// accuracy; the residual alone understates the eigenvector error by the
/// spectral-gap factor, which is catastrophic on clustered spectra.
///
/// Returned on the full grid; entries at eliminated endpoints copy their
/// interior neighbor so every interval has a defined error level.
pub fn error_function(
    problem: &SlProblem,
    grid: &Grid,
    p: usize,
    lambda: f64,
    y_full: &[f64],
    policy: EndpointPolicy,
) -> Result<Vec<f64>> {
    let op2 = assemble(problem, grid, p + 2, policy)?;
    let y_ret = op2.restrict(y_full);
    let (_, y2) = eig_compute(&op2.matrix, lambda, &y_ret, EIG_TOL, EIG_MAXIT)?;
    let y1n = normalize(&y_ret, &op2.weights)?;
    let y2n = normalize(&y2, &op2.weights)?;
    let diff: Vec<f64> = y1n.iter().zip(&y2n).map(|(a, b)| a - b).collect();
    let mut e = op2.embed(&diff);
    // endpoints carrying fixed boundary values hold no unknown
    let (left_ret, right_ret) = op2.endpoints_retained();
    let last = e.len() - 1;
    if !left_ret {
        e[0] = e[1];
    }
    if !right_ret {
        e[last] = e[last - 1];
    }
    Ok(e)
}

/// Error-density equidistribution with block-constant stepsizes.
///
/// Builds interval masses |e|^(1/p), places block edges at equal quantiles
/// of the cumulative mass, and fills each block with `p` equal intervals.
/// The new interval count is chosen so the predicted error meets `tol`
/// (with a safety factor plus fixed headroom for placement granularity),
/// capped at twice the current count and at `cfg.max_n`, and never smaller
/// than the current count: this runs only while the error test fails, and
/// surrendering resolution at that point restarts the stage from worse
/// data. Returns the new grid and whether the cap truncated the request.
/// An identically zero `e` returns the grid unchanged.
pub fn equidistribute(
    grid: &Grid,
    e: &[f64],
    p: usize,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<(Grid, bool)> {
    let x = grid.points();
    if e.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: e.len(),
        });
    }
    if p == 0 || p % 2 != 0 {
        return Err(Error::BadConfig(format!(
            "bad order {p} for equidistribution"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::BadConfig(format!("bad tolerance {tol}")));
    }
    let n = grid.n_intervals();

    // two accumulators per old interval, from the worst endpoint error to
    // the power 1/p. The plain value is the number of sub-intervals the
    // interval must split into (local error scales as h^p, so h cancels)
    // and fixes the new interval count; weighting by h gives the density
    // integrated over x that fixes the shape. Keeping the shape measure in
    // x-space matters: a flat error field then pulls the mesh back toward
    // uniform instead of freezing in whatever lumps the mesh already has.
    let mut count = vec![0.0f64; n];
    let mut mass = vec![0.0f64; n];
    let mut max_e = 0.0f64;
    for i in 0..n {
        let ei = e[i].abs().max(e[i + 1].abs());
        max_e = max_e.max(ei);
        count[i] = ei.powf(1.0 / p as f64);
        mass[i] = count[i] * (x[i + 1] - x[i]);
    }
    if max_e == 0.0 {
        return Ok((grid.clone(), false));
    }
    // two averaging passes over a stencil-wide window: a single noisy spike
    // or dip in the error field must not carve a needle block, because the
    // resulting stepsize jumps feed back into the error on the next pass
    let window = p.min(n);
    for _ in 0..2 {
        let mut smoothed = vec![0.0f64; n];
        for i in 0..n {
            let lo = i.saturating_sub(window / 2);
            let hi = (i + window / 2 + 1).min(n);
            let sum: f64 = mass[lo..hi].iter().sum();
            smoothed[i] = sum / (hi - lo) as f64;
        }
        mass = smoothed;
    }
    // floor keeps the cumulative strictly increasing through error-free spans
    let floor = 1e-12 * mass.iter().cloned().fold(0.0, f64::max);
    for m in mass.iter_mut() {
        *m = m.max(floor);
    }
    let total: f64 = mass.iter().sum();

    // tol^(1/p) flattens toward 1 at high order, so the tolerance-side
    // safety alone gives almost no margin there; HEADROOM pads the count
    // directly to absorb block rounding and ratio clamping
    let target = (SAFETY * tol).powf(1.0 / p as f64);
    let splits: f64 = count.iter().sum();
    let n_want = (HEADROOM * splits / target).ceil() as usize;
    let n_lo = n.max(p + 4);
    let n_hi = (2 * n).min(cfg.max_n).max(n_lo);
    let capped = n_want > n_hi && n_hi == cfg.max_n;
    let n_new = n_want.clamp(n_lo, n_hi);

    let blocks = n_new.div_ceil(p).max(2).min((cfg.max_n / p).max(2));
    // block edges at equal quantiles of the cumulative mass, which is
    // piecewise linear in x over each old interval
    let mut cum = vec![0.0f64; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + mass[i];
    }
    let mut edges = Vec::with_capacity(blocks + 1);
    edges.push(x[0]);
    let mut cell = 0usize;
    for b in 1..blocks {
        let t = total * b as f64 / blocks as f64;
        while cell + 1 < n && cum[cell + 1] < t {
            cell += 1;
        }
        let frac = (t - cum[cell]) / mass[cell];
        edges.push(x[cell] + frac * (x[cell + 1] - x[cell]));
    }
    edges.push(x[n]);

    // per-block stepsizes, ratio-clamped: one forward pass caps growth,
    // one backward pass caps decay without breaking the forward cap
    let rho = cfg.ratio_cap;
    let mut h: Vec<f64> = edges.windows(2).map(|w| (w[1] - w[0]) / p as f64).collect();
    for b in 1..h.len() {
        h[b] = h[b].min(rho * h[b - 1]);
    }
    for b in (0..h.len() - 1).rev() {
        h[b] = h[b].min(rho * h[b + 1]);
    }
    let span = x[n] - x[0];
    let covered: f64 = h.iter().sum::<f64>() * p as f64;
    let rescale = span / covered;
    for hb in h.iter_mut() {
        *hb *= rescale;
    }

    let mut points = Vec::with_capacity(blocks * p + 1);
    points.push(x[0]);
    let mut start = x[0];
    for (b, &hb) in h.iter().enumerate() {
        let end = if b + 1 == h.len() {
            x[n]
        } else {
            start + hb * p as f64
        };
        for j in 1..p {
            points.push(start + hb * j as f64);
        }
        points.push(end);
        start = end;
    }

    let new_grid = Grid::new(points, p)?;
    Ok((new_grid, capped))
}

/// Re-expresses full-grid values on a different grid by local polynomial
/// interpolation of the given degree (windows of degree+1 source points).
pub fn interpolate_to(y_full: &[f64], from: &Grid, to: &Grid, degree: usize) -> Vec<f64> {
    let xs = from.points();
    assert_eq!(y_full.len(), xs.len());
    let win = (degree + 1).min(xs.len());
    to.points()
        .iter()
        .map(|&xq| {
            let pos = xs.partition_point(|&v| v <= xq);
            let start = pos.saturating_sub(win / 2 + 1).min(xs.len() - win);
            lagrange_value(&xs[start..start + win], &y_full[start..start + win], xq)
        })
        .collect()
}

/// One order stage: refine the eigenpair on the current mesh, estimate the
/// error with order p+2, and remesh until the error meets `tol` or the
/// iteration budget runs out. Returns the stage record together with the
/// final (lambda, full-grid Y, grid).
#[allow(clippy::too_many_arguments)]
pub fn solve_fixed_order(
    problem: &SlProblem,
    k: usize,
    p: usize,
    tol: f64,
    lambda0: f64,
    y0_full: &[f64],
    grid0: &Grid,
    cfg: &SolverConfig,
) -> Result<(StageRecord, f64, Vec<f64>, Grid)> {
    let (alpha, beta) = problem.working_interval()?;
    let mut grid = grid0.clone();
    let mut y_full = y0_full.to_vec();

    // the error estimate needs order p+2 stencils; refine uniformly if the
    // incoming mesh cannot host them
    let min_n = p + 4;
    if grid.n_intervals() < min_n {
        let fine = Grid::uniform(alpha, beta, min_n.max(2 * grid.n_intervals()))?;
        y_full = interpolate_to(&y_full, &grid, &fine, p);
        grid = fine;
    }

    let mut lam = lambda0;
    let mut trace: Vec<MeshIter> = Vec::new();
    let converged;
    let final_err;
    let mut mesh_capped = false;
    let mut iters = 0usize;
    let mut prev_err = f64::INFINITY;
    let mut stall = 0u32;
    // (err, lambda, normalized full-grid vector, grid) of the best iterate so
    // far; near the error floor successive readings scatter, so the last mesh
    // is not necessarily the one worth keeping when the budget runs out
    let mut best: Option<(f64, f64, Vec<f64>, Grid)> = None;

    loop {
        let op = assemble(problem, &grid, p, cfg.policy)?;
        let y_start = op.restrict(&y_full);
        let (inc, y) = eig_compute(&op.matrix, lam, &y_start, EIG_TOL, EIG_MAXIT)?;
        lam += inc;
        y_full = op.embed(&y);
        let e = error_function(problem, &grid, p, lam, &y_full, cfg.policy)?;
        let err_inf = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !err_inf.is_finite() {
            return Err(Error::NonConvergence {
                lambda: lam,
                iterations: iters,
                last_iterate: y_full,
            });
        }
        trace.push(MeshIter {
            n: grid.n_intervals(),
            lambda: lam,
            err_inf,
        });

        if best.as_ref().is_none_or(|b| err_inf < b.0) {
            let yn = normalize(&y, &op.weights)?;
            best = Some((err_inf, lam, op.embed(&yn), grid.clone()));
        }

        if err_inf <= tol || iters >= cfg.max_mesh_iters {
            let (b_err, b_lam, b_y, b_grid) = best.take().expect("tracked above");
            // identify the branch only on exit: while the mesh is coarse a
            // decaying tail can wiggle across the sign threshold and fake an
            // extra crossing even though the tracked eigenvalue is right
            let zc = count_sign_changes(&b_y, default_sign_threshold(&b_y))?;
            if zc != k {
                return Err(Error::WrongBranch {
                    expected: k,
                    found: zc,
                    lambda: b_lam,
                });
            }
            converged = b_err <= tol;
            final_err = b_err;
            lam = b_lam;
            y_full = b_y;
            grid = b_grid;
            break;
        }

        // the interval-count prediction assumes the nominal order, which
        // singular layers do not deliver; whenever a remesh fails to at
        // least halve the error, compound extra growth on top of it
        if err_inf > 0.5 * prev_err {
            stall = (stall + 1).min(40);
        }
        prev_err = err_inf;
        let tol_eff = tol * 1.25f64.powi(-(p as i32) * stall as i32);
        let (new_grid, capped) = equidistribute(&grid, &e, p, tol_eff, cfg)?;
        mesh_capped |= capped;
        new_grid.validate()?;
        let ratio = new_grid.max_block_ratio();
        if ratio > cfg.ratio_cap * (1.0 + 1e-9) {
            return Err(Error::InvalidGrid(format!(
                "remeshed block ratio {ratio} exceeds the cap {}",
                cfg.ratio_cap
            )));
        }
        y_full = interpolate_to(&y_full, &grid, &new_grid, p);
        grid = new_grid;
        iters += 1;
    }

    let record = StageRecord {
        order: p,
        tol,
        mesh_iters: iters,
        n: grid.n_intervals(),
        lambda: lam,
        err_inf: final_err,
        converged,
        mesh_capped,
        trace,
    };
    Ok((record, lam, y_full, grid))
}

fn embeds_wrong_branch(e: &Error) -> bool {
    match e {
        Error::WrongBranch { .. } => true,
        Error::StageFailure { source, .. } => embeds_wrong_branch(source),
        _ => false,
    }
}

fn solve_from_bootstrap(
    problem: &SlProblem,
    k: usize,
    cfg: &SolverConfig,
    n_boot: usize,
) -> Result<Solution> {
    let boot = init_approx(problem, k, n_boot, cfg.policy)?;
    let (left_ret, _) = retained_flags(problem, cfg.policy);
    let total = boot.grid.points().len();
    let mut y_full = vec![0.0; total];
    let off = if left_ret { 0 } else { 1 };
    y_full[off..off + boot.pair.y.len()].copy_from_slice(&boot.pair.y);

    let mut lam = boot.pair.lambda;
    let mut grid = boot.grid.clone();
    let mut history = Vec::new();

    for (&p, &tl) in cfg.orders.iter().zip(&cfg.tols) {
        match solve_fixed_order(problem, k, p, tl, lam, &y_full, &grid, cfg) {
            Ok((rec, l, y, g)) => {
                history.push(rec);
                lam = l;
                y_full = y;
                grid = g;
            }
            Err(e) => return Err(e.at_stage(p)),
        }
    }

    // error estimates: one order-(p+2) eigenvalue refinement on the final mesh
    let p_last = *cfg.orders.last().unwrap();
    let op2 = assemble(problem, &grid, p_last + 2, cfg.policy)?;
    let y_ret = op2.restrict(&y_full);
    let (inc2, y2) = eig_compute(&op2.matrix, lam, &y_ret, EIG_TOL, EIG_MAXIT)
        .map_err(|e| e.at_stage(p_last + 2))?;
    let lam2 = lam + inc2;
    let y2n = normalize(&y2, &op2.weights)?;
    let y2_full = op2.embed(&y2n);

    let e_r = (lam - lam2).abs() / lam2.abs().max(f64::MIN_POSITIVE);
    let e_a = y_full
        .iter()
        .zip(&y2_full)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let zero_count = count_sign_changes(&y_full, default_sign_threshold(&y_full))?;
    let converged = history.iter().all(|r| r.converged);

    Ok(Solution {
        lambda: lam,
        y: y_full,
        grid,
        zero_count,
        e_r,
        e_a,
        converged,
        bootstrap_fallback: !boot.index_matched,
        history,
    })
}

/// Full adaptive solve of the k-th eigenpair: order-2 bootstrap on a
/// uniform mesh, then the order cascade, each stage seeding the next.
/// A wrong-branch failure restarts the bootstrap with doubled resolution,
/// at most twice.
pub fn solve(problem: &SlProblem, k: usize, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let mut n_boot = cfg.bootstrap_n(k);
    let mut last_err: Option<Error> = None;
    for _ in 0..3 {
        match solve_from_bootstrap(problem, k, cfg, n_boot) {
            Ok(sol) => return Ok(sol),
            Err(e) if embeds_wrong_branch(&e) => {
                last_err = Some(e);
                n_boot = (n_boot * 2).min(BOOT_CAP);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("restart loop exits early unless a wrong branch was seen"))
}
