//! Grids, banded matrix storage, and assembly of the discrete eigenproblem.
//!
//! On a grid a = x_0 < ... < x_n = b the differential operator is collocated
//! row by row: row i of the standardized matrix M holds
//!
//! ```text
//!   [ p(x_i) * D2_i  +  q(x_i) * D1_i  +  r(x_i) * e_i ] / w(x_i)
//! ```
//!
//! where D1, D2 are finite-difference rows from [`crate::stencil`]. Dividing
//! by w (positive by assumption) turns the generalized problem into the
//! standard one M Y = lambda Y. Dirichlet values at eliminated endpoints are
//! folded in by dropping their rows and columns.

use crate::error::{Error, Result};
use crate::problem::{EndpointClass, SlProblem};
use crate::stencil::{fd_weights, quadrature_weights, stencil_plan};
use std::io::{self, Write};

/// How truncated singular endpoints are closed. Regular endpoints always
/// carry their Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndpointPolicy {
    /// Homogeneous Dirichlet value at the truncated endpoint (the
    /// eigenfunction decays there). This reproduces the reference tables.
    #[default]
    Dirichlet,
    /// Keep the endpoint unknown and collocate the ODE with a one-sided
    /// stencil instead.
    EquationAtEndpoint,
}

/// A strictly increasing grid, optionally carrying a block structure:
/// `block_len > 0` means the stepsize is constant within each consecutive
/// run of `block_len` intervals, so any interior stencil sees at most one
/// stepsize change.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<f64>,
    block_len: usize,
}

impl Grid {
    pub fn new(points: Vec<f64>, block_len: usize) -> Result<Self> {
        let grid = Grid { points, block_len };
        grid.validate()?;
        Ok(grid)
    }

    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGrid(format!("bad interval [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "a grid needs at least 2 intervals, got {n}"
            )));
        }
        let h = (b - a) / n as f64;
        let mut points: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        points[n] = b;
        Ok(Grid {
            points,
            block_len: 0,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    /// h_i = x_i - x_{i-1} for i in 1..=n.
    pub fn spacing(&self, i: usize) -> f64 {
        self.points[i] - self.points[i - 1]
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "a grid needs at least 2 intervals, got {}",
                self.points.len().saturating_sub(1)
            )));
        }
        for (i, pair) in self.points.windows(2).enumerate() {
            if !pair[0].is_finite() || !(pair[1] > pair[0]) {
                return Err(Error::InvalidGrid(format!(
                    "points not strictly increasing at index {i} ({} .. {})",
                    pair[0], pair[1]
                )));
            }
        }
        if self.block_len > 0 {
            let n = self.n_intervals();
            let (a, b) = self.span();
            // absolute slack covers rounding of x0 + j*h, which scales with |x|
            let slack = 1e-14 * a.abs().max(b.abs()).max(1.0);
            let mut i = 1;
            while i <= n {
                let end = (i + self.block_len - 1).min(n);
                let h0 = self.spacing(i);
                for j in i..=end {
                    let h = self.spacing(j);
                    if (h - h0).abs() > 1e-9 * h0.abs() + slack {
                        return Err(Error::InvalidGrid(format!(
                            "stepsize varies inside block starting at interval {i}: {h0} vs {h}"
                        )));
                    }
                }
                i = end + 1;
            }
        }
        Ok(())
    }

    /// Largest stepsize ratio between adjacent blocks (1.0 for grids without
    /// block structure or with a single block).
    pub fn max_block_ratio(&self) -> f64 {
        if self.block_len == 0 {
            return 1.0;
        }
        let n = self.n_intervals();
        let mut worst: f64 = 1.0;
        let mut prev: Option<f64> = None;
        let mut i = 1;
        while i <= n {
            let h = self.spacing(i);
            if let Some(hp) = prev {
                worst = worst.max((h / hp).max(hp / h));
            }
            prev = Some(h);
            i += self.block_len;
        }
        worst
    }
}

/// Row-major banded storage with `kl` sub- and `ku` super-diagonals, plus
/// `kl` extra super-diagonals of fill so the matrix can be LU-factored with
/// partial pivoting in place.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kl(&self) -> usize {
        self.kl
    }

    pub fn ku(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let d = j as isize - i as isize;
        if d < -(self.kl as isize) || d > self.ku as isize {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let d = j as isize - i as isize;
        assert!(
            d >= -(self.kl as isize) && d <= self.ku as isize,
            "entry ({i}, {j}) outside band"
        );
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let d = j as isize - i as isize;
        assert!(
            d >= -(self.kl as isize) && d <= self.ku as isize,
            "entry ({i}, {j}) outside band"
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Max absolute row sum over the true band.
    pub fn inf_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let sum: f64 = (lo..=hi).map(|j| self.data[self.slot(i, j)].abs()).sum();
            worst = worst.max(sum);
        }
        worst
    }

    /// Copy with `sigma` subtracted along the diagonal.
    pub fn shifted(&self, sigma: f64) -> BandedMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            let s = out.slot(i, i);
            out.data[s] -= sigma;
        }
        out
    }

    /// Coordinate-format MatrixMarket dump of the nonzero band entries.
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut entries = Vec::new();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.data[self.slot(i, j)];
                if v != 0.0 {
                    entries.push((i + 1, j + 1, v));
                }
            }
        }
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, entries.len())?;
        for (i, j, v) in entries {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }

    // LU internals live in `eigen`; expose the raw pieces it needs.
    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// The assembled standardized eigenproblem M Y = lambda Y on the retained
/// grid points, with the quadrature weights used for normalization.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: BandedMatrix,
    /// Trapezoidal weights restricted to the retained points.
    pub weights: Vec<f64>,
    pub grid: Grid,
    pub order: usize,
    left_retained: bool,
    right_retained: bool,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.n()
    }

    /// Grid point index of matrix row `row`.
    pub fn grid_index(&self, row: usize) -> usize {
        row + if self.left_retained { 0 } else { 1 }
    }

    /// Whether the (left, right) endpoint carries an unknown.
    pub fn endpoints_retained(&self) -> (bool, bool) {
        (self.left_retained, self.right_retained)
    }

    pub fn retained_x(&self, row: usize) -> f64 {
        self.grid.points()[self.grid_index(row)]
    }

    /// Expand retained-point values to the full grid, zero at eliminated
    /// endpoints.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim());
        let total = self.grid.points().len();
        let mut full = vec![0.0; total];
        let off = if self.left_retained { 0 } else { 1 };
        full[off..off + y.len()].copy_from_slice(y);
        full
    }

    /// Restrict full-grid values to the retained points.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.grid.points().len());
        let off = if self.left_retained { 0 } else { 1 };
        full[off..off + self.dim()].to_vec()
    }
}

/// Which endpoints stay in the unknown vector for this problem + policy.
pub(crate) fn retained_flags(problem: &SlProblem, policy: EndpointPolicy) -> (bool, bool) {
    let keep = |class: EndpointClass| {
        class != EndpointClass::RegularDirichlet && policy == EndpointPolicy::EquationAtEndpoint
    };
    (keep(problem.left.class), keep(problem.right.class))
}

/// Assemble the order-`p` standardized operator for `problem` on `grid`.
///
/// The grid must span the problem's working interval exactly. Eliminated
/// endpoint rows and columns are dropped; under
/// [`EndpointPolicy::EquationAtEndpoint`] truncated singular endpoints are
/// collocated with one-sided stencils instead.
pub fn assemble(
    problem: &SlProblem,
    grid: &Grid,
    p: usize,
    policy: EndpointPolicy,
) -> Result<DiscreteOperator> {
    grid.validate()?;
    let (alpha, beta) = problem.working_interval()?;
    let (ga, gb) = grid.span();
    let scale = beta.abs().max(alpha.abs()).max(1.0);
    if (ga - alpha).abs() > 1e-10 * scale || (gb - beta).abs() > 1e-10 * scale {
        return Err(Error::InvalidGrid(format!(
            "grid [{ga}, {gb}] does not span the working interval [{alpha}, {beta}]"
        )));
    }

    let x = grid.points();
    let n = grid.n_intervals();
    // feasibility of the widest plan needed
    stencil_plan(p, 2, 0, n)?;

    let (left_ret, right_ret) = retained_flags(problem, policy);
    let first = if left_ret { 0 } else { 1 };
    let last = if right_ret { n } else { n - 1 };
    if first > last {
        return Err(Error::InvalidGrid("no retained grid points".into()));
    }
    let dim = last - first + 1;

    // bandwidths from the second-derivative plans, whose reach dominates
    let mut kl = 0usize;
    let mut ku = 0usize;
    for gi in first..=last {
        let (s, r) = stencil_plan(p, 2, gi, n)?;
        kl = kl.max(gi.saturating_sub(first.max(gi - s)));
        ku = ku.max((gi + r).min(last) - gi);
    }
    debug_assert!(kl <= p + 1 && ku <= p + 1);

    let mut m = BandedMatrix::zeros(dim, kl, ku);
    for gi in first..=last {
        let row = gi - first;
        let xi = x[gi];
        let (pc, qc, rc, wc) = problem.eval(xi)?;

        let (s, r) = stencil_plan(p, 2, gi, n)?;
        let wts = fd_weights(&x[gi - s..=gi + r], xi, 2)?;
        for (j, &wj) in wts.iter().enumerate() {
            let gj = gi - s + j;
            if gj >= first && gj <= last {
                m.add(row, gj - first, pc * wj / wc);
            }
        }

        if qc != 0.0 {
            let (s1, r1) = stencil_plan(p, 1, gi, n)?;
            let wts1 = fd_weights(&x[gi - s1..=gi + r1], xi, 1)?;
            for (j, &wj) in wts1.iter().enumerate() {
                let gj = gi - s1 + j;
                if gj >= first && gj <= last {
                    m.add(row, gj - first, qc * wj / wc);
                }
            }
        }

        m.add(row, row, rc / wc);
    }

    let v_full = quadrature_weights(grid);
    let weights = v_full[first..=last].to_vec();

    Ok(DiscreteOperator {
        matrix: m,
        weights,
        grid: grid.clone(),
        order: p,
        left_retained: left_ret,
        right_retained: right_ret,
    })
}

/// (M - lambda I) Y on the retained points.
pub fn residual(op: &DiscreteOperator, lambda: f64, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: y.len(),
        });
    }
    let mut r = op.matrix.matvec(y);
    for (ri, yi) in r.iter_mut().zip(y) {
        *ri -= lambda * yi;
    }
    Ok(r)
}
