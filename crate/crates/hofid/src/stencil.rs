//! Finite-difference weights on arbitrary nodes, stencil placement rules,
//! and trapezoidal quadrature weights.
//!
//! A stencil approximates y^(nu) at a grid point x_i from the s points to its
//! left and the r points to its right:
//!
//! ```text
//!   y^(nu)(x_i)  ~=  sum_{j=-s..r}  w_{s+j} * y_{i+j}
//! ```
//!
//! The weights are the unique solution of the local moment system
//! `sum_j w_j (x_j - x_i)^m / m! = delta(m, nu)` for m = 0..len-1, which makes
//! the formula exact on polynomials of degree len-1 and of approximation
//! order s + r - nu + 1 in general (one higher on symmetric nodes with nu
//! even and constant spacing).

use crate::discretize::Grid;
use crate::error::{Error, Result};

/// Spacing ratio between adjacent stencil nodes beyond which the moment
/// system is rejected as hopelessly ill-conditioned. Graded meshes built by
/// the adaptive loop stay at ratio 2, so hitting this means a caller bug.
pub const MAX_SPACING_RATIO: f64 = 16.0;

/// A computed finite-difference formula with its placement.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub nu: usize,
    pub s: usize,
    pub r: usize,
    /// Absolute weights (the 1/h^nu normalization is already folded in).
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Build the stencil for derivative `nu` of order `p` at row `i` of a
    /// grid whose last point index is `n`.
    pub fn at(points: &[f64], i: usize, p: usize, nu: usize) -> Result<Self> {
        let n = points.len() - 1;
        let (s, r) = stencil_plan(p, nu, i, n)?;
        let weights = fd_weights(&points[i - s..=i + r], points[i], nu)?;
        Ok(Stencil { nu, s, r, weights })
    }

    /// Apply to samples `y` on the full grid, centered at point `i`.
    pub fn apply(&self, y: &[f64], i: usize) -> f64 {
        let lo = i - self.s;
        self.weights
            .iter()
            .zip(&y[lo..=i + self.r])
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Weights approximating the nu-th derivative at `x_eval` from samples at
/// `nodes`. `x_eval` must be one of the nodes and the nodes must be strictly
/// increasing with adjacent spacing ratios below [`MAX_SPACING_RATIO`].
///
/// The moment system is solved in shifted-and-scaled coordinates
/// t = (x - x_eval)/h with h the largest node distance, triangularized in the
/// Newton basis so that strongly graded (but admissible) node sets do not
/// lose accuracy to Vandermonde conditioning.
pub fn fd_weights(nodes: &[f64], x_eval: f64, nu: usize) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n == 0 {
        return Err(Error::BadStencil("empty node set".into()));
    }
    if nu > n - 1 {
        return Err(Error::BadStencil(format!(
            "derivative order {nu} needs at least {} nodes, got {n}",
            nu + 1
        )));
    }
    for pair in nodes.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::BadStencil(format!(
                "nodes not strictly increasing near x = {}",
                pair[0]
            )));
        }
    }
    for trip in nodes.windows(3) {
        let (hl, hr) = (trip[1] - trip[0], trip[2] - trip[1]);
        let ratio = (hl / hr).max(hr / hl);
        if ratio > MAX_SPACING_RATIO {
            return Err(Error::IllConditionedStencil {
                x: trip[1],
                ratio,
                limit: MAX_SPACING_RATIO,
            });
        }
    }

    let scale = nodes
        .iter()
        .fold(0.0f64, |m, &x| m.max((x - x_eval).abs()))
        .max(f64::MIN_POSITIVE);
    if n > 1 {
        let off = nodes
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min((x - x_eval).abs()));
        if off > 1e-12 * scale {
            return Err(Error::BadStencil(format!(
                "evaluation point {x_eval} is not a stencil node"
            )));
        }
    }

    let t: Vec<f64> = nodes.iter().map(|&x| (x - x_eval) / scale).collect();

    // Newton polynomials pi_m(t) = prod_{i<m} (t - t_i) vanish at t_0..t_{m-1},
    // so expressing the moment conditions in that basis gives a triangular
    // system: equation m only involves weights c_m..c_{n-1}.
    //
    // Right-hand side b_m = d^nu/dt^nu pi_m at t = 0, read off the monomial
    // coefficients of pi_m (coefficients stay O(1) since |t_j| <= 1).
    let nu_fact: f64 = (1..=nu).map(|m| m as f64).product();
    let mut b = vec![0.0; n];
    let mut coeff: Vec<f64> = vec![1.0];
    for m in 0..n {
        if nu < coeff.len() {
            b[m] = nu_fact * coeff[nu];
        }
        // coeff(t) *= (t - t_m) for the next round
        let mut next = vec![0.0; coeff.len() + 1];
        for (j, &c) in coeff.iter().enumerate() {
            next[j + 1] += c;
            next[j] -= t[m] * c;
        }
        coeff = next;
    }

    // Back substitution on the triangular Newton-basis system.
    let mut c = vec![0.0; n];
    for m in (0..n).rev() {
        let mut acc = b[m];
        for j in m + 1..n {
            acc -= c[j] * newton_eval(&t, m, t[j]);
        }
        let diag = newton_eval(&t, m, t[m]);
        c[m] = acc / diag;
    }

    let h_pow = scale.powi(nu as i32);
    Ok(c.into_iter().map(|v| v / h_pow).collect())
}

/// pi_m(x) = prod_{i<m} (x - t_i)
fn newton_eval(t: &[f64], m: usize, x: f64) -> f64 {
    t[..m].iter().fold(1.0, |acc, &ti| acc * (x - ti))
}

/// Left/right reach (s, r) of the order-`p` stencil for derivative `nu` at
/// row `i` of a grid whose last point index is `n`.
///
/// Interior rows get the symmetric plan s = r = p/2. Rows too close to an
/// endpoint are shifted, keeping s + r = p + nu - 1 so the one-sided formula
/// still has order p.
pub fn stencil_plan(p: usize, nu: usize, i: usize, n: usize) -> Result<(usize, usize)> {
    if p < 2 || p > 12 || p % 2 != 0 {
        return Err(Error::BadStencil(format!(
            "order must be an even integer in 2..=12, got {p}"
        )));
    }
    if nu == 0 || nu > 2 {
        return Err(Error::BadStencil(format!(
            "stencil plans cover first and second derivatives, got nu = {nu}"
        )));
    }
    if i > n {
        return Err(Error::BadStencil(format!("row {i} outside grid 0..={n}")));
    }
    if n + 1 < p + nu {
        return Err(Error::GridTooCoarse {
            points: n + 1,
            order: p,
            nu,
            needed: p + nu,
        });
    }
    let half = p / 2;
    let (s, r) = if i >= half && n - i >= half {
        (half, half)
    } else if i < half {
        (i, p + nu - 1 - i)
    } else {
        (p + nu - 1 - (n - i), n - i)
    };
    debug_assert!(i >= s && i + r <= n);
    Ok((s, r))
}

/// Trapezoidal quadrature weights for the grid: integral ~= sum v_i y_i.
pub fn quadrature_weights(grid: &Grid) -> Vec<f64> {
    let x = grid.points();
    let n = x.len() - 1;
    let mut v = vec![0.0; n + 1];
    for i in 1..=n {
        let h = x[i] - x[i - 1];
        v[i - 1] += 0.5 * h;
        v[i] += 0.5 * h;
    }
    v
}

/// Barycentric Lagrange evaluation of the polynomial through (xs, ys) at `x`.
/// Exact when `x` coincides with a node, which makes re-interpolation onto
/// the same grid the identity.
pub fn lagrange_value(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let scale = (xs[xs.len() - 1] - xs[0]).abs().max(f64::MIN_POSITIVE);
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        let d = x - xj;
        if d.abs() < 1e-300 * scale.max(1.0) || d == 0.0 {
            return yj;
        }
        // classic barycentric weight 1 / prod_{m != j} (x_j - x_m),
        // computed in scaled differences to dodge overflow on tiny spacings
        let mut wj = 1.0;
        for (m, &xm) in xs.iter().enumerate() {
            if m != j {
                wj /= (xj - xm) / scale;
            }
        }
        let q = wj / d;
        num += q * yj;
        den += q;
    }
    num / den
}
