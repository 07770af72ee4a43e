//! Sturm-Liouville problem definitions:
//!
//! ```text
//! p(x) y'' + q(x) y' + r(x) y = lambda w(x) y
//! ```
//!
//! with Dirichlet conditions at both ends of the working interval, plus the
//! change of variables that maps [0, inf) onto [0, 1) and the endpoint
//! truncation used near singular ends.

use crate::error::{Error, Result};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// One coefficient function together with a display expression for output.
#[derive(Clone)]
pub struct CoefFn {
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    expr: String,
}

impl CoefFn {
    pub fn new(expr: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CoefFn {
            func: Arc::new(f),
            expr: expr.into(),
        }
    }

    pub fn constant(value: f64) -> Self {
        CoefFn::new(format!("{value}"), move |_| value)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    pub fn expr(&self) -> &str {
        &self.expr
    }
}

impl fmt::Debug for CoefFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefFn({})", self.expr)
    }
}

#[derive(Debug, Clone)]
pub struct Coefficients {
    pub p: CoefFn,
    pub q: CoefFn,
    pub r: CoefFn,
    pub w: CoefFn,
}

/// Endpoint classification in the usual Sturm-Liouville taxonomy. Regular
/// endpoints carry an honest Dirichlet condition; limit-circle non-oscillatory
/// and limit-point ends are singular and handled through truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointClass {
    RegularDirichlet,
    Lcno,
    Lp,
}

impl EndpointClass {
    fn label(self) -> &'static str {
        match self {
            EndpointClass::RegularDirichlet => "regular-dirichlet",
            EndpointClass::Lcno => "limit-circle-nonoscillatory",
            EndpointClass::Lp => "limit-point",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EndpointSpec {
    pub class: EndpointClass,
    /// Offset of the working endpoint from the formal one, for singular ends.
    pub truncation: Option<f64>,
}

impl EndpointSpec {
    pub fn regular() -> Self {
        EndpointSpec {
            class: EndpointClass::RegularDirichlet,
            truncation: None,
        }
    }

    pub fn singular(class: EndpointClass) -> Self {
        EndpointSpec {
            class,
            truncation: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlProblem {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    /// Formal interval; the right end may be `f64::INFINITY` before the
    /// change of variables.
    pub interval: (f64, f64),
    pub coefficients: Coefficients,
    pub left: EndpointSpec,
    pub right: EndpointSpec,
}

impl SlProblem {
    /// Interval actually discretized: the formal one shrunk by any
    /// truncation offsets.
    pub fn working_interval(&self) -> Result<(f64, f64)> {
        let (a, b) = self.interval;
        if !b.is_finite() {
            return Err(Error::InfiniteInterval);
        }
        let alpha = a + self.left.truncation.unwrap_or(0.0);
        let beta = b - self.right.truncation.unwrap_or(0.0);
        if !(alpha < beta) {
            return Err(Error::InvalidTruncation(format!(
                "working interval [{alpha}, {beta}] is empty"
            )));
        }
        Ok((alpha, beta))
    }

    /// Evaluate all four coefficients at `x`, rejecting non-finite values
    /// and non-positive weights.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64, f64)> {
        let c = &self.coefficients;
        let vals = [
            ('p', c.p.eval(x)),
            ('q', c.q.eval(x)),
            ('r', c.r.eval(x)),
            ('w', c.w.eval(x)),
        ];
        for (name, v) in vals {
            if !v.is_finite() {
                return Err(Error::CoefficientEval { name, x });
            }
        }
        let w = vals[3].1;
        if w <= 0.0 {
            return Err(Error::NonPositiveWeight { x, value: w });
        }
        Ok((vals[0].1, vals[1].1, vals[2].1, w))
    }

    /// JSON description of the problem for run records.
    pub fn definition(&self) -> Value {
        let end = |e: &EndpointSpec| {
            json!({
                "class": e.class.label(),
                "truncation": e.truncation,
            })
        };
        let bound = |v: f64| -> Value {
            if v.is_finite() {
                json!(v)
            } else {
                json!("inf")
            }
        };
        json!({
            "name": self.name,
            "params": self.params,
            "interval": [bound(self.interval.0), bound(self.interval.1)],
            "working_interval": self.working_interval().ok().map(|(a, b)| vec![a, b]),
            "endpoints": { "left": end(&self.left), "right": end(&self.right) },
            "coefficients": {
                "p": self.coefficients.p.expr(),
                "q": self.coefficients.q.expr(),
                "r": self.coefficients.r.expr(),
                "w": self.coefficients.w.expr(),
            },
        })
    }
}

/// Forward map of the change of variables: tau = 1 - 1/sqrt(1 + x).
pub fn tau_of_x(x: f64) -> f64 {
    1.0 - 1.0 / (1.0 + x).sqrt()
}

/// Inverse map: x = (2 tau - tau^2) / (1 - tau)^2.
pub fn x_of_tau(tau: f64) -> f64 {
    let om = 1.0 - tau;
    (2.0 * tau - tau * tau) / (om * om)
}

/// Rewrite a problem posed on [0, inf) in Liouville form (p = -1, q = 0)
/// as an equivalent problem in tau = 1 - 1/sqrt(1 + x) on [0, 1).
///
/// Substituting y(x) = u(tau(x)) into -y'' + r(x) y = lambda w(x) y gives
///
/// ```text
/// -(1 - tau)^6/4 u'' + 3/4 (1 - tau)^5 u' + r(x(tau)) u = lambda w(x(tau)) u
/// ```
pub fn transform_to_finite(problem: &SlProblem) -> Result<SlProblem> {
    let (a, b) = problem.interval;
    if a != 0.0 || !b.is_infinite() {
        return Err(Error::UnsupportedTransformation(format!(
            "change of variables expects the interval [0, inf), got [{a}, {b}]"
        )));
    }
    for &x in &[0.3, 1.7, 5.0, 23.0] {
        let p = problem.coefficients.p.eval(x);
        let q = problem.coefficients.q.eval(x);
        if (p + 1.0).abs() > 1e-10 || q.abs() > 1e-10 {
            return Err(Error::UnsupportedTransformation(
                "problem is not in Liouville form (p = -1, q = 0)".into(),
            ));
        }
    }

    let r_orig = problem.coefficients.r.clone();
    let w_orig = problem.coefficients.w.clone();
    let coefficients = Coefficients {
        p: CoefFn::new("-(1 - tau)^6 / 4", |tau| {
            let om = 1.0 - tau;
            -om.powi(6) / 4.0
        }),
        q: CoefFn::new("3/4 * (1 - tau)^5", |tau| 0.75 * (1.0 - tau).powi(5)),
        r: CoefFn::new(
            format!("({}) with x = (2 tau - tau^2)/(1 - tau)^2", r_orig.expr()),
            move |tau| r_orig.eval(x_of_tau(tau)),
        ),
        w: CoefFn::new(
            format!("({}) with x = (2 tau - tau^2)/(1 - tau)^2", w_orig.expr()),
            move |tau| w_orig.eval(x_of_tau(tau)),
        ),
    };

    Ok(SlProblem {
        name: problem.name.clone(),
        params: problem.params.clone(),
        interval: (0.0, 1.0),
        coefficients,
        // x = 0 maps to tau = 0 and keeps its character; the point at
        // infinity lands on tau = 1 and stays singular.
        left: problem.left,
        right: EndpointSpec {
            class: if problem.right.class == EndpointClass::RegularDirichlet {
                EndpointClass::Lp
            } else {
                problem.right.class
            },
            truncation: problem.right.truncation,
        },
    })
}

/// Pull the working endpoints in by `delta_left` / `delta_right`. Offsets
/// accumulate with any truncation already present.
pub fn truncate(
    problem: &SlProblem,
    delta_left: Option<f64>,
    delta_right: Option<f64>,
) -> Result<SlProblem> {
    let mut out = problem.clone();
    let (a, b) = out.interval;
    if let Some(d) = delta_left {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidTruncation(format!(
                "left offset must be positive and finite, got {d}"
            )));
        }
        if !a.is_finite() {
            return Err(Error::InvalidTruncation(
                "cannot truncate an infinite left endpoint".into(),
            ));
        }
        out.left.truncation = Some(out.left.truncation.unwrap_or(0.0) + d);
    }
    if let Some(d) = delta_right {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidTruncation(format!(
                "right offset must be positive and finite, got {d}"
            )));
        }
        if !b.is_finite() {
            return Err(Error::InvalidTruncation(
                "cannot truncate an infinite right endpoint; transform it first".into(),
            ));
        }
        out.right.truncation = Some(out.right.truncation.unwrap_or(0.0) + d);
    }
    // reject collapsed intervals eagerly
    out.working_interval()?;
    Ok(out)
}

/// Built-in problems. Parameters:
///
/// * `mathieu`: `c` (potential amplitude, default 5);
/// * `airy`, `laguerre`: `delta` (truncation offset, default 1e-4).
///
/// `airy` and `laguerre` are returned already transformed to [0, 1) and
/// truncated, so they discretize directly.
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<SlProblem> {
    let check_params = |allowed: &[&str]| -> Result<()> {
        for key in params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::UnknownParameter {
                    problem: name.to_string(),
                    param: key.clone(),
                });
            }
        }
        Ok(())
    };

    match name {
        "mathieu" => {
            check_params(&["c"])?;
            let c = params.get("c").copied().unwrap_or(5.0);
            Ok(SlProblem {
                name: "mathieu".into(),
                params: BTreeMap::from([("c".into(), c)]),
                interval: (0.0, 40.0),
                coefficients: Coefficients {
                    p: CoefFn::constant(-1.0),
                    q: CoefFn::constant(0.0),
                    r: CoefFn::new(format!("{c} * cos(x)"), move |x| c * x.cos()),
                    w: CoefFn::constant(1.0),
                },
                left: EndpointSpec::regular(),
                right: EndpointSpec::regular(),
            })
        }
        "pruess" => {
            check_params(&[])?;
            Ok(SlProblem {
                name: "pruess".into(),
                params: BTreeMap::new(),
                interval: (0.0, 4.0),
                coefficients: Coefficients {
                    p: CoefFn::constant(-1.0),
                    q: CoefFn::constant(0.0),
                    r: CoefFn::new("ln(x)", |x| x.ln()),
                    w: CoefFn::constant(1.0),
                },
                left: EndpointSpec::regular(),
                right: EndpointSpec::regular(),
            })
        }
        "airy" => {
            check_params(&["delta"])?;
            let delta = params.get("delta").copied().unwrap_or(1e-4);
            let base = SlProblem {
                name: "airy".into(),
                params: BTreeMap::from([("delta".into(), delta)]),
                interval: (0.0, f64::INFINITY),
                coefficients: Coefficients {
                    p: CoefFn::constant(-1.0),
                    q: CoefFn::constant(0.0),
                    r: CoefFn::new("x", |x| x),
                    w: CoefFn::constant(1.0),
                },
                left: EndpointSpec::regular(),
                right: EndpointSpec::singular(EndpointClass::Lp),
            };
            truncate(&transform_to_finite(&base)?, None, Some(delta))
        }
        "laguerre" => {
            check_params(&["delta"])?;
            let delta = params.get("delta").copied().unwrap_or(1e-4);
            let base = SlProblem {
                name: "laguerre".into(),
                params: BTreeMap::from([("delta".into(), delta)]),
                interval: (0.0, f64::INFINITY),
                coefficients: Coefficients {
                    p: CoefFn::constant(-1.0),
                    q: CoefFn::constant(0.0),
                    r: CoefFn::new("x^2 + 3/(4 x^2)", |x| x * x + 0.75 / (x * x)),
                    w: CoefFn::constant(1.0),
                },
                left: EndpointSpec::singular(EndpointClass::Lp),
                right: EndpointSpec::singular(EndpointClass::Lp),
            };
            truncate(&transform_to_finite(&base)?, Some(delta), Some(delta))
        }
        "sine" => {
            check_params(&[])?;
            Ok(SlProblem {
                name: "sine".into(),
                params: BTreeMap::new(),
                interval: (0.0, std::f64::consts::PI),
                coefficients: Coefficients {
                    p: CoefFn::constant(-1.0),
                    q: CoefFn::constant(0.0),
                    r: CoefFn::constant(0.0),
                    w: CoefFn::constant(1.0),
                },
                left: EndpointSpec::regular(),
                right: EndpointSpec::regular(),
            })
        }
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}
