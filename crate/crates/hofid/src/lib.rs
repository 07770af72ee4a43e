//! Eigenvalue and eigenfunction computation for Sturm-Liouville problems
//!
//! ```text
//! p(x) y'' + q(x) y' + r(x) y = lambda w(x) y,      y(a) = y(b) = 0
//! ```
//!
//! using finite differences of order 2 to 12 on nonuniform grids. The solver
//! picks a single eigenvalue by its index k (the number of interior sign
//! changes of the eigenfunction), bootstraps it from a coarse order-2 run,
//! and then walks an order cascade, equidistributing the mesh against an
//! error estimate at each stage until the estimate drops below the stage
//! tolerance.
//!
//! Modules follow the pipeline:
//!
//! * [`stencil`]: finite-difference weights on arbitrary nodes, stencil
//!   placement, trapezoidal quadrature;
//! * [`problem`]: problem definitions, the semi-infinite-to-unit-interval
//!   change of variables, endpoint truncation, the built-in catalog;
//! * [`discretize`]: grids, banded storage, and assembly of the discrete
//!   operator;
//! * [`eigen`]: banded LU, the coarse full-spectrum bootstrap, inverse
//!   iteration with Rayleigh-quotient acceleration, normalization;
//! * [`adapt`]: the error estimate, mesh equidistribution, and the driver
//!   that ties everything together.
//!
//! ```
//! use hofid::{catalog, solve, SolverConfig};
//! use std::collections::BTreeMap;
//!
//! let problem = catalog("sine", &BTreeMap::new()).unwrap();
//! let sol = solve(&problem, 2, &SolverConfig::default()).unwrap();
//! assert!((sol.lambda - 9.0).abs() < 1e-6);
//! assert_eq!(sol.zero_count, 2);
//! ```

pub mod adapt;
pub mod discretize;
pub mod eigen;
mod error;
pub mod problem;
pub mod stencil;

pub use adapt::{
    equidistribute, error_function, interpolate_to, solve, solve_fixed_order, MeshIter, Solution,
    SolverConfig, StageRecord,
};
pub use discretize::{assemble, residual, BandedMatrix, DiscreteOperator, EndpointPolicy, Grid};
pub use eigen::{
    banded_lu, count_sign_changes, default_sign_threshold, eig_compute, init_approx, normalize,
    Bootstrap, EigenPair,
};
pub use error::{Error, Result};
pub use problem::{catalog, transform_to_finite, truncate, SlProblem};
