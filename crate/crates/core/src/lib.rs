//! Exact topological recursion on degree-2 spectral curves `y^2 = R(x)` with
//! the global involution `z -> -z`, together with the machinery it feeds:
//! loop equations, the time-deformation operator `L(x)`, divisor wave
//! functions, quantum curves, Gelfand-Dikii hierarchies, and a numeric
//! elliptic parameter dictionary.
//!
//! Everything outside [`elliptic`] is exact: identities are verified as
//! canonical-form equalities of multivariate rational functions, never by
//! numeric sampling.

pub mod error;
pub mod vars;
pub mod poly;
pub mod ratexpr;
pub mod grammar;
pub mod series;
pub mod hbar;
pub mod logexpr;
pub mod curve;
pub mod recursion;
pub mod loopsys;
pub mod wave;
pub mod gd;
pub mod lax;
pub mod elliptic;
pub mod accept;

pub use error::{EngineError, Result};
pub use poly::{MPoly, Q};
pub use ratexpr::RatExpr;
