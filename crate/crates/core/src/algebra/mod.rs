//! Exact algebra over ℚ: polynomials, rational functions, series and
//! quotient algebras.

pub mod bipoly;
pub mod poly;
pub mod quotient;
pub mod series;

pub use bipoly::{BiPoly, BiRat, CompiledBiPoly, CompiledBiRat};
pub use poly::{CompiledPoly, CompiledRatFunc, Poly, RatFunc};
pub use quotient::{CoeffRing, QuotientAlgebra, RatFuncs, Rationals, TruncatedSeries};
pub use series::Laurent;
