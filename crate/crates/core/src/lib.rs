//! Computation on Carnot groups of arbitrary step.
//!
//! The crate is layered bottom-up: exact stratified Lie algebras ([`algebra`]),
//! the group law in exponential coordinates ([`group`]), left-invariant fields
//! acting on polynomials ([`fields`]), the derivative-word rewriting engine
//! ([`rewrite`]), grid numerics ([`numerics`]) and the regularity checks built
//! on top of them ([`regularity`]).

pub mod algebra;
pub mod fields;
pub mod group;
pub mod numerics;
pub mod par;
pub mod poly;
pub mod q;
pub mod regularity;
pub mod rewrite;

pub use algebra::{AlgebraElement, AlgebraError, AlgebraSpec, BasisLabel};
pub use group::{GroupLaw, Point};
pub use q::Q;
