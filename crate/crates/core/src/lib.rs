//! Numerical curvature engine for (α,β)-Finsler metrics `F = α φ(β/α)`.
//!
//! Fiber derivatives are exact truncated Taylor jets ([`jets`]); base-point
//! derivatives are Richardson-extrapolated central differences. On top of
//! that sit the Riemannian one-form calculus ([`geometry`]), the φ families
//! ([`phi`]), fiber-level Finsler data ([`finsler`]), sprays ([`spray`]),
//! the curvature bundle ([`curvature`]), metric classifiers ([`classify`])
//! and a catalog of worked examples ([`catalog`]).

pub mod catalog;
pub mod classify;
pub mod curvature;
pub mod error;
pub mod exprparse;
pub mod finsler;
pub mod geometry;
pub mod jets;
pub mod phi;
pub mod quad;
pub mod sampling;
pub mod spray;
pub mod tensor;
pub mod validation;

pub use error::{Error, Result};
pub use jets::JetScalar;
