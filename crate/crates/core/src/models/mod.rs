//! The product-coupling standard model `U = e^{iλA⊗B}` and its fixtures.

pub mod fixtures;
pub mod product;
pub mod quadrature;

pub use fixtures::{build_cnot, build_controlled_rotation, build_shift_model, plus_state, uniform_state, ShiftModel};
pub use product::{build_product_scheme, ProductCouplingSpec, ProductScheme};
