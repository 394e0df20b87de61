pub mod commutation;
pub mod error;
pub mod fock;
pub mod invariants;
pub mod ncpoly;
pub mod subproduct;
pub mod tensor_linalg;
pub mod variety;
