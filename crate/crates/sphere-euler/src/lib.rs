pub mod blowup;
pub mod characteristics;
pub mod elliptic;
pub mod euler;
pub mod expr;
pub mod field;
pub mod hodograph;
pub mod invariants;
pub mod ode;
pub mod quad;
pub mod reduction;
pub mod transforms;
pub mod verify;
