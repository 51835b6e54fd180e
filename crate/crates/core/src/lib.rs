pub mod dsl;
pub mod flux;
pub mod riemann;
pub mod stationary;
pub mod tracker;
pub mod validation;
