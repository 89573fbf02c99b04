//! Timing-aware scheduling and resource estimation for shuttling-based
//! neutral-atom and trapped-ion style architectures.

pub mod compiler;
pub mod css_code;
pub mod distillation;
pub mod estimator;
pub mod factory_sim;
pub mod game;
pub mod gf2;
pub mod stab_oracle;
pub mod timing;
