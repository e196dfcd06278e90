//! Column objectives as higher-order binary polynomials and their
//! reduction to quadratic (QUBO) form.

mod poly;
mod qubo;

pub use poly::{
    build_column_hubo, build_column_hubo_capped, default_strength, eval_hubo, Assignment,
    HuboPoly, DEFAULT_EXPANSION_CAP,
};
pub use qubo::{eval_qubo, hubo_to_qubo, is_sound_reduction, QuboModel};
