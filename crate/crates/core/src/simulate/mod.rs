mod domain;
pub mod lemma1;
mod plan;
pub mod rng;

pub use domain::{grid_domain_prob, mc_domain_prob, quad_domain_prob};
pub use lemma1::{lemma1_decomposition_check, Lemma1Report, MomentCheck};
pub use plan::{
    replicate_samples, run_path, simulate_plan, simulate_stage_pairs, PairReport, SimReport,
};
