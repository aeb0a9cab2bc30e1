//! Safe-control laboratory: model-based safety-envelope design by analytic
//! centering, residual control with a safety-embedded reward and runtime
//! certificate monitoring, knowledge-edited networks over monomial-augmented
//! inputs, and a friction-true cart-pole testbed with bounded random
//! disturbances.

pub mod cartpole;
pub mod design;
pub mod disturbance;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod net;
pub mod phyn;
pub mod residual;
pub mod reward;
pub mod rngutil;

pub mod ddpg;

pub use design::{
    compute_closed_loop, solve_design, solve_design_bounded, spectral_radius, verify_lmi,
    DesignConfig, DesignSolution, PlantModel,
};
pub use geometry::{
    check_envelope_containment, ellipsoid_support, envelope_membership, normalize_safety_set,
    set_membership, NormalizedSafetySet, SafetyEnvelope, SafetySet,
};
pub use phyn::{augment, build_edit, even_monomial_basis, EditedNetwork, KnowledgeSet};
pub use residual::{combine, model_based_action, ActionLimits};
pub use reward::{
    clf_reward, performance_subreward, safety_subreward, theorem1_monitor, total_reward,
    Certificate, RewardContext,
};
