//! Interaction-grounded learning (IGL) with personalized, context-dependent
//! feedback on finite synthetic environments.
//!
//! The learner never sees rewards. It observes `(context, action, feedback)`
//! where feedback depends on the context and the latent binary reward but not
//! on the action. The crate provides:
//!
//! * [`env`]: generative environments plus exact ground-truth oracles
//!   (posterior over actions, policy values, lower-bound reward table).
//! * [`classes`]: finite reward / decoder classes and the induced
//!   inverse-kinematics class.
//! * [`estimation`]: ERM over the inverse-kinematics class and the Lipschitz
//!   reward decoder.
//! * [`offpolicy`]: explore-then-exploit learner.
//! * [`onpolicy`]: inverse-gap-weighting learner driven by an
//!   exponentially weighted regression oracle.
//! * [`harness`]: experiment orchestration used by the `igl` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classes;
pub mod env;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod offpolicy;
pub mod onpolicy;
pub mod run;

pub use classes::{build_ik, greedy_policy, make_classes, FeedbackDecoder, FunctionClasses, IkHypothesis, RewardFunction};
pub use env::{make_environment, DeterministicPolicy, EnvironmentSpec, GeneratorParams, InteractionRecord};
pub use error::{Error, Result};
pub use estimation::{decode_reward, erm_fit, lipschitz_clamp, sigma_default, DecoderParams, ErmFit, UniformSample};
pub use offpolicy::{run_offpolicy, select_policy, tuned_explore_n, OffPolicyConfig};
pub use onpolicy::{igw_distribution, run_onpolicy, GammaSchedule, OnPolicyConfig, RegressionOracleState};
pub use run::{Algorithm, RunResult};
