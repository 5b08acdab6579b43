//! Training math for feedback alignment, verified at toy scale.
//!
//! The toy policy is an order-1 conditional categorical model: small
//! enough to brute-force and finite-difference, yet with the per-token
//! conditioning structure the sequence objectives assume. All functions
//! here are pure; training is single-threaded so loss traces are
//! deterministic.

mod dpo;
mod policy;

pub use dpo::{
    dpo_grad, dpo_loss, implicit_reward, sft_nll, train_toy_dpo, DpoConfig, PreferenceExample,
    TrainingTrace,
};
pub use policy::{sequence_logprob, GradientVector, ToyPolicy};
