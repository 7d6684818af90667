//! Action-generalization gap laboratory.

pub mod augmentation;
pub mod cli;
pub mod dqn;
pub mod envs;
pub mod harness;
pub mod nn;
pub mod qcore;
pub mod seeding;
