//! Centralized messaging agent for parameter-shared independent PPO learners.
//!
//! A central actor-critic observes every local observation plus the previous
//! joint action and emits one bounded message vector per local agent. Local
//! agents share a single actor-critic and act on their own observation
//! concatenated with their message. Both levels learn with PPO at the same time.

pub mod env;
pub mod exp;
pub mod hammer;
pub mod nn;
pub mod ppo;
