//! Multi-task reinforcement-learning stack for studying forgetting under
//! different task schedules: gridworld tasks, a from-scratch PPO learner,
//! spaced-repetition and value-error schedulers, and experiment harnesses.

pub mod gridworld;
pub mod experiments;
pub mod learner;
pub mod schedulers;
