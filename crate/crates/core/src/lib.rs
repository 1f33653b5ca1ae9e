pub mod agents;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod metrics;
pub mod qd;
pub mod report;
pub mod synth;
pub mod vae;
