//! Discrete-time simulator of an IRS-assisted NOMA uplink mobile-edge-
//! computing system, together with the reinforcement-learning stack that
//! allocates its resources: a centralized mixed-integer DDPG agent and a
//! heterogeneous multi-agent variant trained on a shared cooperative
//! reward derived from a Lyapunov drift-plus-penalty surrogate.
//!
//! Module map:
//! - [`config`]: every physical and training constant, TOML loading,
//!   run manifests.
//! - [`channel`]: mobility, three-segment fading, IRS combination, SIC
//!   ordering and NOMA rates.
//! - [`environment`]: queues, task arrivals, energy accounting, the
//!   per-slot step and state construction.
//! - [`lyapunov`]: drift, surrogate, reward, the drift-bound constant and
//!   the fractional-transform verifier.
//! - [`neural`]: dense networks with analytic gradients, Adam, target
//!   tracking and checkpoints.
//! - [`ddpg`]: replay memory, action mapping, exploration and the
//!   critic/actor updates.
//! - [`agents`]: episode runners wiring agents to the environment, plus
//!   the non-learning baselines.
//! - [`cli`]: experiment front-end (train / evaluate / bench / selftest).

pub mod agents;
pub mod channel;
pub mod cli;
pub mod config;
pub mod ddpg;
pub mod environment;
pub mod lyapunov;
pub mod neural;
pub mod selftest;
