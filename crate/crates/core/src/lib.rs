//! Diffusion approximations, simulation and exact solvers for overloaded
//! many-server queues with customer abandonment (GI/GI/n+GI).
//!
//! * [`distributions`]: parametric laws for interarrival, service and patience times.
//! * [`diffusion`]: closed-form performance formulas and the Gaussian
//!   steady-state approximations of virtual waiting time and queue length.
//! * [`simulator`]: discrete-event simulator with batch-means output analysis.
//! * [`fclt`]: Monte Carlo laboratory for scaled superpositions of stationary
//!   renewal processes.
//! * [`mam`]: exact stationary distribution of M/H/n+M via a level-dependent
//!   quasi-birth-death chain.
//! * [`staffing`]: minimal server counts for service-level and abandonment targets.

pub mod diffusion;
pub mod distributions;
pub mod fclt;
pub mod mam;
pub mod par;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod staffing;
pub mod stats;

pub use diffusion::{DiffusionSummary, QueueSpec};
pub use distributions::{Distribution, DistributionConfig, DistributionError};
pub use par::Exec;
pub use rng::StreamKey;
