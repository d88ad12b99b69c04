//! Path, observation-time and noise simulation with exact oracle bookkeeping.
//!
//! The simulated log price follows
//!
//! ```text
//! X_t = X_0 + ∫ b_s ds + ∫ σ_s dB_s + (compound Poisson jumps)
//! ```
//!
//! discretized by Euler–Maruyama on a grid that contains every observation
//! time and every jump time, so that sampling a path is an exact grid lookup
//! and jump increments land in exactly one observation interval.

mod model;
mod observe;
mod path;
mod pipeline;
mod sampling;

pub use model::{AlphaSpec, DriftSpec, JumpModel, JumpSizeDist, ModelSpec, NoiseFamily, NoiseModel, VolModel};
pub use observe::{apply_noise, sample_process, sigma_at_times};
pub use path::{default_euler_step, simulate_path, simulate_path_with_times, JumpEvent, PathOracles, PathRecord};
pub use pipeline::ObservationPipeline;
pub use sampling::{generate_times, mesh_stats, GSpec, SamplingScheme, SamplingTimes, SpacingDist};
