//! Frame-bundle simulation of `L = ½Δ + Z` diffusions with stochastic
//! parallel transport, the `𝒬` process, exit times and the localization
//! process `h`.

mod localization;
mod path;
mod rng;
mod step;

pub use localization::{
    build_h, cutoff_constant, cutoff_phi, h_energy_bound, CutoffBall, CutoffEcho, LocalizationProcess, PHI_FLOOR,
};
pub use path::{grid_steps, simulate_path, FramePath, PathEnd, Simulator, StateView, StepView};
pub use rng::{step_noise, words_per_step, NoiseStream};
pub use step::{step_diffusion, FrameState};

pub(crate) use localization::HTracker;
