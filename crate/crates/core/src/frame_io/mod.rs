//! Frame and trajectory ingestion plus synthetic dataset generators.

mod frame;
pub mod pnm;
pub mod scenario;
pub mod synth;

pub use frame::{luma, Frame};
pub use pnm::{load_frame_sequence, save_frame_sequence};
pub use scenario::{
    synth_team_scenario, Action, AgentTrajectory, Role, Sample, Scenario, ScenarioSpec, NOISE_MODERATE,
};
pub use synth::{synth_frames, SceneSpec, ShapeMotion, SynthClip};
