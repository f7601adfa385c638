pub mod error;
pub mod hand_model;
pub mod harness;
pub mod metrics;
pub mod palm_frame;
pub mod retarget;
pub mod robot_tripod;
pub mod se3;
pub mod tripod_intent;

pub use error::{Error, Result};
