pub mod config;
pub mod contact;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod gait;
pub mod kinematics;
pub mod math;
pub mod sim;
pub mod state;
pub mod sweep;
pub mod vlip;

pub use error::{Error, Result};
