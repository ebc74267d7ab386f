//! Simulation and control of a 5-DoF underactuated boom crane.
//!
//! Generalized coordinates are `q = [alpha, beta, d, theta1, theta2]`: slew,
//! luff, rope length, tangential and radial payload sway. The first three are
//! actuated by `u = [slew torque, luff torque, rope force]`.

pub mod control;
pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod sim;
pub mod stability;
pub mod telemetry;
pub mod wind;

pub use error::{CraneError, Result};
pub use model::{ActuationInput, CraneParameters, GeneralizedState};
