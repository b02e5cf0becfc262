//! Echo state networks: random reservoir, leaky tanh state update and a
//! ridge-regression linear readout on `[1; u(n); x(n)]`.

mod config;
mod model;
mod persist;

pub use config::{EsnConfig, InitState, LeakMode, StateNoise};
pub use model::{init_esn, init_member, init_state, stream, EsnModel, Harvest};
pub use persist::{load_model, model_to_string, parse_model, save_model};
