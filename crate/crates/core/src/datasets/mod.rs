//! Benchmark generators, preprocessing transforms and CSV I/O.

mod csvio;
mod mackey_glass;
mod preprocess;
mod synthetic;

pub use csvio::{fmt_f64, load_csv, save_columns, save_csv};
pub use mackey_glass::{mackey_glass, MgParams};
pub use preprocess::{fit_preprocess, PreprocessKind, Preprocessor};
pub use synthetic::{arma_from_innovations, gen_arma, gen_sine, ARMA_PHI, ARMA_THETA};
