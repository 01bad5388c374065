//! A low-complexity wavelet image codec whose per-band gain and priority
//! tables can be tuned, plus a CMA-ES harness that tunes them for a fitness
//! metric over an image corpus.

pub mod cma;
pub mod codec;
pub mod dwt;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod pixel;
pub mod synthetic;
pub mod weights;

pub use codec::{decode, decode_bytes, encode, Bitstream, Header};
pub use error::{Error, Result};
pub use harness::{Evaluator, FitnessSpec, Metric, RunRecord};
pub use pixel::{LabelMap, RasterImage};
pub use weights::{default_table, vector_to_table, WeightTable, WeightVector};
