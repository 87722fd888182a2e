//! Feed-forward substrate: dense layers with exact analytic gradients,
//! weighted binary cross-entropy, Adam, and parameter initialization.
//!
//! Backpropagation is written out layer by layer instead of going through a
//! tape. The architectures built on top are small fixed DAGs, and explicit
//! backward passes keep every gradient path visible to the finite-difference
//! checks in the test suites.

mod activation;
mod adam;
mod dense;
mod init;
mod loss;
mod params;

pub use activation::{sigmoid, Activation};
pub use adam::Adam;
pub use dense::{DenseCache, DenseGrads, DenseLayer};
pub use init::{init_params, InitScheme};
pub use loss::{bce_accumulate, bce_loss, BCE_CLAMP};
pub use params::{BlockMut, BlockRef};
