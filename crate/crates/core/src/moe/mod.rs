//! Mixture-of-experts layer with noisy-label-aware gating.
//!
//! The layer sits between a model's dense trunk and its output head:
//!
//! ```text
//!   h (batch×hidden) ──────────────► experts E_1..E_m ──► Σ β_i·E_i(h)
//!   features (batch×d) ─┐
//!   noisy labels ─► Emb ┴► gate ──► β (top-k softmax) ──┘
//! ```
//!
//! The gate sees the raw features concatenated with a learned embedding of
//! the sample's noisy labels, so expert activation can specialize on the
//! pattern of sources that flag a sample. Per sample exactly `k` experts get
//! nonzero weight; kept weights are renormalized to sum to 1, so the output
//! stays a convex combination of expert outputs.
//!
//! Backward treats the hard top-k mask as constant (gradients flow through
//! the pre-mask softmax of the selected entries), which is why the
//! finite-difference suites check at points where the selection is stable.

mod balance;
mod embedding;
mod experts;
mod gate;

pub use balance::load_balance_loss;
pub use embedding::EmbeddingTable;
pub use experts::{ExpertBank, MoeCache};
pub use gate::{Gate, GateCache, GateDecision};
