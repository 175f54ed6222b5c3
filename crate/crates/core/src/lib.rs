//! Composable MinHash cardinality sketches and a laboratory of adaptive attacks on them.
//!
//! The sketch side covers k-mins, bottom-k and k-partition (HyperLogLog) sketches with
//! deterministic seeded hashing, merging and a stable binary format. The attack side
//! implements query-response algorithms for the soft-threshold problem and three attacks
//! that construct adversarial inputs: a single-batch attack on the standard estimators,
//! a single-batch attack on symmetric responders and an adaptive attack that builds a
//! mask against any correct responder.

pub mod attacks;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod hashing;
pub mod qr;
pub mod rank_domain;
pub mod sketch;
pub mod subset;

pub use attacks::{AttackResult, Mask};
pub use error::{Error, Result};
pub use estimators::{estimate, statistic, Estimate, EstimatorKind};
pub use hashing::{Key, Seed};
pub use qr::{QrPolicy, QrResponse, QrStrategy, Responder};
pub use rank_domain::{GroundSet, RankSketch};
pub use sketch::{determining_keys, RegisterRepr, Sketch, SketchConfig, SketchKind};
pub use subset::IndexSet;
