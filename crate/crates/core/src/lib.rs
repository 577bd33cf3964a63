//! Bag-of-null-statistics (BONuS) multiple testing.
//!
//! Synthetic draws from the known null are hidden among the real test
//! statistics. A learner fits a test statistic on the pooled data without
//! knowing which points are real, the rejection region is peeled along the
//! statistic's super-level sets while identities outside it are revealed,
//! and the procedure stops as soon as an FDP estimate built from the
//! revealed counts drops to the target level. FDR is controlled in finite
//! samples regardless of how good or bad the learner is.
//!
//! Modules follow the pipeline: [`dists`] (models and scenarios), [`pool`]
//! (masking), [`estimators`], [`learners`], [`engine`], [`double`] (model
//! screening), [`harness`] (replicated experiments) and [`cli`].

pub mod cli;
pub mod dists;
pub mod double;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod points;
pub mod pool;
pub mod rng;
pub mod statistic;

pub use dists::{AltParams, NullModel, Scenario};
pub use engine::{run_bh, run_bonus, run_on_pool, run_storey_bh, Batch, BonusConfig, RunResult};
pub use error::{BonusError, Result};
pub use estimators::FdpKind;
pub use learners::{Learner, SharedLearner};
pub use points::Points;
pub use pool::{MaskView, PooledSet};
pub use statistic::Statistic;
