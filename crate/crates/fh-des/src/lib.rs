//! Dynamic ensemble selection with fuzzy hyperboxes.
//!
//! Instead of finding a query's k nearest neighbors in a stored selection
//! set at inference time, each classifier in a bagged pool gets a compact
//! hyperbox model of where it is competent (or incompetent), learned once
//! from the selection set. Labeling a query then costs a membership
//! evaluation per hyperbox — independent of how large the selection set
//! was — followed by a competence-weighted vote among the selected
//! members.
//!
//! The crate also ships exact-KNN reference selectors (OLA, KNORA-U), a
//! benchmark harness for replicated accuracy/latency experiments and a
//! DSEL-size scaling study, and a small CLI (`fhdes`) gluing it together.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod data;
pub mod des;
pub mod error;
pub mod hyperbox;
pub mod model_io;
pub mod pool;
pub mod synth;

mod seeding;

pub use crate::des::{fit, select, CompetenceVector, DesMode, DesModel};
pub use crate::error::{FhError, Result};
pub use crate::hyperbox::{Hyperbox, HyperboxSet, MembershipKind};
pub use crate::pool::{train_perceptron, train_pool, LinearClassifier, Pool, PoolParams};
