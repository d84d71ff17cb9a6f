//! QT-Opt with CEM action maximization and crop augmentation (RAD / DrQ
//! style averaged targets and Q estimates).

pub mod adam;
pub mod cem;
pub mod critic;
pub mod drq;
pub mod nn;
pub mod replay;
pub mod train;

pub use cem::{cem_maximize, cem_maximize_batch, CemConfig, CemResult};
pub use critic::{Critic, CriticConfig, InputSpec, ObsBatch};
pub use drq::{drq_loss, drq_loss_with_views, drq_target, drq_target_with_views, AugConfig, AugKind, LossKind, View};
pub use replay::{ObsData, ReplayBuffer, Transition};
pub use train::{train, train_with_callback, write_log_csv, EpisodeRecord, QtOpt, TrainConfig, TrainOutcome};
