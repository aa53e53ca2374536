//! Curriculum training of the GRU decoder.
//!
//! A curriculum is a chain of subcodes: step `j` trains on messages whose
//! information bits outside the active set `A_j` are frozen to zero, with
//! `A_1 ⊂ A_2 ⊂ ... ⊂ A_k = I`. Parameters carry over from one step to the
//! next.

mod adamw;
mod data;
mod schedule;
mod train;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use data::{gen_training_batch, select_train_snr, source_to_received, CodebookSubset, TrainingBatch};
pub use schedule::{make_schedule, CurriculumSchedule, CurriculumStep, ScheduleKind, SnrPolicy};
pub use train::{run_curriculum, EvalRecord, FeedbackMode, LrDecay, TrainConfig, TrainHistory, Trainer};
