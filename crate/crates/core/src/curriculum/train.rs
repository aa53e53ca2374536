use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::adamw::{adamw_step, AdamWConfig, AdamWState};
use super::data::{gen_training_batch, CodebookSubset};
use super::schedule::{CurriculumSchedule, CurriculumStep};
use crate::channels::ReceivedWord;
use crate::construction::CodeSpec;
use crate::neural::{crisp_forward, crisp_loss_and_grads, Feedback, GruDecoderParams};
use crate::{rng, Error, Result};

const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrDecay {
    /// Halve the rate after each quarter of the final step.
    #[default]
    Halving,
    Cosine,
    Constant,
}

impl LrDecay {
    fn factor(self, iter: usize, total: usize) -> f64 {
        let frac = iter as f64 / total.max(1) as f64;
        match self {
            LrDecay::Halving => 0.5f64.powi((4.0 * frac).floor() as i32),
            LrDecay::Cosine => 0.5 * (1.0 + (PI * frac).cos()),
            LrDecay::Constant => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    Teacher,
    Student,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adamw: AdamWConfig,
    pub iters_per_step: usize,
    pub final_iters: usize,
    pub lr_decay: LrDecay,
    pub feedback: FeedbackMode,
    /// Evaluate every this many iterations (and at the end of each step).
    pub eval_every: usize,
    pub val_blocks: usize,
    pub noiseless_blocks: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub head_dim: usize,
    /// Train only on a seeded fraction of the message patterns.
    pub codebook_keep_fraction: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4096,
            learning_rate: 1e-3,
            adamw: AdamWConfig::default(),
            iters_per_step: 2000,
            final_iters: 2000,
            lr_decay: LrDecay::Halving,
            feedback: FeedbackMode::Teacher,
            eval_every: 250,
            val_blocks: 10_000,
            noiseless_blocks: 1_000,
            seed: 0,
            hidden_dim: 64,
            num_layers: 2,
            head_dim: 64,
            codebook_keep_fraction: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.eval_every == 0 || self.hidden_dim == 0 || self.num_layers == 0 || self.head_dim == 0 {
            return Err(Error::Config("eval_every and model dimensions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub iteration: usize,
    pub loss: f64,
    /// BER over the active bits at the step's training SNR.
    pub val_ber: f64,
    /// BER over the active bits on noiseless codewords.
    pub noiseless_ber: f64,
    /// BER of every information bit at the training SNR.
    pub per_bit_ber: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub info_set: Vec<usize>,
    pub records: Vec<EvalRecord>,
}

impl TrainHistory {
    pub fn csv_header(&self) -> String {
        let mut h = String::from("iteration,loss,val_ber,noiseless_ber");
        for i in &self.info_set {
            let _ = write!(h, ",ber_m{i}");
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},{},{}", r.iteration, r.loss, r.val_ber, r.noiseless_ber);
            for b in &r.per_bit_ber {
                let _ = write!(out, ",{b}");
            }
            out.push('\n');
        }
        out
    }
}

/// Stateful trainer: parameters, optimizer state and history persist across
/// curriculum steps.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub spec: CodeSpec,
    pub config: TrainConfig,
    pub params: GruDecoderParams,
    pub opt: AdamWState,
    pub iteration: usize,
    pub history: TrainHistory,
}

impl Trainer {
    pub fn new(spec: &CodeSpec, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let params = GruDecoderParams::init(
            spec.n,
            config.hidden_dim,
            config.num_layers,
            config.head_dim,
            config.seed,
        );
        Ok(Self::with_params(spec, config, params))
    }

    pub fn with_params(spec: &CodeSpec, config: &TrainConfig, params: GruDecoderParams) -> Self {
        Self {
            spec: spec.clone(),
            config: config.clone(),
            opt: AdamWState::new(&params),
            params,
            iteration: 0,
            history: TrainHistory {
                info_set: spec.info_set.clone(),
                records: Vec::new(),
            },
        }
    }

    /// One optimizer update on a fresh batch; returns the batch loss averaged
    /// over items and active bits.
    pub fn train_iteration(&mut self, step_idx: usize, step: &CurriculumStep, lr: f64) -> Result<f64> {
        let cfg = &self.config;
        let subset = cfg.codebook_keep_fraction.map(|keep_fraction| CodebookSubset {
            seed: cfg.seed,
            keep_fraction,
        });
        let mut rng = rng::derive(cfg.seed, &[1, step_idx as u64, self.iteration as u64]);
        let batch = gen_training_batch(
            &self.spec,
            &step.active_set,
            step.train_snr_db,
            cfg.batch_size,
            &mut rng,
            subset.as_ref(),
        )?;
        let feedback = match cfg.feedback {
            FeedbackMode::Teacher => Feedback::Teacher(&batch.ms),
            FeedbackMode::Student => Feedback::Student,
        };
        let trace = crisp_forward(&batch.ys, &self.spec, &self.params, feedback)?;
        let (loss, mut grads) = crisp_loss_and_grads(&trace, &self.params, &batch.ms, &step.active_set)?;
        let norm = 1.0 / step.active_set.len() as f64;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= norm);
        }
        adamw_step(&mut self.params, &grads, &mut self.opt, lr, &cfg.adamw)?;
        self.iteration += 1;
        Ok(loss * norm)
    }

    /// Decoder error rates on the subcode of `step`.
    pub fn evaluate(&self, step_idx: usize, step: &CurriculumStep) -> Result<(f64, f64, Vec<f64>)> {
        let cfg = &self.config;
        let k = self.spec.k;
        let active_cols: Vec<usize> = step
            .active_set
            .iter()
            .map(|i| self.spec.info_set.iter().position(|j| j == i).expect("active within info set"))
            .collect();
        let mut per_bit = vec![0usize; k];
        let mut noiseless_errors = 0usize;
        let seed = cfg.seed;
        let path = [2, step_idx as u64, self.iteration as u64];

        let count = |snr: Option<f64>, blocks: usize, tag: u64, errors: &mut dyn FnMut(usize, usize)| -> Result<()> {
            let mut rng = rng::derive(seed, &[path[0], path[1], path[2], tag]);
            let mut done = 0;
            while done < blocks {
                let size = EVAL_CHUNK.min(blocks - done);
                let batch = gen_training_batch(&self.spec, &step.active_set, snr.unwrap_or(0.0), size, &mut rng, None)?;
                let ys: Vec<ReceivedWord> = match snr {
                    Some(_) => batch.ys,
                    None => batch
                        .ms
                        .iter()
                        .map(|m| {
                            let x = crate::encoding::modulate(&crate::encoding::encode_source(m, &self.spec)?);
                            Ok(ReceivedWord::noiseless(&x))
                        })
                        .collect::<Result<_>>()?,
                };
                let trace = crisp_forward(&ys, &self.spec, &self.params, Feedback::Student)?;
                for (b, m) in batch.ms.iter().enumerate() {
                    for (col, &i) in self.spec.info_set.iter().enumerate() {
                        let decided = u8::from(trace.probs[[b, col]] > 0.5);
                        if decided != m[i - 1] {
                            errors(col, 1);
                        }
                    }
                }
                done += size;
            }
            Ok(())
        };

        count(Some(step.train_snr_db), cfg.val_blocks, 0, &mut |col, e| per_bit[col] += e)?;
        count(None, cfg.noiseless_blocks, 1, &mut |col, e| {
            if active_cols.contains(&col) {
                noiseless_errors += e;
            }
        })?;

        let val_errors: usize = active_cols.iter().map(|&c| per_bit[c]).sum();
        let val_ber = val_errors as f64 / (cfg.val_blocks.max(1) * active_cols.len()) as f64;
        let noiseless_ber = noiseless_errors as f64 / (cfg.noiseless_blocks.max(1) * active_cols.len()) as f64;
        let per_bit_ber = per_bit.iter().map(|&e| e as f64 / cfg.val_blocks.max(1) as f64).collect();
        Ok((val_ber, noiseless_ber, per_bit_ber))
    }

    pub fn run_step(&mut self, step_idx: usize, step: &CurriculumStep, is_final: bool) -> Result<()> {
        for it in 0..step.iterations {
            let decay = if is_final {
                self.config.lr_decay.factor(it, step.iterations)
            } else {
                1.0
            };
            let loss = self.train_iteration(step_idx, step, self.config.learning_rate * decay)?;
            if !loss.is_finite() {
                return Err(Error::Config(format!("training diverged at iteration {}", self.iteration)));
            }
            if (it + 1) % self.config.eval_every == 0 || it + 1 == step.iterations {
                let (val_ber, noiseless_ber, per_bit_ber) = self.evaluate(step_idx, step)?;
                log::info!(
                    "step {step_idx} iter {} loss {loss:.5} val_ber {val_ber:.4e} noiseless {noiseless_ber:.4e}",
                    self.iteration
                );
                self.history.records.push(EvalRecord {
                    step: step_idx,
                    iteration: self.iteration,
                    loss,
                    val_ber,
                    noiseless_ber,
                    per_bit_ber,
                });
            }
        }
        Ok(())
    }
}

/// Train through every step of `schedule`, warm-starting each step from the
/// previous one. The last step uses the configured learning-rate decay.
pub fn run_curriculum(
    spec: &CodeSpec,
    schedule: &CurriculumSchedule,
    config: &TrainConfig,
) -> Result<(GruDecoderParams, TrainHistory)> {
    let mut trainer = Trainer::new(spec, config)?;
    let last = schedule.steps.len().saturating_sub(1);
    for (j, step) in schedule.steps.iter().enumerate() {
        trainer.run_step(j, step, j == last)?;
    }
    Ok((trainer.params, trainer.history))
}
