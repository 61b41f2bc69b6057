//! Two-colour Polya urn with reinforcement.
//!
//! The urn starts with `total` balls of which `white` are white. Each step
//! draws `draws_per_step` balls with replacement and, for every drawn ball,
//! adds `reinforcement` balls of the same colour. With one draw per step this
//! is the classical Polya scheme, for which the white fraction after `n`
//! steps satisfies
//!
//! ```text
//! rho_n = (rho_0 + n * delta * Z_n) / (1 + n * delta),   delta = d / N
//! ```
//!
//! where `Z_n` is the running share of white draws. Both `rho_n` and `Z_n`
//! are martingales converging to a `Beta(w/d, N/d - w/d)` limit, and the
//! white-draw count after `n` steps is approximately `NB(w/d, N/(N + n d))`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, SimRng};

/// Largest ball count a configuration may reach.
pub const MAX_BALLS: u64 = 1 << 62;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UrnError {
    #[error("urn must start with at least one ball")]
    EmptyUrn,
    #[error("white count {white} exceeds total {total}")]
    TooManyWhite { white: u64, total: u64 },
    #[error("reinforcement d must be positive")]
    ZeroReinforcement,
    #[error("draws per step m must be positive")]
    ZeroDraws,
    #[error("n must be at least 1 for the limit-law parameters")]
    ZeroHorizon,
    #[error("ball count would exceed 2^62 after {steps} steps")]
    Overflow { steps: u64 },
    #[error("need at least {need} replicates, got {got}")]
    TooFewReplicates { got: usize, need: usize },
    #[error("failed to write trajectory: {0}")]
    Io(String),
}

/// Initial composition and run parameters of an urn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnConfig {
    /// Initial number of balls `N`.
    pub total: u64,
    /// Initial number of white balls `w`.
    pub white: u64,
    /// Balls `d` added per drawn ball.
    pub reinforcement: u64,
    /// Balls `m` drawn per step.
    pub draws_per_step: u64,
    /// Number of steps to simulate.
    pub steps: u64,
    pub seed: u64,
}

impl UrnConfig {
    /// Basic scheme (`m = 1`) with no steps and seed 0.
    pub fn new(total: u64, white: u64, reinforcement: u64) -> Self {
        Self {
            total,
            white,
            reinforcement,
            draws_per_step: 1,
            steps: 0,
            seed: 0,
        }
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_draws_per_step(mut self, m: u64) -> Self {
        self.draws_per_step = m;
        self
    }

    pub fn black(&self) -> u64 {
        self.total - self.white
    }

    /// Normalized reinforcement `δ = d / N`.
    pub fn delta(&self) -> f64 {
        self.reinforcement as f64 / self.total as f64
    }

    /// Initial white fraction `ρ0 = w / N`.
    pub fn rho0(&self) -> f64 {
        self.white as f64 / self.total as f64
    }

    /// Same urn with the colours swapped.
    pub fn mirrored(&self) -> Self {
        Self {
            white: self.black(),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), UrnError> {
        self.validate_for(self.steps)
    }

    fn validate_for(&self, steps: u64) -> Result<(), UrnError> {
        if self.total == 0 {
            return Err(UrnError::EmptyUrn);
        }
        if self.white > self.total {
            return Err(UrnError::TooManyWhite {
                white: self.white,
                total: self.total,
            });
        }
        if self.reinforcement == 0 {
            return Err(UrnError::ZeroReinforcement);
        }
        if self.draws_per_step == 0 {
            return Err(UrnError::ZeroDraws);
        }
        let grown = steps
            .checked_mul(self.reinforcement)
            .and_then(|v| v.checked_mul(self.draws_per_step))
            .and_then(|v| v.checked_add(self.total));
        match grown {
            Some(v) if v <= MAX_BALLS => Ok(()),
            _ => Err(UrnError::Overflow { steps }),
        }
    }
}

/// Current composition of an urn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UrnState {
    pub white: u64,
    pub total: u64,
    pub reinforcement: u64,
    pub draws_per_step: u64,
    /// Steps taken so far.
    pub step: u64,
    /// White balls drawn over all steps so far.
    pub white_draws: u64,
    /// White balls drawn in the most recent step.
    pub last_draw: u64,
}

impl UrnState {
    pub fn initial(config: &UrnConfig) -> Self {
        Self {
            white: config.white,
            total: config.total,
            reinforcement: config.reinforcement,
            draws_per_step: config.draws_per_step,
            step: 0,
            white_draws: 0,
            last_draw: 0,
        }
    }

    /// Tracked white fraction `white / total`.
    pub fn fraction(&self) -> f64 {
        self.white as f64 / self.total as f64
    }

    /// Draw `m` balls with replacement and reinforce each drawn colour.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut drawn_white = 0;
        for _ in 0..self.draws_per_step {
            if rng.random_range(0..self.total) < self.white {
                drawn_white += 1;
            }
        }
        Self {
            white: self.white + self.reinforcement * drawn_white,
            total: self.total + self.reinforcement * self.draws_per_step,
            step: self.step + 1,
            white_draws: self.white_draws + drawn_white,
            last_draw: drawn_white,
            ..*self
        }
    }
}

/// Full record of one simulated run. Index `n - 1` holds the value after step `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrnTrajectory {
    pub rho0: f64,
    pub delta: f64,
    pub draws_per_step: u64,
    /// White balls drawn at each step (the indicator `I_n` when `m = 1`).
    pub indicators: Vec<u64>,
    /// Running share of white draws `Z_n`.
    pub z_series: Vec<f64>,
    /// Tracked white fraction of the urn after each step.
    pub rho_series: Vec<f64>,
    /// Running count of white draws.
    pub white_draw_totals: Vec<u64>,
}

impl UrnTrajectory {
    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    /// White draws over the whole run.
    pub fn white_draw_total(&self) -> u64 {
        self.white_draw_totals.last().copied().unwrap_or(0)
    }

    /// `rho_n` rebuilt from `Z_n` through the closed-form identity. Only
    /// defined for the single-draw scheme.
    pub fn rho_from_average(&self, n: usize) -> Option<f64> {
        if self.draws_per_step != 1 || n == 0 || n > self.len() {
            return None;
        }
        let nd = n as f64 * self.delta;
        Some((self.rho0 + nd * self.z_series[n - 1]) / (1.0 + nd))
    }

    /// Largest gap between the tracked fraction and the closed-form value.
    pub fn max_identity_gap(&self) -> Option<f64> {
        if self.draws_per_step != 1 {
            return None;
        }
        Some(
            (1..=self.len())
                .map(|n| (self.rho_from_average(n).unwrap() - self.rho_series[n - 1]).abs())
                .fold(0.0, f64::max),
        )
    }

    /// CSV with columns `n,I_n,Z_n,rho_n`, one row per step.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), UrnError> {
        let mut out = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| UrnError::Io(e.to_string());
        out.write_record(["n", "I_n", "Z_n", "rho_n"]).map_err(io)?;
        for i in 0..self.len() {
            out.write_record([
                (i + 1).to_string(),
                self.indicators[i].to_string(),
                self.z_series[i].to_string(),
                self.rho_series[i].to_string(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| UrnError::Io(e.to_string()))
    }
}

/// Run `config.steps` steps from the initial composition using `config.seed`.
pub fn simulate(config: &UrnConfig) -> Result<UrnTrajectory, UrnError> {
    let mut rng = rng::seeded(config.seed);
    simulate_with(config, &mut rng)
}

/// Like [`simulate`] but drawing from the supplied generator.
pub fn simulate_with<R: Rng + ?Sized>(
    config: &UrnConfig,
    rng: &mut R,
) -> Result<UrnTrajectory, UrnError> {
    config.validate()?;
    let steps = config.steps as usize;
    let mut traj = UrnTrajectory {
        rho0: config.rho0(),
        delta: config.delta(),
        draws_per_step: config.draws_per_step,
        indicators: Vec::with_capacity(steps),
        z_series: Vec::with_capacity(steps),
        rho_series: Vec::with_capacity(steps),
        white_draw_totals: Vec::with_capacity(steps),
    };
    let mut state = UrnState::initial(config);
    for _ in 0..steps {
        state = state.step(rng);
        let drawn = state.step * state.draws_per_step;
        traj.indicators.push(state.last_draw);
        traj.z_series.push(state.white_draws as f64 / drawn as f64);
        traj.rho_series.push(state.fraction());
        traj.white_draw_totals.push(state.white_draws);
    }
    Ok(traj)
}

/// End state of a run, without the per-step history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Terminal {
    pub white_draws: u64,
    /// Share of white draws `Z_n`.
    pub z: f64,
    /// Tracked white fraction `rho_n`.
    pub rho: f64,
}

/// Run `config.steps` steps and keep only the end state.
pub fn run_terminal<R: Rng + ?Sized>(config: &UrnConfig, rng: &mut R) -> Terminal {
    let mut state = UrnState::initial(config);
    for _ in 0..config.steps {
        state = state.step(rng);
    }
    let drawn = (config.steps * config.draws_per_step).max(1);
    Terminal {
        white_draws: state.white_draws,
        z: state.white_draws as f64 / drawn as f64,
        rho: state.fraction(),
    }
}

/// Independent replicates of `config`, replicate `i` drawing from stream `(seed, i)`.
pub fn replicate_terminals(config: &UrnConfig, replicates: usize) -> Result<Vec<Terminal>, UrnError> {
    config.validate()?;
    Ok((0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng: SimRng = rng::stream(config.seed, i as u64);
            run_terminal(config, &mut rng)
        })
        .collect())
}

/// Parameters of the negative binomial and Beta laws attached to an urn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawParams {
    /// `w / d`, shared by both laws.
    pub r: f64,
    /// `N / (N + n d)`, success probability of the white-draw count after `n` steps.
    pub p: f64,
    /// `N / d - r`.
    pub theta: f64,
    /// `w / N`, the mean of the Beta limit.
    pub rho0: f64,
}

impl LimitLawParams {
    pub fn beta_mean(&self) -> f64 {
        self.r / (self.r + self.theta)
    }
}

/// Closed-form limit-law parameters after `n` steps.
pub fn limit_params(config: &UrnConfig, n: u64) -> Result<LimitLawParams, UrnError> {
    if config.reinforcement == 0 {
        return Err(UrnError::ZeroReinforcement);
    }
    if n == 0 {
        return Err(UrnError::ZeroHorizon);
    }
    if config.total == 0 {
        return Err(UrnError::EmptyUrn);
    }
    let d = config.reinforcement as f64;
    let n_total = config.total as f64;
    Ok(LimitLawParams {
        r: config.white as f64 / d,
        p: n_total / (n_total + n as f64 * d),
        // (N - w) / d avoids the cancellation in N/d - w/d
        theta: config.black() as f64 / d,
        rho0: config.rho0(),
    })
}

/// Drift of `rho_n` at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow {
    pub n: u64,
    /// Mean over replicates of `rho_{n+1} - rho_n`.
    pub mean_drift: f64,
    pub std_error: f64,
}

impl DriftRow {
    /// Whether the mean drift lies within `k` standard errors of zero.
    pub fn within(&self, k: f64) -> bool {
        self.mean_drift.abs() <= k * self.std_error
    }
}

/// Monte Carlo check of the martingale property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleDiagnostic {
    pub replicates: usize,
    pub rows: Vec<DriftRow>,
    /// Step at which the terminal mean is taken.
    pub horizon: u64,
    pub terminal_mean: f64,
    pub terminal_std_error: f64,
    pub rho0: f64,
}

impl MartingaleDiagnostic {
    pub fn all_within(&self, k: f64) -> bool {
        self.rows.iter().all(|r| r.within(k))
    }

    /// Whether the mean of `rho` at the horizon lies within `k` SE of `rho0`.
    pub fn terminal_within(&self, k: f64) -> bool {
        (self.terminal_mean - self.rho0).abs() <= k * self.terminal_std_error
    }
}

pub const MIN_MARTINGALE_REPLICATES: usize = 1000;

/// Estimate the one-step drift of `rho_n` at each checkpoint, plus the mean
/// of `rho` at `max(config.steps, last checkpoint + 1)`.
pub fn martingale_check(
    config: &UrnConfig,
    checkpoints: &[u64],
    replicates: usize,
) -> Result<MartingaleDiagnostic, UrnError> {
    if replicates < MIN_MARTINGALE_REPLICATES {
        return Err(UrnError::TooFewReplicates {
            got: replicates,
            need: MIN_MARTINGALE_REPLICATES,
        });
    }
    let last = checkpoints.iter().max().map_or(0, |&n| n + 1);
    let horizon = config.steps.max(last);
    config.validate_for(horizon)?;

    let per_rep: Vec<(Vec<f64>, f64)> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(config.seed, i as u64);
            let mut state = UrnState::initial(config);
            let mut before = vec![f64::NAN; checkpoints.len()];
            let mut drifts = vec![0.0; checkpoints.len()];
            for step in 0..=horizon {
                for (j, &n) in checkpoints.iter().enumerate() {
                    if n == step {
                        before[j] = state.fraction();
                    }
                    if n + 1 == step {
                        drifts[j] = state.fraction() - before[j];
                    }
                }
                if step < horizon {
                    state = state.step(&mut rng);
                }
            }
            (drifts, state.fraction())
        })
        .collect();

    let rows = checkpoints
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let (mean, se) = mean_and_se(per_rep.iter().map(|(d, _)| d[j]));
            DriftRow {
                n,
                mean_drift: mean,
                std_error: se,
            }
        })
        .collect();
    let (terminal_mean, terminal_std_error) = mean_and_se(per_rep.iter().map(|(_, t)| *t));
    Ok(MartingaleDiagnostic {
        replicates,
        rows,
        horizon,
        terminal_mean,
        terminal_std_error,
        rho0: config.rho0(),
    })
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
