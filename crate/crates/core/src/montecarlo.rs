//! Trajectory-level sampler of the whole experiment.
//!
//! Every mode quadrature is drawn independently from its input distribution
//! and pushed through the beam-splitter relations as plain numbers, so this
//! path shares no code with the phase-space algebra it checks.
//!
//! Trajectories are generated in shards of [`SHARD_SIZE`]. Shard `k` draws
//! from ChaCha8 seeded with the master seed on stream `k`, and per-shard
//! accumulators are merged in shard order. Results therefore do not depend on
//! the number of worker threads.
//!
//! The receiver heterodyne is recorded as `x_recv = x_out + x_vac`,
//! `p_recv = p_out − p_vac`: the 50:50 detector outputs rescaled by `√2`, so
//! each reading has variance `V_out + 1` and mean equal to the signal mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, TapConfig};
use crate::correction::FeedforwardPlan;
use crate::error::{invalid, Error, Result};
use crate::herald::HeraldWindow;

/// Trajectories per RNG stream.
pub const SHARD_SIZE: u64 = 1 << 16;
/// Smallest input amplitude accepted by the gain estimators.
pub const MIN_GAIN_PROBE: f64 = 5.0;

/// Quadratures of one shot, in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub x_in: f64,
    pub p_in: f64,
    pub x_tap: f64,
    pub p_tap: f64,
    /// Corrected signal before the receiver.
    pub x_out: f64,
    pub p_out: f64,
    pub x_recv: f64,
    pub p_recv: f64,
}

/// Positions of the record fields in a [`Moments`] accumulator.
pub mod var {
    pub const X_IN: usize = 0;
    pub const P_IN: usize = 1;
    pub const X_TAP: usize = 2;
    pub const P_TAP: usize = 3;
    pub const X_OUT: usize = 4;
    pub const P_OUT: usize = 5;
    pub const X_RECV: usize = 6;
    pub const P_RECV: usize = 7;
}

pub const RECORD_DIM: usize = 8;

impl Record {
    pub fn to_array(&self) -> [f64; RECORD_DIM] {
        [
            self.x_in,
            self.p_in,
            self.x_tap,
            self.p_tap,
            self.x_out,
            self.p_out,
            self.x_recv,
            self.p_recv,
        ]
    }

    pub fn tap(&self) -> (f64, f64) {
        (self.x_tap, self.p_tap)
    }
}

/// Streaming mean and co-moment accumulator (Welford updates, Chan merges).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<const D: usize> {
    n: u64,
    mean: [f64; D],
    comoment: [[f64; D]; D],
}

impl<const D: usize> Default for Moments<D> {
    fn default() -> Self {
        Self {
            n: 0,
            mean: [0.0; D],
            comoment: [[0.0; D]; D],
        }
    }
}

// index loops mirror the textbook update formulas
#[allow(clippy::needless_range_loop)]
impl<const D: usize> Moments<D> {
    pub fn push(&mut self, x: &[f64; D]) {
        self.n += 1;
        let n = self.n as f64;
        let mut before = [0.0; D];
        for i in 0..D {
            before[i] = x[i] - self.mean[i];
            self.mean[i] += before[i] / n;
        }
        for i in 0..D {
            for j in 0..D {
                self.comoment[i][j] += before[i] * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let mut delta = [0.0; D];
        for i in 0..D {
            delta[i] = other.mean[i] - self.mean[i];
        }
        for i in 0..D {
            for j in 0..D {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..D {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Unbiased sample covariance.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.comoment[i][j] / (self.n as f64 - 1.0)
    }

    pub fn var(&self, i: usize) -> f64 {
        self.cov(i, i)
    }
}

/// A value with its one-sigma statistical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Distance from `target` in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.stderr
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.stderr
    }
}

/// Which reading the added noise is referred from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// The corrected signal itself: `V_out/G − 1`.
    State,
    /// The receiver heterodyne readings: `(V_out + 1)/G − 1`.
    Receiver,
}

/// All sampled trajectories of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub n: u64,
    pub seed: u64,
    pub input_mean: (f64, f64),
    pub records: Vec<Record>,
    /// Herald decision per record, when a window was applied.
    pub accepted: Option<Vec<bool>>,
}

impl TrajectoryBatch {
    /// Moments of the accepted records, accumulated shard by shard exactly as
    /// the streaming path does.
    pub fn moments(&self) -> Moments<RECORD_DIM> {
        let shard = SHARD_SIZE as usize;
        let per_shard: Vec<Moments<RECORD_DIM>> = self
            .records
            .chunks(shard)
            .enumerate()
            .map(|(k, chunk)| {
                let mut m = Moments::default();
                for (i, r) in chunk.iter().enumerate() {
                    let keep = self.accepted.as_ref().is_none_or(|a| a[k * shard + i]);
                    if keep {
                        m.push(&r.to_array());
                    }
                }
                m
            })
            .collect();
        merge_all(per_shard)
    }

    pub fn accepted_count(&self) -> u64 {
        match &self.accepted {
            Some(a) => a.iter().filter(|&&k| k).count() as u64,
            None => self.n,
        }
    }
}

fn merge_all<const D: usize>(parts: Vec<Moments<D>>) -> Moments<D> {
    parts.into_iter().fold(Moments::default(), |mut acc, m| {
        acc.merge(&m);
        acc
    })
}

/// One configuration of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub channel: ChannelParams,
    pub tap: TapConfig,
    pub input_mean: (f64, f64),
    pub plan: Option<FeedforwardPlan>,
}

impl Simulation {
    pub fn new(channel: ChannelParams, tap: TapConfig, input_mean: (f64, f64)) -> Self {
        Self {
            channel,
            tap,
            input_mean,
            plan: None,
        }
    }

    pub fn with_plan(mut self, plan: FeedforwardPlan) -> Self {
        self.plan = Some(plan);
        self
    }

    /// Draws one trajectory: 10 standard normals in a fixed order.
    pub fn trajectory<R: Rng>(&self, rng: &mut R) -> Record {
        let mut n = || -> f64 { rng.sample(StandardNormal) };
        let eta = self.channel.eta();
        let gamma = self.tap.gamma();
        let split = self.tap.detector().split();
        let env_sd = self.channel.v_env().sqrt();

        let x_in = self.input_mean.0 + n();
        let p_in = self.input_mean.1 + n();
        let (x_env, p_env) = (env_sd * n(), env_sd * n());
        let (x_v1, p_v1) = (n(), n());
        let (x_v2, p_v2) = (n(), n());
        let (x_rv, p_rv) = (n(), n());

        let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
        let x_sig = t * x_in + r * x_env;
        let p_sig = t * p_in + r * p_env;
        let x_leak = r * x_in - t * x_env;
        let p_leak = r * p_in - t * p_env;

        let (a, b) = (gamma.sqrt(), (1.0 - gamma).sqrt());
        let x_det = a * x_leak + b * x_v1;
        let p_det = a * p_leak + b * p_v1;
        let (c, d) = (split.sqrt(), (1.0 - split).sqrt());
        let x_tap = c * x_det + d * x_v2;
        let p_tap = d * p_det - c * p_v2;

        let (g_x, g_p) = self.plan.map_or((0.0, 0.0), |p| (p.g_x, p.g_p));
        let x_out = x_sig + g_x * x_tap;
        let p_out = p_sig + g_p * p_tap;
        Record {
            x_in,
            p_in,
            x_tap,
            p_tap,
            x_out,
            p_out,
            x_recv: x_out + x_rv,
            p_recv: p_out - p_rv,
        }
    }

    fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard);
        rng
    }

    fn shards(n: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
        let count = n.div_ceil(SHARD_SIZE) as usize;
        (0..count).into_par_iter().map(move |k| {
            let k = k as u64;
            (k, SHARD_SIZE.min(n - k * SHARD_SIZE))
        })
    }

    /// Runs `n` trajectories, folding each shard into its own accumulator
    /// and returning the accumulators in shard order.
    pub fn fold_shards<A, F>(
        &self,
        n: u64,
        seed: u64,
        init: impl Fn() -> A + Sync + Send,
        step: F,
    ) -> Vec<A>
    where
        A: Send,
        F: Fn(&mut A, &Record) + Sync + Send,
    {
        Self::shards(n)
            .map(|(k, len)| {
                let mut rng = Self::shard_rng(seed, k);
                let mut acc = init();
                for _ in 0..len {
                    let rec = self.trajectory(&mut rng);
                    step(&mut acc, &rec);
                }
                acc
            })
            .collect()
    }

    /// Stores every trajectory.
    pub fn sample(&self, n: u64, seed: u64) -> TrajectoryBatch {
        let records = self
            .fold_shards(n, seed, Vec::new, |v: &mut Vec<Record>, r| v.push(*r))
            .concat();
        TrajectoryBatch {
            n,
            seed,
            input_mean: self.input_mean,
            records,
            accepted: None,
        }
    }

    /// Stores every trajectory together with its herald decision.
    pub fn sample_heralded(&self, n: u64, seed: u64, window: HeraldWindow) -> TrajectoryBatch {
        let mut batch = self.sample(n, seed);
        batch.accepted = Some(
            batch
                .records
                .iter()
                .map(|r| window.accept(r.tap()))
                .collect(),
        );
        batch
    }

    /// Moments of the trajectories passing `keep`, without storing them.
    pub fn moments(
        &self,
        n: u64,
        seed: u64,
        keep: impl Fn(&Record) -> bool + Sync + Send,
    ) -> Moments<RECORD_DIM> {
        merge_all(self.fold_shards(n, seed, Moments::default, |m, r| {
            if keep(r) {
                m.push(&r.to_array());
            }
        }))
    }

    /// One pass over `n` trajectories, accumulating a separate set of moments
    /// for each window.
    pub fn ladder_moments(
        &self,
        n: u64,
        seed: u64,
        windows: &[HeraldWindow],
    ) -> Vec<Moments<RECORD_DIM>> {
        let shards = self.fold_shards(
            n,
            seed,
            || vec![Moments::default(); windows.len()],
            |acc, r| {
                let row = r.to_array();
                for (m, w) in acc.iter_mut().zip(windows) {
                    if w.accept(r.tap()) {
                        m.push(&row);
                    }
                }
            },
        );
        let mut total = vec![Moments::default(); windows.len()];
        for shard in shards {
            for (t, m) in total.iter_mut().zip(&shard) {
                t.merge(m);
            }
        }
        total
    }
}

/// Samples `n` trajectories of the experiment.
pub fn sample(
    ch: ChannelParams,
    tap: TapConfig,
    input_mean: (f64, f64),
    plan: Option<&FeedforwardPlan>,
    n: u64,
    seed: u64,
) -> TrajectoryBatch {
    let mut sim = Simulation::new(ch, tap, input_mean);
    sim.plan = plan.copied();
    sim.sample(n, seed)
}

fn variance_stderr(var: f64, n: u64) -> f64 {
    var * (2.0 / (n as f64 - 1.0)).sqrt()
}

fn require_count(m: &Moments<RECORD_DIM>, min: u64) -> Result<()> {
    if m.count() < min {
        return Err(Error::Numeric(format!(
            "need at least {min} trajectories for an estimate, have {}",
            m.count()
        )));
    }
    Ok(())
}

/// Input-referred added noise per quadrature from accumulated moments, given
/// the power gain of each quadrature.
pub fn noise_from_moments(
    m: &Moments<RECORD_DIM>,
    gains: (f64, f64),
    reference: Reference,
) -> Result<(Estimate, Estimate)> {
    require_count(m, 2)?;
    let (ix, ip) = match reference {
        Reference::State => (var::X_OUT, var::P_OUT),
        Reference::Receiver => (var::X_RECV, var::P_RECV),
    };
    let one = |i: usize, g: f64| -> Result<Estimate> {
        if !(g > 0.0) {
            return Err(invalid(
                "optical_gain",
                format!("must be positive, got {g}"),
            ));
        }
        let v = m.var(i);
        Ok(Estimate {
            value: v / g - 1.0,
            stderr: variance_stderr(v, m.count()) / g,
        })
    };
    Ok((one(ix, gains.0)?, one(ip, gains.1)?))
}

/// Input-referred added noise `(V_meas − G)/G` of both quadratures.
pub fn estimate_added_noise(
    b: &TrajectoryBatch,
    optical_gain: f64,
    reference: Reference,
) -> Result<(Estimate, Estimate)> {
    noise_from_moments(&b.moments(), (optical_gain, optical_gain), reference)
}

/// Power gain of each quadrature from the mean transfer `(⟨recv⟩/⟨in⟩)²`.
/// A quadrature probed with less than [`MIN_GAIN_PROBE`] amplitude yields
/// `None`.
pub fn gains_from_moments(
    m: &Moments<RECORD_DIM>,
    input_mean: (f64, f64),
) -> Result<(Option<Estimate>, Option<Estimate>)> {
    require_count(m, 2)?;
    let one = |i: usize, mu: f64| {
        (mu.abs() >= MIN_GAIN_PROBE).then(|| {
            let mean = m.mean(i);
            let se = (m.var(i) / m.count() as f64).sqrt();
            Estimate {
                value: (mean / mu).powi(2),
                stderr: 2.0 * mean.abs() * se / (mu * mu),
            }
        })
    };
    Ok((
        one(var::X_RECV, input_mean.0),
        one(var::P_RECV, input_mean.1),
    ))
}

/// Power gain averaged over the probed quadratures.
pub fn estimate_gain(b: &TrajectoryBatch, input_mean: (f64, f64)) -> Result<Estimate> {
    let (gx, gp) = gains_from_moments(&b.moments(), input_mean)?;
    match (gx, gp) {
        (Some(x), Some(p)) => Ok(Estimate {
            value: 0.5 * (x.value + p.value),
            stderr: 0.5 * x.stderr.hypot(p.stderr),
        }),
        (Some(e), None) | (None, Some(e)) => Ok(e),
        (None, None) => Err(invalid(
            "input_mean",
            format!("at least one quadrature needs |mean| >= {MIN_GAIN_PROBE} for a gain estimate"),
        )),
    }
}

/// Per-quadrature estimates of the output given the tap reading `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroWindowEstimate {
    pub gain_x: Estimate,
    pub gain_p: Estimate,
    pub state_noise_x: Estimate,
    pub state_noise_p: Estimate,
    pub receiver_noise_x: Estimate,
    pub receiver_noise_p: Estimate,
}

/// Conditional statistics at tap reading zero by linear regression of each
/// output quadrature on the tap reading of the same quadrature.
///
/// For jointly Gaussian data the regression intercept is the conditional
/// mean at zero and the residual variance is the conditional variance, so
/// this is the window-to-zero limit without discarding any shot.
pub fn estimate_zero_window(
    m: &Moments<RECORD_DIM>,
    input_mean: (f64, f64),
) -> Result<ZeroWindowEstimate> {
    require_count(m, 3)?;
    for mu in [input_mean.0, input_mean.1] {
        if mu.abs() < MIN_GAIN_PROBE {
            return Err(invalid(
                "input_mean",
                format!("both quadratures need |mean| >= {MIN_GAIN_PROBE}, got {mu}"),
            ));
        }
    }
    let n = m.count() as f64;
    // (gain, residual variance, residual stderr) of y regressed on r
    let fit = |y: usize, r: usize, mu: f64| {
        let ss_r = m.cov(r, r) * (n - 1.0);
        let beta = m.cov(y, r) / m.cov(r, r);
        let intercept = m.mean(y) - beta * m.mean(r);
        let resid = (m.var(y) - m.cov(y, r) * beta) * (n - 1.0) / (n - 2.0);
        let se_intercept = (resid * (1.0 / n + m.mean(r).powi(2) / ss_r)).sqrt();
        let gain = Estimate {
            value: (intercept / mu).powi(2),
            stderr: 2.0 * intercept.abs() * se_intercept / (mu * mu),
        };
        (gain, resid, resid * (2.0 / (n - 2.0)).sqrt())
    };
    let noise = |gain: Estimate, resid: f64, se: f64| Estimate {
        value: resid / gain.value - 1.0,
        stderr: (se / gain.value).hypot(resid * gain.stderr / gain.value.powi(2)),
    };
    let (gain_x, sx, sx_se) = fit(var::X_OUT, var::X_TAP, input_mean.0);
    let (gain_p, sp, sp_se) = fit(var::P_OUT, var::P_TAP, input_mean.1);
    let (_, rx, rx_se) = fit(var::X_RECV, var::X_TAP, input_mean.0);
    let (_, rp, rp_se) = fit(var::P_RECV, var::P_TAP, input_mean.1);
    Ok(ZeroWindowEstimate {
        gain_x,
        gain_p,
        state_noise_x: noise(gain_x, sx, sx_se),
        state_noise_p: noise(gain_p, sp, sp_se),
        receiver_noise_x: noise(gain_x, rx, rx_se),
        receiver_noise_p: noise(gain_p, rp, rp_se),
    })
}
