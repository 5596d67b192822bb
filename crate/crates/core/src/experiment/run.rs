//! `run`: closed-form predictions next to Monte Carlo estimates for one
//! configuration.

use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Format};
use super::table::{write_file, write_json, Cell, Table};
use super::Failure;
use crate::channel::{ChannelParams, TapConfig};
use crate::correction;
use crate::gaussian::Quadrature;
use crate::herald::{self, HeraldWindow, PROBE_MEAN};
use crate::montecarlo::{gains_from_moments, noise_from_moments, Estimate, Reference, Simulation};
use crate::qkd::{key_rate, scheme_quadratures, Attack, EffectiveChannel, Reconciliation, Scheme};
use crate::Result;

pub const SCHEMA: &str = "envcorr-run v1";

/// Simulated statistics of one quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub gain: Estimate,
    pub state_noise: Estimate,
    pub receiver_noise: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeEstimate {
    pub x: QuadratureEstimate,
    pub p: QuadratureEstimate,
    pub success_prob: Option<Estimate>,
}

impl SchemeEstimate {
    pub fn quadrature(&self, q: Quadrature) -> &QuadratureEstimate {
        match q {
            Quadrature::X => &self.x,
            Quadrature::P => &self.p,
        }
    }
}

/// Closed-form `(gain, state added noise)` per quadrature; `None` for a
/// finite herald window, which has no closed form.
pub fn closed_form(
    ch: ChannelParams,
    tap: TapConfig,
    scheme: Scheme,
    window: Option<HeraldWindow>,
) -> Result<Option<[(f64, f64); 2]>> {
    if scheme == Scheme::Herald && window.is_some() {
        return Ok(None);
    }
    scheme_quadratures(ch, tap, scheme).map(Some)
}

/// Simulates `scheme` with input amplitude [`PROBE_MEAN`]. Deterministic
/// schemes reference the added noise to their closed-form gains; heralded
/// runs reference it to the measured gains.
pub fn simulate_scheme(
    ch: ChannelParams,
    tap: TapConfig,
    scheme: Scheme,
    window: Option<HeraldWindow>,
    n: u64,
    seed: u64,
) -> Result<SchemeEstimate> {
    if scheme == Scheme::Herald {
        return Ok(match window {
            Some(w) => {
                let s = herald::heralded_statistics(ch, tap, w, n, seed)?;
                SchemeEstimate {
                    x: QuadratureEstimate {
                        gain: s.gain_x,
                        state_noise: s.state_noise_x,
                        receiver_noise: s.added_noise_x,
                    },
                    p: QuadratureEstimate {
                        gain: s.gain_p,
                        state_noise: s.state_noise_p,
                        receiver_noise: s.added_noise_p,
                    },
                    success_prob: Some(Estimate {
                        value: s.success_prob,
                        stderr: s.success_stderr,
                    }),
                }
            }
            None => {
                let z = herald::zero_window_statistics(ch, tap, n, seed)?;
                SchemeEstimate {
                    x: QuadratureEstimate {
                        gain: z.gain_x,
                        state_noise: z.state_noise_x,
                        receiver_noise: z.receiver_noise_x,
                    },
                    p: QuadratureEstimate {
                        gain: z.gain_p,
                        state_noise: z.state_noise_p,
                        receiver_noise: z.receiver_noise_p,
                    },
                    success_prob: None,
                }
            }
        });
    }
    let [(gx, _), (gp, _)] = scheme_quadratures(ch, tap, scheme)?;
    let mut sim = Simulation::new(ch, tap, PROBE_MEAN);
    sim.plan = match scheme {
        Scheme::None => None,
        Scheme::ErasingHom => Some(correction::plan(
            correction::Strategy::ErasingHomodyne,
            ch,
            tap,
        )?),
        Scheme::ErasingHet => Some(correction::plan(
            correction::Strategy::ErasingHeterodyne,
            ch,
            tap,
        )?),
        Scheme::Optimal => Some(correction::plan(
            correction::Strategy::OptimalHeterodyne,
            ch,
            tap,
        )?),
        Scheme::Herald => unreachable!("handled above"),
    };
    let m = sim.moments(n, seed, |_| true);
    let (mgx, mgp) = gains_from_moments(&m, PROBE_MEAN)?;
    let (sx, sp) = noise_from_moments(&m, (gx, gp), Reference::State)?;
    let (rx, rp) = noise_from_moments(&m, (gx, gp), Reference::Receiver)?;
    Ok(SchemeEstimate {
        x: QuadratureEstimate {
            gain: mgx.expect("probe amplitude is large enough"),
            state_noise: sx,
            receiver_noise: rx,
        },
        p: QuadratureEstimate {
            gain: mgp.expect("probe amplitude is large enough"),
            state_noise: sp,
            receiver_noise: rp,
        },
        success_prob: None,
    })
}

/// Key rate (finite, asymptotic) for a simulated channel, with standard
/// errors propagated by central differences. `None` when the estimate lies
/// outside the physical region.
pub fn simulated_key_rate(
    gain: Estimate,
    noise: Estimate,
    sigma: f64,
    attack: Attack,
    direction: Reconciliation,
) -> Option<[Estimate; 2]> {
    let eval = |g: f64, v: f64| -> Option<[f64; 2]> {
        let r = key_rate(&EffectiveChannel::homodyne(g, v).ok()?, sigma, attack).ok()?;
        let pair = r.rates(direction);
        Some([pair.finite, pair.asymptotic])
    };
    let centre = eval(gain.value, noise.value)?;
    let (hg, hv) = (
        1e-6 * gain.value.abs().max(1e-3),
        1e-6 * noise.value.abs().max(1e-3),
    );
    let dg = eval(gain.value + hg, noise.value).zip(eval(gain.value - hg, noise.value));
    let dv = eval(gain.value, noise.value + hv).zip(eval(gain.value, noise.value - hv));
    Some(std::array::from_fn(|k| {
        let sg = dg.map_or(f64::NAN, |(a, b)| (a[k] - b[k]) / (2.0 * hg) * gain.stderr);
        let sv = dv.map_or(f64::NAN, |(a, b)| (a[k] - b[k]) / (2.0 * hv) * noise.stderr);
        Estimate {
            value: centre[k],
            stderr: sg.hypot(sv),
        }
    }))
}

fn row(quantity: &str, q: &str, closed: Option<f64>, mc: Option<Estimate>) -> Vec<Cell> {
    let z = closed.zip(mc).map(|(c, e)| (e.value - c) / e.stderr);
    vec![
        quantity.into(),
        q.into(),
        closed.into(),
        mc.map(|e| e.value).into(),
        mc.map(|e| e.stderr).into(),
        z.into(),
    ]
}

/// Builds the result table of a validated configuration.
pub fn run_table(cfg: &ExperimentConfig) -> std::result::Result<Table, Failure> {
    let (ch, tap, scheme, window) = (cfg.channel, cfg.tap, cfg.strategy, cfg.window());
    let closed = closed_form(ch, tap, scheme, window)?;
    let mc = if cfg.mc.n > 0 {
        Some(simulate_scheme(
            ch,
            tap,
            scheme,
            window,
            cfg.mc.n,
            cfg.mc.seed,
        )?)
    } else {
        None
    };

    let mut t = Table::new(
        SCHEMA,
        &[
            "quantity",
            "quadrature",
            "closed_form",
            "monte_carlo",
            "stderr",
            "z_score",
        ],
    );
    t.note(format!(
        "eta={} v_env={} gamma={} detector={} strategy={} n={} seed={}",
        ch.eta(),
        ch.v_env(),
        tap.gamma(),
        tap.detector().name(),
        scheme.name(),
        cfg.mc.n,
        cfg.mc.seed
    ));
    if let Some(w) = window {
        t.note(format!("window x_th={} p_th={}", w.x_th(), w.p_th()));
    }

    for (k, q) in [(0, Quadrature::X), (1, Quadrature::P)] {
        let name = if k == 0 { "x" } else { "p" };
        let cf = closed.map(|c| c[k]);
        let est = mc.map(|m| *m.quadrature(q));
        t.push(row("gain", name, cf.map(|c| c.0), est.map(|e| e.gain)));
        t.push(row(
            "state_added_noise",
            name,
            cf.map(|c| c.1),
            est.map(|e| e.state_noise),
        ));
        t.push(row(
            "receiver_added_noise",
            name,
            cf.map(|(g, v)| v + 1.0 / g),
            est.map(|e| e.receiver_noise),
        ));
        let excess = |g: f64, v: f64| v - (1.0 - g).abs() / g;
        t.push(row(
            "excess_noise",
            name,
            cf.map(|(g, v)| excess(g, v)),
            est.map(|e| Estimate {
                value: excess(e.gain.value, e.state_noise.value),
                stderr: e.state_noise.stderr,
            }),
        ));
        if let Some(qc) = cfg.qkd {
            let closed_rate = cf.and_then(|(g, v)| {
                let r =
                    key_rate(&EffectiveChannel::homodyne(g, v).ok()?, qc.sigma, qc.attack).ok()?;
                Some(r.rates(qc.direction))
            });
            let mc_rate = est.and_then(|e| {
                simulated_key_rate(e.gain, e.state_noise, qc.sigma, qc.attack, qc.direction)
            });
            t.push(row(
                "key_rate",
                name,
                closed_rate.map(|r| r.finite),
                mc_rate.map(|r| r[0]),
            ));
            t.push(row(
                "key_rate_asymptotic",
                name,
                closed_rate.map(|r| r.asymptotic),
                mc_rate.map(|r| r[1]),
            ));
        }
    }
    if scheme == Scheme::Herald && window.is_some() {
        t.push(row(
            "success_probability",
            "xp",
            None,
            mc.and_then(|m| m.success_prob),
        ));
    }
    if let Some(qc) = cfg.qkd {
        t.note(format!(
            "key rates: sigma={} attack={} direction={}",
            qc.sigma,
            format!("{:?}", qc.attack).to_lowercase(),
            format!("{:?}", qc.direction).to_lowercase()
        ));
    }
    Ok(t)
}

/// Runs `cfg` and writes its table. The destination is `output.path` or
/// `<out_dir>/run.<ext>`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> std::result::Result<PathBuf, Failure> {
    let table = run_table(cfg)?;
    let ext = match cfg.output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = cfg
        .output
        .path
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("run.{ext}")));
    match cfg.output.format {
        Format::Csv => write_file(&path, &table.to_csv()?)?,
        Format::Json => write_json(&path, &table.to_json())?,
    }
    Ok(path)
}
