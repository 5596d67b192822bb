//! Deterministic feedforward: the tap readings, scaled by electronic gains,
//! displace the transmitted signal.
//!
//! With reading `r_q` of quadrature `q` the corrected output is
//! `Q_out = Q_signal + g_q r_q`, so the amplitude transfer of that quadrature
//! is `√η + g_q √(e_q (1−η))` where `e_q` is the tap efficiency of `q`.
//!
//! Added noise is input-referred: an output variance `V` at power gain `G`
//! carries `V/G − 1` units of noise. At the receiver a heterodyne measurement
//! adds one vacuum unit before referencing, giving `(V+1)/G − 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, Detector, Plant, TapConfig};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianState, Quadrature};

/// Below this tap efficiency the erasing gains are treated as divergent.
pub const MIN_ERASING_GAMMA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ErasingHomodyne,
    ErasingHeterodyne,
    OptimalHeterodyne,
}

/// Electronic gains and the optical power gain they produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardPlan {
    pub strategy: Strategy,
    pub g_x: f64,
    pub g_p: f64,
    /// Power gain of the corrected quadrature(s).
    pub optical_gain: f64,
}

fn erasing_gain(ch: ChannelParams, efficiency: f64) -> f64 {
    ((1.0 - ch.eta()) / (efficiency * ch.eta())).sqrt()
}

fn check_erasing_gamma(tap: TapConfig) -> Result<()> {
    if tap.gamma() < MIN_ERASING_GAMMA {
        return Err(invalid(
            "gamma",
            format!(
                "erasing gains diverge as the tap efficiency vanishes, got {}",
                tap.gamma()
            ),
        ));
    }
    Ok(())
}

/// Single-quadrature erasing with a homodyne tap: `g = √((1−η)/(γη))` on the
/// measured quadrature, `G = 1/η`.
pub fn plan_erasing_homodyne(ch: ChannelParams, tap: TapConfig) -> Result<FeedforwardPlan> {
    check_erasing_gamma(tap)?;
    let g = erasing_gain(ch, tap.gamma());
    let (g_x, g_p) = match tap.detector() {
        Detector::HomodyneX => (g, 0.0),
        Detector::HomodyneP => (0.0, g),
        Detector::Heterodyne => {
            return Err(invalid(
                "detector",
                "homodyne erasing needs a homodyne tap detector",
            ));
        }
    };
    Ok(FeedforwardPlan {
        strategy: Strategy::ErasingHomodyne,
        g_x,
        g_p,
        optical_gain: 1.0 / ch.eta(),
    })
}

/// Conjugate-quadrature erasing with a heterodyne tap:
/// `g_x = g_p = √(2(1−η)/(γη))`, `G = 1/η`.
pub fn plan_erasing_heterodyne(ch: ChannelParams, tap: TapConfig) -> Result<FeedforwardPlan> {
    require_heterodyne(tap, "heterodyne erasing")?;
    check_erasing_gamma(tap)?;
    let g = erasing_gain(ch, tap.gamma() / 2.0);
    Ok(FeedforwardPlan {
        strategy: Strategy::ErasingHeterodyne,
        g_x: g,
        g_p: g,
        optical_gain: 1.0 / ch.eta(),
    })
}

/// Heterodyne feedforward with the gain that minimises the state added noise.
pub fn plan_optimal_heterodyne(ch: ChannelParams, tap: TapConfig) -> Result<FeedforwardPlan> {
    require_heterodyne(tap, "optimal feedforward")?;
    let (g, optical_gain) = optimal_gain(ch, tap);
    Ok(FeedforwardPlan {
        strategy: Strategy::OptimalHeterodyne,
        g_x: g,
        g_p: g,
        optical_gain,
    })
}

fn require_heterodyne(tap: TapConfig, what: &str) -> Result<()> {
    if tap.detector() != Detector::Heterodyne {
        return Err(invalid(
            "detector",
            format!("{what} needs a heterodyne tap detector"),
        ));
    }
    Ok(())
}

pub fn plan(strategy: Strategy, ch: ChannelParams, tap: TapConfig) -> Result<FeedforwardPlan> {
    match strategy {
        Strategy::ErasingHomodyne => plan_erasing_homodyne(ch, tap),
        Strategy::ErasingHeterodyne => plan_erasing_heterodyne(ch, tap),
        Strategy::OptimalHeterodyne => plan_optimal_heterodyne(ch, tap),
    }
}

/// Amplitude transfer of quadrature `q` under electronic gain `g`.
pub fn amplitude_transfer(ch: ChannelParams, tap: TapConfig, q: Quadrature, g: f64) -> f64 {
    ch.eta().sqrt() + g * (tap.quadrature_efficiency(q) * (1.0 - ch.eta())).sqrt()
}

/// Power gains `(G_x, G_p)` of both quadratures under `plan`.
pub fn quadrature_gains(ch: ChannelParams, tap: TapConfig, plan: &FeedforwardPlan) -> (f64, f64) {
    (
        amplitude_transfer(ch, tap, Quadrature::X, plan.g_x).powi(2),
        amplitude_transfer(ch, tap, Quadrature::P, plan.g_p).powi(2),
    )
}

/// State added noise of homodyne erasing, `(1−η)(1−γ)/γ`; `+∞` at `γ = 0`.
pub fn added_noise_hom_ff(ch: ChannelParams, tap: TapConfig) -> f64 {
    let gamma = tap.gamma();
    if gamma == 0.0 {
        return f64::INFINITY;
    }
    (1.0 - ch.eta()) * (1.0 - gamma) / gamma
}

/// State added noise of heterodyne erasing, `(1−η)(2−γ)/γ`; `+∞` at `γ = 0`.
pub fn added_noise_het_state(ch: ChannelParams, tap: TapConfig) -> f64 {
    let gamma = tap.gamma();
    if gamma == 0.0 {
        return f64::INFINITY;
    }
    (1.0 - ch.eta()) * (2.0 - gamma) / gamma
}

/// Added noise seen by a heterodyne receiver, without feedforward
/// `((1−η)V+1)/η` or with heterodyne erasing `η + (1−η)(2−γ)/γ`.
pub fn receiver_added_noise(ch: ChannelParams, tap: TapConfig, with_ff: bool) -> f64 {
    let eta = ch.eta();
    if with_ff {
        eta + added_noise_het_state(ch, tap)
    } else {
        ((1.0 - eta) * ch.v_env() + 1.0) / eta
    }
}

/// Whether each erasing scheme beats the uncorrected channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprovementConditions {
    /// Homodyne erasing lowers the state noise of the measured quadrature.
    pub hom: bool,
    /// Heterodyne erasing lowers the state noise: `γ > 2/(1 + V/η)`.
    pub het_state: bool,
    /// Heterodyne erasing lowers the receiver-referred noise.
    pub het_receiver: bool,
}

pub fn improvement_conditions(ch: ChannelParams, tap: TapConfig) -> ImprovementConditions {
    let (eta, v, gamma) = (ch.eta(), ch.v_env(), tap.gamma());
    ImprovementConditions {
        hom: gamma > eta / (v + eta),
        het_state: gamma > 2.0 / (1.0 + v / eta),
        het_receiver: gamma > 2.0 * eta / (1.0 + 2.0 * eta + v),
    }
}

/// Minimal state added noise over heterodyne feedforward gains,
/// `(1−η)(2−γ)V / (η(2−γ) + γV)`.
pub fn optimal_added_noise(ch: ChannelParams, tap: TapConfig) -> f64 {
    let (eta, v, gamma) = (ch.eta(), ch.v_env(), tap.gamma());
    (1.0 - eta) * (2.0 - gamma) * v / (eta * (2.0 - gamma) + gamma * v)
}

/// Electronic gain reaching [`optimal_added_noise`] and its optical gain,
/// `g = √(2γ(1−η)) V / (√η (2 + γ(V−1)))`,
/// `G = ((2−γ)η + γV)² / (η (2−γ+γV)²)`.
pub fn optimal_gain(ch: ChannelParams, tap: TapConfig) -> (f64, f64) {
    let (eta, v, gamma) = (ch.eta(), ch.v_env(), tap.gamma());
    let g = (2.0 * gamma * (1.0 - eta)).sqrt() * v / (eta.sqrt() * (2.0 + gamma * (v - 1.0)));
    let ratio = ((2.0 - gamma) * eta + gamma * v) / (2.0 - gamma + gamma * v);
    (g, ratio * ratio / eta)
}

/// A classical tap record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TapOutcome {
    Homodyne(f64),
    Heterodyne(f64, f64),
}

/// Displaces `signal` (single mode) by the gains of `plan` applied to `outcome`.
///
/// A homodyne outcome drives whichever quadrature carries a non-zero gain.
pub fn apply_feedforward(
    signal: &GaussianState,
    outcome: TapOutcome,
    plan: &FeedforwardPlan,
) -> Result<GaussianState> {
    if signal.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: signal.n_modes(),
        });
    }
    let (dx, dp) = match (plan.strategy, outcome) {
        (Strategy::ErasingHomodyne, TapOutcome::Homodyne(r)) => (plan.g_x * r, plan.g_p * r),
        (Strategy::ErasingHomodyne, TapOutcome::Heterodyne(..)) => {
            return Err(Error::OutcomeMismatch {
                detector: "homodyne",
            })
        }
        (_, TapOutcome::Heterodyne(x, p)) => (plan.g_x * x, plan.g_p * p),
        (_, TapOutcome::Homodyne(_)) => {
            return Err(Error::OutcomeMismatch {
                detector: "heterodyne",
            })
        }
    };
    signal.displace(0, dx, dp)
}

/// Unconditional output state `s + D r` with `D = diag(g_x, g_p)`, averaged
/// over all tap records.
pub fn averaged_output(plant: &Plant, plan: &FeedforwardPlan) -> Result<GaussianState> {
    let signal = plant.signal();
    let (rec_mean, rec_cov) = plant.tap_record();
    let cross = plant.signal_tap_covariance();
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![plan.g_x, plan.g_p]));
    let mean = signal.mean() + &d * rec_mean;
    let cov = signal.cov() + &d * cross.transpose() + &cross * &d + &d * rec_cov * &d;
    GaussianState::from_moments(mean, (&cov + cov.transpose()) * 0.5)
}

/// Per-quadrature state added noise `V/G − 1` of the averaged output, for a
/// plant built from a coherent input.
pub fn state_added_noise(plant: &Plant, plan: &FeedforwardPlan) -> Result<(f64, f64)> {
    let out = averaged_output(plant, plan)?;
    let (gx, gp) = quadrature_gains(plant.channel(), plant.tap(), plan);
    Ok((out.cov()[(0, 0)] / gx - 1.0, out.cov()[(1, 1)] / gp - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{added_noise_uncorrected, build_plant};

    const ETAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    const GAMMAS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
    const VS: [f64; 5] = [1.0, 2.0, 5.0, 25.0, 100.0];

    fn ch(eta: f64, v: f64) -> ChannelParams {
        ChannelParams::new(eta, v).unwrap()
    }
    fn het(g: f64) -> TapConfig {
        TapConfig::heterodyne(g).unwrap()
    }
    fn hom(g: f64) -> TapConfig {
        TapConfig::homodyne_x(g).unwrap()
    }
    fn vac_plant(c: ChannelParams, t: TapConfig) -> Plant {
        build_plant(c, t, &GaussianState::coherent(0.0, 0.0)).unwrap()
    }

    #[test]
    fn erasing_plan_values() {
        let p = plan_erasing_homodyne(ch(0.5, 3.0), hom(1.0)).unwrap();
        assert!((p.g_x - 1.0).abs() < 1e-15 && p.g_p == 0.0);
        assert_eq!(p.optical_gain, 2.0);
        assert!(
            (plan_erasing_homodyne(ch(0.1, 3.0), hom(0.5))
                .unwrap()
                .optical_gain
                - 10.0)
                .abs()
                < 1e-12
        );
        assert!(plan_erasing_homodyne(ch(1.0, 3.0), hom(1.0)).unwrap().g_x == 0.0);
        let p = plan_erasing_heterodyne(ch(0.5, 3.0), het(1.0)).unwrap();
        assert!((p.g_x - 2f64.sqrt()).abs() < 1e-15 && p.g_x == p.g_p);
        assert!(
            (plan_erasing_heterodyne(ch(0.9, 3.0), het(0.5))
                .unwrap()
                .optical_gain
                - 1.111)
                .abs()
                < 1e-3
        );
        assert!(plan_erasing_heterodyne(ch(0.9, 3.0), het(1e-7)).is_err());
        assert!(plan_erasing_heterodyne(ch(0.9, 3.0), hom(0.5)).is_err());
        assert!(plan_erasing_homodyne(ch(0.9, 3.0), het(0.5)).is_err());
        let p = plan_erasing_homodyne(
            ch(0.5, 3.0),
            TapConfig::new(1.0, Detector::HomodyneP).unwrap(),
        )
        .unwrap();
        assert!(p.g_x == 0.0 && (p.g_p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn erasing_plans_reach_optical_gain() {
        for &eta in &ETAS {
            for &gamma in &GAMMAS {
                let c = ch(eta, 7.0);
                let p = plan_erasing_heterodyne(c, het(gamma)).unwrap();
                let (gx, gp) = quadrature_gains(c, het(gamma), &p);
                assert!((gx - 1.0 / eta).abs() < 1e-12 && (gp - 1.0 / eta).abs() < 1e-12);
                let p = plan_erasing_homodyne(c, hom(gamma)).unwrap();
                let (gx, gp) = quadrature_gains(c, hom(gamma), &p);
                assert!((gx - 1.0 / eta).abs() < 1e-12 && (gp - eta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn optimal_plan_table_value() {
        let p = plan_optimal_heterodyne(ch(0.9, 25.0), het(0.92)).unwrap();
        assert!((p.optical_gain - 1.101).abs() < 1e-3, "{}", p.optical_gain);
        assert!((optimal_added_noise(ch(0.9, 25.0), het(0.92)) - 0.1126).abs() < 1e-4);
    }

    #[test]
    fn optimal_gain_reproduces_optical_gain_by_transfer() {
        for &eta in &ETAS {
            for &gamma in &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
                for &v in &VS {
                    let (c, t) = (ch(eta, v), het(gamma));
                    let p = plan_optimal_heterodyne(c, t).unwrap();
                    let (gx, gp) = quadrature_gains(c, t, &p);
                    assert!((gx - p.optical_gain).abs() < 1e-12 * p.optical_gain.max(1.0));
                    assert_eq!(gx, gp);
                }
            }
        }
    }

    #[test]
    fn vacuum_gamma_limit_of_optimal_plan() {
        let p = plan_optimal_heterodyne(ch(0.4, 9.0), het(0.0)).unwrap();
        assert_eq!(p.g_x, 0.0);
        assert!((p.optical_gain - 0.4).abs() < 1e-15);
        assert!(
            (optimal_added_noise(ch(0.4, 9.0), het(0.0)) - added_noise_uncorrected(ch(0.4, 9.0)))
                .abs()
                < 1e-12
        );
    }

    /// Golden-section minimisation of the exact state noise over the gain.
    fn brute_force_optimum(c: ChannelParams, t: TapConfig) -> (f64, f64) {
        let plant = vac_plant(c, t);
        let noise = |g: f64| {
            let p = FeedforwardPlan {
                strategy: Strategy::OptimalHeterodyne,
                g_x: g,
                g_p: g,
                optical_gain: 0.0,
            };
            state_added_noise(&plant, &p).unwrap().0
        };
        let (mut lo, mut hi) = (0.0, 50.0);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if noise(a) < noise(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let g = 0.5 * (lo + hi);
        (g, noise(g))
    }

    #[test]
    fn optimal_gain_agrees_with_brute_force() {
        for &(eta, gamma, v) in &[
            (0.9, 0.92, 25.0),
            (0.5, 0.5, 5.0),
            (0.1, 1.0, 9.0),
            (0.7, 0.3, 2.0),
            (0.3, 0.8, 100.0),
        ] {
            let (c, t) = (ch(eta, v), het(gamma));
            let (g_bf, n_bf) = brute_force_optimum(c, t);
            let (g, _) = optimal_gain(c, t);
            assert!((g - g_bf).abs() < 1e-5 * g.max(1.0), "{g} vs {g_bf}");
            assert!((optimal_added_noise(c, t) - n_bf).abs() < 1e-10);
        }
    }

    #[test]
    fn erasing_closed_forms_match_phase_space() {
        for &eta in &ETAS {
            for &gamma in &GAMMAS {
                for &v in &VS {
                    let c = ch(eta, v);
                    let plant = vac_plant(c, het(gamma));
                    let p = plan_erasing_heterodyne(c, het(gamma)).unwrap();
                    let (nx, np) = state_added_noise(&plant, &p).unwrap();
                    let want = added_noise_het_state(c, het(gamma));
                    assert!((nx - want).abs() < 1e-9 && (np - want).abs() < 1e-9);
                    // receiver-referred: one more vacuum unit before referencing
                    let out = averaged_output(&plant, &p).unwrap();
                    let recv = (out.cov()[(0, 0)] + 1.0) / p.optical_gain - 1.0;
                    assert!((recv - receiver_added_noise(c, het(gamma), true)).abs() < 1e-9);

                    let plant = vac_plant(c, hom(gamma));
                    let p = plan_erasing_homodyne(c, hom(gamma)).unwrap();
                    let (nx, _) = state_added_noise(&plant, &p).unwrap();
                    assert!((nx - added_noise_hom_ff(c, hom(gamma))).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn receiver_noise_values() {
        for &eta in &ETAS {
            assert!((receiver_added_noise(ch(eta, 40.0), het(1.0), true) - 1.0).abs() < 1e-12);
        }
        assert!((receiver_added_noise(ch(0.9, 1.0), het(0.92), true) - 1.0174).abs() < 1e-4);
        assert!((receiver_added_noise(ch(0.1, 9.0), het(0.5), false) - 91.0).abs() < 1e-9);
        assert!((receiver_added_noise(ch(0.5, 1.0), het(0.5), false) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn erasing_noise_values() {
        assert_eq!(added_noise_hom_ff(ch(0.3, 4.0), hom(1.0)), 0.0);
        assert!((added_noise_hom_ff(ch(0.5, 4.0), hom(0.5)) - 0.5).abs() < 1e-15);
        assert_eq!(
            added_noise_hom_ff(ch(0.5, 1.0), hom(0.3)),
            added_noise_hom_ff(ch(0.5, 100.0), hom(0.3))
        );
        assert_eq!(added_noise_hom_ff(ch(0.5, 1.0), hom(0.0)), f64::INFINITY);
        assert!((added_noise_het_state(ch(0.9, 2.0), het(1.0)) - 0.1).abs() < 1e-12);
        assert_eq!(added_noise_het_state(ch(1.0, 2.0), het(1.0)), 0.0);
        assert!((added_noise_het_state(ch(0.5, 2.0), het(2.0 / 3.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn improvement_condition_values() {
        let c = improvement_conditions(ch(0.9, 25.0), het(0.92));
        assert!(c.hom && c.het_state && c.het_receiver);
        assert!(!improvement_conditions(ch(0.5, 1.0), hom(0.3)).hom);
        // heterodyne erasing at (0.5, 0.6, V=1) adds 1.167 against 1.0 uncorrected
        assert!(!improvement_conditions(ch(0.5, 1.0), het(0.6)).het_state);
        let c = improvement_conditions(ch(0.5, 1e12), het(1e-6));
        assert!(c.hom && c.het_state && c.het_receiver);
    }

    #[test]
    fn improvement_conditions_agree_with_noise_comparison() {
        for &eta in &ETAS {
            for &gamma in &GAMMAS {
                for &v in &VS {
                    let (c, t) = (ch(eta, v), het(gamma));
                    let base = added_noise_uncorrected(c);
                    let cond = improvement_conditions(c, t);
                    let margin = |a: f64, b: f64| (a - b).abs() > 1e-9;
                    let hom_better = added_noise_hom_ff(c, t) < base;
                    if margin(added_noise_hom_ff(c, t), base) {
                        assert_eq!(cond.hom, hom_better);
                    }
                    if margin(added_noise_het_state(c, t), base) {
                        assert_eq!(cond.het_state, added_noise_het_state(c, t) < base);
                    }
                    let (r_ff, r_no) = (
                        receiver_added_noise(c, t, true),
                        receiver_added_noise(c, t, false),
                    );
                    if margin(r_ff, r_no) {
                        assert_eq!(cond.het_receiver, r_ff < r_no);
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_in_gamma_and_optimum_below_erasing() {
        for &eta in &[0.1, 0.5, 0.9] {
            for &v in &[1.5, 5.0, 25.0] {
                let c = ch(eta, v);
                let gammas: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
                for w in gammas.windows(2) {
                    let (a, b) = (het(w[0]), het(w[1]));
                    assert!(added_noise_hom_ff(c, b) < added_noise_hom_ff(c, a));
                    assert!(added_noise_het_state(c, b) < added_noise_het_state(c, a));
                    assert!(receiver_added_noise(c, b, true) < receiver_added_noise(c, a, true));
                    assert!(optimal_added_noise(c, b) < optimal_added_noise(c, a));
                }
                for &gamma in &gammas {
                    let t = het(gamma);
                    assert!(optimal_added_noise(c, t) <= added_noise_het_state(c, t) + 1e-12);
                    assert!(optimal_added_noise(c, t) <= added_noise_uncorrected(c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn feedforward_displacement() {
        let p = plan_erasing_heterodyne(ch(0.5, 3.0), het(1.0)).unwrap();
        let s = GaussianState::coherent(1.0, -1.0);
        assert_eq!(
            apply_feedforward(&s, TapOutcome::Heterodyne(0.0, 0.0), &p).unwrap(),
            s
        );
        let a = apply_feedforward(&s, TapOutcome::Heterodyne(2.0, 3.0), &p).unwrap();
        let b = apply_feedforward(&s, TapOutcome::Heterodyne(4.0, 6.0), &p).unwrap();
        let da = a.mean() - s.mean();
        let db = b.mean() - s.mean();
        assert!((db - da * 2.0).amax() < 1e-12);
        assert_eq!(a.cov(), s.cov());
        assert!(matches!(
            apply_feedforward(&s, TapOutcome::Homodyne(1.0), &p),
            Err(Error::OutcomeMismatch { .. })
        ));
        let ph = plan_erasing_homodyne(ch(0.5, 3.0), hom(1.0)).unwrap();
        let h = apply_feedforward(&s, TapOutcome::Homodyne(2.0), &ph).unwrap();
        assert!((h.mean()[0] - 3.0).abs() < 1e-12 && h.mean()[1] == -1.0);
        assert!(apply_feedforward(&s, TapOutcome::Heterodyne(1.0, 1.0), &ph).is_err());
    }

    /// Condition-then-displace, averaged over outcomes with the law of total
    /// covariance, must equal the unconditional linear map.
    #[test]
    fn conditional_pipeline_matches_average() {
        let (c, t) = (ch(0.6, 12.0), het(0.7));
        let plant = build_plant(c, t, &GaussianState::coherent(2.0, -1.0)).unwrap();
        let p = plan_optimal_heterodyne(c, t).unwrap();
        let (rec_mean, rec_cov) = plant.tap_record();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![p.g_x, p.g_p]));
        let at = |r: &DVector<f64>| {
            let (s, _) = plant.condition_on_tap((r[0], r[1])).unwrap();
            apply_feedforward(&s, TapOutcome::Heterodyne(r[0], r[1]), &p).unwrap()
        };
        let base = at(&rec_mean);
        // conditional mean is affine in the record; its slope is K + D
        let mut slope = DMatrix::zeros(2, 2);
        for k in 0..2 {
            let mut r = rec_mean.clone();
            r[k] += 1.0;
            slope.set_column(k, &(at(&r).mean() - base.mean()));
        }
        let k_gain = plant.signal_tap_covariance() * rec_cov.clone().try_inverse().unwrap();
        assert!((&slope - (&k_gain + &d)).amax() < 1e-9);
        let total = base.cov() + &slope * &rec_cov * slope.transpose();
        let avg = averaged_output(&plant, &p).unwrap();
        assert!((total - avg.cov()).amax() < 1e-9);
        assert!((base.mean() - avg.mean()).amax() < 1e-9);
    }
}
