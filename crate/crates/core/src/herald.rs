//! Probabilistic correction: keep a shot only when both tap readings fall in
//! a window around zero. No displacement is applied to kept shots.
//!
//! In the limit of a vanishing window the kept signal is the Gaussian state
//! conditioned on a zero record. If a fraction `f` of the leaked mode reaches
//! a sharp reading of a quadrature, that quadrature ends up with gain
//! `η(1−f+fV)² / (1−f+f(ηV+1−η))²` and state added noise
//! `(1−η)/η · ((1−f)fηV'² + V) / (1+fV')²` where `V' = V − 1`.
//! A heterodyne tap of efficiency `γ` gives `f = γ/2` on each quadrature.

use serde::{Deserialize, Serialize};

use crate::channel::{build_plant, ChannelParams, TapConfig};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianState, Quadrature};
use crate::montecarlo::{
    estimate_zero_window, gains_from_moments, var, Estimate, Moments, Simulation,
    ZeroWindowEstimate, RECORD_DIM,
};

/// Input amplitude used when probing gains by simulation.
pub const PROBE_MEAN: (f64, f64) = (10.0, 10.0);
/// Fewest trajectories accepted by [`heralded_statistics`].
pub const MIN_TRAJECTORIES: u64 = 10_000;

/// Square acceptance window `|x| ≤ x_th`, `|p| ≤ p_th` on the tap record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldWindow {
    x_th: f64,
    p_th: f64,
}

impl HeraldWindow {
    /// Half-widths may be `+∞` (no selection on that quadrature).
    pub fn new(x_th: f64, p_th: f64) -> Result<Self> {
        for (name, v) in [("x_th", x_th), ("p_th", p_th)] {
            if !(v >= 0.0) {
                return Err(invalid(
                    name,
                    format!("window half-width must be >= 0, got {v}"),
                ));
            }
        }
        Ok(Self { x_th, p_th })
    }

    pub fn unbounded() -> Self {
        Self {
            x_th: f64::INFINITY,
            p_th: f64::INFINITY,
        }
    }

    /// Half-widths of `factor` standard deviations of each tap reading.
    pub fn scaled(ch: ChannelParams, tap: TapConfig, factor: f64) -> Result<Self> {
        let plant = build_plant(ch, tap, &GaussianState::coherent(0.0, 0.0))?;
        let (_, cov) = plant.tap_record();
        Self::new(factor * cov[(0, 0)].sqrt(), factor * cov[(1, 1)].sqrt())
    }

    pub fn x_th(&self) -> f64 {
        self.x_th
    }

    pub fn p_th(&self) -> f64 {
        self.p_th
    }

    pub fn accept(&self, outcome: (f64, f64)) -> bool {
        outcome.0.abs() <= self.x_th && outcome.1.abs() <= self.p_th
    }

    /// Whether every outcome kept by `other` is also kept by `self`.
    pub fn contains(&self, other: &HeraldWindow) -> bool {
        self.x_th >= other.x_th && self.p_th >= other.p_th
    }
}

pub fn accept(outcome: (f64, f64), w: &HeraldWindow) -> bool {
    w.accept(outcome)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid(
            "fraction",
            format!("measured fraction must lie in [0, 1], got {fraction}"),
        ));
    }
    Ok(())
}

/// State added noise of a quadrature conditioned on a zero sharp reading
/// that collects `fraction` of the leaked mode.
pub fn conditioned_added_noise(ch: ChannelParams, fraction: f64) -> Result<f64> {
    check_fraction(fraction)?;
    let (eta, v, f) = (ch.eta(), ch.v_env(), fraction);
    let vm = v - 1.0;
    Ok((1.0 - eta) / eta * ((1.0 - f) * f * eta * vm * vm + v) / (1.0 + f * vm).powi(2))
}

/// Power gain of a quadrature conditioned on a zero sharp reading that
/// collects `fraction` of the leaked mode.
pub fn conditioned_gain(ch: ChannelParams, fraction: f64) -> Result<f64> {
    check_fraction(fraction)?;
    let (eta, v, f) = (ch.eta(), ch.v_env(), fraction);
    let num = 1.0 - f + f * v;
    let den = 1.0 - f + f * (eta * v + 1.0 - eta);
    Ok(eta * (num / den).powi(2))
}

/// Zero-window state added noise `(x, p)` for the given tap.
pub fn zero_window_added_noise(ch: ChannelParams, tap: TapConfig) -> (f64, f64) {
    let f = |q| {
        conditioned_added_noise(ch, tap.quadrature_efficiency(q))
            .expect("efficiency lies in [0, 1]")
    };
    (f(Quadrature::X), f(Quadrature::P))
}

/// Zero-window power gain `(x, p)` for the given tap.
pub fn zero_window_gain(ch: ChannelParams, tap: TapConfig) -> (f64, f64) {
    let f =
        |q| conditioned_gain(ch, tap.quadrature_efficiency(q)).expect("efficiency lies in [0, 1]");
    (f(Quadrature::X), f(Quadrature::P))
}

/// Gain and state added noise of each signal quadrature after conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedSignal {
    pub gain_x: f64,
    pub gain_p: f64,
    pub noise_x: f64,
    pub noise_p: f64,
}

fn conditioned_signal(conditioned_at_unit_input: &GaussianState) -> ConditionedSignal {
    // the conditional mean is linear in the input mean with no offset
    let (kx, kp) = (
        conditioned_at_unit_input.mean()[0],
        conditioned_at_unit_input.mean()[1],
    );
    let (gx, gp) = (kx * kx, kp * kp);
    ConditionedSignal {
        gain_x: gx,
        gain_p: gp,
        noise_x: conditioned_at_unit_input.cov()[(0, 0)] / gx - 1.0,
        noise_p: conditioned_at_unit_input.cov()[(1, 1)] / gp - 1.0,
    }
}

/// Conditions the full plant on a zero tap record and reads off the signal.
pub fn zero_window_oracle(ch: ChannelParams, tap: TapConfig) -> Result<ConditionedSignal> {
    let plant = build_plant(ch, tap, &GaussianState::coherent(1.0, 1.0))?;
    let (signal, _) = plant.condition_on_tap((0.0, 0.0))?;
    Ok(conditioned_signal(&signal))
}

/// Heralded estimates over the accepted shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldStats {
    pub n: u64,
    pub accepted: u64,
    pub success_prob: f64,
    pub success_stderr: f64,
    pub gain_x: Estimate,
    pub gain_p: Estimate,
    /// Mean of the two quadrature gains.
    pub gain: Estimate,
    /// Receiver-referred added noise.
    pub added_noise_x: Estimate,
    pub added_noise_p: Estimate,
    /// State-referred added noise.
    pub state_noise_x: Estimate,
    pub state_noise_p: Estimate,
}

fn referred_noise(m: &Moments<RECORD_DIM>, i: usize, gain: Estimate) -> Estimate {
    let v = m.var(i);
    let se_v = v * (2.0 / (m.count() as f64 - 1.0)).sqrt();
    Estimate {
        value: v / gain.value - 1.0,
        stderr: (se_v / gain.value).hypot(v * gain.stderr / gain.value.powi(2)),
    }
}

/// Turns moments of accepted shots out of `n` into heralded statistics.
pub fn stats_from_moments(
    m: &Moments<RECORD_DIM>,
    n: u64,
    input_mean: (f64, f64),
) -> Result<HeraldStats> {
    let accepted = m.count();
    let success_prob = accepted as f64 / n as f64;
    if accepted == 0 {
        return Err(Error::NoYield { n, success_prob });
    }
    if accepted < 3 {
        return Err(Error::Numeric(format!(
            "only {accepted} shots accepted; too few for variance estimates"
        )));
    }
    let (gx, gp) = gains_from_moments(m, input_mean)?;
    let (gain_x, gain_p) = match (gx, gp) {
        (Some(x), Some(p)) => (x, p),
        _ => {
            return Err(invalid(
                "input_mean",
                "heralded gains need both input quadratures displaced",
            ))
        }
    };
    Ok(HeraldStats {
        n,
        accepted,
        success_prob,
        success_stderr: (success_prob * (1.0 - success_prob) / n as f64).sqrt(),
        gain_x,
        gain_p,
        gain: Estimate {
            value: 0.5 * (gain_x.value + gain_p.value),
            stderr: 0.5 * gain_x.stderr.hypot(gain_p.stderr),
        },
        added_noise_x: referred_noise(m, var::X_RECV, gain_x),
        added_noise_p: referred_noise(m, var::P_RECV, gain_p),
        state_noise_x: referred_noise(m, var::X_OUT, gain_x),
        state_noise_p: referred_noise(m, var::P_OUT, gain_p),
    })
}

fn check_n(n: u64) -> Result<()> {
    if n < MIN_TRAJECTORIES {
        return Err(invalid(
            "n",
            format!("need at least {MIN_TRAJECTORIES} trajectories, got {n}"),
        ));
    }
    Ok(())
}

/// Simulates `n` shots with input [`PROBE_MEAN`] and keeps those inside `w`.
pub fn heralded_statistics(
    ch: ChannelParams,
    tap: TapConfig,
    w: HeraldWindow,
    n: u64,
    seed: u64,
) -> Result<HeraldStats> {
    check_n(n)?;
    let sim = Simulation::new(ch, tap, PROBE_MEAN);
    let m = sim.moments(n, seed, |r| w.accept(r.tap()));
    stats_from_moments(&m, n, PROBE_MEAN)
}

/// [`heralded_statistics`] for several windows from one set of shots.
pub fn heralded_ladder(
    ch: ChannelParams,
    tap: TapConfig,
    windows: &[HeraldWindow],
    n: u64,
    seed: u64,
) -> Result<Vec<Result<HeraldStats>>> {
    check_n(n)?;
    let sim = Simulation::new(ch, tap, PROBE_MEAN);
    Ok(sim
        .ladder_moments(n, seed, windows)
        .iter()
        .map(|m| stats_from_moments(m, n, PROBE_MEAN))
        .collect())
}

/// Zero-window limit estimated by simulation without discarding shots.
pub fn zero_window_statistics(
    ch: ChannelParams,
    tap: TapConfig,
    n: u64,
    seed: u64,
) -> Result<ZeroWindowEstimate> {
    check_n(n)?;
    let sim = Simulation::new(ch, tap, PROBE_MEAN);
    estimate_zero_window(&sim.moments(n, seed, |_| true), PROBE_MEAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{added_noise_uncorrected, Detector};
    use crate::correction::receiver_added_noise;
    use crate::gaussian::SymplecticMap;

    fn ch(eta: f64, v: f64) -> ChannelParams {
        ChannelParams::new(eta, v).unwrap()
    }
    fn het(g: f64) -> TapConfig {
        TapConfig::heterodyne(g).unwrap()
    }

    #[test]
    fn window_acceptance() {
        let w = HeraldWindow::new(1.0, 2.0).unwrap();
        assert!(w.accept((0.0, 0.0)));
        assert!(w.accept((-1.0, 2.0)));
        assert!(!w.accept((1.5, 0.0)));
        assert!(!HeraldWindow::new(1.0, f64::INFINITY)
            .unwrap()
            .accept((1.5, 0.0)));
        assert!(HeraldWindow::unbounded().accept((1e300, -1e300)));
        assert!(HeraldWindow::new(-0.1, 1.0).is_err());
        assert!(HeraldWindow::new(f64::NAN, 1.0).is_err());
        assert!(HeraldWindow::unbounded().contains(&w));
        assert!(!w.contains(&HeraldWindow::new(1.0, 3.0).unwrap()));
        assert!(accept((0.0, 0.0), &HeraldWindow::new(0.0, 0.0).unwrap()));
    }

    #[test]
    fn conditioned_formula_limits() {
        let c = ch(0.9, 25.0);
        assert!(
            (conditioned_added_noise(c, 0.0).unwrap() - added_noise_uncorrected(c)).abs() < 1e-12
        );
        assert!((conditioned_added_noise(c, 1.0).unwrap() - 0.004444).abs() < 1e-6);
        assert_eq!(conditioned_gain(c, 0.0).unwrap(), 0.9);
        assert!((conditioned_gain(ch(0.4, 1.0), 0.7).unwrap() - 0.4).abs() < 1e-15);
        assert!(conditioned_gain(c, 1.5).is_err());
        for &f in &[0.05, 0.2, 0.5, 0.8, 1.0] {
            for &v in &[1.5, 5.0, 25.0, 100.0] {
                for &eta in &[0.1, 0.5, 0.9] {
                    let c = ch(eta, v);
                    assert!(conditioned_added_noise(c, f).unwrap() < added_noise_uncorrected(c));
                }
            }
        }
    }

    #[test]
    fn heterodyne_tap_splits_efficiency_between_quadratures() {
        let c = ch(0.9, 25.0);
        let (nx, np) = zero_window_added_noise(c, het(1.0));
        assert_eq!(nx, np);
        assert!((nx - 0.10164365548980932).abs() < 1e-12);
        let (gx, _) = zero_window_gain(c, het(1.0));
        assert!((gx - 1.0923585176673367).abs() < 1e-12);
        let hom = TapConfig::homodyne_x(1.0).unwrap();
        let (nx, np) = zero_window_added_noise(c, hom);
        assert!((nx - 0.004444).abs() < 1e-6);
        assert!((np - added_noise_uncorrected(c)).abs() < 1e-12);
    }

    #[test]
    fn formulas_match_conditioning_oracle() {
        for &eta in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for &gamma in &[0.0, 0.2, 0.5, 0.8, 1.0] {
                for &v in &[1.0, 2.0, 5.0, 25.0, 100.0] {
                    for det in [
                        Detector::Heterodyne,
                        Detector::HomodyneX,
                        Detector::HomodyneP,
                    ] {
                        let (c, t) = (ch(eta, v), TapConfig::new(gamma, det).unwrap());
                        let o = zero_window_oracle(c, t).unwrap();
                        let (nx, np) = zero_window_added_noise(c, t);
                        let (gx, gp) = zero_window_gain(c, t);
                        assert!((o.noise_x - nx).abs() < 1e-10 && (o.noise_p - np).abs() < 1e-10);
                        assert!((o.gain_x - gx).abs() < 1e-10 && (o.gain_p - gp).abs() < 1e-10);
                    }
                }
            }
        }
    }

    /// Sharp reading of both quadratures of the attenuated environment mode
    /// (a Wigner-level operation, not a physical measurement) reproduces the
    /// conditioned formulas at the full tap efficiency.
    #[test]
    fn dual_sharp_reading_uses_full_efficiency() {
        for &(eta, v, gamma) in &[
            (0.9, 25.0, 1.0),
            (0.9, 25.0, 0.5),
            (0.5, 5.0, 0.7),
            (0.2, 40.0, 0.3),
        ] {
            let c = ch(eta, v);
            let state = GaussianState::coherent(1.0, 1.0)
                .tensor(&GaussianState::thermal(v).unwrap())
                .tensor(&GaussianState::vacuum(1).unwrap());
            let map = SymplecticMap::beam_splitter(3, eta, 0, 1)
                .unwrap()
                .then(&SymplecticMap::beam_splitter(3, gamma, 1, 2).unwrap())
                .unwrap();
            let joint = state.apply(&map).unwrap();
            let (rest, _) = joint
                .condition_quadratures(
                    &[(1, Quadrature::X), (1, Quadrature::P)],
                    &nalgebra::DMatrix::zeros(2, 2),
                    &[0.0, 0.0],
                )
                .unwrap();
            let o = conditioned_signal(&rest.partial_trace(&[0]).unwrap());
            assert!((o.noise_x - conditioned_added_noise(c, gamma).unwrap()).abs() < 1e-10);
            assert!((o.gain_x - conditioned_gain(c, gamma).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn gain_matches_conditional_mean_slope() {
        let (c, t) = (ch(0.9, 25.0), het(0.5));
        let plant = build_plant(c, t, &GaussianState::coherent(0.0, 0.0)).unwrap();
        let shifted = build_plant(c, t, &GaussianState::coherent(1e-3, 0.0)).unwrap();
        let (a, _) = plant.condition_on_tap((0.0, 0.0)).unwrap();
        let (b, _) = shifted.condition_on_tap((0.0, 0.0)).unwrap();
        let slope = (b.mean()[0] - a.mean()[0]) / 1e-3;
        assert!((slope * slope - zero_window_gain(c, t).0).abs() < 1e-10);
    }

    #[test]
    fn open_window_reproduces_bare_channel() {
        let (c, t) = (ch(0.9, 25.0), het(0.7));
        let s = heralded_statistics(c, t, HeraldWindow::unbounded(), 400_000, 8).unwrap();
        assert_eq!(s.success_prob, 1.0);
        let want = receiver_added_noise(c, t, false);
        assert!(
            s.added_noise_x.within(want, 5.0),
            "{:?} {want}",
            s.added_noise_x
        );
        assert!(s.added_noise_p.within(want, 5.0));
        assert!(s.gain.within(0.9, 5.0));
    }

    #[test]
    fn narrow_window_approaches_zero_window_limit() {
        let (c, t) = (ch(0.9, 25.0), het(0.7));
        let w = HeraldWindow::scaled(c, t, 0.05).unwrap();
        let s = heralded_statistics(c, t, w, 4_000_000, 9).unwrap();
        let (nx, _) = zero_window_added_noise(c, t);
        let (gx, _) = zero_window_gain(c, t);
        assert!(
            s.state_noise_x.within(nx, 5.0),
            "{:?} {nx}",
            s.state_noise_x
        );
        assert!(s.gain_x.within(gx, 5.0), "{:?} {gx}", s.gain_x);
        assert!(s.success_prob < 0.01);
    }

    #[test]
    fn regression_estimate_matches_limit() {
        let (c, t) = (ch(0.7, 10.0), het(0.9));
        let z = zero_window_statistics(c, t, 1_000_000, 10).unwrap();
        let (nx, np) = zero_window_added_noise(c, t);
        let (gx, gp) = zero_window_gain(c, t);
        assert!(
            z.state_noise_x.within(nx, 5.0) && z.state_noise_p.within(np, 5.0),
            "{z:?}"
        );
        assert!(z.gain_x.within(gx, 5.0) && z.gain_p.within(gp, 5.0));
        assert!(z.receiver_noise_x.within(nx + 1.0 / gx, 5.0));
    }

    #[test]
    fn empty_window_is_no_yield() {
        let err = heralded_statistics(
            ch(0.9, 25.0),
            het(0.7),
            HeraldWindow::new(0.0, 0.0).unwrap(),
            20_000,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoYield { success_prob, .. } if success_prob == 0.0));
        assert!(
            heralded_statistics(ch(0.9, 25.0), het(0.7), HeraldWindow::unbounded(), 100, 1)
                .is_err()
        );
    }

    #[test]
    fn heralded_statistics_is_reproducible() {
        let (c, t) = (ch(0.5, 5.0), het(0.6));
        let w = HeraldWindow::scaled(c, t, 1.0).unwrap();
        let a = heralded_statistics(c, t, w, 50_000, 3).unwrap();
        let b = heralded_statistics(c, t, w, 50_000, 3).unwrap();
        assert_eq!(a, b);
        let ladder = heralded_ladder(c, t, &[w], 50_000, 3).unwrap();
        assert_eq!(ladder[0].as_ref().unwrap(), &a);
    }
}
