//! The noisy channel and the environmental tap.
//!
//! The signal meets a thermal environmental mode on a beam splitter of
//! transmission `η`. A fraction `γ` of the leaked mode reaches the tap
//! detector; the detector itself splits the light with ratio `Γ` so that its
//! two readings are
//!
//! ```text
//! x_tap = √Γ (√γ X_E,out + √(1−γ) X_v1) + √(1−Γ) X_v2
//! p_tap = √(1−Γ) (√γ P_E,out + √(1−γ) P_v1) − √Γ P_v2
//! ```
//!
//! with `Γ = 1` for amplitude homodyne, `Γ = 1/2` for heterodyne and `Γ = 0`
//! for phase homodyne (the mirror image of the amplitude case).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::{GaussianState, Quadrature, SymplecticMap};

/// Excess noise at and above which the channel is entanglement breaking.
pub const ENTANGLEMENT_BREAKING_EXCESS_NOISE: f64 = 2.0;
/// Excess noise at and above which collective attacks break security.
pub const COLLECTIVE_ATTACK_EXCESS_NOISE: f64 = 0.8;

/// Channel transmission and environmental input variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct ChannelParams {
    eta: f64,
    v_env: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    eta: f64,
    v_env: f64,
}

impl TryFrom<RawChannel> for ChannelParams {
    type Error = crate::Error;
    fn try_from(raw: RawChannel) -> Result<Self> {
        ChannelParams::new(raw.eta, raw.v_env)
    }
}

impl ChannelParams {
    pub fn new(eta: f64, v_env: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(
                "eta",
                format!("channel transmission must lie in (0, 1], got {eta}"),
            ));
        }
        if !(v_env >= 1.0 && v_env.is_finite()) {
            return Err(invalid(
                "v_env",
                format!("environmental variance must be finite and >= 1, got {v_env}"),
            ));
        }
        Ok(Self { eta, v_env })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn v_env(&self) -> f64 {
        self.v_env
    }
}

/// Which tap detector is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    HomodyneX,
    HomodyneP,
    Heterodyne,
}

impl Detector {
    /// Detector split ratio `Γ`.
    pub fn split(self) -> f64 {
        match self {
            Detector::HomodyneX => 1.0,
            Detector::HomodyneP => 0.0,
            Detector::Heterodyne => 0.5,
        }
    }

    pub fn is_homodyne(self) -> bool {
        !matches!(self, Detector::Heterodyne)
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::HomodyneX => "homodyne-x",
            Detector::HomodyneP => "homodyne-p",
            Detector::Heterodyne => "heterodyne",
        }
    }
}

/// Fraction of the leaked mode that is measured, and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTap")]
pub struct TapConfig {
    gamma: f64,
    detector: Detector,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTap {
    gamma: f64,
    detector: Detector,
}

impl TryFrom<RawTap> for TapConfig {
    type Error = crate::Error;
    fn try_from(raw: RawTap) -> Result<Self> {
        TapConfig::new(raw.gamma, raw.detector)
    }
}

impl TapConfig {
    pub fn new(gamma: f64, detector: Detector) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(
                "gamma",
                format!("tap efficiency must lie in [0, 1], got {gamma}"),
            ));
        }
        Ok(Self { gamma, detector })
    }

    pub fn heterodyne(gamma: f64) -> Result<Self> {
        Self::new(gamma, Detector::Heterodyne)
    }

    pub fn homodyne_x(gamma: f64) -> Result<Self> {
        Self::new(gamma, Detector::HomodyneX)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn detector(&self) -> Detector {
        self.detector
    }

    /// Fraction of the leaked mode's power that ends up in the reading of
    /// quadrature `q`: `Γγ` for X and `(1−Γ)γ` for P.
    pub fn quadrature_efficiency(&self, q: Quadrature) -> f64 {
        let split = self.detector.split();
        match q {
            Quadrature::X => split * self.gamma,
            Quadrature::P => (1.0 - split) * self.gamma,
        }
    }
}

/// Mode layout of a [`Plant`].
pub mod modes {
    /// Transmitted signal.
    pub const SIGNAL: usize = 0;
    /// Detector port carrying the X reading.
    pub const TAP: usize = 1;
    /// Part of the leaked mode that misses the detector.
    pub const LEAK: usize = 2;
    /// Detector port carrying the P reading.
    pub const AUX: usize = 3;
}

/// Joint Gaussian state of signal, environment and tap after the channel.
///
/// The two tap readings are the X quadrature of [`modes::TAP`] and the P
/// quadrature of [`modes::AUX`]. They commute, so conditioning sharply on
/// both is a physical measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    state: GaussianState,
    channel: ChannelParams,
    tap: TapConfig,
}

/// Quadratures holding the tap readings `(x_tap, p_tap)`.
pub const TAP_READINGS: [(usize, Quadrature); 2] =
    [(modes::TAP, Quadrature::X), (modes::AUX, Quadrature::P)];

/// Propagates a single-mode `input` through the channel and the tap.
pub fn build_plant(ch: ChannelParams, tap: TapConfig, input: &GaussianState) -> Result<Plant> {
    if input.n_modes() != 1 {
        return Err(invalid(
            "input",
            format!(
                "expected a single-mode state, got {} modes",
                input.n_modes()
            ),
        ));
    }
    let state = input
        .tensor(&GaussianState::thermal(ch.v_env())?)
        .tensor(&GaussianState::vacuum(2)?);
    let couplings = SymplecticMap::beam_splitter(4, ch.eta(), modes::SIGNAL, modes::TAP)?
        .then(&SymplecticMap::coupler(
            4,
            tap.gamma(),
            modes::TAP,
            modes::LEAK,
        )?)?
        .then(&SymplecticMap::coupler(
            4,
            tap.detector().split(),
            modes::TAP,
            modes::AUX,
        )?)?;
    Ok(Plant {
        state: state.apply(&couplings)?,
        channel: ch,
        tap,
    })
}

impl Plant {
    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    pub fn channel(&self) -> ChannelParams {
        self.channel
    }

    pub fn tap(&self) -> TapConfig {
        self.tap
    }

    /// Reduced state of the transmitted signal.
    pub fn signal(&self) -> GaussianState {
        self.state
            .partial_trace(&[modes::SIGNAL])
            .expect("plant always holds four modes")
    }

    fn reading_indices() -> [usize; 2] {
        TAP_READINGS.map(|(m, q)| q.index(m))
    }

    /// Mean and covariance of the classical record `(x_tap, p_tap)`.
    pub fn tap_record(&self) -> (DVector<f64>, DMatrix<f64>) {
        let idx = Self::reading_indices();
        let mean = DVector::from_iterator(2, idx.iter().map(|&i| self.state.mean()[i]));
        let cov = DMatrix::from_fn(2, 2, |r, c| self.state.cov()[(idx[r], idx[c])]);
        (mean, cov)
    }

    /// Covariance between the signal quadratures (rows) and the tap readings
    /// (columns).
    pub fn signal_tap_covariance(&self) -> DMatrix<f64> {
        let idx = Self::reading_indices();
        DMatrix::from_fn(2, 2, |r, c| self.state.cov()[(r, idx[c])])
    }

    /// Signal state given the tap record `(x, p)`, with the log-density of the
    /// record.
    pub fn condition_on_tap(&self, outcome: (f64, f64)) -> Result<(GaussianState, f64)> {
        let (rest, log_likelihood) = self.state.condition_quadratures(
            &TAP_READINGS,
            &DMatrix::zeros(2, 2),
            &[outcome.0, outcome.1],
        )?;
        // remaining modes are SIGNAL and LEAK, in that order
        Ok((rest.partial_trace(&[0])?, log_likelihood))
    }
}

/// Input-referred added noise of the bare channel, `(1−η)V/η`.
pub fn added_noise_uncorrected(ch: ChannelParams) -> f64 {
    (1.0 - ch.eta()) / ch.eta() * ch.v_env()
}

/// Noise above the loss-equivalent vacuum contribution, `(1−η)(V−1)/η`.
pub fn excess_noise(ch: ChannelParams) -> f64 {
    (1.0 - ch.eta()) * (ch.v_env() - 1.0) / ch.eta()
}

/// Threshold classification of an excess-noise value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityVerdict {
    pub entanglement_preserving: bool,
    pub collective_secure: bool,
}

impl SecurityVerdict {
    pub fn label(&self) -> &'static str {
        match (self.entanglement_preserving, self.collective_secure) {
            (false, _) => "breaking",
            (true, false) => "preserving-insecure",
            (true, true) => "preserving",
        }
    }
}

/// Boundary values count as not preserving / not secure.
pub fn security_thresholds(excess: f64) -> SecurityVerdict {
    SecurityVerdict {
        entanglement_preserving: excess < ENTANGLEMENT_BREAKING_EXCESS_NOISE,
        collective_secure: excess < COLLECTIVE_ATTACK_EXCESS_NOISE,
    }
}
