//! Secret-key rates for Gaussian-modulated coherent states.
//!
//! Rates are computed in the entanglement-based picture. Alice holds one arm
//! of a two-mode squeezed state with variance `V = σ + 1` and heterodynes it,
//! which prepares the coherent states. The other arm crosses a
//! phase-insensitive channel of power gain `G` and input-referred added noise
//! `χ`, so Bob's mode has variance `b = G(V + χ)` and the covariance matrix of
//! Alice and Bob is
//!
//! ```text
//! [ V·I   c·Z ]      c = √(G(V² − 1)),  Z = diag(1, −1)
//! [ c·Z   b·I ]
//! ```
//!
//! Eve holds the purification. Collective attacks bound her information by
//! the Holevo quantity; individual attacks use the conditional-variance
//! (Heisenberg) bound. With homodyne detection the key is drawn from a single
//! quadrature, so in direct reconciliation Eve is conditioned on one of
//! Alice's two heterodyne outputs only.
//!
//! All values are bits per symbol. The `σ → ∞` column is evaluated at
//! [`ASYMPTOTIC_VARIANCE`]; every expression below is written so that no
//! large terms cancel there.

use serde::{Deserialize, Serialize};

use crate::channel::{
    added_noise_uncorrected, excess_noise, security_thresholds, ChannelParams, Detector,
    SecurityVerdict, TapConfig,
};
use crate::correction::{
    added_noise_het_state, added_noise_hom_ff, optimal_added_noise, optimal_gain, quadrature_gains,
};
use crate::error::{invalid, Error, Result};
use crate::gaussian::Quadrature;
use crate::herald::{zero_window_added_noise, zero_window_gain};

/// Modulation variance standing in for `σ → ∞`.
pub const ASYMPTOTIC_VARIANCE: f64 = 1e12;
/// Slack on the phase-insensitive noise bound `Gχ ≥ |G − 1|`.
pub const PHYSICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    Homodyne,
    Heterodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attack {
    Individual,
    Collective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reconciliation {
    Direct,
    Reverse,
}

/// Gain and input-referred added noise seen by the key distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    gain: f64,
    added_noise: f64,
    detection: Detection,
}

impl EffectiveChannel {
    pub fn new(gain: f64, added_noise: f64, detection: Detection) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(invalid(
                "gain",
                format!("must be positive and finite, got {gain}"),
            ));
        }
        if !(added_noise >= 0.0 && added_noise.is_finite()) {
            return Err(invalid(
                "added_noise",
                format!("must be finite and >= 0, got {added_noise}"),
            ));
        }
        Ok(Self {
            gain,
            added_noise,
            detection,
        })
    }

    pub fn homodyne(gain: f64, added_noise: f64) -> Result<Self> {
        Self::new(gain, added_noise, Detection::Homodyne)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn added_noise(&self) -> f64 {
        self.added_noise
    }

    pub fn detection(&self) -> Detection {
        self.detection
    }

    /// Added noise above the minimum a phase-insensitive channel of this gain
    /// must add, `χ − |1 − G|/G`.
    pub fn excess_noise(&self) -> f64 {
        self.added_noise - (1.0 - self.gain).abs() / self.gain
    }

    pub fn is_physical(&self) -> bool {
        self.gain * self.added_noise >= (self.gain - 1.0).abs() - PHYSICAL_TOL
    }
}

/// Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue
/// `ν`, written as `a·log₂(1 + 1/b) + log₂ b` with `a = (ν+1)/2`, `b = (ν−1)/2`.
pub fn thermal_entropy(nu: f64) -> f64 {
    let b = 0.5 * (nu - 1.0);
    if b <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * (nu + 1.0);
    a * (1.0 / b).ln_1p() / std::f64::consts::LN_2 + b.log2()
}

struct Moments {
    v: f64,
    g: f64,
    chi: f64,
}

impl Moments {
    fn new(chan: &EffectiveChannel, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(
                "sigma",
                format!("modulation variance must be positive and finite, got {sigma}"),
            ));
        }
        if !chan.is_physical() {
            return Err(invalid(
                "added_noise",
                format!(
                    "gain {} with added noise {} violates the bound G·χ >= |G − 1|",
                    chan.gain, chan.added_noise
                ),
            ));
        }
        Ok(Self {
            v: sigma + 1.0,
            g: chan.gain,
            chi: chan.added_noise,
        })
    }

    /// Symplectic eigenvalues of the joint Alice–Bob state, larger first.
    fn joint_spectrum(&self) -> (f64, f64) {
        let Moments { v, g, chi } = *self;
        let z = (v * v * (1.0 - g).powi(2)
            + 2.0 * v * g * (1.0 + g) * chi
            + g * g * chi * chi
            + 4.0 * g)
            .sqrt();
        let big = 0.5 * (z + (v * (g - 1.0) + g * chi).abs());
        (big, g * (v * chi + 1.0) / big)
    }

    fn joint_entropy(&self) -> f64 {
        let (a, b) = self.joint_spectrum();
        thermal_entropy(a) + thermal_entropy(b)
    }

    /// Entropy of Bob and the unmeasured heterodyne port of Alice, given the
    /// homodyne reading of the other port.
    fn entropy_given_alice_quadrature(&self) -> f64 {
        let Moments { v, g, chi } = *self;
        let trace = v * ((1.0 - g).powi(2) + g * g * chi) + g * g * (1.0 + chi) * chi + 2.0 * g;
        let det = g * g * (v * chi + 1.0) * (1.0 + chi);
        let big = 0.5 * (trace + (trace * trace - 4.0 * det).max(0.0).sqrt());
        thermal_entropy(big.sqrt()) + thermal_entropy((det / big).sqrt())
    }

    fn mutual_information(&self, detection: Detection) -> f64 {
        let Moments { v, g, chi } = *self;
        match detection {
            Detection::Homodyne => 0.5 * ((v - 1.0) / (1.0 + chi)).ln_1p() / std::f64::consts::LN_2,
            Detection::Heterodyne => {
                (g * (v - 1.0) / (g * (1.0 + chi) + 1.0)).ln_1p() / std::f64::consts::LN_2
            }
        }
    }

    fn eve_information(
        &self,
        detection: Detection,
        attack: Attack,
        direction: Reconciliation,
    ) -> Result<f64> {
        let Moments { v, g, chi } = *self;
        Ok(match (attack, detection, direction) {
            (Attack::Collective, Detection::Homodyne, Reconciliation::Direct) => {
                self.joint_entropy() - self.entropy_given_alice_quadrature()
            }
            (Attack::Collective, Detection::Homodyne, Reconciliation::Reverse) => {
                let nu = (v * (v * chi + 1.0) / (v + chi)).sqrt();
                self.joint_entropy() - thermal_entropy(nu)
            }
            (Attack::Collective, Detection::Heterodyne, Reconciliation::Direct) => {
                self.joint_entropy() - thermal_entropy(g * (1.0 + chi))
            }
            (Attack::Collective, Detection::Heterodyne, Reconciliation::Reverse) => {
                let nu = (g * (v * chi + 1.0) + v) / (g * (v + chi) + 1.0);
                self.joint_entropy() - thermal_entropy(nu)
            }
            (Attack::Individual, Detection::Homodyne, Reconciliation::Direct) => {
                // V_{A|E} ≥ 1/V_{A|B}
                0.5 * (v * (v * chi + 1.0) / (v + chi)).log2()
            }
            (Attack::Individual, Detection::Homodyne, Reconciliation::Reverse) => {
                // V_{B|E} ≥ 1/V_{B|A}
                0.5 * (g * g * (v + chi) * (v * chi + 1.0) / v).log2()
            }
            (Attack::Individual, Detection::Heterodyne, _) => {
                return Err(Error::Unsupported(
                    "individual-attack bounds are provided for homodyne detection only".into(),
                ))
            }
        })
    }
}

/// Alice–Bob mutual information for Gaussian modulation variance `σ`.
///
/// Homodyne: `½ log₂(1 + σ/(1 + χ))`. Heterodyne: `log₂(1 + Gσ/(G(1+χ) + 1))`.
pub fn mutual_information(chan: &EffectiveChannel, sigma: f64) -> Result<f64> {
    Ok(Moments::new(chan, sigma)?.mutual_information(chan.detection))
}

/// Bound on Eve's information for the given attack and reconciliation
/// direction.
pub fn eve_information(
    chan: &EffectiveChannel,
    sigma: f64,
    attack: Attack,
    direction: Reconciliation,
) -> Result<f64> {
    Moments::new(chan, sigma)?.eve_information(chan.detection, attack, direction)
}

/// Rate at the given modulation and in the `σ → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub finite: f64,
    pub asymptotic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub modulation_variance: f64,
    pub attack: Attack,
    pub detection: Detection,
    pub direct: RatePair,
    pub reverse: RatePair,
}

impl KeyRateReport {
    pub fn rates(&self, direction: Reconciliation) -> RatePair {
        match direction {
            Reconciliation::Direct => self.direct,
            Reconciliation::Reverse => self.reverse,
        }
    }
}

fn rate(
    chan: &EffectiveChannel,
    sigma: f64,
    attack: Attack,
    direction: Reconciliation,
) -> Result<f64> {
    let m = Moments::new(chan, sigma)?;
    Ok(m.mutual_information(chan.detection)
        - m.eve_information(chan.detection, attack, direction)?)
}

/// `K = I_AB − I_E` for both reconciliation directions.
pub fn key_rate(chan: &EffectiveChannel, sigma: f64, attack: Attack) -> Result<KeyRateReport> {
    let pair = |d| -> Result<RatePair> {
        Ok(RatePair {
            finite: rate(chan, sigma, attack, d)?,
            asymptotic: rate(chan, ASYMPTOTIC_VARIANCE, attack, d)?,
        })
    };
    Ok(KeyRateReport {
        modulation_variance: sigma,
        attack,
        detection: chan.detection,
        direct: pair(Reconciliation::Direct)?,
        reverse: pair(Reconciliation::Reverse)?,
    })
}

/// How the channel is (or is not) corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    None,
    ErasingHom,
    ErasingHet,
    Optimal,
    /// Zero-window heralding.
    Herald,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::None,
        Scheme::ErasingHom,
        Scheme::ErasingHet,
        Scheme::Optimal,
        Scheme::Herald,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::ErasingHom => "erasing-hom",
            Scheme::ErasingHet => "erasing-het",
            Scheme::Optimal => "optimal",
            Scheme::Herald => "herald",
        }
    }

    /// Whether the scheme can run with this tap detector.
    pub fn supports(self, detector: Detector) -> bool {
        match self {
            Scheme::None | Scheme::Herald => true,
            Scheme::ErasingHom => detector.is_homodyne(),
            Scheme::ErasingHet | Scheme::Optimal => detector == Detector::Heterodyne,
        }
    }
}

/// Closed-form (gain, state added noise) of each quadrature under `scheme`.
pub fn scheme_quadratures(
    ch: ChannelParams,
    tap: TapConfig,
    scheme: Scheme,
) -> Result<[(f64, f64); 2]> {
    if !scheme.supports(tap.detector()) {
        return Err(invalid(
            "strategy",
            format!(
                "{} cannot run with a {} tap",
                scheme.name(),
                tap.detector().name()
            ),
        ));
    }
    let bare = (ch.eta(), added_noise_uncorrected(ch));
    Ok(match scheme {
        Scheme::None => [bare, bare],
        Scheme::ErasingHom => {
            let plan = crate::correction::plan_erasing_homodyne(ch, tap)?;
            let (gx, gp) = quadrature_gains(ch, tap, &plan);
            let corrected = added_noise_hom_ff(ch, tap);
            match tap.detector() {
                Detector::HomodyneX => [(gx, corrected), (gp, bare.1)],
                _ => [(gx, bare.1), (gp, corrected)],
            }
        }
        Scheme::ErasingHet => {
            crate::correction::plan_erasing_heterodyne(ch, tap)?;
            let q = (1.0 / ch.eta(), added_noise_het_state(ch, tap));
            [q, q]
        }
        Scheme::Optimal => {
            let q = (optimal_gain(ch, tap).1, optimal_added_noise(ch, tap));
            [q, q]
        }
        Scheme::Herald => {
            let (gx, gp) = zero_window_gain(ch, tap);
            let (nx, np) = zero_window_added_noise(ch, tap);
            [(gx, nx), (gp, np)]
        }
    })
}

/// One correction scheme evaluated on one quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOutcome {
    pub quadrature: Quadrature,
    pub gain: f64,
    pub added_noise: f64,
    pub excess_noise: f64,
    pub verdict: SecurityVerdict,
    pub rates: Option<KeyRateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub x: QuadratureOutcome,
    pub p: QuadratureOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub eta: f64,
    pub v_env: f64,
    pub gamma: f64,
    pub detector: Detector,
    pub excess_noise_before: f64,
    pub verdict_before: SecurityVerdict,
    pub outcomes: Vec<SchemeOutcome>,
}

/// Excess noise, threshold verdicts and homodyne key rates before and after
/// every scheme the tap supports.
pub fn security_report(
    ch: ChannelParams,
    tap: TapConfig,
    sigma: f64,
    attack: Attack,
) -> Result<SecurityReport> {
    let mut outcomes = Vec::new();
    for scheme in Scheme::ALL {
        if !scheme.supports(tap.detector()) || (scheme == Scheme::ErasingHom && tap.gamma() == 0.0)
        {
            continue;
        }
        if scheme == Scheme::ErasingHet && tap.gamma() < crate::correction::MIN_ERASING_GAMMA {
            continue;
        }
        let [qx, qp] = scheme_quadratures(ch, tap, scheme)?;
        let outcome = |quadrature, (gain, added_noise): (f64, f64)| -> Result<QuadratureOutcome> {
            let chan = EffectiveChannel::homodyne(gain, added_noise)?;
            let excess = chan.excess_noise();
            let rates = if chan.is_physical() {
                Some(key_rate(&chan, sigma, attack)?)
            } else {
                None
            };
            Ok(QuadratureOutcome {
                quadrature,
                gain,
                added_noise,
                excess_noise: excess,
                verdict: security_thresholds(excess),
                rates,
            })
        };
        outcomes.push(SchemeOutcome {
            scheme,
            x: outcome(Quadrature::X, qx)?,
            p: outcome(Quadrature::P, qp)?,
        });
    }
    let before = excess_noise(ch);
    Ok(SecurityReport {
        eta: ch.eta(),
        v_env: ch.v_env(),
        gamma: tap.gamma(),
        detector: tap.detector(),
        excess_noise_before: before,
        verdict_before: security_thresholds(before),
        outcomes,
    })
}
