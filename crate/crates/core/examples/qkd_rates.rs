//! Coherent-state key distribution over the corrected channel: excess noise,
//! security verdicts and key rates for every correction scheme.
//!
//! cargo run --example qkd_rates

use envcorr::qkd::{key_rate, security_report, Attack, EffectiveChannel};
use envcorr::{ChannelParams, TapConfig};

fn main() -> envcorr::Result<()> {
    let ch = ChannelParams::new(0.9, 25.0)?;
    let tap = TapConfig::heterodyne(0.92)?;
    let report = security_report(ch, tap, 40.0, Attack::Collective)?;
    println!(
        "before correction: excess noise {:.3} ({})",
        report.excess_noise_before,
        report.verdict_before.label()
    );
    println!(
        "{:>12} {:>8} {:>8} {:>18} {:>10} {:>10}",
        "scheme", "gain", "noise", "verdict", "K direct", "K reverse"
    );
    for o in &report.outcomes {
        let q = &o.x;
        let (d, r) = q.rates.map_or((f64::NAN, f64::NAN), |k| {
            (k.direct.finite, k.reverse.finite)
        });
        println!(
            "{:>12} {:>8.4} {:>8.4} {:>18} {d:>10.4} {r:>10.4}",
            o.scheme.name(),
            q.gain,
            q.added_noise,
            q.verdict.label()
        );
    }

    // rate against modulation for a fixed channel
    let chan = EffectiveChannel::homodyne(1.1, 0.1)?;
    for sigma in [1.0, 10.0, 40.0, 1e3] {
        let k = key_rate(&chan, sigma, Attack::Collective)?;
        println!(
            "sigma {sigma:>6}: direct {:.4}, reverse {:.4}",
            k.direct.finite, k.reverse.finite
        );
    }
    let k = key_rate(&chan, 40.0, Attack::Individual)?;
    println!("individual attack, sigma 40: direct {:.4}", k.direct.finite);
    Ok(())
}
