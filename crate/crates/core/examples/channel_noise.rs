//! How much noise a thermal environment injects, and whether the channel
//! still supports entanglement or secure key distribution.
//!
//! cargo run --example channel_noise

use envcorr::channel::{added_noise_uncorrected, excess_noise, security_thresholds};
use envcorr::ChannelParams;

fn main() -> envcorr::Result<()> {
    println!(
        "{:>5} {:>6} {:>10} {:>10}  verdict",
        "eta", "V", "added", "excess"
    );
    for eta in [0.9, 0.5, 0.1] {
        for v in [1.0, 5.0, 25.0] {
            let ch = ChannelParams::new(eta, v)?;
            let eps = excess_noise(ch);
            println!(
                "{eta:>5} {v:>6} {:>10.4} {:>10.4}  {}",
                added_noise_uncorrected(ch),
                eps,
                security_thresholds(eps).label()
            );
        }
    }
    Ok(())
}
