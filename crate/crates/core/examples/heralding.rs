//! Probabilistic correction: keep a shot only when both tap readings fall
//! inside a window. Tighter windows trade success probability for noise,
//! approaching the zero-window limit.
//!
//! cargo run --release --example heralding

use envcorr::correction::receiver_added_noise;
use envcorr::herald::{
    heralded_ladder, zero_window_added_noise, zero_window_gain, zero_window_statistics,
};
use envcorr::{ChannelParams, HeraldWindow, TapConfig};

fn main() -> envcorr::Result<()> {
    let ch = ChannelParams::new(0.9, 25.0)?;
    let tap = TapConfig::heterodyne(0.7)?;
    let n = 2_000_000;

    let factors = [f64::INFINITY, 2.0, 1.0, 0.5, 0.25, 0.1];
    let windows = factors
        .iter()
        .map(|&f| HeraldWindow::scaled(ch, tap, f))
        .collect::<envcorr::Result<Vec<_>>>()?;
    println!(
        "uncorrected receiver noise {:.4}",
        receiver_added_noise(ch, tap, false)
    );
    println!(
        "{:>8} {:>10} {:>16} {:>16} {:>16}",
        "window", "success", "recv noise x", "state noise x", "gain"
    );
    for (f, s) in factors
        .iter()
        .zip(heralded_ladder(ch, tap, &windows, n, 1)?)
    {
        match s {
            Ok(s) => println!(
                "{f:>8} {:>10.5} {:>9.4} ± {:.4} {:>9.4} ± {:.4} {:>9.4} ± {:.4}",
                s.success_prob,
                s.added_noise_x.value,
                s.added_noise_x.stderr,
                s.state_noise_x.value,
                s.state_noise_x.stderr,
                s.gain.value,
                s.gain.stderr
            ),
            Err(e) => println!("{f:>8} {e}"),
        }
    }

    // the zero-window limit, analytically and by regression on all shots
    let (nx, _) = zero_window_added_noise(ch, tap);
    let (gx, _) = zero_window_gain(ch, tap);
    let z = zero_window_statistics(ch, tap, n, 2)?;
    println!(
        "zero window: state noise {nx:.4} (sim {:.4} ± {:.4}), gain {gx:.4} (sim {:.4} ± {:.4})",
        z.state_noise_x.value, z.state_noise_x.stderr, z.gain_x.value, z.gain_x.stderr
    );
    Ok(())
}
