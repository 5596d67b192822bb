//! Deterministic correction: measure the leaked environment and displace the
//! signal. Compares homodyne erasing, heterodyne erasing and the
//! noise-minimising heterodyne gain across tap efficiencies.
//!
//! cargo run --example feedforward_correction

use envcorr::channel::added_noise_uncorrected;
use envcorr::correction::{
    added_noise_het_state, added_noise_hom_ff, improvement_conditions, optimal_added_noise,
    optimal_gain, plan, receiver_added_noise, state_added_noise,
};
use envcorr::{build_plant, ChannelParams, GaussianState, Strategy, TapConfig};

fn main() -> envcorr::Result<()> {
    let ch = ChannelParams::new(0.9, 25.0)?;
    println!(
        "eta=0.9 V=25, uncorrected state noise {:.4}",
        added_noise_uncorrected(ch)
    );
    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>9} {:>8} {:>9}",
        "gamma", "hom-x", "het", "het-recv", "optimal", "G_opt", "improves"
    );
    for gamma in [0.2, 0.48, 0.68, 0.82, 0.92, 1.0] {
        let tap = TapConfig::heterodyne(gamma)?;
        let hom = TapConfig::homodyne_x(gamma)?;
        let c = improvement_conditions(ch, tap);
        println!(
            "{gamma:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.4} {:>9}",
            added_noise_hom_ff(ch, hom),
            added_noise_het_state(ch, tap),
            receiver_added_noise(ch, tap, true),
            optimal_added_noise(ch, tap),
            optimal_gain(ch, tap).1,
            c.het_state
        );
    }

    // the same numbers from the four-mode phase-space model
    let tap = TapConfig::heterodyne(0.92)?;
    let plant = build_plant(ch, tap, &GaussianState::coherent(0.0, 0.0))?;
    let p = plan(Strategy::OptimalHeterodyne, ch, tap)?;
    let (nx, np) = state_added_noise(&plant, &p)?;
    println!(
        "phase-space optimal at gamma=0.92: ({nx:.6}, {np:.6}), gains g=({:.4}, {:.4})",
        p.g_x, p.g_p
    );
    Ok(())
}
