//! The trajectory sampler as an independent check on the closed forms:
//! every quadrature is drawn and pushed through the optics as plain numbers.
//!
//! cargo run --release --example monte_carlo_oracle

use envcorr::correction::{plan_erasing_heterodyne, quadrature_gains, receiver_added_noise};
use envcorr::montecarlo::{estimate_added_noise, estimate_gain, noise_from_moments, Reference};
use envcorr::{ChannelParams, Simulation, TapConfig};

fn main() -> envcorr::Result<()> {
    let ch = ChannelParams::new(0.9, 25.0)?;
    let tap = TapConfig::heterodyne(0.92)?;
    let mean = (10.0, 10.0);

    // a materialised batch, for inspection
    let batch = envcorr::montecarlo::sample(ch, tap, mean, None, 200_000, 42);
    let (x, _) = estimate_added_noise(&batch, 0.9, Reference::Receiver)?;
    let g = estimate_gain(&batch, mean)?;
    println!(
        "uncorrected: receiver noise {:.4} ± {:.4} (closed form {:.4}), gain {:.4} ± {:.4}",
        x.value,
        x.stderr,
        receiver_added_noise(ch, tap, false),
        g.value,
        g.stderr
    );
    println!("first record {:?}", batch.records[0]);

    // streaming moments for large runs; identical numbers, no records kept
    let plan = plan_erasing_heterodyne(ch, tap)?;
    let m = Simulation::new(ch, tap, mean)
        .with_plan(plan)
        .moments(2_000_000, 42, |_| true);
    let (x, p) = noise_from_moments(&m, quadrature_gains(ch, tap, &plan), Reference::Receiver)?;
    let want = receiver_added_noise(ch, tap, true);
    println!(
        "erasing: receiver noise x {:.4} ± {:.4} (z={:.2}), p {:.4} ± {:.4} (z={:.2}), closed form {want:.4}",
        x.value,
        x.stderr,
        x.z(want),
        p.value,
        p.stderr,
        p.z(want)
    );
    Ok(())
}
