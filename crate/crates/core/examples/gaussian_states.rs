//! Phase-space algebra: build states, couple them on a beam splitter, trace
//! out and condition on a measurement.
//!
//! cargo run --example gaussian_states

use envcorr::{GaussianState, Quadrature, SymplecticMap};

fn main() -> envcorr::Result<()> {
    let signal = GaussianState::coherent(10.0, 0.0);
    let env = GaussianState::thermal(25.0)?;
    let joint = signal.tensor(&env);

    let bs = SymplecticMap::beam_splitter(2, 0.9, 0, 1)?;
    assert!(bs.is_symplectic(envcorr::gaussian::SYMPLECTIC_TOL));
    let mixed = joint.apply(&bs)?;

    let out = mixed.partial_trace(&[0])?;
    println!("transmitted signal");
    println!("  mean x   {:.4}", out.quadrature_mean(0, Quadrature::X)?);
    println!(
        "  var  x   {:.4}  (0.9 * 1 + 0.1 * 25)",
        out.quadrature_variance(0, Quadrature::X)?
    );

    // sharp X reading of the reflected port pulls the signal back towards the input
    let (cond, log_density) = mixed.condition_homodyne(1, Quadrature::X, 0.0)?;
    println!("after reading X = 0 on the environment port (log-density {log_density:.3})");
    println!(
        "  var  x   {:.4}",
        cond.quadrature_variance(0, Quadrature::X)?
    );
    println!(
        "  var  p   {:.4}  (untouched)",
        cond.quadrature_variance(0, Quadrature::P)?
    );

    let nu = mixed.symplectic_eigenvalues()?;
    println!(
        "symplectic eigenvalues {nu:.4?}, physical: {}",
        mixed.is_physical()?
    );
    Ok(())
}
