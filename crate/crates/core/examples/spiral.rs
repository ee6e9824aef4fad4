//! Fairs the noisy spiral model with the stretch, strain and jerk
//! functionals and prints iterations and final metrics for each.
//!
//! `cargo run -p fairpia-core --example spiral -- [seed] [omega]`

use fairpia_core::engine::{fair, FairingConfig, WeightPolicy};
use fairpia_core::models::{add_noise, make_spiral_model, NoiseSpec, SpiralSpec};
use fairpia_core::FunctionalKind;

fn main() -> fairpia_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(2024, |s| s.parse().expect("seed must be an integer"));
    let omega: f64 = args.next().map_or(1e-6, |s| s.parse().expect("omega must be a number"));

    let fit = make_spiral_model(&SpiralSpec::default())?;
    println!("fit error {:.3e}", fit.max_error()?);
    let noisy = add_noise(&fit.curve.into(), &NoiseSpec::new(0.02, seed))?;
    println!("{:>3} {:>10} {:>14} {:>14} stop", "r", "iterations", "e_dev", "e_rel");
    for r in 1..=3u8 {
        let config = FairingConfig::uniform(FunctionalKind::CurveOrder(r), noisy.len(), omega)
            .with_policy(WeightPolicy::Permissive);
        let run = fair(&noisy, &config)?;
        let last = run.trace.last().expect("trace is never empty");
        println!(
            "{r:>3} {:>10} {:>14.6e} {:>14.6e} {}",
            run.iterations,
            last.e_dev,
            last.e_rel.unwrap_or(f64::NAN),
            run.stop
        );
    }
    Ok(())
}
