//! Two-mode Rabi oscillation inside the three-mode equations: populations
//! follow `sin^2(b t / 2)` and the measure swings between 0 and 1 bit.

use std::f64::consts::PI;

use yent::dynamics::{entanglement_series, init_from_amplitudes, integrate, IntegrationOptions, ModeParams};
use yent::tensor::C64;

fn main() -> yent::Result<()> {
    let b = 0.5;
    let params = ModeParams::rabi(b);
    let start = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let state = init_from_amplitudes(start, &params)?;
    let period = 2.0 * PI / b;
    let traj = integrate(&state, &params, 5.0 * period, 41, &IntegrationOptions::default())?;
    let traj = entanglement_series(traj, 2);

    let mut worst: f64 = 0.0;
    println!("{:>10} {:>14} {:>14} {:>10}", "t/T", "w2", "sin^2(bt/2)", "ε");
    for k in 0..traj.len() {
        let t = traj.times[k];
        let exact = (b * t / 2.0).sin().powi(2);
        worst = worst.max((traj.states[k].w[1] - exact).abs());
        println!(
            "{:>10.3} {:>14.10} {:>14.10} {:>10.6}",
            t / period,
            traj.states[k].w[1],
            exact,
            traj.epsilon[k]
        );
    }
    println!("max |w2 - sin^2(bt/2)| over five periods: {worst:.2e}");
    println!("{} accepted steps, {} rejected", traj.stats.accepted, traj.stats.rejected);
    Ok(())
}
