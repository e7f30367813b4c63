//! Peak and mean of ε(t) over a coupling grid, computed in parallel
//! with results in grid order. Larger couplings give richer oscillations.

use rayon::prelude::*;

use yent::dynamics::{entanglement_series, init_from_amplitudes, integrate, IntegrationOptions, ModeParams};
use yent::tensor::C64;

/// b12, b23, peak ε, mean ε, peak ladder residual.
type Row = (f64, f64, f64, f64, f64);

fn main() -> yent::Result<()> {
    let start = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let couplings = [0.1, 0.3, 1.0];
    let grid: Vec<(f64, f64)> = couplings
        .iter()
        .flat_map(|&b12| couplings.iter().map(move |&b23| (b12, b23)))
        .collect();

    let rows: Vec<yent::Result<Row>> = grid
        .par_iter()
        .map(|&(b12, b23)| {
            let params = ModeParams {
                b23,
                delta21: 0.05,
                ..ModeParams::rabi(b12)
            };
            let state = init_from_amplitudes(start, &params)?;
            let traj = integrate(&state, &params, 200.0, 2001, &IntegrationOptions::default())?;
            let traj = entanglement_series(traj, 2);
            let mean = traj.epsilon.iter().sum::<f64>() / traj.len() as f64;
            let peak = traj.peak_epsilon().unwrap_or(0.0);
            Ok((b12, b23, peak, mean, traj.peak_ladder_residual()))
        })
        .collect();

    println!("{:>6} {:>6} {:>10} {:>10} {:>12}", "b12", "b23", "peak ε", "mean ε", "residual");
    for row in rows {
        let (b12, b23, peak, mean, res) = row?;
        println!("{b12:>6} {b23:>6} {peak:>10.6} {mean:>10.6} {res:>12.2e}");
    }
    Ok(())
}
