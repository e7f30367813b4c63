//! Multimode states: the closed form `(1-p) log2 max w`, its upper bound
//! `(p-1) log2 m`, and agreement with the optimizer on the `N = 100`
//! density matrix.

use yent::measure::{density_matrix_measure, entanglement_measure, multimode_measure, ModePopulations};
use yent::norm::NormOptions;

fn main() -> yent::Result<()> {
    let opts = NormOptions::default();
    let w = vec![0.5, 0.3, 0.2];
    for p in 2..=3 {
        let pops = ModePopulations::new(w.clone(), p)?;
        let rho = pops.density_matrix(100)?;
        let closed = multimode_measure(&pops);
        let generic = entanglement_measure(&rho, &opts)?.epsilon_bits;
        let marginals = density_matrix_measure(&rho, &opts)?;
        println!(
            "w = {w:?}, p = {p}: closed {closed:.10}, optimizer {generic:.10}, marginal form {:.10}, bound {:.10}",
            marginals.epsilon_bits,
            pops.upper_bound()
        );
    }

    println!("\nuniform populations reach the bound:");
    for m in 2..=8 {
        let row: Vec<String> = (2..=5)
            .map(|p| {
                let u = ModePopulations::uniform(m, p).expect("valid");
                format!("{:.6}", multimode_measure(&u))
            })
            .collect();
        println!("m = {m}: p=2..5 -> {}", row.join("  "));
    }
    Ok(())
}
