//! Entanglement of random bipartite pure states: the optimizer against the
//! Schmidt closed form, and the Bell and product extremes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use yent::measure::{entanglement_measure, measure_bipartite_pure, reduced_von_neumann_entropy};
use yent::norm::NormOptions;
use yent::random;
use yent::tensor::{partial_trace, OperatorMatrix};

fn main() -> yent::Result<()> {
    let opts = NormOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "dims", "optimizer", "schmidt", "|diff|", "S_vN");
    for (d1, d2) in [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)] {
        let n = d1.min(d2);
        let coeffs = random::simplex(&mut rng, n);
        let coeffs: Vec<f64> = coeffs.iter().map(|x| x.sqrt()).collect();
        let psi = random::schmidt_state(&mut rng, &coeffs, d1, d2);
        let rho = OperatorMatrix::projector(&psi);
        let generic = entanglement_measure(&rho, &opts)?.epsilon_bits;
        let closed = measure_bipartite_pure(&psi)?;
        let entropy = reduced_von_neumann_entropy(&partial_trace(&rho, 0)?)?;
        println!(
            "{:>6} {generic:>12.9} {closed:>12.9} {:>12.2e} {entropy:>10.6}",
            format!("{d1}x{d2}"),
            (generic - closed).abs()
        );
    }

    for d in 2..=5 {
        let uniform = vec![(1.0 / d as f64).sqrt(); d];
        let psi = random::schmidt_state(&mut rng, &uniform, d, d);
        let eps = measure_bipartite_pure(&psi)?;
        println!("maximally entangled {d}x{d}: ε = {eps:.12} (log2 d = {:.12})", (d as f64).log2());
    }
    Ok(())
}
