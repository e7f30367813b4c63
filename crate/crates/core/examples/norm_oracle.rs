//! The disentangled-norm optimizer next to its exhaustive oracles: exact
//! `max |a_ii|` for product-diagonal operators and a hypersphere grid for
//! small real bipartite ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use yent::norm::{brute_force_disentangled_norm, disentangled_norm, hilbert_norm, NormOptions};
use yent::random;
use yent::tensor::{CompositeStructure, OperatorMatrix};

fn main() -> yent::Result<()> {
    let opts = NormOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let s = CompositeStructure::new(vec![2, 4, 2, 4])?;
    let diag: Vec<f64> = (0..s.total_dim()).map(|k| ((k * 37 % 64) as f64 - 32.0) / 16.0).collect();
    let a = OperatorMatrix::real_diagonal(s, &diag)?;
    let r = disentangled_norm(&a, &opts);
    println!(
        "diagonal 2x4x2x4: optimizer {:.12}, exact {:.12}",
        r.value,
        brute_force_disentangled_norm(&a, 2)?
    );

    for dims in [[2, 2], [2, 4], [3, 3]] {
        let s = CompositeStructure::new(dims.to_vec())?;
        let a = random::real_matrix(&mut rng, s);
        let res = if dims.contains(&2) { 120 } else { 24 };
        let r = disentangled_norm(&a, &opts);
        let grid = brute_force_disentangled_norm(&a, res)?;
        println!(
            "real {}x{}: optimizer {:.9} ({} sweeps, converged {}), grid {:.9}, ||A||_H {:.9}",
            dims[0],
            dims[1],
            r.value,
            r.iterations,
            r.converged,
            grid,
            hilbert_norm(&a)
        );
    }
    Ok(())
}
