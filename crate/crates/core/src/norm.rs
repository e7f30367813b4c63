//! Operator norms on the full space and on the set of product vectors.
//!
//! The disentangled norm of `A` is the injective norm
//! `sup |<g|A|f>|` over unit product vectors `f = f_1 ⊗ ... ⊗ f_p` and
//! `g = g_1 ⊗ ... ⊗ g_p`. It never exceeds the operator norm and coincides
//! with it for a single part.
//!
//! The optimizer is an alternating block ascent. With every factor except the
//! pair `(g_k, f_k)` frozen, the bilinear form reduces to `<g_k|M_k|f_k>` for
//! a `d_k x d_k` contraction `M_k`, maximized by its top singular pair.
//! Sweeping `k = 1..p` never decreases the value. For positive semidefinite
//! `A` the supremum is attained with `g = f`, and the block step becomes the
//! top eigenvector of the Hermitian contraction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::random;
use crate::tensor::{
    hermitian_eigen_unchecked, kron_vectors, singular_triplets, CMatrix, CVector, CompositeStructure, OperatorMatrix,
    C64,
};

/// Tolerance on each factor's norm.
pub const FACTOR_NORM_TOL: f64 = 1e-12;

/// A unit product vector `f_1 ⊗ ... ⊗ f_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductVector {
    factors: Vec<CVector>,
}

impl ProductVector {
    pub fn new(factors: Vec<CVector>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidStructure("product vector needs a factor".into()));
        }
        for (k, f) in factors.iter().enumerate() {
            let n = f.norm();
            if (n - 1.0).abs() > FACTOR_NORM_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "factor {k} has norm {n}, expected 1"
                )));
            }
        }
        Ok(Self { factors })
    }

    /// Normalizes each factor.
    pub fn normalized(factors: Vec<CVector>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|f| {
                let n = f.norm();
                if n == 0.0 {
                    Err(Error::NotNormalized { norm: 0.0 })
                } else {
                    Ok(f.unscale(n))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    /// Product of computational basis vectors.
    pub fn basis(structure: &CompositeStructure, digits: &[usize]) -> Self {
        let factors = structure
            .dims()
            .iter()
            .zip(digits)
            .map(|(&d, &i)| {
                let mut v = CVector::zeros(d);
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Self { factors }
    }

    pub fn factors(&self) -> &[CVector] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.len()).collect()
    }

    /// The flattened vector in the composite space.
    pub fn to_vector(&self) -> CVector {
        kron_vectors(&self.factors)
    }
}

/// Optimizer settings for [`disentangled_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    /// Random product starts.
    pub restarts: usize,
    /// Stop a run when a full sweep improves the value by less than
    /// `tol * value`.
    pub tol: f64,
    /// Sweep limit per start.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            tol: 1e-10,
            max_iter: 500,
            seed: 0,
        }
    }
}

/// Value of the disentangled norm together with a certificate.
#[derive(Clone, Debug)]
pub struct NormResult {
    pub value: f64,
    /// `g` in `<g|A|f>`.
    pub witness_left: ProductVector,
    /// `f` in `<g|A|f>`.
    pub witness_right: ProductVector,
    /// Sweeps performed by the winning start.
    pub iterations: usize,
    pub converged: bool,
}

/// `<g|A|f>` for product vectors.
pub fn bilinear_value(a: &OperatorMatrix, g: &ProductVector, f: &ProductVector) -> C64 {
    let gv = g.to_vector();
    let fv = f.to_vector();
    gv.dotc(&(a.matrix() * fv))
}

/// Largest singular value of `A`.
pub fn hilbert_norm(a: &OperatorMatrix) -> f64 {
    spectral_norm(a.matrix())
}

pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Hermitian with no eigenvalue below `-1e-12 * max(1, ||A||)`.
pub fn is_positive_semidefinite(a: &OperatorMatrix) -> bool {
    if !a.is_hermitian() {
        return false;
    }
    let eig = hermitian_eigen_unchecked(a.matrix());
    let top = eig.values.first().copied().unwrap_or(0.0).abs().max(1.0);
    eig.values.last().is_none_or(|&low| low >= -1e-12 * top)
}

/// Injective norm `sup |<g|A|f>|` over unit product vectors, approximated
/// from below by multi-start alternating ascent.
///
/// Starts are the product basis pairs of the four largest-magnitude entries
/// of `A` followed by `opts.restarts` seeded random product vectors. Runs are
/// independent; the best value wins with ties going to the earliest start.
pub fn disentangled_norm(a: &OperatorMatrix, opts: &NormOptions) -> NormResult {
    let structure = a.structure();
    if structure.parts() == 1 {
        return single_part_norm(a);
    }

    let symmetric = is_positive_semidefinite(a);
    let ctx = Contraction::new(a);
    let starts = initial_points(a, opts, symmetric);

    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|(g, f)| ctx.ascend(g, f, symmetric, opts))
        .collect();

    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = k;
        }
    }
    let run = runs.into_iter().nth(best).expect("at least one start");
    NormResult {
        value: run.value,
        witness_left: ProductVector { factors: run.g },
        witness_right: ProductVector { factors: run.f },
        iterations: run.sweeps,
        converged: run.converged,
    }
}

fn single_part_norm(a: &OperatorMatrix) -> NormResult {
    let (_, u, v) = singular_triplets(a.matrix()).swap_remove(0);
    NormResult {
        value: hilbert_norm(a),
        witness_left: ProductVector { factors: vec![u] },
        witness_right: ProductVector { factors: vec![v] },
        iterations: 0,
        converged: true,
    }
}

type Start = (Vec<CVector>, Vec<CVector>);

fn initial_points(a: &OperatorMatrix, opts: &NormOptions, symmetric: bool) -> Vec<Start> {
    let structure = a.structure();
    let m = a.matrix();
    let d = m.nrows();
    let mut starts = Vec::with_capacity(opts.restarts + 4);

    // Largest entries; diagonal ones only on the symmetric path.
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for r in 0..d {
        for s in 0..d {
            if symmetric && r != s {
                continue;
            }
            let mag = m[(r, s)].norm();
            if mag > 0.0 {
                entries.push((mag, r, s));
            }
        }
    }
    entries.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    for &(_, r, s) in entries.iter().take(4) {
        let g = ProductVector::basis(structure, &structure.digits(r)).factors;
        let f = ProductVector::basis(structure, &structure.digits(s)).factors;
        starts.push((g, f));
    }

    for k in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let f: Vec<CVector> = structure
            .dims()
            .iter()
            .map(|&dk| random::unit_vector(&mut rng, dk))
            .collect();
        let g = if symmetric {
            f.clone()
        } else {
            structure
                .dims()
                .iter()
                .map(|&dk| random::unit_vector(&mut rng, dk))
                .collect()
        };
        starts.push((g, f));
    }
    if starts.is_empty() {
        // Zero operator with no random restarts requested.
        let g = ProductVector::basis(structure, &vec![0; structure.parts()]).factors;
        starts.push((g.clone(), g));
    }
    starts
}

struct Run {
    value: f64,
    g: Vec<CVector>,
    f: Vec<CVector>,
    sweeps: usize,
    converged: bool,
}

/// Precomputed digit table for contracting `A` against all but one factor.
struct Contraction<'a> {
    a: &'a CMatrix,
    dims: Vec<usize>,
    digits: Vec<Vec<usize>>,
}

impl<'a> Contraction<'a> {
    fn new(op: &'a OperatorMatrix) -> Self {
        let s = op.structure();
        Self {
            a: op.matrix(),
            dims: s.dims().to_vec(),
            digits: (0..s.total_dim()).map(|i| s.digits(i)).collect(),
        }
    }

    /// `M_k[a][c] = Σ conj(g_{≠k}) A f_{≠k}` over rows with digit `a` in
    /// part `k` and columns with digit `c`.
    fn block(&self, k: usize, g: &[CVector], f: &[CVector]) -> CMatrix {
        let weights = |v: &[CVector], conj: bool| -> Vec<C64> {
            self.digits
                .iter()
                .map(|dig| {
                    let mut w = C64::new(1.0, 0.0);
                    for (j, vj) in v.iter().enumerate() {
                        if j != k {
                            let x = vj[dig[j]];
                            w *= if conj { x.conj() } else { x };
                        }
                    }
                    w
                })
                .collect()
        };
        let wg = weights(g, true);
        let wf = weights(f, false);
        let dk = self.dims[k];
        let mut out = CMatrix::zeros(dk, dk);
        let n = self.digits.len();
        for r in 0..n {
            if wg[r] == C64::new(0.0, 0.0) {
                continue;
            }
            let a_r = self.digits[r][k];
            let mut row = vec![C64::new(0.0, 0.0); dk];
            for s in 0..n {
                if wf[s] == C64::new(0.0, 0.0) {
                    continue;
                }
                row[self.digits[s][k]] += self.a[(r, s)] * wf[s];
            }
            for (c, x) in row.into_iter().enumerate() {
                out[(a_r, c)] += wg[r] * x;
            }
        }
        out
    }

    fn value(&self, g: &[CVector], f: &[CVector]) -> f64 {
        let gv = kron_vectors(g);
        let fv = kron_vectors(f);
        gv.dotc(&(self.a * fv)).norm()
    }

    fn ascend(&self, mut g: Vec<CVector>, mut f: Vec<CVector>, symmetric: bool, opts: &NormOptions) -> Run {
        let p = self.dims.len();
        let mut value = self.value(&g, &f);
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < opts.max_iter {
            sweeps += 1;
            let prev = value;
            for k in 0..p {
                let m = self.block(k, &g, &f);
                if symmetric {
                    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
                    let eig = hermitian_eigen_unchecked(&h);
                    f[k] = eig.vector(0);
                    g[k] = f[k].clone();
                    value = eig.values[0].max(0.0);
                } else {
                    let (s, u, v) = singular_triplets(&m).swap_remove(0);
                    g[k] = u;
                    f[k] = v;
                    value = s;
                }
            }
            if value - prev <= opts.tol * value.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        Run {
            value,
            g,
            f,
            sweeps,
            converged,
        }
    }
}

/// Exhaustive lower bound on the disentangled norm, used as a test oracle.
///
/// Operators diagonal in the product basis (any number of parts) return
/// `max |A_kk|` exactly, which is the norm by Cauchy-Schwarz. Real
/// bipartite operators with total dimension at most 16 are scanned over a
/// grid of real unit factors on the smaller part, `resolution` points per
/// hyperspherical angle; for each grid pair the other part is optimized
/// exactly by the top singular value of the contracted block.
pub fn brute_force_disentangled_norm(a: &OperatorMatrix, resolution: usize) -> Result<f64> {
    let m = a.matrix();
    if a.is_diagonal() {
        return Ok(m.diagonal().iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    let s = a.structure();
    if s.parts() == 1 {
        return Ok(hilbert_norm(a));
    }
    if s.parts() != 2 {
        return Err(Error::TooLarge(format!(
            "grid oracle supports two parts, got {}",
            s.parts()
        )));
    }
    if s.total_dim() > 16 {
        return Err(Error::TooLarge(format!(
            "total dimension {} exceeds 16",
            s.total_dim()
        )));
    }
    if m.iter().any(|x| x.im != 0.0) {
        return Err(Error::TooLarge("grid oracle requires a real operator".into()));
    }
    if resolution < 2 {
        return Err(Error::field("resolution", "need at least 2 grid points per angle"));
    }

    let (d1, d2) = (s.dim(0), s.dim(1));
    let outer_first = d1 <= d2;
    let (d_outer, d_inner) = if outer_first { (d1, d2) } else { (d2, d1) };
    let grid = sphere_grid(d_outer, resolution);
    let evaluations = grid.len() * grid.len();
    if evaluations > 50_000_000 {
        return Err(Error::TooLarge(format!("{evaluations} grid evaluations")));
    }

    let real = |r: usize, c: usize| m[(r, c)].re;
    let index = |outer: usize, inner: usize| {
        if outer_first {
            outer * d2 + inner
        } else {
            inner * d2 + outer
        }
    };

    let best = grid
        .par_iter()
        .map(|gv| {
            let mut best = 0.0f64;
            let mut block = nalgebra::DMatrix::<f64>::zeros(d_inner, d_inner);
            for fv in &grid {
                for b in 0..d_inner {
                    for dd in 0..d_inner {
                        let mut acc = 0.0;
                        for (a_, ga) in gv.iter().enumerate() {
                            if *ga == 0.0 {
                                continue;
                            }
                            for (c_, fc) in fv.iter().enumerate() {
                                acc += ga * real(index(a_, b), index(c_, dd)) * fc;
                            }
                        }
                        block[(b, dd)] = acc;
                    }
                }
                best = best.max(block.singular_values().max());
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Real unit vectors in `R^d` from a hyperspherical angle grid. The last
/// angle spans `[0, π)` since `v` and `-v` give the same `|<g|A|f>|`.
fn sphere_grid(d: usize, resolution: usize) -> Vec<Vec<f64>> {
    if d == 1 {
        return vec![vec![1.0]];
    }
    let angles = d - 1;
    let mut out = Vec::new();
    let mut idx = vec![0usize; angles];
    loop {
        let theta: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                if j + 1 == angles {
                    std::f64::consts::PI * i as f64 / resolution as f64
                } else {
                    std::f64::consts::PI * i as f64 / (resolution - 1) as f64
                }
            })
            .collect();
        let mut v = vec![0.0; d];
        let mut sin_prod = 1.0;
        for j in 0..angles {
            v[j] = sin_prod * theta[j].cos();
            sin_prod *= theta[j].sin();
        }
        v[d - 1] = sin_prod;
        out.push(v);

        let mut j = 0;
        loop {
            if j == angles {
                return out;
            }
            idx[j] += 1;
            if idx[j] < resolution {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{tensor_product, StateVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(d: &[usize]) -> CompositeStructure {
        CompositeStructure::new(d.to_vec()).unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell() -> OperatorMatrix {
        let h = 1.0 / 2f64.sqrt();
        let psi = StateVector::new(dims(&[2, 2]), CVector::from_vec(vec![c(h), c(0.0), c(0.0), c(h)])).unwrap();
        OperatorMatrix::projector(&psi)
    }

    /// Power iteration on `A^dagger A`.
    fn power_iteration_norm(m: &CMatrix) -> f64 {
        let ata = m.adjoint() * m;
        let mut v = CVector::from_fn(m.ncols(), |i, _| c(1.0 + i as f64 * 0.37));
        v /= c(v.norm());
        let mut lam = 0.0;
        for _ in 0..5000 {
            let w = &ata * &v;
            lam = w.norm();
            v = w / c(lam);
        }
        lam.sqrt()
    }

    #[test]
    fn hilbert_norm_examples() {
        assert!((hilbert_norm(&OperatorMatrix::identity(dims(&[4]))) - 1.0).abs() < 1e-15);
        let d = OperatorMatrix::real_diagonal(dims(&[3]), &[0.5, 0.25, 0.25]).unwrap();
        assert!((hilbert_norm(&d) - 0.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = OperatorMatrix::new(dims(&[8]), random::ginibre(&mut rng, 8, 8)).unwrap();
        let oracle = power_iteration_norm(a.matrix());
        assert!((hilbert_norm(&a) - oracle).abs() <= 1e-8 * oracle);
    }

    #[test]
    fn single_part_equals_hilbert_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = OperatorMatrix::new(dims(&[5]), random::ginibre(&mut rng, 5, 5)).unwrap();
        let r = disentangled_norm(&a, &NormOptions::default());
        assert_eq!(r.value, hilbert_norm(&a));
        assert!(r.converged);
        let w = bilinear_value(&a, &r.witness_left, &r.witness_right).norm();
        assert!((w - r.value).abs() < 1e-12);
    }

    #[test]
    fn diagonal_in_product_basis() {
        let a = OperatorMatrix::real_diagonal(dims(&[2, 2]), &[0.5, 0.25, 0.25, 0.0]).unwrap();
        let r = disentangled_norm(&a, &NormOptions::default());
        assert!((r.value - 0.5).abs() < 1e-15);
        assert_eq!(brute_force_disentangled_norm(&a, 8).unwrap(), 0.5);
    }

    #[test]
    fn pure_state_gives_largest_schmidt_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let psi = random::schmidt_state(&mut rng, &[0.8f64.sqrt(), 0.2f64.sqrt()], 2, 2);
        let rho = OperatorMatrix::projector(&psi);
        let r = disentangled_norm(&rho, &NormOptions::default());
        assert!((r.value - 0.8).abs() < 1e-9, "{}", r.value);
        let w = bilinear_value(&rho, &r.witness_left, &r.witness_right).norm();
        assert!((w - r.value).abs() < 1e-9);
    }

    #[test]
    fn brute_force_examples() {
        let a = OperatorMatrix::real_diagonal(dims(&[2]), &[1.0, 0.0]).unwrap();
        assert_eq!(brute_force_disentangled_norm(&a, 4).unwrap(), 1.0);
        let b = brute_force_disentangled_norm(&bell(), 64).unwrap();
        assert!((b - 0.5).abs() < 1e-3);
        let cc = OperatorMatrix::real_diagonal(dims(&[2, 2]), &[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(brute_force_disentangled_norm(&cc, 4).unwrap(), 0.5);
    }

    #[test]
    fn brute_force_rejects_large_and_complex() {
        let big = OperatorMatrix::identity(dims(&[4, 5]));
        let mut m = big.matrix().clone();
        m[(0, 1)] = c(0.1);
        let big = OperatorMatrix::new(dims(&[4, 5]), m).unwrap();
        assert!(matches!(brute_force_disentangled_norm(&big, 4), Err(Error::TooLarge(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cplx = random::hermitian(&mut rng, dims(&[2, 2]));
        assert!(brute_force_disentangled_norm(&cplx, 4).is_err());
    }

    #[test]
    fn bounded_by_hilbert_norm_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let a = OperatorMatrix::new(dims(&[2, 3]), random::ginibre(&mut rng, 6, 6)).unwrap();
            let opts = NormOptions::default();
            let r = disentangled_norm(&a, &opts);
            assert!(r.value <= hilbert_norm(&a) + 1e-9);
            let lam = C64::new(-1.7, 0.4);
            let rs = disentangled_norm(&a.scale(lam), &opts);
            assert!((rs.value - lam.norm() * r.value).abs() <= 1e-9 * rs.value);
        }
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let s = dims(&[2, 3]);
        let a = OperatorMatrix::new(s.clone(), random::ginibre(&mut rng, 6, 6)).unwrap();
        let u = random::local_unitary(&mut rng, &s);
        let b = a.conjugate_by(&u).unwrap();
        let opts = NormOptions::default();
        let (x, y) = (disentangled_norm(&a, &opts).value, disentangled_norm(&b, &opts).value);
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }

    #[test]
    fn multiplicative_on_positive_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let r1 = random::density_matrix(&mut rng, dims(&[2]));
        let r2 = random::density_matrix(&mut rng, dims(&[3]));
        let r3 = random::density_matrix(&mut rng, dims(&[2]));
        let prod = tensor_product(&tensor_product(&r1, &r2), &r3);
        let v = disentangled_norm(&prod, &NormOptions::default()).value;
        let expected = hilbert_norm(&r1) * hilbert_norm(&r2) * hilbert_norm(&r3);
        assert!((v - expected).abs() < 1e-6);
    }

    #[test]
    fn optimizer_beats_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for d in [[2, 2], [2, 3], [3, 2]] {
            let a = random::real_matrix(&mut rng, dims(&d));
            let oracle = brute_force_disentangled_norm(&a, 90).unwrap();
            let r = disentangled_norm(&a, &NormOptions::default());
            assert!(r.value >= oracle - 1e-3, "{} < {}", r.value, oracle);
            assert!(r.value <= hilbert_norm(&a) + 1e-9);
        }
    }

    #[test]
    fn sphere_grid_is_unit() {
        for d in 1..5 {
            for v in sphere_grid(d, 5) {
                let n: f64 = v.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let a = OperatorMatrix::new(dims(&[3, 3]), random::ginibre(&mut rng, 9, 9)).unwrap();
        let opts = NormOptions { seed: 5, ..NormOptions::default() };
        let x = disentangled_norm(&a, &opts);
        let y = disentangled_norm(&a, &opts);
        assert_eq!(x.value.to_bits(), y.value.to_bits());
        assert_eq!(x.witness_right, y.witness_right);
    }
}
