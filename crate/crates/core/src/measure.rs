//! The entanglement measure `ε(A) = log2(||A||_D / ||A⊗||_D)`.
//!
//! `A⊗` is the nonentangling counterpart of `A`: the tensor product of its
//! single-part marginals, rescaled so that its trace over product states
//! matches `Tr A`. A product operator's trace over product states is taken
//! to be the product of the factor traces.
//!
//! All logarithms are base 2; values are in bits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::{disentangled_norm, NormOptions, NormResult};
use crate::tensor::{
    hermitian_eigensystem, kron_matrices, partial_trace, schmidt_decompose, CMatrix,
    CompositeStructure, NormMeta, OperatorMatrix, StateVector, C64,
};

/// Tolerance on `Σ w_n = 1` and on the `[0, 1]` range of each population.
pub const POPULATION_TOL: f64 = 1e-9;

/// `A⊗ = prefactor · A_1 ⊗ ... ⊗ A_p`.
#[derive(Clone, Debug)]
pub struct ProductFactorization {
    pub prefactor: C64,
    pub factors: Vec<OperatorMatrix>,
}

impl ProductFactorization {
    pub fn structure(&self) -> CompositeStructure {
        let dims = self.factors.iter().map(|f| f.dim()).collect();
        CompositeStructure::new(dims).expect("factors have positive dimension")
    }

    /// `prefactor · Π_i Tr A_i`.
    pub fn product_trace(&self) -> C64 {
        self.factors
            .iter()
            .fold(self.prefactor, |acc, f| acc * f.trace())
    }

    /// The dense operator `A⊗` on the composite space.
    pub fn assemble(&self) -> OperatorMatrix {
        let kron: CMatrix = kron_matrices(self.factors.iter().map(|f| f.matrix()));
        OperatorMatrix::new(self.structure(), kron * self.prefactor)
            .expect("Kronecker product matches structure")
    }

    /// Multiplies every factor by `lambda` and the prefactor by
    /// `lambda^(-p)`, leaving `A⊗` unchanged.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let p = self.factors.len() as i32;
        Self {
            prefactor: self.prefactor * lambda.powi(-p),
            factors: self
                .factors
                .iter()
                .map(|f| f.scale(C64::new(lambda, 0.0)))
                .collect(),
        }
    }
}

/// Fractional mode populations `w_n` of a multimode state together with the
/// order `p` of the density matrix they describe.
#[derive(Clone, Debug, PartialEq)]
pub struct ModePopulations {
    w: Vec<f64>,
    order: usize,
}

impl ModePopulations {
    pub fn new(w: Vec<f64>, order: usize) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidPopulations("no modes".into()));
        }
        if order == 0 {
            return Err(Error::InvalidPopulations("order must be at least 1".into()));
        }
        if let Some((n, x)) = w
            .iter()
            .enumerate()
            .find(|(_, &x)| !(-POPULATION_TOL..=1.0 + POPULATION_TOL).contains(&x))
        {
            return Err(Error::InvalidPopulations(format!("w[{n}] = {x} outside [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > POPULATION_TOL {
            return Err(Error::InvalidPopulations(format!("populations sum to {sum}")));
        }
        Ok(Self { w, order })
    }

    pub fn uniform(modes: usize, order: usize) -> Result<Self> {
        Self::new(vec![1.0 / modes as f64; modes], order)
    }

    pub fn populations(&self) -> &[f64] {
        &self.w
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn modes(&self) -> usize {
        self.w.len()
    }

    /// Largest population, clamped to `[0, 1]`.
    pub fn max(&self) -> f64 {
        self.w.iter().copied().fold(0.0, f64::max).min(1.0)
    }

    /// Upper end `(p-1) log2 m` of the attainable range.
    pub fn upper_bound(&self) -> f64 {
        (self.order as f64 - 1.0) * (self.modes() as f64).log2()
    }

    /// The `p`-order density matrix `N!/(N-p)! Σ_n w_n |n...n><n...n|` over
    /// `p` parts of dimension `m`, carrying `(N, p)` metadata.
    pub fn density_matrix(&self, particles: u64) -> Result<OperatorMatrix> {
        let meta = NormMeta::new(particles, self.order)?;
        let m = self.modes();
        let structure = CompositeStructure::uniform(m, self.order)?;
        let scale = meta.trace_target();
        let mut diag = vec![0.0; structure.total_dim()];
        for (n, &wn) in self.w.iter().enumerate() {
            diag[structure.flatten(&vec![n; self.order])] = scale * wn;
        }
        let rho = OperatorMatrix::real_diagonal(structure, &diag)?;
        // The populations may sum to 1 only within POPULATION_TOL, which is
        // looser than the metadata trace check.
        Ok(rho.with_norm_meta_unchecked(meta))
    }
}

/// `Tr_{j≠i} A` with unit constant.
pub fn marginal(a: &OperatorMatrix, part: usize) -> Result<OperatorMatrix> {
    partial_trace(a, part)
}

/// Single-particle matrix `(N-p)!/(N-1)! Tr_{j≠i} ρ_p`, whose trace is `N`.
pub fn normalized_marginal(rho_p: &OperatorMatrix, part: usize) -> Result<OperatorMatrix> {
    let meta = rho_p.norm_meta().ok_or(Error::MissingNormMeta)?;
    let expected = meta.trace_target();
    let found = rho_p.trace();
    if (found.re - expected).abs() > 1e-6 * expected || found.im.abs() > 1e-6 * expected {
        return Err(Error::TraceMismatch {
            expected,
            found: found.re,
        });
    }
    if rho_p.structure().parts() == 1 {
        rho_p.structure().check_part(part)?;
        return Ok(rho_p.clone().without_norm_meta());
    }
    let m = partial_trace(rho_p, part)?;
    Ok(m.scale(C64::new(meta.marginal_factor(), 0.0)))
}

/// Builds `A⊗` from the marginals of `A`.
///
/// Without metadata the factors are the plain marginals (each of trace
/// `Tr A`) and the prefactor is `(Tr A)^(1-p)`. With `(N, p)` metadata the
/// factors are the trace-`N` single-particle matrices and the prefactor is
/// `N!/((N-p)! N^p)`.
pub fn product_counterpart(a: &OperatorMatrix) -> Result<ProductFactorization> {
    let tr = a.trace();
    if tr.norm() <= 1e-14 * a.matrix().norm() || tr.norm() == 0.0 {
        return Err(Error::ZeroTrace);
    }
    let p = a.structure().parts();
    if p == 1 {
        return Ok(ProductFactorization {
            prefactor: C64::new(1.0, 0.0),
            factors: vec![a.clone().without_norm_meta()],
        });
    }
    if let Some(meta) = a.norm_meta() {
        let factors = (0..p)
            .map(|i| normalized_marginal(a, i))
            .collect::<Result<Vec<_>>>()?;
        return Ok(ProductFactorization {
            prefactor: C64::new(meta.product_prefactor(), 0.0),
            factors,
        });
    }
    let factors = (0..p)
        .map(|i| marginal(a, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductFactorization {
        prefactor: tr.powi(1 - p as i32),
        factors,
    })
}

/// Result of evaluating `ε(A)` through the optimizer.
#[derive(Clone, Debug)]
pub struct MeasureReport {
    pub epsilon_bits: f64,
    pub numerator: NormResult,
    pub denominator: NormResult,
}

impl MeasureReport {
    pub fn converged(&self) -> bool {
        self.numerator.converged && self.denominator.converged
    }
}

/// Denominators at or below this are degenerate.
const DEGENERATE_NORM: f64 = 1e-300;

/// `ε(A) = log2(||A||_D / ||A⊗||_D)` with both norms from the optimizer.
pub fn entanglement_measure(a: &OperatorMatrix, opts: &NormOptions) -> Result<MeasureReport> {
    let factorization = product_counterpart(a)?;
    measure_with_counterpart(a, &factorization, opts)
}

/// `ε(A)` for an explicitly supplied product counterpart.
pub fn measure_with_counterpart(
    a: &OperatorMatrix,
    counterpart: &ProductFactorization,
    opts: &NormOptions,
) -> Result<MeasureReport> {
    let denominator = disentangled_norm(&counterpart.assemble(), opts);
    if !(denominator.value > DEGENERATE_NORM) {
        return Err(Error::DegenerateDenominator(denominator.value));
    }
    let numerator = disentangled_norm(a, opts);
    Ok(MeasureReport {
        epsilon_bits: (numerator.value / denominator.value).log2(),
        numerator,
        denominator,
    })
}

/// `-log2 max_n c_n^2` from the Schmidt decomposition of a pure bipartite
/// state.
pub fn measure_bipartite_pure(psi: &StateVector) -> Result<f64> {
    let form = schmidt_decompose(psi)?;
    let c = form.max_coefficient();
    Ok(-(c * c).log2() + 0.0)
}

/// `(1-p) log2 max_n w_n` for the multimode density matrix.
pub fn multimode_measure(w: &ModePopulations) -> f64 {
    (1.0 - w.order() as f64) * w.max().log2() + 0.0
}

/// `-Σ λ log2 λ` over the eigenvalues of a unit-trace density matrix.
pub fn reduced_von_neumann_entropy(rho1: &OperatorMatrix) -> Result<f64> {
    let tr = rho1.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::TraceMismatch {
            expected: 1.0,
            found: tr.re,
        });
    }
    let eig = hermitian_eigensystem(rho1)?;
    let mut s = 0.0;
    for &lam in &eig.values {
        if lam < -1e-9 {
            return Err(Error::NegativeEigenvalue(lam));
        }
        if lam > 0.0 {
            s -= lam * lam.log2();
        }
    }
    Ok(s + 0.0)
}

/// Pieces of the density-matrix closed form.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedFormReport {
    pub epsilon_bits: f64,
    pub density_norm: f64,
    pub marginal_norms: Vec<f64>,
    pub converged: bool,
}

/// `ε(ρ_p) = log2[(N-p)! N^p ||ρ_p||_D / (N! Π_i ||ρ_1^i||)]`.
///
/// The numerator comes from the optimizer; each single-particle norm is the
/// top eigenvalue of the positive trace-`N` marginal.
pub fn density_matrix_measure(rho_p: &OperatorMatrix, opts: &NormOptions) -> Result<ClosedFormReport> {
    let meta = rho_p.norm_meta().ok_or(Error::MissingNormMeta)?;
    let p = rho_p.structure().parts();
    let mut marginal_norms = Vec::with_capacity(p);
    for i in 0..p {
        let m = normalized_marginal(rho_p, i)?;
        let top = hermitian_eigensystem(&m)?
            .values
            .first()
            .copied()
            .unwrap_or(0.0);
        marginal_norms.push(top);
    }
    let denom: f64 = marginal_norms.iter().product::<f64>() * meta.product_prefactor();
    if !(denom > DEGENERATE_NORM) {
        return Err(Error::DegenerateDenominator(denom));
    }
    let num = disentangled_norm(rho_p, opts);
    Ok(ClosedFormReport {
        epsilon_bits: (num.value / denom).log2(),
        density_norm: num.value,
        marginal_norms,
        converged: num.converged,
    })
}
