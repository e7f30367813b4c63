//! Seeded random ensembles used by the property suites, tests and examples.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{
    kron_matrices, CMatrix, CVector, CompositeStructure, OperatorMatrix, StateVector, C64,
};

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unit vector in `C^d`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| complex_normal(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Unit vector in `R^d` stored as complex.
pub fn real_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        C64::new(x, 0.0)
    });
    let n = v.norm();
    v.unscale(n)
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let rk = r[(k, k)];
        let phase = if rk.norm() > 0.0 { rk / rk.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// `U_1 ⊗ ... ⊗ U_p` with independent Haar unitaries per part.
pub fn local_unitary<R: Rng + ?Sized>(rng: &mut R, structure: &CompositeStructure) -> CMatrix {
    let parts: Vec<CMatrix> = structure.dims().iter().map(|&d| unitary(rng, d)).collect();
    kron_matrices(&parts)
}

/// Random Hermitian matrix `(G + G^dagger)/2`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, structure: CompositeStructure) -> OperatorMatrix {
    let d = structure.total_dim();
    let g = ginibre(rng, d, d);
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    OperatorMatrix::new(structure, h).expect("dimensions match")
}

/// Hilbert-Schmidt random density matrix `G G^dagger / Tr(G G^dagger)`.
pub fn density_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    structure: CompositeStructure,
) -> OperatorMatrix {
    let d = structure.total_dim();
    let g = ginibre(rng, d, d);
    let w = &g * g.adjoint();
    let tr = w.trace();
    let mut rho = w / tr;
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    OperatorMatrix::new(structure, rho).expect("dimensions match")
}

/// Real symmetric matrix with standard normal entries.
pub fn real_symmetric<R: Rng + ?Sized>(
    rng: &mut R,
    structure: CompositeStructure,
) -> OperatorMatrix {
    let d = structure.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let x: f64 = StandardNormal.sample(rng);
            m[(i, j)] = C64::new(x, 0.0);
            m[(j, i)] = C64::new(x, 0.0);
        }
    }
    OperatorMatrix::new(structure, m).expect("dimensions match")
}

/// Real matrix with standard normal entries.
pub fn real_matrix<R: Rng + ?Sized>(rng: &mut R, structure: CompositeStructure) -> OperatorMatrix {
    let d = structure.total_dim();
    let m = CMatrix::from_fn(d, d, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        C64::new(x, 0.0)
    });
    OperatorMatrix::new(structure, m).expect("dimensions match")
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, structure: CompositeStructure) -> StateVector {
    let v = unit_vector(rng, structure.total_dim());
    StateVector::new(structure, v).expect("dimensions match")
}

/// Point drawn uniformly from the probability simplex of size `n`.
pub fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Bipartite state `Σ_n c_n u_n ⊗ v_n` with the given Schmidt coefficients
/// and Haar-random local bases on `d1 x d2`.
pub fn schmidt_state<R: Rng + ?Sized>(
    rng: &mut R,
    coefficients: &[f64],
    d1: usize,
    d2: usize,
) -> StateVector {
    assert!(coefficients.len() <= d1.min(d2));
    let u = unitary(rng, d1);
    let v = unitary(rng, d2);
    let mut amps = CVector::zeros(d1 * d2);
    for (n, &c) in coefficients.iter().enumerate() {
        amps += u.column(n).kronecker(&v.column(n)) * C64::new(c, 0.0);
    }
    let s = CompositeStructure::new(vec![d1, d2]).expect("positive dims");
    StateVector::normalized(s, amps).expect("nonzero state")
}
