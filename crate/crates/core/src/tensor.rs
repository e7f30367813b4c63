//! Dense complex linear algebra over multipartite Hilbert spaces.
//!
//! A composite space `H = H_1 ⊗ ... ⊗ H_p` is described by the list of part
//! dimensions. Basis vectors of `H` are flattened with part 1 as the
//! slowest-varying index, which is the layout produced by the Kronecker
//! product `A ⊗ B`.
//!
//! Part indices are zero-based throughout the crate.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute tolerance on entries of `A - A^dagger` for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance on the Euclidean norm of a state flagged as normalized.
pub const NORMALIZED_TOL: f64 = 1e-12;

/// Dimensions `d_1, ..., d_p` of the parts of a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompositeStructure {
    dims: Vec<usize>,
}

impl CompositeStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidStructure("at least one part is required".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidStructure(format!("part {pos} has dimension 0")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidStructure("total dimension overflows".into()))?;
        Ok(Self { dims })
    }

    /// `p` identical parts of dimension `d`.
    pub fn uniform(d: usize, p: usize) -> Result<Self> {
        Self::new(vec![d; p])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parts(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, part: usize) -> usize {
        self.dims[part]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flattened-index stride of each part.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Splits a flattened basis index into per-part indices.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    /// Inverse of [`digits`](Self::digits).
    pub fn flatten(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Structure of `self ⊗ other`.
    pub fn concat(&self, other: &CompositeStructure) -> CompositeStructure {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        CompositeStructure { dims }
    }

    pub(crate) fn check_part(&self, index: usize) -> Result<()> {
        if index < self.parts() {
            Ok(())
        } else {
            Err(Error::InvalidPart {
                index,
                parts: self.parts(),
            })
        }
    }
}

/// Particle count `N` and order `p` of a reduced density matrix.
///
/// A `p`-order density matrix of `N` particles has trace `N!/(N-p)!`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormMeta {
    pub particles: u64,
    pub order: usize,
}

impl NormMeta {
    pub fn new(particles: u64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::field("norm_meta.p", "order must be at least 1"));
        }
        if (order as u64) > particles {
            return Err(Error::field(
                "norm_meta.p",
                format!("order {order} exceeds particle count {particles}"),
            ));
        }
        Ok(Self { particles, order })
    }

    /// `N!/(N-p)!`, the trace of a `p`-order density matrix.
    pub fn trace_target(&self) -> f64 {
        falling_factorial(self.particles, self.order)
    }

    /// `N!/((N-p)! N^p)`, the prefactor of the product counterpart built from
    /// single-particle matrices of trace `N`.
    pub fn product_prefactor(&self) -> f64 {
        let n = self.particles as f64;
        (0..self.order as u64).fold(1.0, |acc, k| acc * (self.particles - k) as f64 / n)
    }

    /// `(N-p)!/(N-1)!`, the factor relating a partial trace of a `p`-order
    /// matrix to the single-particle matrix.
    pub fn marginal_factor(&self) -> f64 {
        if self.order <= 1 {
            1.0
        } else {
            1.0 / falling_factorial(self.particles - 1, self.order - 1)
        }
    }
}

/// `n (n-1) ... (n-k+1)`.
pub fn falling_factorial(n: u64, k: usize) -> f64 {
    (0..k as u64).fold(1.0, |acc, j| acc * (n - j) as f64)
}

/// Dense square matrix acting on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    structure: CompositeStructure,
    entries: CMatrix,
    norm_meta: Option<NormMeta>,
}

impl OperatorMatrix {
    pub fn new(structure: CompositeStructure, entries: CMatrix) -> Result<Self> {
        let d = structure.total_dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "structure {:?} needs a {d}x{d} matrix, got {}x{}",
                structure.dims(),
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self {
            structure,
            entries,
            norm_meta: None,
        })
    }

    /// Single-part operator.
    pub fn single(entries: CMatrix) -> Result<Self> {
        let structure = CompositeStructure::new(vec![entries.nrows()])?;
        Self::new(structure, entries)
    }

    pub fn identity(structure: CompositeStructure) -> Self {
        let d = structure.total_dim();
        Self {
            structure,
            entries: CMatrix::identity(d, d),
            norm_meta: None,
        }
    }

    pub fn diagonal(structure: CompositeStructure, diag: &[C64]) -> Result<Self> {
        let entries = CMatrix::from_diagonal(&CVector::from_column_slice(diag));
        Self::new(structure, entries)
    }

    pub fn real_diagonal(structure: CompositeStructure, diag: &[f64]) -> Result<Self> {
        let diag: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diagonal(structure, &diag)
    }

    /// Real matrix given row by row.
    pub fn from_real_rows(structure: CompositeStructure, rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let entries = CMatrix::from_fn(d, rows.first().map_or(0, |r| r.len()), |i, j| {
            C64::new(rows[i][j], 0.0)
        });
        Self::new(structure, entries)
    }

    /// Rank-one projector `|psi><psi|`.
    pub fn projector(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        Self {
            structure: psi.structure().clone(),
            entries: v * v.adjoint(),
            norm_meta: None,
        }
    }

    /// Attaches `(N, p)` metadata after checking the order matches the part
    /// count and the trace equals `N!/(N-p)!` within 1e-9 relative.
    pub fn with_norm_meta(mut self, meta: NormMeta) -> Result<Self> {
        if meta.order != self.structure.parts() {
            return Err(Error::field(
                "norm_meta.p",
                format!(
                    "order {} does not match the {} part(s) of the operator",
                    meta.order,
                    self.structure.parts()
                ),
            ));
        }
        let expected = meta.trace_target();
        let found = self.trace();
        if (found.re - expected).abs() > 1e-9 * expected || found.im.abs() > 1e-9 * expected {
            return Err(Error::TraceMismatch {
                expected,
                found: found.re,
            });
        }
        self.norm_meta = Some(meta);
        Ok(self)
    }

    /// Attaches metadata without the trace check. Used to build deliberately
    /// inconsistent inputs for contract tests.
    pub fn with_norm_meta_unchecked(mut self, meta: NormMeta) -> Self {
        self.norm_meta = Some(meta);
        self
    }

    pub fn without_norm_meta(mut self) -> Self {
        self.norm_meta = None;
        self
    }

    pub fn structure(&self) -> &CompositeStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn norm_meta(&self) -> Option<NormMeta> {
        self.norm_meta
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = self.entries[(i, j)] - self.entries[(j, i)].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.entries[(i, j)] == C64::new(0.0, 0.0)))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            structure: self.structure.clone(),
            entries: self.entries.adjoint(),
            norm_meta: None,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            structure: self.structure.clone(),
            entries: &self.entries * factor,
            norm_meta: None,
        }
    }

    /// `U^dagger A U` for a unitary `U` on the full space. Hermitian inputs
    /// are re-symmetrized so the result stays within the Hermiticity
    /// tolerance.
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, operator is {}x{}",
                unitary.nrows(),
                unitary.ncols(),
                self.dim(),
                self.dim()
            )));
        }
        let mut entries = unitary.adjoint() * &self.entries * unitary;
        if self.is_hermitian() {
            entries = (&entries + entries.adjoint()) * C64::new(0.5, 0.0);
        }
        Ok(Self {
            structure: self.structure.clone(),
            entries,
            norm_meta: None,
        })
    }
}

/// Vector in a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    structure: CompositeStructure,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(structure: CompositeStructure, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != structure.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "structure {:?} needs {} amplitudes, got {}",
                structure.dims(),
                structure.total_dim(),
                amplitudes.len()
            )));
        }
        Ok(Self {
            structure,
            amplitudes,
        })
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(structure: CompositeStructure, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(structure, amplitudes.unscale(norm))
    }

    /// Basis vector given by per-part indices.
    pub fn basis(structure: CompositeStructure, digits: &[usize]) -> Result<Self> {
        if digits.len() != structure.parts() {
            return Err(Error::WrongPartCount {
                expected: structure.parts(),
                found: digits.len(),
            });
        }
        for (k, (&i, &d)) in digits.iter().zip(structure.dims()).enumerate() {
            if i >= d {
                return Err(Error::DimensionMismatch(format!(
                    "index {i} out of range for part {k} of dimension {d}"
                )));
            }
        }
        let mut amplitudes = CVector::zeros(structure.total_dim());
        amplitudes[structure.flatten(digits)] = C64::new(1.0, 0.0);
        Self::new(structure, amplitudes)
    }

    /// `f_1 ⊗ ... ⊗ f_p`.
    pub fn product(factors: &[CVector]) -> Result<Self> {
        let dims = factors.iter().map(|f| f.len()).collect();
        let structure = CompositeStructure::new(dims)?;
        Self::new(structure, kron_vectors(factors))
    }

    pub fn structure(&self) -> &CompositeStructure {
        &self.structure
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORMALIZED_TOL
    }

    pub fn apply(&self, unitary: &CMatrix) -> Result<Self> {
        if unitary.ncols() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch("unitary does not match state".into()));
        }
        Self::new(self.structure.clone(), unitary * &self.amplitudes)
    }
}

/// Kronecker product of vectors with the first factor slowest-varying.
pub fn kron_vectors(factors: &[CVector]) -> CVector {
    let mut out = CVector::from_element(1, C64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Kronecker product of matrices with the first factor slowest-varying.
pub fn kron_matrices<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    let mut out = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Schmidt decomposition `psi = Σ_n c_n u_n ⊗ v_n` of a bipartite state.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    pub coefficients: Vec<f64>,
    pub left_basis: Vec<CVector>,
    pub right_basis: Vec<CVector>,
}

impl SchmidtForm {
    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Rebuilds `Σ_n c_n u_n ⊗ v_n`.
    pub fn reconstruct(&self) -> CVector {
        let d1 = self.left_basis.first().map_or(0, |v| v.len());
        let d2 = self.right_basis.first().map_or(0, |v| v.len());
        let mut out = CVector::zeros(d1 * d2);
        for ((c, u), v) in self
            .coefficients
            .iter()
            .zip(&self.left_basis)
            .zip(&self.right_basis)
        {
            out += u.kronecker(v) * C64::new(*c, 0.0);
        }
        out
    }
}

/// Coefficients below this are treated as zero Schmidt weight.
const SCHMIDT_CUTOFF: f64 = 1e-12;

/// `A ⊗ B` on the concatenated structure. Normalization metadata is dropped.
pub fn tensor_product(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix {
        structure: a.structure.concat(&b.structure),
        entries: a.entries.kronecker(&b.entries),
        norm_meta: None,
    }
}

/// Partial trace over every part except `keep`.
pub fn partial_trace(a: &OperatorMatrix, keep: usize) -> Result<OperatorMatrix> {
    let structure = a.structure();
    if structure.parts() < 2 {
        return Err(Error::WrongPartCount {
            expected: 2,
            found: structure.parts(),
        });
    }
    structure.check_part(keep)?;
    let d = structure.dim(keep);
    let stride = structure.strides()[keep];
    // Flattened index = outer * (d * stride) + digit * stride + inner.
    let outer_count = structure.total_dim() / (d * stride);
    let mut out = CMatrix::zeros(d, d);
    for outer in 0..outer_count {
        for inner in 0..stride {
            let base = outer * d * stride + inner;
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += a.entries[(base + i * stride, base + j * stride)];
                }
            }
        }
    }
    let single = CompositeStructure::new(vec![d])?;
    OperatorMatrix::new(single, out)
}

/// Eigenvalues (nonincreasing) and matching column eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }
}

/// Eigendecomposition of a Hermitian operator.
pub fn hermitian_eigensystem(a: &OperatorMatrix) -> Result<Eigensystem> {
    let defect = a.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(hermitian_eigen_unchecked(a.matrix()))
}

pub(crate) fn hermitian_eigen_unchecked(m: &CMatrix) -> Eigensystem {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Eigensystem { values, vectors }
}

/// Singular triplets `(σ, u, v)` with `M v = σ u`, nonincreasing in `σ`,
/// `min(rows, cols)` of them.
///
/// Built from the eigendecomposition of the smaller Gram matrix; each `σ` is
/// the norm of the mapped eigenvector. nalgebra's complex SVD with vectors
/// can return factors that do not recompose the input.
pub(crate) fn singular_triplets(m: &CMatrix) -> Vec<(f64, CVector, CVector)> {
    let (rows, cols) = m.shape();
    let wide = rows < cols;
    let gram = if wide { m * m.adjoint() } else { m.adjoint() * m };
    let eig = hermitian_eigen_unchecked(&gram);
    let mut out: Vec<(f64, CVector, CVector)> = (0..rows.min(cols))
        .map(|k| {
            let x = eig.vector(k);
            let y = if wide { m.adjoint() * &x } else { m * &x };
            let s = y.norm();
            let y = if s > 0.0 {
                y / C64::new(s, 0.0)
            } else {
                let mut e = CVector::zeros(y.len());
                e[k.min(y.len() - 1)] = C64::new(1.0, 0.0);
                e
            };
            if wide {
                (s, x, y)
            } else {
                (s, y, x)
            }
        })
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Schmidt decomposition of a normalized bipartite state from the singular
/// triplets of its reshaped `d1 x d2` amplitude matrix.
pub fn schmidt_decompose(psi: &StateVector) -> Result<SchmidtForm> {
    let structure = psi.structure();
    if structure.parts() != 2 {
        return Err(Error::WrongPartCount {
            expected: 2,
            found: structure.parts(),
        });
    }
    if !psi.is_normalized() {
        return Err(Error::NotNormalized { norm: psi.norm() });
    }
    let (d1, d2) = (structure.dim(0), structure.dim(1));
    let amps = psi.amplitudes();
    let reshaped = CMatrix::from_fn(d1, d2, |i, j| amps[i * d2 + j]);
    let mut form = SchmidtForm {
        coefficients: Vec::new(),
        left_basis: Vec::new(),
        right_basis: Vec::new(),
    };
    for (c, u, v) in singular_triplets(&reshaped) {
        if c <= SCHMIDT_CUTOFF {
            continue;
        }
        form.coefficients.push(c);
        form.left_basis.push(u);
        form.right_basis.push(v.conjugate());
    }
    Ok(form)
}
