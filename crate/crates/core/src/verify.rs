//! Seeded property suites for every module.
//!
//! Each property runs `cases` independent random instances and reports the
//! worst deviation against a fixed tolerance. Cases are generated from a
//! per-property ChaCha stream so a property's outcome does not depend on
//! which other properties ran. Cases run in parallel and are aggregated in
//! case order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    constraint_singular_values, init_from_amplitudes, integrate, integrate_at, population_rates,
    rhs, DynState, IntegrationOptions, ModeParams,
};
use crate::error::{Error, Result};
use crate::measure::{
    density_matrix_measure, entanglement_measure, measure_bipartite_pure,
    measure_with_counterpart, multimode_measure, product_counterpart, ModePopulations,
};
use crate::norm::{brute_force_disentangled_norm, disentangled_norm, hilbert_norm, NormOptions};
use crate::random;
use crate::tensor::{
    partial_trace, schmidt_decompose, tensor_product, CompositeStructure, OperatorMatrix, C64,
};

/// Deliberate faults for checking that the harness detects failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Canary {
    /// Halves the numerator norm in the semipositivity suite.
    CorruptedNorm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub cases: usize,
    pub seed: u64,
    pub norm: NormOptions,
    pub canary: Option<Canary>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            cases: 20,
            seed: 0,
            norm: NormOptions::default(),
            canary: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PropertyOutcome {
    pub module: String,
    pub property: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed deviation in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Descriptions of the first few failing cases.
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerifyReport {
    pub passed: bool,
    pub seed: u64,
    pub cases: usize,
    pub properties: Vec<PropertyOutcome>,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.properties.iter().filter(|p| !p.passed)
    }
}

/// One case: the deviation and whether it is within tolerance.
struct CaseResult {
    deviation: f64,
    ok: bool,
    note: String,
}

impl CaseResult {
    /// Passes when `deviation <= tol`.
    fn within(deviation: f64, tol: f64, note: impl FnOnce() -> String) -> Self {
        let ok = deviation <= tol;
        Self {
            deviation,
            ok,
            note: if ok { String::new() } else { note() },
        }
    }
}

const MAX_NOTES: usize = 5;

fn run_property<F>(
    module: &str,
    property: &str,
    stream: u64,
    cases: usize,
    seed: u64,
    tolerance: f64,
    case: F,
) -> PropertyOutcome
where
    F: Fn(&mut ChaCha8Rng) -> CaseResult + Sync,
{
    let results: Vec<CaseResult> = (0..cases)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (stream << 32));
            rng.set_stream(k as u64);
            case(&mut rng)
        })
        .collect();
    let failures = results.iter().filter(|r| !r.ok).count();
    let worst = results.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let notes = results
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.ok)
        .take(MAX_NOTES)
        .map(|(k, r)| format!("case {k}: {}", r.note))
        .collect();
    PropertyOutcome {
        module: module.into(),
        property: property.into(),
        cases,
        failures,
        worst,
        tolerance,
        passed: failures == 0,
        notes,
    }
}

fn dims(d: Vec<usize>) -> CompositeStructure {
    CompositeStructure::new(d).expect("positive dims")
}

fn random_bipartite(rng: &mut ChaCha8Rng, max_d: usize) -> CompositeStructure {
    dims(vec![rng.gen_range(2..=max_d), rng.gen_range(2..=max_d)])
}

// ---------------------------------------------------------------- tensor_core

pub fn partial_trace_preserves_trace(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("tensor_core", "partial_trace_preserves_trace", 1, cases, seed, 1e-12, |rng| {
        let p = rng.gen_range(2..=3);
        let s = dims((0..p).map(|_| rng.gen_range(1..=4)).collect());
        let a = random::hermitian(rng, s.clone());
        let keep = rng.gen_range(0..p);
        let r = partial_trace(&a, keep).expect("valid part");
        let scale = a.trace().norm().max(a.matrix().norm());
        let dev = (r.trace() - a.trace()).norm() / scale;
        let dev = dev.max(if r.is_hermitian() { 0.0 } else { f64::INFINITY });
        CaseResult::within(dev, 1e-12, || format!("dims {:?} keep {keep}: rel error {dev:e}", s.dims()))
    })
}

pub fn kron_trace_multiplicative(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("tensor_core", "kron_trace_multiplicative", 2, cases, seed, 1e-12, |rng| {
        let a = OperatorMatrix::single(random::ginibre(rng, 3, 3)).expect("square");
        let b = OperatorMatrix::single(random::ginibre(rng, 4, 4)).expect("square");
        let lhs = tensor_product(&a, &b).trace();
        let rhs = a.trace() * b.trace();
        let dev = (lhs - rhs).norm() / rhs.norm().max(1e-300);
        CaseResult::within(dev, 1e-12, || format!("rel error {dev:e}"))
    })
}

pub fn schmidt_local_unitary_invariance(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("tensor_core", "schmidt_local_unitary_invariance", 3, cases, seed, 1e-9, |rng| {
        let s = random_bipartite(rng, 4);
        let psi = random::pure_state(rng, s.clone());
        let u = random::local_unitary(rng, &s);
        let phi = psi.apply(&u).expect("matching dims");
        let a = schmidt_decompose(&psi).expect("bipartite").coefficients;
        let b = schmidt_decompose(&phi).expect("bipartite").coefficients;
        let dev = if a.len() != b.len() {
            f64::INFINITY
        } else {
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        CaseResult::within(dev, 1e-9, || format!("dims {:?}: {a:?} vs {b:?}", s.dims()))
    })
}

// ------------------------------------------------------------ disentangled_norm

pub fn norm_bounded_by_hilbert_norm(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("disentangled_norm", "bounded_by_hilbert_norm", 10, cases, seed, 1e-9, |rng| {
        let s = random_bipartite(rng, 4);
        let d = s.total_dim();
        let a = OperatorMatrix::new(s, random::ginibre(rng, d, d)).expect("square");
        let dn = disentangled_norm(&a, opts).value;
        let hn = hilbert_norm(&a);
        let dev = (dn - hn).max(0.0);
        CaseResult::within(dev, 1e-9, || format!("||A||_D = {dn} > ||A||_H = {hn}"))
    })
}

pub fn norm_local_unitary_invariance(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("disentangled_norm", "local_unitary_invariance", 11, cases, seed, 1e-6, |rng| {
        let s = random_bipartite(rng, 3);
        let d = s.total_dim();
        let a = OperatorMatrix::new(s.clone(), random::ginibre(rng, d, d)).expect("square");
        let u = random::local_unitary(rng, &s);
        let b = a.conjugate_by(&u).expect("matching dims");
        let x = disentangled_norm(&a, opts).value;
        let y = disentangled_norm(&b, opts).value;
        let dev = (x - y).abs();
        CaseResult::within(dev, 1e-6, || format!("dims {:?}: {x} vs {y}", s.dims()))
    })
}

pub fn norm_scaling(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("disentangled_norm", "absolute_homogeneity", 12, cases, seed, 1e-9, |rng| {
        let s = random_bipartite(rng, 3);
        let d = s.total_dim();
        let a = OperatorMatrix::new(s, random::ginibre(rng, d, d)).expect("square");
        let lam = random::complex_normal(rng);
        let x = disentangled_norm(&a, opts).value;
        let y = disentangled_norm(&a.scale(lam), opts).value;
        let dev = (y - lam.norm() * x).abs() / y.max(1e-300);
        CaseResult::within(dev, 1e-9, || format!("|λ| = {}: {y} vs {}", lam.norm(), lam.norm() * x))
    })
}

pub fn norm_multiplicative_on_products(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("disentangled_norm", "multiplicative_on_positive_products", 13, cases, seed, 1e-6, |rng| {
        let p = rng.gen_range(2..=3);
        let factors: Vec<OperatorMatrix> = (0..p)
            .map(|_| {
                let d = rng.gen_range(2..=3);
                random::density_matrix(rng, dims(vec![d])).scale(C64::new(rng.gen_range(0.5..5.0), 0.0))
            })
            .collect();
        let prod = factors[1..]
            .iter()
            .fold(factors[0].clone(), |acc, f| tensor_product(&acc, f));
        let v = disentangled_norm(&prod, opts).value;
        let expected: f64 = factors.iter().map(hilbert_norm).product();
        let dev = (v - expected).abs();
        CaseResult::within(dev, 1e-6, || format!("{v} vs {expected}"))
    })
}

/// Product-basis-diagonal operators, any number of parts, dimension <= 64.
pub fn norm_matches_diagonal_oracle(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("disentangled_norm", "diagonal_oracle_agreement", 14, cases, seed, 1e-8, |rng| {
        let mut parts = Vec::new();
        let mut total = 1;
        let p = rng.gen_range(2..=6);
        for _ in 0..p {
            let d = rng.gen_range(1..=4);
            if total * d > 64 {
                break;
            }
            total *= d;
            parts.push(d);
        }
        if parts.len() < 2 {
            parts = vec![2, 2];
            total = 4;
        }
        let s = dims(parts);
        let complex = rng.gen_bool(0.5);
        let diag: Vec<C64> = (0..total)
            .map(|_| {
                if complex {
                    random::complex_normal(rng)
                } else {
                    C64::new(rng.gen_range(-1.0..1.0), 0.0)
                }
            })
            .collect();
        let a = OperatorMatrix::diagonal(s.clone(), &diag).expect("square");
        let oracle = brute_force_disentangled_norm(&a, 2).expect("diagonal path");
        let v = disentangled_norm(&a, opts).value;
        let dev = (v - oracle).abs();
        CaseResult::within(dev, 1e-8, || format!("dims {:?}: {v} vs {oracle}", s.dims()))
    })
}

/// Real bipartite operators with total dimension <= 16 against the grid.
pub fn norm_beats_grid_oracle(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("disentangled_norm", "grid_oracle_lower_bound", 15, cases, seed, 1e-3, |rng| {
        const SHAPES: [[usize; 2]; 6] = [[2, 2], [2, 3], [3, 2], [2, 4], [4, 2], [3, 3]];
        let shape = SHAPES[rng.gen_range(0..SHAPES.len())];
        let s = dims(shape.to_vec());
        let a = if rng.gen_bool(0.5) {
            random::real_symmetric(rng, s.clone())
        } else {
            random::real_matrix(rng, s.clone())
        };
        let resolution = if shape.iter().min() == Some(&2) { 120 } else { 24 };
        let oracle = brute_force_disentangled_norm(&a, resolution).expect("small real operator");
        let v = disentangled_norm(&a, opts).value;
        let bound = hilbert_norm(&a);
        let dev = (oracle - v).max(v - bound - 1e-9).max(0.0);
        CaseResult::within(dev, 1e-3, || {
            format!("dims {:?}: optimizer {v}, oracle {oracle}, ||A||_H {bound}", s.dims())
        })
    })
}

// ---------------------------------------------------------- entanglement_measure

pub fn semipositivity(cases: usize, seed: u64, opts: &NormOptions, canary: Option<Canary>) -> PropertyOutcome {
    run_property("entanglement_measure", "semipositivity", 20, cases, seed, 1e-6, |rng| {
        let s = random_bipartite(rng, 4);
        let rho = random::density_matrix(rng, s.clone());
        let mut eps = entanglement_measure(&rho, opts).expect("density matrix").epsilon_bits;
        if canary == Some(Canary::CorruptedNorm) {
            eps -= 1.0;
        }
        CaseResult::within(-eps, 1e-6, || format!("dims {:?}: ε = {eps}", s.dims()))
    })
}

pub fn nonentangling_products(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "nonentangling_products", 21, cases, seed, 1e-6, |rng| {
        let p = rng.gen_range(2..=3);
        let factors: Vec<OperatorMatrix> = (0..p)
            .map(|_| {
                let d = rng.gen_range(2..=3);
                random::density_matrix(rng, dims(vec![d]))
            })
            .collect();
        let prod = factors[1..]
            .iter()
            .fold(factors[0].clone(), |acc, f| tensor_product(&acc, f));
        let eps = entanglement_measure(&prod, opts).expect("unit trace").epsilon_bits;
        CaseResult::within(eps.abs(), 1e-6, || format!("{p} parts: ε = {eps}"))
    })
}

/// `ε(Σ_ν p_ν A_ν⊗) = 0` for product terms with `||A_ν⊗||_D = ||A⊗||_D`
/// and `Σ p_ν = 1`.
///
/// The terms share every factor but the last. The last factors share their
/// top eigenvector and eigenvalue, which makes all the norms equal.
pub fn mixed_product_combinations(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "mixed_product_combinations", 22, cases, seed, 1e-6, |rng| {
        let ds = rng.gen_range(2..=3);
        let shared = random::density_matrix(rng, dims(vec![ds]));
        let d = rng.gen_range(2..=3);
        let top = rng.gen_range(0.5..0.95);
        let u = random::unitary(rng, d);
        let terms = rng.gen_range(2..=3);
        let weights = random::simplex(rng, terms);
        let mut parts = Vec::with_capacity(terms);
        for &wk in &weights {
            // `top ⊕ (1-top) τ` with `τ` a density matrix on the complement.
            let tau = random::density_matrix(rng, dims(vec![d - 1]));
            let mut m = crate::tensor::CMatrix::zeros(d, d);
            m[(0, 0)] = C64::new(top, 0.0);
            m.view_mut((1, 1), (d - 1, d - 1))
                .copy_from(&(tau.matrix() * C64::new(1.0 - top, 0.0)));
            let sigma = OperatorMatrix::new(dims(vec![d]), m)
                .and_then(|s| s.conjugate_by(&u))
                .expect("matching dims");
            parts.push(tensor_product(&shared, &sigma).scale(C64::new(wk, 0.0)));
        }
        let total = parts[1..].iter().fold(parts[0].matrix().clone(), |acc, t| acc + t.matrix());
        let a = OperatorMatrix::new(parts[0].structure().clone(), total).expect("same structure");

        let counterpart = disentangled_norm(&product_counterpart(&a).expect("unit trace").assemble(), opts).value;
        let premise = parts
            .iter()
            .zip(&weights)
            .map(|(t, &wk)| {
                let unit = t.scale(C64::new(1.0 / wk, 0.0));
                (disentangled_norm(&product_counterpart(&unit).expect("unit trace").assemble(), opts).value
                    - counterpart)
                    .abs()
            })
            .fold(0.0, f64::max);
        let eps = entanglement_measure(&a, opts).expect("unit trace").epsilon_bits;
        let dev = if premise > 1e-9 { f64::INFINITY } else { eps.abs() };
        CaseResult::within(dev, 1e-6, || format!("ε = {eps}, premise gap {premise:e}"))
    })
}

fn multimode_unit_trace(w: &[f64], order: usize) -> OperatorMatrix {
    let m = w.len();
    let s = CompositeStructure::uniform(m, order).expect("positive dims");
    let mut diag = vec![0.0; s.total_dim()];
    for (n, &wn) in w.iter().enumerate() {
        diag[s.flatten(&vec![n; order])] = wn;
    }
    OperatorMatrix::real_diagonal(s, &diag).expect("square")
}

pub fn additivity(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "additivity", 23, cases, seed, 1e-6, |rng| {
        let (pa, pb) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let (ma, mb) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let a = multimode_unit_trace(&random::simplex(rng, ma), pa);
        let b = multimode_unit_trace(&random::simplex(rng, mb), pb);
        let eps = |x: &OperatorMatrix| -> f64 {
            if x.structure().parts() == 1 {
                0.0
            } else {
                entanglement_measure(x, opts).expect("unit trace").epsilon_bits
            }
        };
        let (ea, eb) = (eps(&a), eps(&b));
        let eab = eps(&tensor_product(&a, &b));
        let dev = (eab - ea - eb).abs();
        CaseResult::within(dev, 1e-6, || format!("{eab} vs {ea} + {eb}"))
    })
}

pub fn measure_local_unitary_invariance(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "local_unitary_invariance", 24, cases, seed, 1e-5, |rng| {
        let s = random_bipartite(rng, 4);
        let rho = random::density_matrix(rng, s.clone());
        let u = random::local_unitary(rng, &s);
        let rotated = rho.conjugate_by(&u).expect("matching dims");
        let x = entanglement_measure(&rho, opts).expect("unit trace").epsilon_bits;
        let y = entanglement_measure(&rotated, opts).expect("unit trace").epsilon_bits;
        let dev = (x - y).abs();
        CaseResult::within(dev, 1e-5, || format!("dims {:?}: {x} vs {y}", s.dims()))
    })
}

/// `|Δε| <= (p-1)/(w_max ln 2) · δ` to first order, for a unique maximum.
pub fn continuity(cases: usize, seed: u64) -> PropertyOutcome {
    const DELTA: f64 = 1e-6;
    // Ratio of observed change to the first-order bound; O(δ) slack.
    run_property("entanglement_measure", "continuity", 25, cases, seed, 1.0 + 1e-3, |rng| {
        let m = rng.gen_range(2..=6);
        let p = rng.gen_range(2..=5);
        let mut w = random::simplex(rng, m);
        let (imax, _) = w
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        // Enforce a unique maximum with a clear gap.
        w[imax] += 0.1;
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let wp: Vec<f64> = {
            let raw: Vec<f64> = w
                .iter()
                .map(|&x| (x + DELTA * rng.gen_range(-1.0..1.0)).max(0.0))
                .collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let delta = w.iter().zip(&wp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let e0 = multimode_measure(&ModePopulations::new(w.clone(), p).expect("valid"));
        let e1 = multimode_measure(&ModePopulations::new(wp, p).expect("valid"));
        let bound = (p as f64 - 1.0) / (w[imax] * std::f64::consts::LN_2) * delta;
        let ratio = if bound > 0.0 { (e1 - e0).abs() / bound } else { 0.0 };
        CaseResult::within(ratio, 1.0 + 1e-3, || format!("|Δε| = {:e}, bound {bound:e}", (e1 - e0).abs()))
    })
}

pub fn const_independence(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "const_independence", 26, cases, seed, 0.0, |rng| {
        let s = random_bipartite(rng, 3);
        let rho = random::density_matrix(rng, s);
        let f = product_counterpart(&rho).expect("unit trace");
        let base = measure_with_counterpart(&rho, &f, opts).expect("nondegenerate").epsilon_bits;
        let mut dev: f64 = 0.0;
        for lambda in [0.25, 0.5, 2.0, 8.0] {
            let e = measure_with_counterpart(&rho, &f.rescaled(lambda), opts)
                .expect("nondegenerate")
                .epsilon_bits;
            if e.to_bits() != base.to_bits() {
                dev = dev.max((e - base).abs().max(f64::MIN_POSITIVE));
            }
        }
        CaseResult::within(dev, 0.0, || format!("ε changed by {dev:e} under const rescaling"))
    })
}

pub fn pure_state_agreement(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "pure_state_agreement", 27, cases, seed, 1e-4, |rng| {
        let s = random_bipartite(rng, 4);
        let psi = random::pure_state(rng, s.clone());
        let closed = measure_bipartite_pure(&psi).expect("bipartite");
        let generic = entanglement_measure(&OperatorMatrix::projector(&psi), opts)
            .expect("unit trace")
            .epsilon_bits;
        let dev = (closed - generic).abs();
        CaseResult::within(dev, 1e-4, || format!("dims {:?}: {closed} vs {generic}", s.dims()))
    })
}

/// The optimizer on `ρ_p`, the single-particle closed form and
/// `(1-p) log2 max w` agree for the multimode matrix with `N = 100`.
pub fn closed_form_consistency(cases: usize, seed: u64, opts: &NormOptions) -> PropertyOutcome {
    run_property("entanglement_measure", "closed_form_consistency", 28, cases, seed, 1e-5, |rng| {
        let p = rng.gen_range(2..=3);
        let m = rng.gen_range(3..=5);
        let w = ModePopulations::new(random::simplex(rng, m), p).expect("simplex");
        let rho = w.density_matrix(100).expect("valid");
        let generic = entanglement_measure(&rho, opts).expect("nonzero trace").epsilon_bits;
        let closed = density_matrix_measure(&rho, opts).expect("metadata").epsilon_bits;
        let modes = multimode_measure(&w);
        let dev = (generic - modes).abs().max((closed - modes).abs());
        CaseResult::within(dev, 1e-5, || format!("p={p} m={m}: {generic} / {closed} / {modes}"))
    })
}

// ------------------------------------------------------------------ bec_dynamics

pub fn random_mode_params(rng: &mut impl Rng, scale: f64) -> ModeParams {
    let mut u = || scale * rng.gen_range(-1.0..1.0);
    let mut alpha = [[0.0; 3]; 3];
    for (m, row) in alpha.iter_mut().enumerate() {
        for (n, v) in row.iter_mut().enumerate() {
            if m != n {
                *v = u();
            }
        }
    }
    ModeParams {
        b12: u(),
        b23: u(),
        alpha,
        delta21: u(),
        delta32: u(),
        gamma12: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        gamma23: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    }
}

pub fn random_amplitudes(rng: &mut impl Rng) -> [C64; 3] {
    let v = random::unit_vector(rng, 3);
    [v[0], v[1], v[2]]
}

fn random_start(rng: &mut ChaCha8Rng) -> (ModeParams, DynState) {
    let params = random_mode_params(rng, 1.0);
    let state = init_from_amplitudes(random_amplitudes(rng), &params).expect("normalized");
    (params, state)
}

pub fn rhs_population_identity(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("bec_dynamics", "population_rates_real_and_balanced", 30, cases, seed, 1e-15, |rng| {
        let (params, state) = random_start(rng);
        let rates = population_rates(&state, &params);
        let imag = rates.iter().map(|r| r.im.abs()).fold(0.0, f64::max);
        let d = rhs(&state, &params);
        let sum = (d.w[0] + d.w[1] + d.w[2]).abs();
        let dev = imag.max(sum);
        CaseResult::within(dev, 1e-15, || format!("imag {imag:e}, sum {sum:e}"))
    })
}

pub fn constraint_transport(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("bec_dynamics", "constraint_transport", 31, cases, seed, 1e-6, |rng| {
        let (params, state) = random_start(rng);
        match integrate(&state, &params, 200.0, 401, &IntegrationOptions::default()) {
            Ok(traj) => {
                let sum = traj.peak_sum_drift();
                let ladder = traj.peak_ladder_residual();
                // Σw drift has its own tighter gate.
                let dev = if sum > 1e-9 { f64::INFINITY } else { ladder };
                CaseResult::within(dev, 1e-6, || format!("Σw drift {sum:e}, ladder residual {ladder:e}"))
            }
            Err(e) => CaseResult::within(f64::INFINITY, 1e-6, || e.to_string()),
        }
    })
}

pub fn time_reversal(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("bec_dynamics", "time_reversal", 32, cases, seed, 1e-6, |rng| {
        let (params, state) = random_start(rng);
        let opts = IntegrationOptions::default();
        let t_end = 50.0;
        // The return leg starts from an integrated state carrying O(tol) drift.
        let back_opts = IntegrationOptions { initial_tol: 1e-6, ..opts };
        let result = integrate_at(&state, &params, 0.0, &[t_end], &opts).and_then(|fwd| {
            integrate_at(&fwd.states[0], &params, t_end, &[0.0], &back_opts)
        });
        match result {
            Ok(back) => {
                let a = state.to_coords();
                let b = back.states[0].to_coords();
                let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                CaseResult::within(dev, 1e-6, || format!("max component error {dev:e}"))
            }
            Err(e) => CaseResult::within(f64::INFINITY, 1e-6, || e.to_string()),
        }
    })
}

/// Five independent constraints among nine coordinates: the sixth singular
/// value of the 6 x 9 Jacobian vanishes and the fifth does not.
pub fn constraint_rank_five(cases: usize, seed: u64) -> PropertyOutcome {
    run_property("bec_dynamics", "constraint_jacobian_rank", 33, cases, seed, 1e-8, |rng| {
        let (_, state) = random_start(rng);
        let sv = constraint_singular_values(&state);
        let ok = sv[4] > 1e-8 && sv[5] <= 1e-10;
        // Deviation expressed against the retained-singular-value floor.
        let dev = if ok { 0.0 } else { 1.0 };
        CaseResult::within(dev, 1e-8, || format!("singular values {sv:?}"))
    })
}

/// Every suite at `opts.cases` cases.
pub fn run_all(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.cases == 0 {
        return Err(Error::field("verify.cases", "must be at least 1"));
    }
    let (n, seed, no) = (opts.cases, opts.seed, &opts.norm);
    let properties = vec![
        partial_trace_preserves_trace(n, seed),
        kron_trace_multiplicative(n, seed),
        schmidt_local_unitary_invariance(n, seed),
        norm_bounded_by_hilbert_norm(n, seed, no),
        norm_local_unitary_invariance(n, seed, no),
        norm_scaling(n, seed, no),
        norm_multiplicative_on_products(n, seed, no),
        norm_matches_diagonal_oracle(n, seed, no),
        norm_beats_grid_oracle(n.min(10), seed, no),
        semipositivity(n, seed, no, opts.canary),
        nonentangling_products(n, seed, no),
        mixed_product_combinations(n, seed, no),
        additivity(n, seed, no),
        measure_local_unitary_invariance(n, seed, no),
        continuity(n, seed),
        const_independence(n, seed, no),
        pure_state_agreement(n, seed, no),
        closed_form_consistency(n, seed, no),
        rhs_population_identity(n, seed),
        constraint_transport(n.min(10), seed),
        time_reversal(n.min(10), seed),
        constraint_rank_five(n, seed),
    ];
    Ok(VerifyReport {
        passed: properties.iter().all(|p| p.passed),
        seed,
        cases: n,
        properties,
    })
}
