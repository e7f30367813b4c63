//! Three resonantly coupled condensate modes.
//!
//! The state is three fractional populations `w_n = |c_n|^2` and three
//! complex ladder variables
//!
//! ```text
//! h1 = 2 c1* c2 exp{i(Δ21 t + γ12)}
//! h2 = 2 c2* c3 exp{i(Δ32 t + γ23)}
//! h3 = 2 c1* c3 exp{i(Δ21 + Δ32) t + i(γ12 + γ23)}
//! ```
//!
//! evolved as nine real coordinates. The definitions imply five algebraic
//! relations that the equations of motion transport but do not enforce:
//!
//! ```text
//! w1 + w2 + w3 = 1
//! |h1|^2 = 4 w1 w2,  |h2|^2 = 4 w2 w3,  |h3|^2 = 4 w3 w1
//! h1 h2 = 2 w2 h3
//! ```
//!
//! Their residuals are recorded at every sample as an accuracy gauge.

use std::io::Write;

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::tensor::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Coupling constants in units of a reference frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    /// Field-induced transition amplitude between modes 1 and 2.
    pub b12: f64,
    /// Field-induced transition amplitude between modes 2 and 3.
    pub b23: f64,
    /// Interaction amplitudes `α_mn` (row `m-1`, column `n-1`); the diagonal
    /// is unused.
    #[serde(default)]
    pub alpha: [[f64; 3]; 3],
    #[serde(default)]
    pub delta21: f64,
    #[serde(default)]
    pub delta32: f64,
    #[serde(default)]
    pub gamma12: f64,
    #[serde(default)]
    pub gamma23: f64,
}

impl ModeParams {
    /// Two-mode Rabi drive between modes 1 and 2.
    pub fn rabi(b12: f64) -> Self {
        Self {
            b12,
            b23: 0.0,
            alpha: [[0.0; 3]; 3],
            delta21: 0.0,
            delta32: 0.0,
            gamma12: 0.0,
            gamma23: 0.0,
        }
    }

    fn a(&self, m: usize, n: usize) -> f64 {
        self.alpha[m - 1][n - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("b12", self.b12),
            ("b23", self.b23),
            ("delta21", self.delta21),
            ("delta32", self.delta32),
            ("gamma12", self.gamma12),
            ("gamma23", self.gamma23),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::field(format!("params.{name}"), "must be finite"));
            }
        }
        if self.alpha.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::field("params.alpha", "must be finite"));
        }
        Ok(())
    }

    /// `max(|b|, |α|, |Δ|)`, the fastest rate in the system.
    pub fn rate_scale(&self) -> f64 {
        let mut s = self.b12.abs().max(self.b23.abs());
        s = s.max(self.delta21.abs()).max(self.delta32.abs());
        for m in 0..3 {
            for n in 0..3 {
                if m != n {
                    s = s.max(self.alpha[m][n].abs());
                }
            }
        }
        s
    }
}

/// Populations and ladder variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynState {
    pub w: [f64; 3],
    pub h: [C64; 3],
}

impl DynState {
    pub fn to_coords(&self) -> [f64; 9] {
        [
            self.w[0], self.w[1], self.w[2], self.h[0].re, self.h[0].im, self.h[1].re,
            self.h[1].im, self.h[2].re, self.h[2].im,
        ]
    }

    pub fn from_coords(y: &[f64]) -> Self {
        Self {
            w: [y[0], y[1], y[2]],
            h: [
                C64::new(y[3], y[4]),
                C64::new(y[5], y[6]),
                C64::new(y[7], y[8]),
            ],
        }
    }

    pub fn residuals(&self) -> ConstraintResiduals {
        let [w1, w2, w3] = self.w;
        let [h1, h2, h3] = self.h;
        ConstraintResiduals {
            sum: w1 + w2 + w3 - 1.0,
            h1: h1.norm_sqr() - 4.0 * w1 * w2,
            h2: h2.norm_sqr() - 4.0 * w2 * w3,
            h3: h3.norm_sqr() - 4.0 * w3 * w1,
            ladder: (h1 * h2 - h3 * (2.0 * w2)).norm(),
        }
    }

    pub fn max_population(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_population(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Signed residuals of the population/ladder relations; `ladder` is the
/// modulus `|h1 h2 - 2 w2 h3|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintResiduals {
    pub sum: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub ladder: f64,
}

impl ConstraintResiduals {
    /// Largest magnitude among the four ladder relations.
    pub fn max_ladder(&self) -> f64 {
        self.h1
            .abs()
            .max(self.h2.abs())
            .max(self.h3.abs())
            .max(self.ladder.abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.max_ladder().max(self.sum.abs())
    }
}

/// State at `t = 0` from mode amplitudes `c_n`.
pub fn init_from_amplitudes(c: [C64; 3], params: &ModeParams) -> Result<DynState> {
    let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm: norm.sqrt() });
    }
    let phase = |g: f64| C64::from_polar(1.0, g);
    Ok(DynState {
        w: [c[0].norm_sqr(), c[1].norm_sqr(), c[2].norm_sqr()],
        h: [
            c[0].conj() * c[1] * 2.0 * phase(params.gamma12),
            c[1].conj() * c[2] * 2.0 * phase(params.gamma23),
            c[0].conj() * c[2] * 2.0 * phase(params.gamma12 + params.gamma23),
        ],
    })
}

/// `dw_n/dt` evaluated in complex arithmetic exactly as written,
/// `(i/4) b (h* - h)`; the imaginary parts vanish.
pub fn population_rates(state: &DynState, params: &ModeParams) -> [C64; 3] {
    let [h1, h2, _] = state.h;
    let drive12 = I / 4.0 * params.b12 * (h1.conj() - h1);
    let drive23 = I / 4.0 * params.b23 * (h2.conj() - h2);
    [drive12, drive23 - drive12, -drive23]
}

/// Right-hand side of the population and ladder equations.
pub fn rhs(state: &DynState, params: &ModeParams) -> DynState {
    let p = params;
    let [w1, w2, w3] = state.w;
    let [h1, h2, h3] = state.h;
    let rates = population_rates(state, params);

    // i dh/dt = ...
    let i_dh1 = -h1 * (p.a(1, 2) * w2 - p.a(2, 1) * w1 + (p.a(1, 3) - p.a(2, 3)) * w3 + p.delta21)
        - p.b12 * (w2 - w1)
        + 0.5 * p.b23 * h3;
    let i_dh2 = -h2 * (p.a(2, 3) * w3 - p.a(3, 2) * w2 + (p.a(2, 1) - p.a(3, 1)) * w1 + p.delta32)
        - p.b23 * (w3 - w2)
        - 0.5 * p.b12 * h3;
    let i_dh3 = -h3
        * (p.a(1, 3) * w3 - p.a(3, 1) * w1 + (p.a(1, 2) - p.a(3, 2)) * w2 + p.delta32 + p.delta21)
        - 0.5 * p.b12 * h2
        + 0.5 * p.b23 * h1;

    DynState {
        w: [rates[0].re, rates[1].re, rates[2].re],
        h: [-I * i_dh1, -I * i_dh2, -I * i_dh3],
    }
}

/// Integration settings and run guards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Rescale populations to unit sum after each accepted step.
    pub renormalize: bool,
    /// Abort when any constraint residual exceeds this.
    pub abort_residual: f64,
    /// Tolerance the initial state must satisfy.
    pub initial_tol: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            renormalize: false,
            abort_residual: 1e-2,
            initial_tol: 1e-9,
        }
    }
}

/// Populations below this abort a run; smaller negatives are clamped when
/// the measure is evaluated.
pub const NEGATIVE_POPULATION_LIMIT: f64 = -1e-9;

/// Sampled solution.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DynState>,
    pub residuals: Vec<ConstraintResiduals>,
    /// Filled by [`entanglement_series`]; empty otherwise.
    pub epsilon: Vec<f64>,
    pub p_order: Option<usize>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|Σw - 1|` over samples.
    pub fn peak_sum_drift(&self) -> f64 {
        self.residuals.iter().map(|r| r.sum.abs()).fold(0.0, f64::max)
    }

    /// Largest ladder-relation residual over samples.
    pub fn peak_ladder_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.max_ladder()).fold(0.0, f64::max)
    }

    pub fn peak_epsilon(&self) -> Option<f64> {
        self.epsilon.iter().copied().reduce(f64::max)
    }
}

/// `count` evenly spaced times from 0 to `t_end` inclusive.
pub fn sample_times(t_end: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::field("sample_count", "need at least 2 samples"));
    }
    if !t_end.is_finite() || t_end == 0.0 {
        return Err(Error::field("t_end", "must be finite and nonzero"));
    }
    let n = (count - 1) as f64;
    Ok((0..count)
        .map(|k| if k == count - 1 { t_end } else { t_end * k as f64 / n })
        .collect())
}

/// Integrates from `t = 0` with samples at `0, t_end/(n-1), ..., t_end`.
pub fn integrate(
    state0: &DynState,
    params: &ModeParams,
    t_end: f64,
    sample_count: usize,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    let times = sample_times(t_end, sample_count)?;
    integrate_at(state0, params, 0.0, &times, opts)
}

/// Integrates from `t0` and records the state at each of `times`.
pub fn integrate_at(
    state0: &DynState,
    params: &ModeParams,
    t0: f64,
    times: &[f64],
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    params.validate()?;
    let initial = state0.residuals().max_abs();
    if !(initial <= opts.initial_tol) {
        return Err(Error::InitialConstraint { residual: initial });
    }
    if times.windows(2).any(|w| w[1] == w[0]) {
        return Err(Error::field("samples", "sample times must be strictly monotone"));
    }

    let mut traj = Trajectory::default();
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let d = rhs(&DynState::from_coords(y), params);
        dy.copy_from_slice(&d.to_coords());
    };
    let on_sample = |t: f64, y: &[f64]| -> Result<()> {
        let s = DynState::from_coords(y);
        let res = s.residuals();
        if !(res.max_abs() <= opts.abort_residual) {
            return Err(Error::ConstraintBlowUp {
                t,
                residual: res.max_abs(),
            });
        }
        let low = s.min_population();
        if low < NEGATIVE_POPULATION_LIMIT {
            return Err(Error::NegativePopulation { t, value: low });
        }
        traj.times.push(t);
        traj.states.push(s);
        traj.residuals.push(res);
        Ok(())
    };
    let renormalize = opts.renormalize;
    let post_step = |y: &mut [f64]| {
        if !renormalize {
            return false;
        }
        let s = y[0] + y[1] + y[2];
        for v in &mut y[..3] {
            *v /= s;
        }
        true
    };
    let ode_opts = OdeOptions {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        max_step: opts.max_step,
        ..OdeOptions::default()
    };
    let stats = ode::integrate(f, t0, &state0.to_coords(), times, &ode_opts, on_sample, post_step)?;
    traj.stats = stats;
    Ok(traj)
}

/// `(1-p) log2 max_n w_n` with the populations clamped to `[0, 1]`.
pub fn epsilon_from_populations(w: &[f64], p_order: usize) -> f64 {
    let max = w.iter().map(|x| x.clamp(0.0, 1.0)).fold(0.0, f64::max);
    (1.0 - p_order as f64) * max.log2() + 0.0
}

/// Fills `epsilon` with the multimode measure of each sample.
pub fn entanglement_series(mut traj: Trajectory, p_order: usize) -> Trajectory {
    traj.epsilon = traj
        .states
        .iter()
        .map(|s| epsilon_from_populations(&s.w, p_order))
        .collect();
    traj.p_order = Some(p_order);
    traj
}

/// Jacobian of the six real constraint functions (sum, three moduli, real
/// and imaginary parts of `h1 h2 - 2 w2 h3`) with respect to the nine real
/// coordinates.
pub fn constraint_jacobian(state: &DynState) -> SMatrix<f64, 6, 9> {
    let [w1, w2, w3] = state.w;
    let [h1, h2, h3] = state.h;
    let (x1, y1, x2, y2, x3, y3) = (h1.re, h1.im, h2.re, h2.im, h3.re, h3.im);
    let mut j = SMatrix::<f64, 6, 9>::zeros();
    // w1 + w2 + w3 - 1
    j[(0, 0)] = 1.0;
    j[(0, 1)] = 1.0;
    j[(0, 2)] = 1.0;
    // |h1|^2 - 4 w1 w2
    j[(1, 0)] = -4.0 * w2;
    j[(1, 1)] = -4.0 * w1;
    j[(1, 3)] = 2.0 * x1;
    j[(1, 4)] = 2.0 * y1;
    // |h2|^2 - 4 w2 w3
    j[(2, 1)] = -4.0 * w3;
    j[(2, 2)] = -4.0 * w2;
    j[(2, 5)] = 2.0 * x2;
    j[(2, 6)] = 2.0 * y2;
    // |h3|^2 - 4 w3 w1
    j[(3, 0)] = -4.0 * w3;
    j[(3, 2)] = -4.0 * w1;
    j[(3, 7)] = 2.0 * x3;
    j[(3, 8)] = 2.0 * y3;
    // Re(h1 h2 - 2 w2 h3) = x1 x2 - y1 y2 - 2 w2 x3
    j[(4, 1)] = -2.0 * x3;
    j[(4, 3)] = x2;
    j[(4, 4)] = -y2;
    j[(4, 5)] = x1;
    j[(4, 6)] = -y1;
    j[(4, 7)] = -2.0 * w2;
    // Im(h1 h2 - 2 w2 h3) = x1 y2 + y1 x2 - 2 w2 y3
    j[(5, 1)] = -2.0 * y3;
    j[(5, 3)] = y2;
    j[(5, 4)] = x2;
    j[(5, 5)] = y1;
    j[(5, 6)] = x1;
    j[(5, 8)] = -2.0 * w2;
    j
}

/// Singular values (nonincreasing) of the constraint Jacobian.
pub fn constraint_singular_values(state: &DynState) -> Vec<f64> {
    let j = DMatrix::from_column_slice(6, 9, constraint_jacobian(state).as_slice());
    let mut sv: Vec<f64> = j.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values of the constraint Jacobian above `tol`.
pub fn constraint_rank(state: &DynState, tol: f64) -> usize {
    constraint_singular_values(state)
        .into_iter()
        .filter(|&s| s > tol)
        .count()
}

pub const CSV_HEADER: &str = "t,w1,w2,w3,re_h1,im_h1,re_h2,im_h2,re_h3,im_h3,res_sum,res_h1,res_h2,res_h3,res_ladder,epsilon";

/// Writes the trajectory as CSV with 17 significant digits per float. The
/// `epsilon` column is empty when the series has not been filled.
pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for k in 0..traj.len() {
        let s = &traj.states[k];
        let r = &traj.residuals[k];
        let mut fields: Vec<String> = Vec::with_capacity(16);
        fields.push(fmt17(traj.times[k]));
        fields.extend(s.to_coords().iter().map(|&v| fmt17(v)));
        for v in [r.sum, r.h1, r.h2, r.h3, r.ladder] {
            fields.push(fmt17(v));
        }
        fields.push(traj.epsilon.get(k).map_or_else(String::new, |&e| fmt17(e)));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_params(rng: &mut impl Rng) -> ModeParams {
        let mut u = || rng.gen_range(-1.0..1.0);
        let mut alpha = [[0.0; 3]; 3];
        for row in &mut alpha {
            for v in row.iter_mut() {
                *v = u();
            }
        }
        ModeParams {
            b12: u(),
            b23: u(),
            alpha,
            delta21: u(),
            delta32: u(),
            gamma12: u() * 3.0,
            gamma23: u() * 3.0,
        }
    }

    fn random_state(rng: &mut impl Rng, params: &ModeParams) -> DynState {
        let amps: Vec<C64> = (0..3)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        init_from_amplitudes([amps[0] / n, amps[1] / n, amps[2] / n], params).unwrap()
    }

    #[test]
    fn init_examples() {
        let p = ModeParams::rabi(1.0);
        let s = init_from_amplitudes([c(1.0), c(0.0), c(0.0)], &p).unwrap();
        assert_eq!(s.w, [1.0, 0.0, 0.0]);
        assert!(s.h.iter().all(|h| h.norm() == 0.0));

        let r = 1.0 / 2f64.sqrt();
        let s = init_from_amplitudes([c(r), c(r), c(0.0)], &p).unwrap();
        assert!((s.w[0] - 0.5).abs() < 1e-15 && (s.w[1] - 0.5).abs() < 1e-15 && s.w[2] == 0.0);
        assert!((s.h[0] - c(1.0)).norm() < 1e-15);
        assert!(s.h[1].norm() == 0.0 && s.h[2].norm() == 0.0);

        let t = 1.0 / 3f64.sqrt();
        let s = init_from_amplitudes([c(t), c(t), c(t)], &p).unwrap();
        for k in 0..3 {
            assert!((s.w[k] - 1.0 / 3.0).abs() < 1e-15);
            assert!((s.h[k] - c(2.0 / 3.0)).norm() < 1e-15);
        }
        assert!(s.residuals().max_abs() < 1e-15);

        assert!(matches!(
            init_from_amplitudes([c(1.0), c(1.0), c(0.0)], &p),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn init_satisfies_constraints_with_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let p = random_params(&mut rng);
            let s = random_state(&mut rng, &p);
            assert!(s.residuals().max_abs() <= 1e-12);
        }
    }

    #[test]
    fn rhs_examples() {
        let mut p = ModeParams::rabi(0.0);
        p.alpha = [[0.0, 0.3, -0.2], [0.5, 0.0, 0.1], [0.7, -0.4, 0.0]];
        p.delta21 = 0.4;
        let t = 1.0 / 3f64.sqrt();
        let s = init_from_amplitudes([c(t), C64::new(0.0, t), c(-t)], &p).unwrap();
        assert_eq!(rhs(&s, &p).w, [0.0, 0.0, 0.0]);

        let p = ModeParams::rabi(1.0);
        let s = DynState { w: [0.5, 0.5, 0.0], h: [C64::new(0.0, 1.0), c(0.0), c(0.0)] };
        let d = rhs(&s, &p);
        assert!((d.w[0] - 0.5).abs() < 1e-15);
        assert!((d.w[1] + 0.5).abs() < 1e-15);
        assert!(d.w[2].abs() < 1e-15);
        assert!(d.h[0].norm() < 1e-15);

        let s = DynState { w: [0.5, 0.5, 0.0], h: [c(1.0), c(0.0), c(0.0)] };
        let d = rhs(&s, &p);
        assert_eq!(d.w, [0.0, 0.0, 0.0]);
        assert!(d.h[0].norm() < 1e-15);
    }

    #[test]
    fn population_rates_are_real_and_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200 {
            let p = random_params(&mut rng);
            let s = random_state(&mut rng, &p);
            let r = population_rates(&s, &p);
            assert!(r.iter().all(|x| x.im.abs() <= 1e-15));
            let d = rhs(&s, &p);
            assert!((d.w[0] + d.w[1] + d.w[2]).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_drive_keeps_populations() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut p = random_params(&mut rng);
        p.b12 = 0.0;
        p.b23 = 0.0;
        let s = random_state(&mut rng, &p);
        let traj = integrate(&s, &p, 20.0, 11, &IntegrationOptions::default()).unwrap();
        for st in &traj.states {
            for k in 0..3 {
                assert!((st.w[k] - s.w[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rabi_closed_form() {
        let b = 0.7;
        let p = ModeParams::rabi(b);
        let s = init_from_amplitudes([c(1.0), c(0.0), c(0.0)], &p).unwrap();
        let traj = integrate(&s, &p, 30.0, 301, &IntegrationOptions::default()).unwrap();
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let expected = (b * t / 2.0).sin().powi(2);
            assert!((st.w[1] - expected).abs() < 1e-8);
            assert_eq!(st.w[2], 0.0);
        }
    }

    #[test]
    fn third_mode_stays_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut p = random_params(&mut rng);
        p.b23 = 0.0;
        let r = 1.0 / 2f64.sqrt();
        let s = init_from_amplitudes([c(r), C64::new(0.0, r), c(0.0)], &p).unwrap();
        let traj = integrate(&s, &p, 50.0, 51, &IntegrationOptions::default()).unwrap();
        assert!(traj.states.iter().all(|st| st.w[2] == 0.0));
    }

    #[test]
    fn rejects_inconsistent_start() {
        let p = ModeParams::rabi(1.0);
        let s = DynState { w: [0.5, 0.5, 0.0], h: [c(0.3), c(0.0), c(0.0)] };
        assert!(matches!(
            integrate(&s, &p, 1.0, 2, &IntegrationOptions::default()),
            Err(Error::InitialConstraint { .. })
        ));
    }

    #[test]
    fn constraint_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let p = random_params(&mut rng);
        let s = random_state(&mut rng, &p);
        let funcs = |y: &[f64]| -> [f64; 6] {
            let st = DynState::from_coords(y);
            let r = st.residuals();
            let z = st.h[0] * st.h[1] - st.h[2] * (2.0 * st.w[1]);
            [r.sum, r.h1, r.h2, r.h3, z.re, z.im]
        };
        let j = constraint_jacobian(&s);
        let y0 = s.to_coords();
        let step = 1e-6;
        for col in 0..9 {
            let mut yp = y0;
            let mut ym = y0;
            yp[col] += step;
            ym[col] -= step;
            let (fp, fm) = (funcs(&yp), funcs(&ym));
            for row in 0..6 {
                let fd = (fp[row] - fm[row]) / (2.0 * step);
                assert!((fd - j[(row, col)]).abs() < 1e-8, "({row},{col})");
            }
        }
    }

    #[test]
    fn csv_layout() {
        let p = ModeParams::rabi(1.0);
        let s = init_from_amplitudes([c(1.0), c(0.0), c(0.0)], &p).unwrap();
        let traj = entanglement_series(integrate(&s, &p, 1.0, 3, &IntegrationOptions::default()).unwrap(), 2);
        let mut buf = Vec::new();
        write_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 16));
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    }

    #[test]
    fn sample_times_contract() {
        assert!(sample_times(1.0, 1).is_err());
        let t = sample_times(2.0, 5).unwrap();
        assert_eq!(t, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn epsilon_series_examples() {
        assert_eq!(epsilon_from_populations(&[1.0, 0.0, 0.0], 3), 0.0);
        let third = 1.0 / 3.0;
        let e = epsilon_from_populations(&[third, third, third], 2);
        assert!((e - 3f64.log2()).abs() < 1e-15);
        assert!((epsilon_from_populations(&[0.5, 0.5, 0.0], 2) - 1.0).abs() < 1e-15);
        assert_eq!(epsilon_from_populations(&[-1e-12, 1.0 + 1e-12, 0.0], 2), 0.0);
    }
}
