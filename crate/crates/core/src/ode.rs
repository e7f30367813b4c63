//! Dormand-Prince 5(4) integrator with PI step-size control and continuous
//! (dense) output of order 4.
//!
//! Coefficients and the controller follow the classic DOPRI5 layout: the
//! error norm is the RMS of `e_i / (atol + rtol * max(|y_old_i|, |y_new_i|))`
//! and the step factor is `err^(0.2 - 0.75 beta) / err_old^beta` with
//! `beta = 0.04`.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
/// Step may shrink by at most 1/FAC_MIN_INV and grow by at most FAC_MAX.
const FAC_MIN_INV: f64 = 5.0;
const FAC_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step magnitude; `f64::INFINITY` for no limit.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `t0` through the monotone `samples`
/// (which may run backward in time), calling `on_sample` with the dense
/// output at each sample time. `post_step` may modify the state after every
/// accepted step and returns whether it did.
pub fn integrate<F, S, P>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    samples: &[f64],
    opts: &OdeOptions,
    mut on_sample: S,
    mut post_step: P,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> Result<()>,
    P: FnMut(&mut [f64]) -> bool,
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let Some(&t_end) = samples.last() else {
        return Ok(stats);
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    if samples
        .windows(2)
        .any(|w| (w[1] - w[0]) * dir < 0.0)
        || (samples[0] - t0) * dir < 0.0
    {
        return Err(Error::field("samples", "sample times must be monotone from t0"));
    }

    let mut next_sample = 0;
    while next_sample < samples.len() && samples[next_sample] == t0 {
        on_sample(t0, y0)?;
        next_sample += 1;
    }
    if next_sample == samples.len() {
        return Ok(stats);
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut cont: Vec<Vec<f64>> = vec![vec![0.0; n]; 5];
    let mut dense = vec![0.0; n];

    f(t, &y, &mut k[0]);
    stats.evaluations += 1;

    let mut h = initial_step(&mut f, t, &y, &k[0], dir, opts, &mut stats);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { t });
        }
        let remaining = t_end - t;
        let final_step = h.abs() >= remaining.abs();
        if final_step {
            h = remaining;
        }
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t });
        }

        for s in 1..7 {
            let (prev, rest) = k.split_at_mut(s);
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in prev.iter().enumerate() {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            // The last stage is evaluated at the fifth-order solution.
            if s == 6 {
                y_new.copy_from_slice(&y_stage);
            }
            f(t + C[s] * h, &y_stage, &mut rest[0]);
        }
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            let sk = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (h * e / sk).powi(2);
        }
        err = (err / n.max(1) as f64).sqrt();

        let fac11 = err.powf(EXPO1);
        let mut fac = fac11 / err_old.powf(BETA);
        fac = (1.0 / FAC_MAX).max(FAC_MIN_INV.min(fac / SAFETY));
        let mut h_new = h / fac;

        if err <= 1.0 {
            err_old = err.max(1e-4);
            stats.accepted += 1;

            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut dsum = 0.0;
                for j in 0..7 {
                    dsum += D[j] * k[j][i];
                }
                cont[4][i] = h * dsum;
            }

            let reached_end = final_step;
            let t_new = if final_step { t_end } else { t + h };
            while next_sample < samples.len() {
                let ts = samples[next_sample];
                let inside = if reached_end { true } else { (t_new - ts) * dir >= 0.0 };
                if !inside {
                    break;
                }
                if ts == t_new {
                    on_sample(ts, &y_new)?;
                } else {
                    let theta = (ts - t) / h;
                    let theta1 = 1.0 - theta;
                    for i in 0..n {
                        dense[i] = cont[0][i]
                            + theta
                                * (cont[1][i]
                                    + theta1
                                        * (cont[2][i]
                                            + theta * (cont[3][i] + theta1 * cont[4][i])));
                    }
                    on_sample(ts, &dense)?;
                }
                next_sample += 1;
            }

            let modified = post_step(&mut y_new);
            y.copy_from_slice(&y_new);
            t = t_new;
            if reached_end || next_sample == samples.len() {
                return Ok(stats);
            }
            // FSAL: the last stage is the first stage of the next step.
            k.swap(0, 6);
            if modified {
                f(t, &y, &mut k[0]);
                stats.evaluations += 1;
            }

            if last_rejected {
                h_new = if dir > 0.0 { h_new.min(h) } else { h_new.max(h) };
            }
            last_rejected = false;
        } else {
            h_new = h / FAC_MIN_INV.min(fac11 / SAFETY);
            stats.rejected += 1;
            last_rejected = true;
        }
        h = clamp_step(h_new, opts.max_step);
    }
}

fn clamp_step(h: f64, max_step: f64) -> f64 {
    if h.abs() > max_step {
        max_step.copysign(h)
    } else {
        h
    }
}

/// Starting step from the usual two-evaluation estimate.
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sk: Vec<f64> = y.iter().map(|v| opts.abs_tol + opts.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&sk).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
    };
    let dnf = rms(f0);
    let dny = rms(y);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * dny / dnf
    };
    h = h.min(opts.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(yi, fi)| yi + dir * h * fi).collect();
    let mut f1 = vec![0.0; n];
    f(t + dir * h, &y1, &mut f1);
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let der2 = rms(&diff) / h;
    let der12 = dnf.max(der2);
    let h1 = if der12 <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    dir * (100.0 * h).min(h1).min(opts.max_step)
}
