use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::liouvillian::OpenLiouvillian;
use crate::error::{Error, Result};

/// Largest chain handled by the dense matrix exponential in `Auto` mode.
pub const DENSE_EXPM_MAX: usize = 513;

/// Krylov wavefunction at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub phi: Vec<Complex64>,
    pub time: f64,
}

impl ChainState {
    /// `φ_n(0) = δ_{n0}`.
    pub fn initial(size: usize) -> Self {
        let mut phi = vec![Complex64::new(0.0, 0.0); size];
        if size > 0 {
            phi[0] = Complex64::new(1.0, 0.0);
        }
        ChainState { phi, time: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        self.phi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagator {
    /// Dense exponential up to `DENSE_EXPM_MAX`, adaptive integrator above.
    Auto,
    DenseExpm,
    /// Dormand–Prince 5(4) with error control.
    Adaptive,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub method: Propagator,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            method: Propagator::Auto,
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 10_000_000,
        }
    }
}

/// Uniform grid `0, dt, 2dt, … ≤ t_max`.
pub fn uniform_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::config("t_max", "must be finite and non-negative"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dt", "must be finite and positive"));
    }
    let count = (t_max / dt * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..count).map(|k| k as f64 * dt).collect())
}

/// Grid step resolving the fastest hopping of the chain.
pub fn default_dt(b_max: f64) -> f64 {
    0.05 / b_max
}

/// Evolves `phi0` under `∂_t φ = M φ` (`L = iM`) to each requested time.
///
/// Times must be non-decreasing and not earlier than `phi0.time`.
pub fn evolve(l: &OpenLiouvillian, phi0: &ChainState, times: &[f64], opts: &EvolveOptions) -> Result<Vec<ChainState>> {
    if phi0.phi.len() != l.size() {
        return Err(Error::usage(format!(
            "initial state has length {}, chain size is {}",
            phi0.phi.len(),
            l.size()
        )));
    }
    if times.is_empty() {
        return Err(Error::usage("empty time grid"));
    }
    let mut prev = phi0.time;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::usage("times must be finite, non-decreasing and not before the initial state"));
        }
        prev = t;
    }
    let dense = match opts.method {
        Propagator::Auto => l.size() <= DENSE_EXPM_MAX,
        Propagator::DenseExpm => true,
        Propagator::Adaptive => false,
    };
    let out = if dense {
        evolve_dense(l, phi0, times)
    } else {
        evolve_adaptive(l, phi0, times, opts)?
    };
    for s in &out {
        if s.phi.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(format!("chain state at t = {}", s.time)));
        }
    }
    Ok(out)
}

fn split(phi: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(phi.len(), phi.iter().map(|v| v.re)),
        DVector::from_iterator(phi.len(), phi.iter().map(|v| v.im)),
    )
}

fn join(re: &DVector<f64>, im: &DVector<f64>) -> Vec<Complex64> {
    re.iter().zip(im.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

fn evolve_dense(l: &OpenLiouvillian, phi0: &ChainState, times: &[f64]) -> Vec<ChainState> {
    let m = l.real_generator();
    let (mut re, mut im) = split(&phi0.phi);
    let mut t_prev = phi0.time;
    let mut cached: Option<(f64, DMatrix<f64>)> = None;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cached = Some((dt, (&m * dt).exp()));
            }
            let p = &cached.as_ref().unwrap().1;
            re = p * &re;
            im = p * &im;
        }
        out.push(ChainState {
            phi: join(&re, &im),
            time: t,
        });
        t_prev = t;
    }
    out
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn evolve_adaptive(l: &OpenLiouvillian, phi0: &ChainState, times: &[f64], opts: &EvolveOptions) -> Result<Vec<ChainState>> {
    if !(opts.rtol > 0.0 && opts.rtol.is_finite()) {
        return Err(Error::config("rtol", "must be positive"));
    }
    let fail = |reason: String| Error::Integrator {
        rtol: opts.rtol,
        reason,
    };
    let n = l.size();
    let mut y = phi0.phi.clone();
    let mut t = phi0.time;
    let mut h = 0.5 / l.max_rate().max(1e-12);
    let mut steps = 0usize;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(fail(format!("step budget of {} exhausted at t = {t}", opts.max_steps)));
            }
            let h_try = h.min(target - t);
            let last = h_try >= target - t;
            k[0] = l.apply_generator(&y);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..s {
                        if A[s][j] != 0.0 {
                            acc += k[j][i] * (h_try * A[s][j]);
                        }
                    }
                    stage[i] = acc;
                }
                k[s] = l.apply_generator(&stage);
            }
            // Stage 7 is evaluated at the 5th-order solution (FSAL).
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for s in 0..7 {
                    e += k[s][i] * (B5[s] - B4[s]);
                }
                let scale = opts.atol + opts.rtol * y[i].norm().max(stage[i].norm());
                err = err.max(e.norm() * h_try / scale);
            }
            steps += 1;
            if !err.is_finite() {
                return Err(fail(format!("non-finite error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { target } else { t + h_try };
                y.copy_from_slice(&stage);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposed = h_try * factor;
            if !(last && err <= 1.0) || proposed < h {
                h = proposed;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(fail(format!("step size underflow at t = {t}")));
            }
        }
        out.push(ChainState { phi: y.clone(), time: target });
    }
    Ok(out)
}

/// Amplitude `φ_m(t)` per state. The correlator `(1/2^N) Tr[O_m O_0(t)]`
/// is `i^m φ_m(t)` times the normalization of `O_0`.
pub fn autocorrelation(states: &[ChainState], m: usize) -> Result<Vec<Complex64>> {
    states
        .iter()
        .map(|s| {
            s.phi.get(m).copied().ok_or_else(|| {
                Error::usage(format!("Krylov index {m} outside chain of size {}", s.phi.len()))
            })
        })
        .collect()
}

/// Trajectory CSV `t,m,amplitude` (real part of `φ_m`) for each index in `ms`.
pub fn trajectory_csv(states: &[ChainState], ms: &[usize]) -> Result<String> {
    let mut out = String::from("t,m,amplitude\n");
    for &m in ms {
        for (s, a) in states.iter().zip(autocorrelation(states, m)?) {
            let _ = writeln!(out, "{},{},{}", s.time, m, a.re);
        }
    }
    Ok(out)
}
