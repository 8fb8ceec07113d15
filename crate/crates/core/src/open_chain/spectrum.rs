use std::fmt::Write as _;

use faer::c64;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::liouvillian::OpenLiouvillian;
use crate::error::{Error, Result};

/// Largest chain size handed to the dense eigensolver.
pub const DENSE_CEILING: usize = 4096;

/// Residual gate relative to `‖L‖_F`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    /// `|Im ω| ≤ eps`: oscillates (or is conserved) forever.
    Perpetual,
    /// `Im ω < -eps`: decays.
    Transient,
    /// `Im ω > eps`: grows. Not expected for Krylov chains; treated as a
    /// numerical artifact.
    Growing,
}

impl ModeClass {
    pub fn name(self) -> &'static str {
        match self {
            ModeClass::Perpetual => "perpetual",
            ModeClass::Transient => "transient",
            ModeClass::Growing => "growing",
        }
    }
}

pub fn classify(omega: Complex64, eps_perpetual: f64) -> ModeClass {
    if omega.im.abs() <= eps_perpetual {
        ModeClass::Perpetual
    } else if omega.im < 0.0 {
        ModeClass::Transient
    } else {
        ModeClass::Growing
    }
}

/// Eigenpair `L φ = ω φ` of a truncated Liouvillian.
#[derive(Clone, Debug)]
pub struct SpectralMode {
    pub omega: Complex64,
    /// Unit Euclidean norm, phase fixed so the first sizable component is
    /// real and positive.
    pub phi: Vec<Complex64>,
    pub class: ModeClass,
    /// `Σ n |φ_n|²`.
    pub mean_position: f64,
    /// `‖Lφ - ωφ‖₂`.
    pub residual: f64,
}

impl SpectralMode {
    /// `m ↦ Σ_{n≤m} |φ_n|²`.
    pub fn cumulative_mass(&self) -> Vec<f64> {
        self.phi
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v.norm_sqr();
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    pub ceiling: usize,
    /// Defaults to `1e-2 · median |Im ω|`, floored at `1e-9 · ‖L‖_F`.
    pub eps_perpetual: Option<f64>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            ceiling: DENSE_CEILING,
            eps_perpetual: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Sorted by `Im ω` descending, then `Re ω` ascending.
    pub modes: Vec<SpectralMode>,
    pub eps_perpetual: f64,
    /// `‖L‖_F`.
    pub norm_fro: f64,
}

impl Spectrum {
    pub fn omegas(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.modes.iter().fold(0.0, |a, m| a.max(m.residual))
    }

    /// True when every residual is below `RESIDUAL_TOL · ‖L‖_F`.
    pub fn residuals_ok(&self) -> bool {
        self.max_residual() <= RESIDUAL_TOL * self.norm_fro.max(f64::MIN_POSITIVE)
    }

    pub fn count(&self, class: ModeClass) -> usize {
        self.modes.iter().filter(|m| m.class == class).count()
    }

    /// Median of `Im ω` over modes of the given class.
    pub fn median_im(&self, class: ModeClass) -> Option<f64> {
        median(self.modes.iter().filter(|m| m.class == class).map(|m| m.omega.im).collect())
    }

    /// Spectrum CSV: `re_omega,im_omega,class,mean_position,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_omega,im_omega,class,mean_position,residual\n");
        for m in &self.modes {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                m.omega.re,
                m.omega.im,
                m.class.name(),
                m.mean_position,
                m.residual
            );
        }
        out
    }

    /// Eigenvector matrix CSV: one row per mode, `re_phi_n,im_phi_n` pairs.
    pub fn eigenvectors_csv(&self) -> String {
        let mut out = String::new();
        for m in &self.modes {
            let row: Vec<String> = m.phi.iter().map(|v| format!("{},{}", v.re, v.im)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

pub fn default_eps_perpetual(omegas: &[Complex64], norm_fro: f64) -> f64 {
    let med = median(omegas.iter().map(|w| w.im.abs()).collect()).unwrap_or(0.0);
    (1e-2 * med).max(1e-9 * norm_fro)
}

/// Diagonal similarity `d` making the off-diagonal pairs of `M` equal in
/// magnitude: `d_n / d_{n-1} = sqrt(|M[n,n-1] / M[n-1,n]|)`.
fn balancing(sub: &[f64], sup: &[f64]) -> Vec<f64> {
    let mut d = Vec::with_capacity(sub.len() + 1);
    d.push(1.0f64);
    for (lo, hi) in sub.iter().zip(sup) {
        let ratio = if *lo != 0.0 && *hi != 0.0 {
            (lo / hi).abs().sqrt()
        } else {
            1.0
        };
        let prev = *d.last().unwrap();
        d.push(prev * ratio);
    }
    d
}

fn condition_estimate(l: &OpenLiouvillian) -> f64 {
    let m = l.real_generator();
    let norm1 = |a: &nalgebra::DMatrix<f64>| {
        a.column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) => norm1(&m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Full eigendecomposition of `L` with balancing and per-mode residuals.
pub fn spectrum(l: &OpenLiouvillian, opts: &SpectrumOptions) -> Result<Spectrum> {
    let size = l.size();
    if size > opts.ceiling {
        return Err(Error::SpectrumTooLarge {
            size,
            ceiling: opts.ceiling,
        });
    }
    let (sub, diag, sup) = l.bands();
    let d = balancing(sub, sup);
    let mut bal = Mat::<c64>::zeros(size, size);
    for k in 0..size {
        bal[(k, k)] = c64::new(diag[k], 0.0);
    }
    for k in 1..size {
        bal[(k, k - 1)] = c64::new(sub[k - 1] * d[k - 1] / d[k], 0.0);
        bal[(k - 1, k)] = c64::new(sup[k - 1] * d[k] / d[k - 1], 0.0);
    }
    let evd = bal.eigen().map_err(|e| Error::Eigensolver {
        reason: format!("{e:?}"),
        condition: condition_estimate(l),
    })?;
    let s = evd.S();
    let u = evd.U();
    let norm_fro = l.norm_fro();

    let mut modes = Vec::with_capacity(size);
    for j in 0..size {
        let mu = Complex64::new(s[j].re, s[j].im);
        let omega = Complex64::i() * mu;
        let mut phi: Vec<Complex64> = (0..size)
            .map(|k| Complex64::new(u[(k, j)].re, u[(k, j)].im) * d[k])
            .collect();
        let norm = phi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) || !omega.re.is_finite() || !omega.im.is_finite() {
            return Err(Error::Eigensolver {
                reason: format!("mode {j} is not finite after back-transformation"),
                condition: condition_estimate(l),
            });
        }
        let peak = phi.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let anchor = phi
            .iter()
            .find(|v| v.norm() > 1e-8 * peak)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let rot = anchor.conj() / anchor.norm() / norm;
        for v in phi.iter_mut() {
            *v *= rot;
        }
        let lphi = l.apply(&phi);
        let residual = lphi
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a - omega * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let mean_position = phi.iter().enumerate().map(|(n, v)| n as f64 * v.norm_sqr()).sum();
        modes.push(SpectralMode {
            omega,
            phi,
            class: ModeClass::Perpetual,
            mean_position,
            residual,
        });
    }

    let omegas: Vec<Complex64> = modes.iter().map(|m| m.omega).collect();
    let eps = opts
        .eps_perpetual
        .unwrap_or_else(|| default_eps_perpetual(&omegas, norm_fro));
    for m in modes.iter_mut() {
        m.class = classify(m.omega, eps);
    }
    // Imaginary parts closer than rounding noise sort as equal.
    let quantum = 1e-9 * norm_fro.max(1.0);
    modes.sort_by(|a, b| {
        let ka = (a.omega.im / quantum).round();
        let kb = (b.omega.im / quantum).round();
        kb.total_cmp(&ka).then(a.omega.re.total_cmp(&b.omega.re))
    });
    Ok(Spectrum {
        modes,
        eps_perpetual: eps,
        norm_fro,
    })
}
