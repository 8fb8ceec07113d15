use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the Krylov chain is closed at the truncation site `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Hard wall, `φ_{l+1} = 0`.
    Dirichlet,
    /// Linear extrapolation `φ_{l+1} ≈ 2φ_l - φ_{l-1}`.
    Open,
    /// Hard wall plus decay `-γ(2n+1)` on the diagonal of the real generator.
    DiagonalDissipative { gamma: f64 },
}

impl BoundaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Open => "open",
            BoundaryKind::DiagonalDissipative { .. } => "diagonal_dissipative",
        }
    }

    /// Coefficients `b_1..` needed to truncate at site `l`.
    pub fn required_coefficients(&self, l: usize) -> usize {
        match self {
            BoundaryKind::Open => l + 1,
            _ => l,
        }
    }
}

/// Truncated-chain Liouvillian `L = i·M` on sites `0..=l`, with `M` real
/// tridiagonal. The wavefunction evolves as `∂_t φ = M φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenLiouvillian {
    l: usize,
    b: Vec<f64>,
    kind: BoundaryKind,
    /// `M[n, n-1]`, length `l`.
    sub: Vec<f64>,
    /// `M[n, n]`, length `l + 1`.
    diag: Vec<f64>,
    /// `M[n-1, n]`, length `l`.
    sup: Vec<f64>,
}

/// Builds the truncated Liouvillian from `b_1, b_2, …` (extra coefficients
/// beyond what `kind` needs are ignored).
pub fn build_liouvillian(b: &[f64], l: usize, kind: BoundaryKind) -> Result<OpenLiouvillian> {
    let required = kind.required_coefficients(l);
    if b.len() < required {
        return Err(Error::InsufficientCoefficients {
            kind: kind.name(),
            l,
            required,
            got: b.len(),
        });
    }
    if kind == BoundaryKind::Open && l == 0 {
        return Err(Error::usage("the open boundary needs l >= 1"));
    }
    if let Some(bad) = b[..required].iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("Lanczos coefficient {bad}")));
    }
    let mut sub: Vec<f64> = b[..l].to_vec();
    let sup: Vec<f64> = b[..l].iter().map(|v| -v).collect();
    let mut diag = vec![0.0; l + 1];
    match kind {
        BoundaryKind::Dirichlet => {}
        BoundaryKind::Open => {
            sub[l - 1] = b[l - 1] + b[l];
            diag[l] = -2.0 * b[l];
        }
        BoundaryKind::DiagonalDissipative { gamma } => {
            if !gamma.is_finite() {
                return Err(Error::config("gamma", "must be finite"));
            }
            for (n, d) in diag.iter_mut().enumerate() {
                *d = -gamma * (2 * n + 1) as f64;
            }
        }
    }
    Ok(OpenLiouvillian {
        l,
        b: b[..required].to_vec(),
        kind,
        sub,
        diag,
        sup,
    })
}

impl OpenLiouvillian {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn size(&self) -> usize {
        self.l + 1
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    /// `(sub, diag, sup)` of the real generator `M`.
    pub fn bands(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.sub, &self.diag, &self.sup)
    }

    /// The real generator `M` with `L = i·M`.
    pub fn real_generator(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.diag[k];
        }
        for k in 1..n {
            m[(k, k - 1)] = self.sub[k - 1];
            m[(k - 1, k)] = self.sup[k - 1];
        }
        m
    }

    /// The complex matrix `L = i·M`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.real_generator().map(|v| Complex64::new(0.0, v))
    }

    /// `M·v`.
    pub fn apply_generator(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.size();
        assert_eq!(v.len(), n, "vector length must equal the chain size");
        (0..n)
            .map(|k| {
                let mut acc = v[k] * self.diag[k];
                if k > 0 {
                    acc += v[k - 1] * self.sub[k - 1];
                }
                if k + 1 < n {
                    acc += v[k + 1] * self.sup[k];
                }
                acc
            })
            .collect()
    }

    /// `L·v = i·M·v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.apply_generator(v)
            .into_iter()
            .map(|x| x * Complex64::i())
            .collect()
    }

    /// Frobenius norm of `L`.
    pub fn norm_fro(&self) -> f64 {
        let s: f64 = self.sub.iter().chain(&self.diag).chain(&self.sup).map(|v| v * v).sum();
        s.sqrt()
    }

    /// Largest `|M_ij|`, the fastest local rate of the chain.
    pub fn max_rate(&self) -> f64 {
        self.sub
            .iter()
            .chain(&self.diag)
            .chain(&self.sup)
            .fold(0.0, |a, v| a.max(v.abs()))
    }
}
