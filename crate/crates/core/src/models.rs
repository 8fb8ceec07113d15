//! Hamiltonians and seed operators on a periodic ring.
//!
//! Spin operators are full Pauli matrices (`s^a = σ^a`); ladder operators
//! are `s^± = (X ± iY)/2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Layout, OperatorMap, Pauli, PauliString};

/// Chaotic chain couplings: `Σ X_i X_{i+1} + Z_COEFF Z_i + X_COEFF X_i`.
pub const CHAOTIC_ZZ: f64 = 1.0;
pub const CHAOTIC_Z: f64 = -1.05;
pub const CHAOTIC_X: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Xxz { delta: f64, field: f64 },
    ChaoticIsing,
}

impl ModelSpec {
    /// Anisotropy -1/2 and field 2, where `Q_3` is the leading term of a
    /// dynamical symmetry at frequency 12.
    pub fn xxz_default() -> Self {
        ModelSpec::Xxz {
            delta: -0.5,
            field: 2.0,
        }
    }

    pub fn build(&self, n_sites: usize, layout: Layout) -> Result<OperatorMap> {
        match *self {
            ModelSpec::Xxz { delta, field } => build_xxz(delta, field, n_sites, layout),
            ModelSpec::ChaoticIsing => build_chaotic(n_sites, layout),
        }
    }

    /// Number of consecutive sites touched by the widest Hamiltonian term.
    pub fn interaction_range(&self) -> usize {
        2
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Xxz { delta, field } => format!("xxz(delta={delta},h={field})"),
            ModelSpec::ChaoticIsing => "chaotic_ising".to_string(),
        }
    }
}

fn local(n_sites: usize, sites: &[(usize, Pauli)]) -> Result<PauliString> {
    PauliString::from_sites(n_sites, sites)
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(name, "must be finite"))
    }
}

/// `Σ_i X_i X_{i+1} + Y_i Y_{i+1} + Δ Z_i Z_{i+1} + h Z_i` on a ring.
pub fn build_xxz(delta: f64, field: f64, n_sites: usize, layout: Layout) -> Result<OperatorMap> {
    check_finite("delta", delta)?;
    check_finite("field", field)?;
    if n_sites < 3 {
        return Err(Error::usage("the XXZ ring needs at least 3 sites"));
    }
    use Pauli::*;
    let terms = [
        (1.0, local(n_sites, &[(0, X), (1, X)])?),
        (1.0, local(n_sites, &[(0, Y), (1, Y)])?),
        (delta, local(n_sites, &[(0, Z), (1, Z)])?),
        (field, local(n_sites, &[(0, Z)])?),
    ];
    OperatorMap::translation_sum(n_sites, layout, &terms)
}

/// `Σ_i X_i X_{i+1} - 1.05 Z_i + 0.5 X_i` on a ring.
pub fn build_chaotic(n_sites: usize, layout: Layout) -> Result<OperatorMap> {
    if n_sites < 2 {
        return Err(Error::usage("the chaotic ring needs at least 2 sites"));
    }
    use Pauli::*;
    let terms = [
        (CHAOTIC_ZZ, local(n_sites, &[(0, X), (1, X)])?),
        (CHAOTIC_Z, local(n_sites, &[(0, Z)])?),
        (CHAOTIC_X, local(n_sites, &[(0, X)])?),
    ];
    OperatorMap::translation_sum(n_sites, layout, &terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedName {
    Q1,
    Q3,
    /// Pattern extension of `Q_3` to five sites; not pinned down by the model literature.
    Q5,
    #[serde(rename = "chaotic_O0")]
    ChaoticO0,
}

impl SeedName {
    /// Sites spanned by one local term.
    pub fn span(self) -> usize {
        match self {
            SeedName::Q1 => 1,
            SeedName::Q3 => 3,
            SeedName::Q5 => 5,
            SeedName::ChaoticO0 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeedName::Q1 => "Q1",
            SeedName::Q3 => "Q3",
            SeedName::Q5 => "Q5",
            SeedName::ChaoticO0 => "chaotic_O0",
        }
    }
}

impl fmt::Display for SeedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeedName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Q1" | "q1" => Ok(SeedName::Q1),
            "Q3" | "q3" => Ok(SeedName::Q3),
            "Q5" | "q5" => Ok(SeedName::Q5),
            "chaotic_O0" | "chaotic_o0" | "O0" => Ok(SeedName::ChaoticO0),
            other => Err(Error::usage(format!(
                "unknown seed {other:?} (expected Q1, Q3, Q5 or chaotic_O0)"
            ))),
        }
    }
}

/// Local terms of `s^+_0 … s^+_{k-1} + h.c.` with `s^± = (X ± iY)/2`.
///
/// Expanding `(X + iY)^{⊗k}/2^k` plus its conjugate keeps the strings with
/// an even number of Y factors, each with coefficient `2^{1-k}(-1)^{#Y/2}`.
pub fn ladder_terms(k: usize, n_sites: usize) -> Result<Vec<(f64, PauliString)>> {
    if k == 0 || k > n_sites {
        return Err(Error::usage(format!("ladder seed of {k} sites on {n_sites} sites")));
    }
    let base = 2f64.powi(1 - k as i32);
    let mut out = Vec::new();
    for ymask in 0u32..(1 << k) {
        let ny = ymask.count_ones();
        if ny % 2 == 1 {
            continue;
        }
        let sign = if (ny / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let sites: Vec<(usize, Pauli)> = (0..k)
            .map(|j| (j, if ymask >> j & 1 == 1 { Pauli::Y } else { Pauli::X }))
            .collect();
        out.push((sign * base, local(n_sites, &sites)?));
    }
    Ok(out)
}

/// Unnormalized seed operator.
pub fn seed_operator(name: SeedName, n_sites: usize, layout: Layout) -> Result<OperatorMap> {
    if n_sites < name.span() + 1 {
        return Err(Error::usage(format!(
            "seed {name} needs more than {} sites, got {n_sites}",
            name.span()
        )));
    }
    let terms = match name {
        SeedName::Q1 => ladder_terms(1, n_sites)?,
        SeedName::Q3 => ladder_terms(3, n_sites)?,
        SeedName::Q5 => ladder_terms(5, n_sites)?,
        SeedName::ChaoticO0 => vec![
            (1.05, local(n_sites, &[(0, Pauli::X), (1, Pauli::X)])?),
            (1.0, local(n_sites, &[(0, Pauli::Z)])?),
        ],
    };
    OperatorMap::translation_sum(n_sites, layout, &terms)
}

/// Seed normalized so that `(1/2^N) Tr[O_0²] = 1` (per site when reduced).
pub fn build_seed(name: SeedName, n_sites: usize, layout: Layout) -> Result<OperatorMap> {
    Ok(seed_operator(name, n_sites, layout)?.normalized()?.0)
}
