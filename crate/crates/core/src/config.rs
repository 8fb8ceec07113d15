//! Run configuration: flat TOML, energies in units of the coupling `J`
//! (key suffix `_j`) and times in `1/J` (suffix `_inv_j`).
//!
//! ```toml
//! model = "xxz"
//! delta = -0.5
//! field_j = 2.0
//! seed = "Q3"
//! depth = 40
//! max_strings = 300000
//! max_weight = 10
//! boundary = "open"
//! t_max_inv_j = 10.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lanczos::RingGeometry;
use crate::models::{ModelSpec, SeedName};
use crate::open_chain::{BoundaryKind, DENSE_CEILING};
use crate::pauli::{TruncationPolicy, MAX_SITES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Xxz,
    ChaoticIsing,
    /// `b_n = α n`, no operator content.
    IdealLinear,
    /// `b_n = √n`.
    IdealSqrt,
    /// `b_n = √(1-γ²) n` with diagonal decay.
    DissipativeToy,
}

impl ModelFamily {
    pub fn is_operator_model(self) -> bool {
        matches!(self, ModelFamily::Xxz | ModelFamily::ChaoticIsing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    Open,
    Dirichlet,
    DiagonalDissipative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdealCaseName {
    Linear,
    Sqrt,
    DissipativeToy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelFamily,
    pub delta: f64,
    pub field_j: f64,
    /// Scale of the ideal linear chain, `b_n = α n`.
    pub alpha_j: f64,
    pub gamma: f64,
    pub seed: String,
    /// Truncation site `l`; Lanczos produces `b_1..b_{l+1}`.
    pub depth: usize,
    /// Ring size; 0 picks the smallest non-wrapping ring, or for `refine`
    /// the largest odd ring supported.
    pub n_sites: usize,
    pub translation_reduced: bool,
    pub coeff_threshold: f64,
    pub max_strings: Option<usize>,
    pub max_weight: Option<usize>,
    /// Extra thresholds for the convergence-in-threshold report.
    pub drift_thresholds: Vec<f64>,
    pub boundary: BoundaryName,
    pub t_max_inv_j: f64,
    /// Time step; 0 uses `0.05 / b_max`.
    pub dt_inv_j: f64,
    /// Explicit output times, replacing the uniform grid.
    pub times_inv_j: Option<Vec<f64>>,
    /// Krylov indices written to the trajectory CSV.
    pub trajectory_indices: Vec<usize>,
    pub rtol: f64,
    pub eps_perpetual_j: Option<f64>,
    pub spectrum_ceiling: usize,
    pub emit_eigenvectors: bool,
    pub export_basis: bool,
    pub refine_rounds: usize,
    pub case: IdealCaseName,
    /// Chain CSV to read `b_n` from instead of running Lanczos.
    pub chain_csv: Option<String>,
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelFamily::Xxz,
            delta: -0.5,
            field_j: 2.0,
            alpha_j: 1.0,
            gamma: 0.3,
            seed: "Q3".into(),
            depth: 20,
            n_sites: 0,
            translation_reduced: true,
            coeff_threshold: 0.0,
            max_strings: None,
            max_weight: None,
            drift_thresholds: Vec::new(),
            boundary: BoundaryName::Open,
            t_max_inv_j: 10.0,
            dt_inv_j: 0.0,
            times_inv_j: None,
            trajectory_indices: vec![0, 1],
            rtol: 1e-10,
            eps_perpetual_j: None,
            spectrum_ceiling: DENSE_CEILING,
            emit_eigenvectors: false,
            export_basis: false,
            refine_rounds: 3,
            case: IdealCaseName::Linear,
            chain_csv: None,
            tolerance: 1e-6,
        }
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite"))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // Unknown keys and type errors name the field in the message.
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<file>".to_string());
            Error::config(field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        finite("delta", self.delta)?;
        finite("field_j", self.field_j)?;
        finite("t_max_inv_j", self.t_max_inv_j)?;
        if !(self.alpha_j.is_finite() && self.alpha_j > 0.0) {
            return Err(Error::config("alpha_j", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1)"));
        }
        if self.model.is_operator_model() {
            self.seed_name()?;
        }
        if self.depth == 0 {
            return Err(Error::config("depth", "must be positive"));
        }
        if self.n_sites > MAX_SITES {
            return Err(Error::config("n_sites", format!("at most {MAX_SITES}")));
        }
        if !(self.coeff_threshold >= 0.0 && self.coeff_threshold.is_finite()) {
            return Err(Error::config("coeff_threshold", "must be finite and non-negative"));
        }
        if self.max_strings == Some(0) {
            return Err(Error::config("max_strings", "must be positive"));
        }
        if self.drift_thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::config("drift_thresholds", "entries must be finite and non-negative"));
        }
        if self.t_max_inv_j < 0.0 {
            return Err(Error::config("t_max_inv_j", "must be non-negative"));
        }
        if !(self.dt_inv_j.is_finite() && self.dt_inv_j >= 0.0) {
            return Err(Error::config("dt_inv_j", "must be non-negative (0 selects the default)"));
        }
        if let Some(ts) = &self.times_inv_j {
            if ts.iter().any(|t| !t.is_finite()) {
                return Err(Error::config("times_inv_j", "entries must be finite"));
            }
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::config("rtol", "must lie in (0, 1)"));
        }
        if let Some(e) = self.eps_perpetual_j {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::config("eps_perpetual_j", "must be finite and non-negative"));
            }
        }
        if self.spectrum_ceiling == 0 {
            return Err(Error::config("spectrum_ceiling", "must be positive"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        if self.boundary == BoundaryName::DiagonalDissipative && self.model != ModelFamily::DissipativeToy {
            return Err(Error::config("boundary", "diagonal_dissipative is only defined for the dissipative_toy model"));
        }
        Ok(())
    }

    pub fn seed_name(&self) -> Result<SeedName> {
        self.seed
            .parse()
            .map_err(|e: Error| Error::config("seed", e.to_string()))
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        match self.model {
            ModelFamily::Xxz => Ok(ModelSpec::Xxz {
                delta: self.delta,
                field: self.field_j,
            }),
            ModelFamily::ChaoticIsing => Ok(ModelSpec::ChaoticIsing),
            other => Err(Error::config("model", format!("{other:?} has no Hamiltonian"))),
        }
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            coeff_threshold: self.coeff_threshold,
            max_strings: self.max_strings,
            max_weight: self.max_weight,
        }
    }

    pub fn geometry(&self) -> Result<RingGeometry> {
        let span = self.seed_name()?.span();
        let n = if self.n_sites == 0 {
            RingGeometry::min_sites(self.depth, span)
        } else {
            self.n_sites
        };
        if n > MAX_SITES {
            return Err(Error::config(
                "depth",
                format!("depth {} needs a ring of {n} sites, more than the supported {MAX_SITES}", self.depth),
            ));
        }
        Ok(RingGeometry::new(n, self.translation_reduced))
    }

    /// Ring for `refine`: re-seeded operators are wider than the seed, so
    /// the automatic choice is the largest odd ring.
    pub fn refine_geometry(&self) -> Result<RingGeometry> {
        if self.n_sites != 0 {
            return self.geometry();
        }
        let n = if MAX_SITES % 2 == 1 { MAX_SITES } else { MAX_SITES - 1 };
        if n < RingGeometry::min_sites(self.depth, self.seed_name()?.span()) {
            return self.geometry();
        }
        Ok(RingGeometry::new(n, self.translation_reduced))
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        match self.boundary {
            BoundaryName::Open => BoundaryKind::Open,
            BoundaryName::Dirichlet => BoundaryKind::Dirichlet,
            BoundaryName::DiagonalDissipative => BoundaryKind::DiagonalDissipative { gamma: self.gamma },
        }
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
