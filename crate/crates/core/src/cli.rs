//! Command-line driver. Every command writes CSV/JSON artifacts plus a
//! `<command>.meta.json` sidecar carrying the config hash.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{IdealCaseName, ModelFamily, RunConfig};
use crate::error::{Error, Result};
use crate::ideal::{
    dissipative_toy_coefficients, linear_coefficients, sqrt_coefficients, verify_boundary_roots,
    verify_dissipative_toy, verify_linear_chain_structure, verify_polynomial_eigenvectors, IdealReport,
};
use crate::lanczos::{lanczos_run, read_chain_csv, threshold_drift, write_chain_csv, KrylovChain, LanczosOptions};
use crate::models::build_seed;
use crate::open_chain::{
    build_liouvillian, default_dt, evolve, spectrum, trajectory_csv, uniform_grid, ChainState, EvolveOptions,
    OpenLiouvillian, SpectrumOptions,
};
use crate::pauli::write_operator;
use crate::quench::{iterative_refine, quench_trajectory, RefineOptions};

#[derive(Debug, Parser)]
#[command(name = "openkrylov", version, about = "Open-boundary Krylov chains for spin-chain operator dynamics")]
pub struct Cli {
    /// TOML run configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for commutator evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Label written into chain headers and metadata (defaults to the seed name).
    #[arg(long, global = true)]
    pub seed_label: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CaseArg {
    Linear,
    Sqrt,
    DissipativeToy,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lanczos coefficients of the configured model and seed.
    Lanczos,
    /// Spectrum of the truncated chain.
    Spectrum,
    /// Krylov wavefunction evolution.
    Evolve,
    /// Per-site expectation after a quench from |+>^N.
    Quench,
    /// Checks of the exactly solvable chains.
    ValidateIdeal {
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Iterative refinement of the tracked near-real mode.
    Refine,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Lanczos => "lanczos",
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Quench => "quench",
            Command::ValidateIdeal { .. } => "validate-ideal",
            Command::Refine => "refine",
        }
    }
}

/// Machine-readable error line for stderr.
pub fn error_json(e: &Error) -> String {
    json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() }).to_string()
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn ensure_finite<'a>(what: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

struct Ctx {
    cfg: RunConfig,
    label: String,
}

impl Ctx {
    fn model_label(&self) -> String {
        match self.cfg.model {
            ModelFamily::Xxz | ModelFamily::ChaoticIsing => {
                self.cfg.model_spec().map(|m| m.label()).unwrap_or_default()
            }
            ModelFamily::IdealLinear => format!("ideal_linear(alpha={})", self.cfg.alpha_j),
            ModelFamily::IdealSqrt => "ideal_sqrt".into(),
            ModelFamily::DissipativeToy => format!("dissipative_toy(gamma={})", self.cfg.gamma),
        }
    }

    fn run_lanczos(&self, keep_basis: bool) -> Result<KrylovChain> {
        let cfg = &self.cfg;
        let geom = cfg.geometry()?;
        let h = cfg.model_spec()?.build(geom.n_sites, geom.layout())?;
        let seed = build_seed(cfg.seed_name()?, geom.n_sites, geom.layout())?;
        let chain = lanczos_run(
            &h,
            &seed,
            &geom,
            &LanczosOptions::new(cfg.depth, cfg.policy(), keep_basis),
            &self.label,
        )?;
        ensure_finite("Lanczos coefficients", &chain.b)?;
        Ok(chain)
    }

    /// `b_1, b_2, …` for spectrum and evolution commands.
    fn coefficients(&self) -> Result<Vec<f64>> {
        let cfg = &self.cfg;
        let count = cfg.depth + 1;
        Ok(match cfg.model {
            ModelFamily::IdealLinear => linear_coefficients(cfg.alpha_j, count),
            ModelFamily::IdealSqrt => sqrt_coefficients(count),
            ModelFamily::DissipativeToy => dissipative_toy_coefficients(cfg.gamma, count),
            _ => match &cfg.chain_csv {
                Some(path) => read_chain_csv(&fs::read_to_string(path)?)?,
                None => self.run_lanczos(false)?.b,
            },
        })
    }

    /// Truncates at `depth`, or lower if the chain closed early.
    fn liouvillian(&self, b: &[f64]) -> Result<OpenLiouvillian> {
        let kind = self.cfg.boundary_kind();
        let l = self.cfg.depth.min(b.len().saturating_sub(kind.required_coefficients(0)));
        build_liouvillian(b, l, kind)
    }

    fn times(&self, b_max: f64) -> Result<Vec<f64>> {
        if let Some(ts) = &self.cfg.times_inv_j {
            return Ok(ts.clone());
        }
        let dt = if self.cfg.dt_inv_j > 0.0 {
            self.cfg.dt_inv_j
        } else {
            default_dt(b_max.max(f64::MIN_POSITIVE))
        };
        uniform_grid(self.cfg.t_max_inv_j, dt)
    }

    fn evolve_opts(&self) -> EvolveOptions {
        EvolveOptions {
            rtol: self.cfg.rtol,
            ..Default::default()
        }
    }
}

/// Runs one command; returns the process exit code on success paths.
pub fn run(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("threads", "must be positive"));
        }
        // A second initialization in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let label = cli.seed_label.clone().unwrap_or_else(|| cfg.seed.clone());
    let ctx = Ctx { cfg, label };
    let mut out = Outputs::new(&cli.out)?;
    let mut extra = serde_json::Map::new();
    let mut code = 0;

    match &cli.command {
        Command::Lanczos => {
            let chain = ctx.run_lanczos(ctx.cfg.export_basis)?;
            out.write("chain.csv", &write_chain_csv(&chain, &ctx.model_label()))?;
            if let Some(basis) = &chain.basis {
                for (n, p) in basis.iter().enumerate() {
                    out.write(&format!("basis_{n:03}.txt"), &write_operator(p))?;
                }
            }
            if !ctx.cfg.drift_thresholds.is_empty() {
                let geom = ctx.cfg.geometry()?;
                let h = ctx.cfg.model_spec()?.build(geom.n_sites, geom.layout())?;
                let seed = build_seed(ctx.cfg.seed_name()?, geom.n_sites, geom.layout())?;
                let rep = threshold_drift(&h, &seed, &geom, ctx.cfg.depth, &ctx.cfg.policy(), &ctx.cfg.drift_thresholds)?;
                ensure_finite("threshold drift", rep.b.iter().flatten())?;
                out.write("drift.json", &to_json(&rep))?;
            }
            extra.insert("closed".into(), json!(chain.closed));
            extra.insert("n_sites".into(), json!(chain.geometry.n_sites));
            extra.insert("seed_norm".into(), json!(chain.seed_norm));
        }
        Command::Spectrum => {
            let b = ctx.coefficients()?;
            let lv = ctx.liouvillian(&b)?;
            let spec = spectrum(
                &lv,
                &SpectrumOptions {
                    ceiling: ctx.cfg.spectrum_ceiling,
                    eps_perpetual: ctx.cfg.eps_perpetual_j,
                },
            )?;
            ensure_finite(
                "spectrum",
                spec.modes.iter().flat_map(|m| [&m.omega.re, &m.omega.im, &m.residual]),
            )?;
            out.write("spectrum.csv", &spec.to_csv())?;
            if ctx.cfg.emit_eigenvectors {
                out.write("eigenvectors.csv", &spec.eigenvectors_csv())?;
            }
            extra.insert("l".into(), json!(lv.l()));
            extra.insert("boundary".into(), json!(lv.kind()));
            extra.insert("eps_perpetual".into(), json!(spec.eps_perpetual));
            extra.insert("max_residual".into(), json!(spec.max_residual()));
            extra.insert("residuals_ok".into(), json!(spec.residuals_ok()));
        }
        Command::Evolve => {
            let b = ctx.coefficients()?;
            let lv = ctx.liouvillian(&b)?;
            let times = ctx.times(lv.max_rate())?;
            let states = evolve(&lv, &ChainState::initial(lv.size()), &times, &ctx.evolve_opts())?;
            let ms: Vec<usize> = ctx.cfg.trajectory_indices.iter().copied().filter(|&m| m < lv.size()).collect();
            let csv = trajectory_csv(&states, &ms)?;
            out.write("trajectory.csv", &csv)?;
            extra.insert("l".into(), json!(lv.l()));
            extra.insert("boundary".into(), json!(lv.kind()));
            extra.insert(
                "amplitude_convention".into(),
                json!("amplitude is phi_m(t); the correlator (1/2^N)Tr[O_m O_0(t)] is i^m phi_m(t)"),
            );
        }
        Command::Quench => {
            if !ctx.cfg.model.is_operator_model() {
                return Err(Error::config("model", "quench needs an operator model (xxz or chaotic_ising)"));
            }
            let chain = ctx.run_lanczos(true)?;
            let lv = ctx.liouvillian(&chain.b)?;
            let times = ctx.times(lv.max_rate())?;
            let q = quench_trajectory(&chain, &lv, &times, &ctx.evolve_opts())?;
            ensure_finite("quench expectation", &q.expectation)?;
            out.write("quench.csv", &q.to_csv())?;
            extra.insert("l".into(), json!(q.l));
            extra.insert("boundary".into(), json!(q.boundary));
            extra.insert("seed_norm".into(), json!(q.seed_norm));
            extra.insert("normalization".into(), json!("per site, normalized seed"));
        }
        Command::ValidateIdeal { case, l, gamma } => {
            let case = match case {
                Some(CaseArg::Linear) => IdealCaseName::Linear,
                Some(CaseArg::Sqrt) => IdealCaseName::Sqrt,
                Some(CaseArg::DissipativeToy) => IdealCaseName::DissipativeToy,
                None => ctx.cfg.case,
            };
            let l = l.unwrap_or(ctx.cfg.depth);
            let gamma = gamma.unwrap_or(ctx.cfg.gamma);
            let tol = ctx.cfg.tolerance;
            let reports: Vec<IdealReport> = match case {
                IdealCaseName::Linear => vec![
                    verify_linear_chain_structure(l, ctx.cfg.alpha_j, tol)?,
                    verify_boundary_roots(l, tol)?,
                    verify_polynomial_eigenvectors("linear", l, l.min(40).saturating_sub(1).max(1), tol)?,
                ],
                IdealCaseName::Sqrt => {
                    vec![verify_polynomial_eigenvectors("sqrt", l, l.min(40).saturating_sub(1).max(1), tol)?]
                }
                IdealCaseName::DissipativeToy => vec![verify_dissipative_toy(gamma, l, 10.min(l + 1), tol)?],
            };
            let pass = reports.iter().all(|r| r.pass);
            out.write("validate_ideal.json", &to_json(&json!({ "pass": pass, "reports": reports })))?;
            extra.insert("pass".into(), json!(pass));
            if !pass {
                code = 3;
            }
        }
        Command::Refine => {
            let cfg = &ctx.cfg;
            let geom = cfg.refine_geometry()?;
            let h = cfg.model_spec()?.build(geom.n_sites, geom.layout())?;
            let seed = build_seed(cfg.seed_name()?, geom.n_sites, geom.layout())?;
            let r = iterative_refine(
                &h,
                &seed,
                &geom,
                &RefineOptions {
                    rounds: cfg.refine_rounds,
                    depth: cfg.depth,
                    policy: cfg.policy(),
                    eps: cfg.eps_perpetual_j,
                    omega_tol: cfg.tolerance,
                    polish: true,
                },
            )?;
            ensure_finite("refinement", r.rounds.iter().flat_map(|x| [&x.omega.0, &x.omega.1, &x.residual]))?;
            let stabilizing = r.is_stabilizing(cfg.tolerance);
            out.write("refine.json", &to_json(&json!({ "rounds": r.rounds, "stabilizing": stabilizing })))?;
            out.write("refined_operator.txt", &write_operator(&r.operator))?;
            extra.insert("stabilizing".into(), json!(stabilizing));
        }
    }

    let mut meta = serde_json::Map::new();
    meta.insert("command".into(), json!(cli.command.name()));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("config_hash".into(), json!(ctx.cfg.hash()));
    meta.insert("config".into(), serde_json::to_value(&ctx.cfg).expect("config serializes"));
    meta.insert("model".into(), json!(ctx.model_label()));
    meta.insert("seed_label".into(), json!(ctx.label));
    if ctx.cfg.seed_name().ok() == Some(crate::models::SeedName::Q5) {
        meta.insert("seed_note".into(), json!("Q5 is the five-site pattern extension of Q3"));
    }
    meta.insert("spin_convention".into(), json!("s = sigma (full Pauli matrices)"));
    meta.insert("ring".into(), json!("periodic"));
    meta.insert("outputs".into(), json!(out.files));
    meta.extend(extra);
    let name = format!("{}.meta.json", cli.command.name());
    fs::write(out.dir.join(name), to_json(&Value::Object(meta)))?;
    Ok(code)
}
