//! Quenches from `|+⟩^⊗N` and reconstruction of dynamical symmetries from
//! chain eigenvectors.
//!
//! In the Krylov basis `O_n = i^n P_n` the Heisenberg operator is
//! `O_0(t) = Σ_n i^n φ_n(t) O_n = Σ_n (-1)^n φ_n(t) P_n`, and a chain
//! eigenvector `φ` with `Lφ = ωφ` gives `A = Σ_n (-1)^n φ_n P_n` with
//! `[H, A] = -ωA`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lanczos::{lanczos_run, liouvillian_real, KrylovChain, LanczosOptions, RingGeometry};
use crate::open_chain::{
    build_liouvillian, evolve, median, spectrum, BoundaryKind, ChainState, EvolveOptions, OpenLiouvillian,
    SpectralMode, SpectrumOptions,
};
use crate::pauli::{reduced_span_limit, OperatorMap, TruncationPolicy};

/// `⟨+|^⊗N A |+⟩^⊗N`: the sum of coefficients over strings made of X and I
/// only (per site in the reduced layout). For grade-1 maps the expectation
/// value is `i` times the returned number.
pub fn plus_state_weight(a: &OperatorMap) -> f64 {
    let mut terms: Vec<(_, f64)> = a.iter().filter(|(s, _)| s.z_mask() == 0).map(|(s, c)| (*s, *c)).collect();
    // Fixed summation order keeps the result independent of hash order.
    terms.sort_by_key(|x| x.0);
    terms.iter().map(|t| t.1).sum()
}

/// Per-site expectation `⟨O_0(t)⟩` of the normalized seed.
#[derive(Clone, Debug, Serialize)]
pub struct QuenchResult {
    pub times: Vec<f64>,
    pub expectation: Vec<f64>,
    pub seed_label: String,
    pub l: usize,
    pub boundary: BoundaryKind,
    pub policy: TruncationPolicy,
    /// `w_n = ⟨+|P_n|+⟩`.
    pub weights: Vec<f64>,
    /// Norm of the seed before normalization; multiply to get the
    /// expectation of the unnormalized seed.
    pub seed_norm: f64,
}

impl QuenchResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,expectation\n");
        for (t, v) in self.times.iter().zip(&self.expectation) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }
}

/// Evolves the chain and folds the amplitudes with the plus-state weights
/// of the Krylov basis.
pub fn quench_trajectory(
    chain: &KrylovChain,
    l: &OpenLiouvillian,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<QuenchResult> {
    let basis = chain
        .basis
        .as_ref()
        .ok_or_else(|| Error::usage("quench needs the Krylov basis; rerun Lanczos with keep_basis"))?;
    if basis.len() < l.size() {
        return Err(Error::usage(format!(
            "chain of size {} needs {} basis operators, {} retained",
            l.size(),
            l.size(),
            basis.len()
        )));
    }
    let weights: Vec<f64> = basis[..l.size()].par_iter().map(plus_state_weight).collect();
    let states = evolve(l, &ChainState::initial(l.size()), times, opts)?;
    let expectation = states
        .iter()
        .map(|s| {
            s.phi
                .iter()
                .zip(&weights)
                .enumerate()
                .map(|(n, (p, w))| if n % 2 == 0 { p.re * w } else { -p.re * w })
                .sum()
        })
        .collect();
    Ok(QuenchResult {
        times: times.to_vec(),
        expectation,
        seed_label: chain.seed_label.clone(),
        l: l.l(),
        boundary: l.kind(),
        policy: chain.truncation.clone(),
        weights,
        seed_norm: chain.seed_norm,
    })
}

/// Complex operator `A = Re + i·Im` with Hermitian parts.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub omega: Complex64,
    pub re: OperatorMap,
    pub im: OperatorMap,
    /// `support_histogram[k]` = number of strings spanning `k` sites
    /// (across both parts).
    pub support_histogram: Vec<usize>,
}

impl ModeOperator {
    pub fn norm(&self) -> f64 {
        (self.re.norm_sq() + self.im.norm_sq()).sqrt()
    }

    /// `A + A†`, normalized, with the sign making its `P_0` component positive.
    pub fn hermitian_part(&self) -> Result<OperatorMap> {
        Ok(self.re.normalized()?.0)
    }
}

/// `A_u = Σ_n (-1)^n φ_{u,n} P_n`, pruned by `policy`.
pub fn reconstruct_mode_operator(
    chain: &KrylovChain,
    mode: &SpectralMode,
    policy: &TruncationPolicy,
) -> Result<ModeOperator> {
    let basis = chain
        .basis
        .as_ref()
        .ok_or_else(|| Error::usage("mode reconstruction needs the Krylov basis"))?;
    if mode.phi.len() > basis.len() {
        return Err(Error::usage(format!(
            "mode has {} components, only {} basis operators retained",
            mode.phi.len(),
            basis.len()
        )));
    }
    let n_sites = basis[0].n_sites();
    let layout = basis[0].layout();
    let mut re = OperatorMap::new(n_sites, layout)?;
    let mut im = OperatorMap::new(n_sites, layout)?;
    for (n, (phi, p)) in mode.phi.iter().zip(basis).enumerate() {
        let c = if n % 2 == 0 { *phi } else { -*phi };
        if c.re != 0.0 {
            re.add_scaled(p, c.re)?;
        }
        if c.im != 0.0 {
            im.add_scaled(p, c.im)?;
        }
    }
    re.prune(policy);
    im.prune(policy);
    let mut hist = vec![0usize; n_sites + 1];
    for (s, _) in re.iter().chain(im.iter()) {
        hist[s.ring_span()] += 1;
    }
    while hist.len() > 1 && *hist.last().unwrap() == 0 {
        hist.pop();
    }
    Ok(ModeOperator {
        omega: mode.omega,
        re,
        im,
        support_histogram: hist,
    })
}

/// Chain vector minimizing `‖(L - ω)φ‖ / ‖φ‖` at real frequency `ω`, where
/// `L` acts on `φ_0..φ_l` and keeps the leak into site `l + 1` (through
/// `b_{l+1}`, zero for a closed chain). Returns the vector, normalized with
/// the phase of [`SpectralMode`], and the attained residual.
pub fn min_residual_vector(b: &[f64], l: usize, omega: f64) -> Result<(Vec<Complex64>, f64)> {
    if b.len() < l {
        return Err(Error::InsufficientCoefficients {
            kind: "min_residual",
            l,
            required: l,
            got: b.len(),
        });
    }
    let i = Complex64::i();
    // L = iM with M[n, n-1] = b_n, M[n-1, n] = -b_n.
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(l + 2, l + 1);
    for n in 0..=l {
        m[(n, n)] = Complex64::from(-omega);
        if n < l {
            m[(n, n + 1)] = -i * b[n];
        }
        let bn1 = b.get(n).copied().unwrap_or(0.0);
        m[(n + 1, n)] = i * bn1;
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::Eigensolver {
        reason: "singular value decomposition did not converge".into(),
        condition: f64::NAN,
    })?;
    let (k, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, s)| (k, *s))
        .expect("non-empty matrix");
    let mut phi: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let big = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = phi.iter().find(|z| z.norm() > 1e-3 * big).copied().unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm() / norm;
    for z in &mut phi {
        *z *= phase;
    }
    Ok((phi, sigma))
}

/// `‖(L - ω)φ‖` for a unit chain vector `φ` on sites `0..=l`, counting the
/// leak `b_{l+1} φ_l` into site `l + 1`.
pub fn chain_residual(b: &[f64], l: usize, mode: &SpectralMode) -> f64 {
    let i = Complex64::i();
    let phi = &mode.phi;
    let mut sq = 0.0;
    for n in 0..=l + 1 {
        // (Lφ)_n = i(b_n φ_{n-1} - b_{n+1} φ_{n+1}).
        let mut v = Complex64::new(0.0, 0.0);
        if n >= 1 && n - 1 <= l {
            v += i * b.get(n - 1).copied().unwrap_or(0.0) * phi[n - 1];
        }
        if n < l {
            v -= i * b[n] * phi[n + 1];
        }
        if n <= l {
            v -= mode.omega * phi[n];
        }
        sq += v.norm_sqr();
    }
    sq.sqrt()
}

/// `‖[H, A] + ωA‖ / ‖A‖`.
pub fn eigen_residual(h: &OperatorMap, a: &ModeOperator, policy: &TruncationPolicy) -> Result<f64> {
    // [H, Re + i Im] = i K(Re) - K(Im), with K(P) = -i[H, P].
    let k_re = liouvillian_real(h, &a.re, policy)?;
    let k_im = liouvillian_real(h, &a.im, policy)?;
    let w = a.omega;
    let mut real = k_im.scaled(-1.0);
    real.add_scaled(&a.re, w.re)?;
    real.add_scaled(&a.im, -w.im)?;
    let mut imag = k_re;
    imag.add_scaled(&a.re, w.im)?;
    imag.add_scaled(&a.im, w.re)?;
    Ok((real.norm_sq() + imag.norm_sq()).sqrt() / a.norm())
}

#[derive(Clone, Debug)]
pub struct RefineOptions {
    pub rounds: usize,
    pub depth: usize,
    pub policy: TruncationPolicy,
    /// Near-real window `|Im ω| ≤ eps` for candidates. Defaults to the
    /// median `|Im ω|` of each round's spectrum, i.e. the slower half.
    pub eps: Option<f64>,
    /// Tolerance below which successive `ω` count as converged.
    pub omega_tol: f64,
    /// Replace the selected eigenvector by [`min_residual_vector`] at
    /// `Re ω` before reconstructing.
    pub polish: bool,
}

/// One refinement round.
#[derive(Clone, Debug, Serialize)]
pub struct RefineRound {
    pub omega: (f64, f64),
    pub phi0: f64,
    /// `‖[H, Â] + ωÂ‖/‖Â‖` of the reconstructed operator, with an exact
    /// commutator.
    pub residual: f64,
    /// The same residual in chain coordinates, `‖(L - ω)φ‖` including the
    /// leak through `b_{l+1}`. Unlike `residual` it does not see strings the
    /// truncation policy removed from the Krylov basis.
    pub chain_residual: f64,
    pub closed: bool,
    pub strings: usize,
}

#[derive(Clone, Debug)]
pub struct RefineResult {
    /// Hermitian part of the final reconstruction, normalized.
    pub operator: OperatorMap,
    pub rounds: Vec<RefineRound>,
}

impl RefineResult {
    pub fn omegas(&self) -> Vec<Complex64> {
        self.rounds.iter().map(|r| Complex64::new(r.omega.0, r.omega.1)).collect()
    }

    /// `|ω_{r+1} - ω_r|` decreasing, or below `tol`.
    pub fn is_stabilizing(&self, tol: f64) -> bool {
        let w = self.omegas();
        let steps: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]).norm()).collect();
        steps.windows(2).all(|s| s[1] <= s[0] || s[1] <= tol) || steps.iter().all(|s| *s <= tol)
    }
}

/// Picks the mode with the largest `|φ_0|` among near-real modes. Mirror
/// pairs `ω, -ω̄` share `|φ_0|`; within a relative `1e-8` the one with
/// `Re ω ≥ 0` wins.
pub fn select_candidate(modes: &[SpectralMode], eps: f64) -> Option<&SpectralMode> {
    let near: Vec<&SpectralMode> = modes.iter().filter(|m| m.omega.im.abs() <= eps).collect();
    let top = near.iter().map(|m| m.phi[0].norm()).fold(f64::NEG_INFINITY, f64::max);
    near.into_iter()
        .filter(|m| m.phi[0].norm() >= top * (1.0 - 1e-8))
        .max_by(|a, b| {
            (a.omega.re >= 0.0)
                .cmp(&(b.omega.re >= 0.0))
                .then(a.phi[0].norm().total_cmp(&b.phi[0].norm()))
        })
}

/// Repeats Lanczos → open-chain spectrum → reconstruction, re-seeding with
/// the Hermitian part of the tracked mode each round.
///
/// Strings wider than the ring allows for the next round are dropped from
/// the re-seeded operator.
pub fn iterative_refine(
    h: &OperatorMap,
    a0: &OperatorMap,
    geometry: &RingGeometry,
    opts: &RefineOptions,
) -> Result<RefineResult> {
    if opts.rounds == 0 {
        return Err(Error::usage("refinement needs at least one round"));
    }
    let span_cap = if geometry.translation_reduced {
        reduced_span_limit(geometry.n_sites).saturating_sub(opts.depth + 1)
    } else {
        geometry.n_sites
    };
    let mut current = a0.normalized()?.0;
    let mut rounds = Vec::with_capacity(opts.rounds);
    for round in 1..=opts.rounds {
        let chain = lanczos_run(
            h,
            &current,
            geometry,
            &LanczosOptions::new(opts.depth, opts.policy.clone(), true),
            "refine",
        )?;
        let (l, kind) = if chain.closed {
            (chain.b.len(), BoundaryKind::Dirichlet)
        } else {
            (chain.b.len() - 1, BoundaryKind::Open)
        };
        let lv = build_liouvillian(&chain.b, l, kind)?;
        let spec = spectrum(&lv, &SpectrumOptions::default())?;
        let eps = opts.eps.unwrap_or_else(|| {
            let med = median(spec.modes.iter().map(|m| m.omega.im.abs()).collect()).unwrap_or(0.0);
            med.max(1e-9 * spec.norm_fro)
        });
        let mode = select_candidate(&spec.modes, eps).ok_or(Error::NoPerpetualCandidate { round })?;
        let polished = if opts.polish {
            let (phi, _) = min_residual_vector(&chain.b, l, mode.omega.re)?;
            SpectralMode {
                omega: Complex64::new(mode.omega.re, 0.0),
                phi,
                ..mode.clone()
            }
        } else {
            mode.clone()
        };
        let chain_residual = chain_residual(&chain.b, l, &polished);
        let rec = reconstruct_mode_operator(&chain, &polished, &TruncationPolicy::exact())?;
        let residual = eigen_residual(h, &rec, &TruncationPolicy::exact())?;
        let mut next = rec.re.clone();
        let wide: Vec<_> = next.iter().filter(|(s, _)| s.ring_span() > span_cap).map(|(s, _)| *s).collect();
        for s in wide {
            next.add_term(s, -next.get(&s))?;
        }
        next.prune(&TruncationPolicy::exact());
        current = next.normalized()?.0;
        rounds.push(RefineRound {
            omega: (mode.omega.re, mode.omega.im),
            phi0: mode.phi[0].norm(),
            residual,
            chain_residual,
            closed: chain.closed,
            strings: current.len(),
        });
    }
    Ok(RefineResult {
        operator: current,
        rounds,
    })
}
