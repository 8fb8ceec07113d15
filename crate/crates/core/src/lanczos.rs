//! Operator Lanczos recursion on Pauli-string operators.
//!
//! The Liouvillian `L = [H, ·]` maps Hermitian operators to anti-Hermitian
//! ones, so the Krylov basis alternates between the two. The recursion is
//! run on Hermitian operators `P_n` with `O_n = i^n P_n`:
//!
//! ```text
//! P'_n = -i[H, P_{n-1}] + b_{n-1} P_{n-2},   b_n = ‖P'_n‖,   P_n = P'_n / b_n
//! ```
//!
//! which is the usual `O'_n = L O_{n-1} - b_{n-1} O_{n-2}` with every
//! coefficient kept real.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{commutator, inner_product, reduced_span_limit, Layout, OperatorMap, TruncationPolicy};

/// Relative size of `b_n` (against `b_1`) below which the chain is closed.
pub const CLOSURE_TOL: f64 = 1e-10;

/// Ring on which operators live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingGeometry {
    pub n_sites: usize,
    /// One representative string per translation orbit, per-site norms.
    pub translation_reduced: bool,
}

impl RingGeometry {
    pub fn new(n_sites: usize, translation_reduced: bool) -> Self {
        RingGeometry {
            n_sites,
            translation_reduced,
        }
    }

    /// Smallest ring on which a depth-`depth` run from a seed spanning
    /// `seed_span` sites never wraps: computing `b_{depth+1}` produces spans
    /// up to `seed_span + depth + 1`, and orbit representatives are only
    /// unique below half the ring.
    pub fn min_sites(depth: usize, seed_span: usize) -> usize {
        2 * (depth + seed_span + 1) + 1
    }

    /// Reduced-layout ring sized for a run.
    pub fn for_run(depth: usize, seed_span: usize) -> Self {
        RingGeometry::new(Self::min_sites(depth, seed_span), true)
    }

    pub fn layout(&self) -> Layout {
        if self.translation_reduced {
            Layout::TranslationReduced
        } else {
            Layout::Full
        }
    }

    /// True when supports grown over `depth` steps stay clear of the ring's
    /// far side, so finite-ring coefficients equal infinite-chain ones.
    pub fn is_non_wrapping(&self, depth: usize, seed_span: usize) -> bool {
        self.n_sites >= Self::min_sites(depth, seed_span)
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Truncation site `l`; the run produces `b_1..b_{l+1}`.
    pub depth: usize,
    pub policy: TruncationPolicy,
    pub keep_basis: bool,
    /// Full reorthogonalization against all retained basis operators.
    pub reorthogonalize: bool,
    pub closure_tol: f64,
}

impl LanczosOptions {
    pub fn new(depth: usize, policy: TruncationPolicy, keep_basis: bool) -> Self {
        LanczosOptions {
            depth,
            policy,
            keep_basis,
            reorthogonalize: keep_basis,
            closure_tol: CLOSURE_TOL,
        }
    }
}

/// Lanczos coefficients and (optionally) the Krylov basis.
#[derive(Clone, Debug)]
pub struct KrylovChain {
    /// `b_1..b_m`, all positive.
    pub b: Vec<f64>,
    /// Hermitian `P_0..P_k` with `O_n = i^n P_n`, when retained.
    pub basis: Option<Vec<OperatorMap>>,
    pub seed_label: String,
    pub truncation: TruncationPolicy,
    pub geometry: RingGeometry,
    /// Strings in `P'_n` after pruning, one per coefficient.
    pub string_counts: Vec<usize>,
    /// The recursion hit `b_n ≈ 0`: the Krylov space closed exactly.
    pub closed: bool,
    pub requested_depth: usize,
    /// Norm of the seed before normalization.
    pub seed_norm: f64,
}

impl KrylovChain {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Power of `i` relating `O_n` to the stored Hermitian `P_n`.
    pub fn grade(n: usize) -> u8 {
        (n % 4) as u8
    }

    pub fn grade_sequence(&self) -> Vec<u8> {
        let count = self.basis.as_ref().map_or(self.b.len(), |b| b.len());
        (0..count).map(Self::grade).collect()
    }

    /// `O_n` itself, with the `i^n` folded into the operator's grade.
    pub fn basis_operator(&self, n: usize) -> Option<OperatorMap> {
        let p = self.basis.as_ref()?.get(n)?;
        Some(p.clone().with_grade(Self::grade(n)))
    }

    pub fn b_max(&self) -> f64 {
        self.b.iter().cloned().fold(0.0, f64::max)
    }
}

/// `-i[H, P]` as a Hermitian (grade 0) map, for Hermitian `P`.
pub fn liouvillian_real(h: &OperatorMap, p: &OperatorMap, policy: &TruncationPolicy) -> Result<OperatorMap> {
    // The grade-1 commutator stores [H, P] = i·C with real C, and -i[H, P] = C.
    Ok(commutator(h, p, policy)?.with_grade(0))
}

/// Runs the recursion to depth `opts.depth`.
///
/// Fails with [`Error::ConservedSeed`] when `[H, O_0] = 0`. An exact
/// closure (`b_n < closure_tol · b_1`) ends the run early with
/// `closed = true`.
pub fn lanczos_run(
    h: &OperatorMap,
    seed: &OperatorMap,
    geometry: &RingGeometry,
    opts: &LanczosOptions,
    seed_label: &str,
) -> Result<KrylovChain> {
    opts.policy.validate()?;
    if opts.depth == 0 {
        return Err(Error::usage("Lanczos depth must be positive"));
    }
    for (name, op) in [("Hamiltonian", h), ("seed", seed)] {
        if op.n_sites() != geometry.n_sites || op.layout() != geometry.layout() {
            return Err(Error::usage(format!(
                "{name} lives on {} sites ({}), geometry says {} sites ({})",
                op.n_sites(),
                op.layout().name(),
                geometry.n_sites,
                geometry.layout().name()
            )));
        }
    }
    if !h.is_hermitian() || !seed.is_hermitian() {
        return Err(Error::usage("Hamiltonian and seed must be Hermitian (grade 0)"));
    }
    if geometry.translation_reduced {
        let span = seed.max_span();
        if !geometry.is_non_wrapping(opts.depth, span) {
            return Err(Error::RingTooSmall {
                n_sites: geometry.n_sites,
                span: span + opts.depth + 1,
                limit: reduced_span_limit(geometry.n_sites),
            });
        }
    }

    let (p0, seed_norm) = seed.normalized()?;
    let mut basis: Vec<OperatorMap> = vec![p0];
    let mut b: Vec<f64> = Vec::with_capacity(opts.depth + 1);
    let mut counts = Vec::with_capacity(opts.depth + 1);
    let mut closed = false;
    let h_scale = h.norm();

    for n in 1..=opts.depth + 1 {
        let prev = &basis[basis.len() - 1];
        // -i[H, P] has the same real coefficients as the grade-1 commutator.
        let mut next = liouvillian_real(h, prev, &opts.policy)?;
        if n >= 2 {
            next.add_scaled(&basis[basis.len() - 2], b[n - 2])?;
        }
        if opts.reorthogonalize {
            // Two Gram-Schmidt passes; one loses orthogonality after a
            // near-cancellation (small b_n).
            for _ in 0..2 {
                for p in &basis {
                    let overlap = inner_product(p, &next)?;
                    next.add_scaled(p, -overlap)?;
                }
            }
        }
        next.prune(&opts.policy);
        let bn = next.norm();
        if !bn.is_finite() {
            return Err(Error::NonFinite(format!("Lanczos coefficient b_{n}")));
        }
        if n == 1 && bn <= 1e-12 * h_scale.max(1.0) {
            return Err(Error::ConservedSeed);
        }
        if n >= 2 && bn < opts.closure_tol * b[0] {
            closed = true;
            break;
        }
        b.push(bn);
        counts.push(next.len());
        if n == opts.depth + 1 {
            break;
        }
        next.scale(1.0 / bn);
        basis.push(next);
        if !opts.keep_basis && basis.len() > 2 {
            basis.remove(0);
        }
    }

    Ok(KrylovChain {
        b,
        basis: opts.keep_basis.then_some(basis),
        seed_label: seed_label.to_string(),
        truncation: opts.policy.clone(),
        geometry: *geometry,
        string_counts: counts,
        closed,
        requested_depth: opts.depth,
        seed_norm,
    })
}

/// Largest deviation from orthonormality among retained basis operators.
pub fn orthonormality_error(chain: &KrylovChain) -> Result<f64> {
    let basis = chain
        .basis
        .as_ref()
        .ok_or_else(|| Error::usage("basis not retained"))?;
    let mut worst: f64 = 0.0;
    for m in 0..basis.len() {
        for n in m..basis.len() {
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((inner_product(&basis[m], &basis[n])? - target).abs());
        }
    }
    Ok(worst)
}

/// Per-`n` support sizes of the Krylov basis.
#[derive(Clone, Debug, Serialize)]
pub struct LocalityReport {
    /// Longest contiguous span of non-identity sites in `O_n`.
    pub supports: Vec<usize>,
    /// `n · growth_per_step + seed_locality`.
    pub bounds: Vec<usize>,
    pub within_bound: bool,
    pub monotone: bool,
}

/// Checks that `O_n` spans at most `n · growth_per_step + seed_locality`
/// sites. For nearest-neighbour Hamiltonians `growth_per_step` is 1.
pub fn locality_bound_check(
    chain: &KrylovChain,
    seed_locality: usize,
    growth_per_step: usize,
) -> Result<LocalityReport> {
    let basis = match chain.basis.as_ref() {
        Some(b) if !b.is_empty() => b,
        _ => return Err(Error::usage("locality check needs a retained, non-empty Krylov basis")),
    };
    let supports: Vec<usize> = basis.iter().map(|p| p.max_span()).collect();
    let bounds: Vec<usize> = (0..basis.len())
        .map(|n| n * growth_per_step + seed_locality)
        .collect();
    let within_bound = supports.iter().zip(&bounds).all(|(s, b)| s <= b);
    let monotone = supports.windows(2).all(|w| w[0] <= w[1]);
    Ok(LocalityReport {
        supports,
        bounds,
        within_bound,
        monotone,
    })
}

/// Least-squares line through `(n, b_n)` for `n` in `lo..=hi` (1-based).
/// Returns `(slope, intercept)`.
pub fn tail_fit(b: &[f64], lo: usize, hi: usize) -> Result<(f64, f64)> {
    if lo < 1 || hi > b.len() || hi <= lo {
        return Err(Error::usage(format!(
            "fit window {lo}..={hi} outside 1..={}",
            b.len()
        )));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| (n as f64, b[n - 1])).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Coefficients at several truncation thresholds and the per-`n` drift
/// between consecutive thresholds.
#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub thresholds: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    /// `drift[k][n] = |b_n(thresholds[k+1]) - b_n(thresholds[k])|`.
    pub drift: Vec<Vec<f64>>,
}

pub fn threshold_drift(
    h: &OperatorMap,
    seed: &OperatorMap,
    geometry: &RingGeometry,
    depth: usize,
    base: &TruncationPolicy,
    thresholds: &[f64],
) -> Result<DriftReport> {
    let mut all = Vec::with_capacity(thresholds.len());
    for &thr in thresholds {
        let policy = TruncationPolicy {
            coeff_threshold: thr,
            ..base.clone()
        };
        let chain = lanczos_run(h, seed, geometry, &LanczosOptions::new(depth, policy, false), "")?;
        all.push(chain.b);
    }
    let drift = all
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).collect())
        .collect();
    Ok(DriftReport {
        thresholds: thresholds.to_vec(),
        b: all,
        drift,
    })
}

/// Chain CSV: commented header, then `n,b_n,strings`.
pub fn write_chain_csv(chain: &KrylovChain, model_label: &str) -> String {
    let mut out = String::new();
    let p = &chain.truncation;
    out.push_str("# openkrylov chain\n");
    let _ = writeln!(out, "# model = {model_label}");
    let _ = writeln!(out, "# seed = {}", chain.seed_label);
    let _ = writeln!(
        out,
        "# policy = coeff_threshold={:e};max_strings={};max_weight={}",
        p.coeff_threshold,
        p.max_strings.map_or("none".into(), |v| v.to_string()),
        p.max_weight.map_or("none".into(), |v| v.to_string()),
    );
    let _ = writeln!(
        out,
        "# geometry = n_sites={};translation_reduced={}",
        chain.geometry.n_sites, chain.geometry.translation_reduced
    );
    let _ = writeln!(out, "# closed = {}", chain.closed);
    out.push_str("n,b_n,strings\n");
    for (i, (bn, count)) in chain.b.iter().zip(&chain.string_counts).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, bn, count);
    }
    out
}

/// Reads the `b_n` column back from a chain CSV.
pub fn read_chain_csv(text: &str) -> Result<Vec<f64>> {
    let mut b = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("n,") {
            continue;
        }
        let field = line.split(',').nth(1).ok_or(Error::Parse {
            line: idx + 1,
            msg: "expected n,b_n,strings".into(),
        })?;
        b.push(field.trim().parse::<f64>().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_chaotic, build_seed, SeedName};
    use crate::pauli::PauliString;

    fn chaotic_run(depth: usize, keep: bool) -> KrylovChain {
        let geom = RingGeometry::for_run(depth, 2);
        let h = build_chaotic(geom.n_sites, geom.layout()).unwrap();
        let o = build_seed(SeedName::ChaoticO0, geom.n_sites, geom.layout()).unwrap();
        lanczos_run(&h, &o, &geom, &LanczosOptions::new(depth, TruncationPolicy::exact(), keep), "chaotic_O0").unwrap()
    }

    #[test]
    fn conserved_seed_rejected() {
        let geom = RingGeometry::for_run(4, 2);
        let h = build_chaotic(geom.n_sites, geom.layout()).unwrap();
        let err = lanczos_run(&h, &h, &geom, &LanczosOptions::new(4, TruncationPolicy::exact(), false), "H");
        assert!(matches!(err, Err(Error::ConservedSeed)));
    }

    #[test]
    fn returns_depth_plus_one_coefficients() {
        let chain = chaotic_run(5, true);
        assert_eq!(chain.b.len(), 6);
        assert_eq!(chain.basis.as_ref().unwrap().len(), 6);
        assert!(chain.b.iter().all(|&b| b > 0.0));
        assert!(!chain.closed);
        assert!(orthonormality_error(&chain).unwrap() < 1e-12);
    }

    #[test]
    fn exact_closure_detected() {
        // Z on one site under a pure field: [Z, X] = 2iY, [Z, Y] = -2iX, so
        // the Krylov space of X is {X, Y} and b_2 vanishes.
        let geom = RingGeometry::new(9, false);
        let h = OperatorMap::translation_sum(9, Layout::Full, &[(1.0, "ZIIIIIIII".parse::<PauliString>().unwrap())]).unwrap();
        let x = OperatorMap::translation_sum(9, Layout::Full, &[(1.0, "XIIIIIIII".parse::<PauliString>().unwrap())]).unwrap();
        let chain = lanczos_run(&h, &x, &geom, &LanczosOptions::new(5, TruncationPolicy::exact(), true), "X").unwrap();
        assert!(chain.closed);
        assert_eq!(chain.b.len(), 1);
        assert!((chain.b[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn small_reduced_ring_refused() {
        let geom = RingGeometry::new(9, true);
        let h = build_chaotic(9, Layout::TranslationReduced).unwrap();
        let o = build_seed(SeedName::ChaoticO0, 9, Layout::TranslationReduced).unwrap();
        let r = lanczos_run(&h, &o, &geom, &LanczosOptions::new(10, TruncationPolicy::exact(), false), "");
        assert!(matches!(r, Err(Error::RingTooSmall { .. })));
    }

    #[test]
    fn deterministic() {
        let a = chaotic_run(8, false);
        let b = chaotic_run(8, false);
        assert_eq!(
            a.b.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn locality_growth() {
        let chain = chaotic_run(6, true);
        let report = locality_bound_check(&chain, 2, 1).unwrap();
        assert!(report.within_bound, "{:?}", report.supports);
        assert!(report.monotone);
        let mut bare = chain.clone();
        bare.basis = None;
        assert!(locality_bound_check(&bare, 2, 1).is_err());
    }

    #[test]
    fn fit_recovers_line() {
        let b: Vec<f64> = (1..=20).map(|n| 0.3 * n as f64 + 1.5).collect();
        let (s, c) = tail_fit(&b, 5, 20).unwrap();
        assert!((s - 0.3).abs() < 1e-12 && (c - 1.5).abs() < 1e-12);
        assert!(tail_fit(&b, 0, 5).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let chain = chaotic_run(4, false);
        let text = write_chain_csv(&chain, "chaotic_ising");
        assert_eq!(read_chain_csv(&text).unwrap(), chain.b);
    }
}
