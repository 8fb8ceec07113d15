use num_complex::Complex64;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::string::{mul_masks, PauliString, Phase, MAX_SITES};
use crate::error::{Error, Result};

/// How the stored strings relate to the operator they describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Every string on the ring is stored explicitly.
    Full,
    /// One canonical representative `r` per translation orbit; the map
    /// stands for `Σ_j T_j(r)` and all inner products are per site.
    TranslationReduced,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::Full => "full",
            Layout::TranslationReduced => "translation_reduced",
        }
    }
}

/// Term-dropping rules applied after each operator update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Drop terms with `|c|` strictly below this.
    pub coeff_threshold: f64,
    /// Keep only the largest-`|c|` terms.
    pub max_strings: Option<usize>,
    /// Drop strings with more non-identity sites than this.
    pub max_weight: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::exact()
    }
}

impl TruncationPolicy {
    /// No truncation; only exact zeros are removed.
    pub fn exact() -> Self {
        TruncationPolicy {
            coeff_threshold: 0.0,
            max_strings: None,
            max_weight: None,
        }
    }

    pub fn with_threshold(coeff_threshold: f64) -> Self {
        TruncationPolicy {
            coeff_threshold,
            ..Self::exact()
        }
    }

    pub fn is_exact(&self) -> bool {
        self.coeff_threshold == 0.0 && self.max_strings.is_none() && self.max_weight.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coeff_threshold >= 0.0 && self.coeff_threshold.is_finite()) {
            return Err(Error::config(
                "coeff_threshold",
                "must be a finite nonnegative number",
            ));
        }
        if self.max_strings == Some(0) {
            return Err(Error::config("max_strings", "must be positive"));
        }
        Ok(())
    }
}

/// Sparse real-coefficient sum of Pauli strings, `i^grade · Σ c_s s`.
///
/// With real coefficients a grade-0 map is Hermitian and a grade-1 map is
/// anti-Hermitian. Commutators of graded maps stay real by moving the
/// factor `i` into the grade.
#[derive(Clone, Debug)]
pub struct OperatorMap {
    n_sites: usize,
    layout: Layout,
    grade: u8,
    terms: FxHashMap<PauliString, f64>,
}

impl PartialEq for OperatorMap {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites
            && self.layout == other.layout
            && self.grade == other.grade
            && self.terms == other.terms
    }
}

impl OperatorMap {
    pub fn new(n_sites: usize, layout: Layout) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::SiteCount {
                n_sites,
                max: MAX_SITES,
            });
        }
        Ok(OperatorMap {
            n_sites,
            layout,
            grade: 0,
            terms: FxHashMap::default(),
        })
    }

    pub fn full(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, Layout::Full)
    }

    pub fn reduced(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, Layout::TranslationReduced)
    }

    pub fn from_terms<I>(n_sites: usize, layout: Layout, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut op = Self::new(n_sites, layout)?;
        for (s, c) in terms {
            op.add_term(s, c)?;
        }
        Ok(op)
    }

    /// Translation sum `Σ_j T_j(Σ_k c_k s_k)` of a local operator.
    pub fn translation_sum(n_sites: usize, layout: Layout, local: &[(f64, PauliString)]) -> Result<Self> {
        let mut op = Self::new(n_sites, layout)?;
        for &(c, s) in local {
            match layout {
                Layout::Full => {
                    for j in 0..n_sites {
                        op.add_term(s.rotate(j), c)?;
                    }
                }
                Layout::TranslationReduced => op.add_term(s, c)?,
            }
        }
        op.terms.retain(|_, c| *c != 0.0);
        Ok(op)
    }

    pub fn with_grade(mut self, grade: u8) -> Self {
        self.grade = grade % 2;
        if grade % 4 >= 2 {
            self.scale(-1.0);
        }
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Power of `i` factored out of the stored coefficients (0 or 1).
    pub fn grade(&self) -> u8 {
        self.grade
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulates `c` onto string `s`. In the reduced layout `s` is first
    /// replaced by its orbit representative.
    pub fn add_term(&mut self, s: PauliString, c: f64) -> Result<()> {
        if s.n_sites() != self.n_sites {
            return Err(Error::SiteMismatch {
                left: self.n_sites,
                right: s.n_sites(),
            });
        }
        let key = match self.layout {
            Layout::Full => s,
            Layout::TranslationReduced => s.canonical(),
        };
        *self.terms.entry(key).or_insert(0.0) += c;
        Ok(())
    }

    pub fn get(&self, s: &PauliString) -> f64 {
        let key = match self.layout {
            Layout::Full => *s,
            Layout::TranslationReduced => s.canonical(),
        };
        self.terms.get(&key).copied().unwrap_or(0.0)
    }

    /// Terms in unspecified (but run-to-run deterministic) order.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.terms.iter()
    }

    /// Terms ordered by string.
    pub fn sorted_terms(&self) -> Vec<(PauliString, f64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(s, c)| (*s, *c)).collect();
        v.sort_by_key(|a| a.0);
        v
    }

    /// Coefficient of the identity, i.e. the normalized trace up to `i^grade`.
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .find(|(s, _)| s.is_identity())
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(|s| s.weight()).max().unwrap_or(0)
    }

    /// Largest ring span over all strings.
    pub fn max_span(&self) -> usize {
        self.terms.keys().map(|s| s.ring_span()).max().unwrap_or(0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    /// `sqrt((1/2^N) Tr[A†A])`, per site in the reduced layout.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        if alpha == 0.0 {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// Returns the unit-norm copy and the original norm.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::usage("cannot normalize an empty operator"));
        }
        Ok((self.scaled(1.0 / norm), norm))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(Error::SiteMismatch {
                left: self.n_sites,
                right: other.n_sites,
            });
        }
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch {
                left: self.layout.name(),
                right: other.layout.name(),
            });
        }
        Ok(())
    }

    /// `self += alpha · other`; both maps must carry the same grade.
    pub fn add_scaled(&mut self, other: &Self, alpha: f64) -> Result<()> {
        self.check_compatible(other)?;
        if self.grade != other.grade {
            if self.is_empty() {
                self.grade = other.grade;
            } else if !other.is_empty() {
                return Err(Error::GradeMismatch {
                    left: self.grade,
                    right: other.grade,
                });
            }
        }
        for (s, c) in &other.terms {
            *self.terms.entry(*s).or_insert(0.0) += alpha * c;
        }
        Ok(())
    }

    /// Applies `policy`. Exact zeros are always removed; ties under
    /// `max_strings` are broken by string order.
    pub fn prune(&mut self, policy: &TruncationPolicy) {
        let thr = policy.coeff_threshold;
        let wmax = policy.max_weight.unwrap_or(usize::MAX);
        self.terms
            .retain(|s, c| *c != 0.0 && c.abs() >= thr && s.weight() <= wmax);
        if let Some(cap) = policy.max_strings {
            if self.terms.len() > cap {
                let mut v: Vec<(PauliString, f64)> = self.terms.drain().collect();
                v.sort_unstable_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
                v.truncate(cap);
                // Reinsert in string order so iteration order does not depend on the sort.
                v.sort_unstable_by_key(|a| a.0);
                self.terms.extend(v);
            }
        }
    }

    pub fn pruned(mut self, policy: &TruncationPolicy) -> Self {
        self.prune(policy);
        self
    }

    /// Explicit ring form of a translation-reduced map.
    pub fn expand_full(&self) -> Self {
        match self.layout {
            Layout::Full => self.clone(),
            Layout::TranslationReduced => {
                let mut out = OperatorMap {
                    n_sites: self.n_sites,
                    layout: Layout::Full,
                    grade: self.grade,
                    terms: FxHashMap::default(),
                };
                for (s, c) in self.sorted_terms() {
                    if s.is_identity() {
                        // The orbit of the identity is the identity itself, once per site.
                        *out.terms.entry(s).or_insert(0.0) += c * self.n_sites as f64;
                        continue;
                    }
                    let mut orbit: Vec<PauliString> = (0..self.n_sites).map(|j| s.rotate(j)).collect();
                    orbit.sort();
                    orbit.dedup();
                    for r in orbit {
                        *out.terms.entry(r).or_insert(0.0) += c;
                    }
                }
                out
            }
        }
    }

    /// Grade 0 maps are Hermitian; grade 1 maps are anti-Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.grade == 0
    }
}

/// Real inner product of the stored coefficients, `Σ_s a_s b_s`.
///
/// For equal grades this is `(1/2^N) Tr[A†B]` (per site in the reduced
/// layout). See [`trace_inner_product`] for the graded complex value.
pub fn inner_product(a: &OperatorMap, b: &OperatorMap) -> Result<f64> {
    a.check_compatible(b)?;
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    Ok(small
        .terms
        .iter()
        .filter_map(|(s, c)| large.terms.get(s).map(|d| c * d))
        .sum())
}

/// `(1/2^N) Tr[A†B]` including the `i`-grades of both maps.
pub fn trace_inner_product(a: &OperatorMap, b: &OperatorMap) -> Result<Complex64> {
    let real = inner_product(a, b)?;
    let phase = Phase::from_power(b.grade as u32 + 3 * a.grade as u32);
    Ok(phase.to_complex() * real)
}

const CHUNK: usize = 2048;

/// `[A, B]`, pruned by `policy`.
///
/// Only anticommuting string pairs contribute, each as `2·a·b·s·t`. The
/// product phase is always `±i`, which is absorbed into the grade of the
/// result so coefficients stay real. Reduced-layout maps are treated as
/// translation sums: `[Σ_i T_i a, Σ_j T_j b] = Σ_j T_j Σ_k [T_k a, b]`.
pub fn commutator(a: &OperatorMap, b: &OperatorMap, policy: &TruncationPolicy) -> Result<OperatorMap> {
    a.check_compatible(b)?;
    let g = a.grade + b.grade + 1;
    let sign = if g >= 2 { -1.0 } else { 1.0 };
    let grade = g % 2;

    let a_terms: Vec<(PauliString, f64)> = a.terms.iter().map(|(s, c)| (*s, *c)).collect();
    let b_terms: Vec<(PauliString, f64)> = b.terms.iter().map(|(s, c)| (*s, *c)).collect();

    let partials: Vec<Result<FxHashMap<PauliString, f64>>> = match a.layout {
        Layout::Full => {
            // Chunk over the larger operand; pair order is preserved either way.
            if b_terms.len() >= a_terms.len() {
                b_terms
                    .par_chunks(CHUNK)
                    .map(|chunk| Ok(full_pairs(&a_terms, chunk, sign)))
                    .collect()
            } else {
                a_terms
                    .par_chunks(CHUNK)
                    .map(|chunk| Ok(full_pairs(chunk, &b_terms, sign)))
                    .collect()
            }
        }
        Layout::TranslationReduced => {
            let n = a.n_sites;
            if b_terms.len() >= a_terms.len() {
                b_terms
                    .par_chunks(CHUNK)
                    .map(|chunk| reduced_pairs(&a_terms, chunk, sign, n))
                    .collect()
            } else {
                a_terms
                    .par_chunks(CHUNK)
                    .map(|chunk| reduced_pairs(chunk, &b_terms, sign, n))
                    .collect()
            }
        }
    };

    let mut terms: FxHashMap<PauliString, f64> = FxHashMap::default();
    for part in partials {
        for (s, c) in part? {
            *terms.entry(s).or_insert(0.0) += c;
        }
    }
    let mut out = OperatorMap {
        n_sites: a.n_sites,
        layout: a.layout,
        grade,
        terms,
    };
    out.prune(policy);
    Ok(out)
}

#[inline]
fn anticommute(x1: u128, z1: u128, x2: u128, z2: u128) -> bool {
    ((x1 & z2) ^ (z1 & x2)).count_ones() % 2 == 1
}

fn full_pairs(
    a: &[(PauliString, f64)],
    b: &[(PauliString, f64)],
    sign: f64,
) -> FxHashMap<PauliString, f64> {
    let mut acc = FxHashMap::default();
    for (t, cb) in b {
        for (s, ca) in a {
            if s.commutes_with(t) {
                continue;
            }
            let (phase, u) = s.multiply_unchecked(t);
            let v = if phase == Phase::I { 2.0 } else { -2.0 };
            *acc.entry(u).or_insert(0.0) += sign * v * ca * cb;
        }
    }
    acc
}

fn span_of(mask: u128) -> usize {
    if mask == 0 {
        0
    } else {
        128 - mask.leading_zeros() as usize
    }
}

/// Largest span whose translation orbit has a unique representative.
pub(crate) fn reduced_span_limit(n_sites: usize) -> usize {
    (n_sites - 1) / 2
}

// Representatives sit at offset 0. The second operand is lifted by
// (span_a - 1) so every overlapping translate of the first is a plain left
// shift; results are brought back to offset 0 by their trailing zeros.
fn reduced_pairs(
    a: &[(PauliString, f64)],
    b: &[(PauliString, f64)],
    sign: f64,
    n_sites: usize,
) -> Result<FxHashMap<PauliString, f64>> {
    let limit = reduced_span_limit(n_sites);
    let mut acc = FxHashMap::default();
    for (t, cb) in b {
        let wt = span_of(t.support());
        if wt == 0 {
            continue;
        }
        for (s, ca) in a {
            let ws = span_of(s.support());
            if ws == 0 {
                continue;
            }
            let window = wt + 2 * (ws - 1);
            if wt > limit || ws > limit || window > n_sites || window > 128 {
                return Err(Error::RingTooSmall {
                    n_sites,
                    span: wt.max(ws).max(window.min(n_sites + 1)),
                    limit,
                });
            }
            let lift = ws - 1;
            let (tx, tz) = (t.x_mask() << lift, t.z_mask() << lift);
            for k in 0..(ws + wt - 1) {
                let (sx, sz) = (s.x_mask() << k, s.z_mask() << k);
                if !anticommute(sx, sz, tx, tz) {
                    continue;
                }
                let (phase, x, z) = mul_masks(sx, sz, tx, tz);
                let sup = x | z;
                let shift = sup.trailing_zeros();
                let (x, z) = (x >> shift, z >> shift);
                let span = span_of(x | z);
                if span > limit {
                    return Err(Error::RingTooSmall {
                        n_sites,
                        span,
                        limit,
                    });
                }
                let u = PauliString::from_masks_unchecked(n_sites, x, z);
                let v = if phase == Phase::I { 2.0 } else { -2.0 };
                *acc.entry(u).or_insert(0.0) += sign * v * ca * cb;
            }
        }
    }
    Ok(acc)
}
