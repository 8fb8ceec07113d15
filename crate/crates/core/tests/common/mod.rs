//! Dense brute-force oracles for small rings. Matrices are built here from
//! 2x2 Pauli blocks with Kronecker products, independent of the string
//! engine's own dense conversion.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use openkrylov::pauli::{OperatorMap, PauliString};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_matrix(p: char) -> CMat {
    let (o, one, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    let entries = match p {
        'I' => [one, o, o, one],
        'X' => [o, one, one, o],
        'Y' => [o, -i, i, o],
        'Z' => [one, o, o, -one],
        _ => panic!("not a Pauli: {p}"),
    };
    DMatrix::from_row_slice(2, 2, &entries)
}

/// `σ_{N-1} ⊗ … ⊗ σ_0`, so bit `k` of a basis index is site `k`.
pub fn dense_string(s: &PauliString) -> CMat {
    let chars: Vec<char> = s.to_string().chars().collect();
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for &p in chars.iter().rev() {
        m = m.kronecker(&pauli_matrix(p));
    }
    m
}

pub fn dense(op: &OperatorMap) -> CMat {
    let full = op.expand_full();
    let dim = 1usize << op.n_sites();
    let pre = if op.grade() == 1 { c(0.0, 1.0) } else { c(1.0, 0.0) };
    let mut m = CMat::zeros(dim, dim);
    for (s, coeff) in full.sorted_terms() {
        m += dense_string(&s) * (pre * coeff);
    }
    m
}

/// `(1/D) Tr[A†B]`.
pub fn ip(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>() / a.nrows() as f64
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator Lanczos on dense matrices: `b_1..b_count`.
pub fn dense_lanczos(h: &CMat, o0: &CMat, count: usize) -> Vec<f64> {
    let norm = ip(o0, o0).re.sqrt();
    let mut prev = CMat::zeros(o0.nrows(), o0.ncols());
    let mut cur = o0 / c(norm, 0.0);
    let mut b = Vec::with_capacity(count);
    let mut b_prev = 0.0;
    for _ in 0..count {
        let mut next = comm(h, &cur) - &prev * c(b_prev, 0.0);
        let bn = ip(&next, &next).re.sqrt();
        b.push(bn);
        if bn < 1e-12 {
            break;
        }
        next /= c(bn, 0.0);
        prev = cur;
        cur = next;
        b_prev = bn;
    }
    b
}

/// `|+⟩^⊗N`.
pub fn plus_state(n: usize) -> CVec {
    let dim = 1usize << n;
    CVec::from_element(dim, c((dim as f64).sqrt().recip(), 0.0))
}

pub fn expectation(a: &CMat, psi: &CVec) -> Complex64 {
    (psi.adjoint() * a * psi)[(0, 0)]
}

/// `⟨ψ(t)|A|ψ(t)⟩` with `ψ(t) = e^{-iHt} ψ`, for each time.
pub fn evolved_expectations(h: &CMat, a: &CMat, psi: &CVec, times: &[f64]) -> Vec<f64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let coeffs = v.adjoint() * psi;
    times
        .iter()
        .map(|&t| {
            let phased = CVec::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(x, e)| x * Complex64::from_polar(1.0, -e * t)),
            );
            let psi_t = v * phased;
            expectation(a, &psi_t).re
        })
        .collect()
}

/// Ladder operator `Σ_j s^±_j s^±_{j+1} … s^±_{j+k-1}` on a ring, built
/// from `s^+ = |0⟩⟨1|`.
pub fn dense_ladder(n: usize, k: usize, raising: bool) -> CMat {
    let mut s = CMat::zeros(2, 2);
    if raising {
        s[(0, 1)] = c(1.0, 0.0);
    } else {
        s[(1, 0)] = c(1.0, 0.0);
    }
    let dim = 1usize << n;
    let mut total = CMat::zeros(dim, dim);
    for j in 0..n {
        let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for site in (0..n).rev() {
            let offset = (site + n - j) % n;
            let factor = if offset < k { s.clone() } else { pauli_matrix('I') };
            m = m.kronecker(&factor);
        }
        total += m;
    }
    total
}

/// XXZ ring `Σ (X X + Y Y + Δ Z Z) + h Σ Z` from 2x2 blocks.
pub fn dense_xxz(n: usize, delta: f64, field: f64) -> CMat {
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    let site_op = |ops: &[(usize, char)]| {
        let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for site in (0..n).rev() {
            let p = ops.iter().find(|o| o.0 == site).map_or('I', |o| o.1);
            m = m.kronecker(&pauli_matrix(p));
        }
        m
    };
    for j in 0..n {
        let k = (j + 1) % n;
        for (p, w) in [('X', 1.0), ('Y', 1.0), ('Z', delta)] {
            h += site_op(&[(j, p), (k, p)]) * c(w, 0.0);
        }
        h += site_op(&[(j, 'Z')]) * c(field, 0.0);
    }
    h
}
