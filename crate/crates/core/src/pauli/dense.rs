//! Dense matrices for small rings. Test oracle only.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::OperatorMap;
use super::string::{Pauli, PauliString};
use crate::error::{Error, Result};

/// Largest ring `to_dense` accepts (`4^12` matrix entries).
pub const DENSE_MAX_SITES: usize = 12;

fn single_site(p: Pauli) -> [[Complex64; 2]; 2] {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match p {
        Pauli::I => [[one, o], [o, one]],
        Pauli::X => [[o, one], [one, o]],
        Pauli::Y => [[o, -i], [i, o]],
        Pauli::Z => [[one, o], [o, -one]],
    }
}

/// Nonzero entries of `σ_{N-1} ⊗ … ⊗ σ_0`, built one Kronecker factor at a
/// time. Basis index bit `k` is the state of site `k`.
pub fn kron_entries(s: &PauliString) -> Vec<(usize, usize, Complex64)> {
    let mut entries = vec![(0usize, 0usize, Complex64::new(1.0, 0.0))];
    // Prepending site k as the most significant factor of the sites below it.
    for k in 0..s.n_sites() {
        let m = single_site(s.site(k));
        let mut next = Vec::with_capacity(entries.len() * 2);
        for (hi_r, row) in m.iter().enumerate() {
            for (hi_c, v) in row.iter().enumerate() {
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                for &(r, c, w) in &entries {
                    next.push((hi_r << k | r, hi_c << k | c, v * w));
                }
            }
        }
        entries = next;
    }
    entries
}

/// Exact `2^N × 2^N` matrix of the operator (reduced maps are expanded).
pub fn to_dense(op: &OperatorMap) -> Result<DMatrix<Complex64>> {
    let n = op.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(Error::DenseTooLarge {
            n_sites: n,
            max: DENSE_MAX_SITES,
        });
    }
    let full = op.expand_full();
    let dim = 1usize << n;
    let prefactor = if op.grade() == 1 {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (s, c) in full.sorted_terms() {
        for (r, col, v) in kron_entries(&s) {
            m[(r, col)] += prefactor * c * v;
        }
    }
    Ok(m)
}

/// `(1/2^N) Tr[A†B]` of dense matrices.
pub fn dense_inner_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let dim = a.nrows() as f64;
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>() / dim
}
