use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest ring the bitmask encoding supports.
pub const MAX_SITES: usize = 128;

/// Single-site Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | '1' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A phase from the Pauli group, stored as a power of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    /// Exponent `k` in `i^k`, in `0..4`.
    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

pub(crate) fn site_mask(n_sites: usize) -> u128 {
    if n_sites >= 128 {
        u128::MAX
    } else {
        (1u128 << n_sites) - 1
    }
}

fn rotl(m: u128, s: usize, n: usize) -> u128 {
    let s = s % n;
    if s == 0 {
        return m;
    }
    ((m << s) | (m >> (n - s))) & site_mask(n)
}

/// One tensor product of single-site Paulis on an `n_sites` ring.
///
/// Site `k` carries X if bit `k` of `x` is set, Z if bit `k` of `z` is
/// set, and Y if both are. Ordering is lexicographic on `(x, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x: u128,
    z: u128,
    n_sites: u16,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::from_masks(n_sites, 0, 0)
    }

    pub fn from_masks(n_sites: usize, x: u128, z: u128) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::SiteCount {
                n_sites,
                max: MAX_SITES,
            });
        }
        let outside = !site_mask(n_sites);
        if (x | z) & outside != 0 {
            return Err(Error::usage(format!(
                "Pauli masks have bits set beyond site {}",
                n_sites - 1
            )));
        }
        Ok(PauliString {
            x,
            z,
            n_sites: n_sites as u16,
        })
    }

    // Callers guarantee the masks fit.
    pub(crate) fn from_masks_unchecked(n_sites: usize, x: u128, z: u128) -> Self {
        debug_assert!((x | z) & !site_mask(n_sites) == 0);
        PauliString {
            x,
            z,
            n_sites: n_sites as u16,
        }
    }

    /// Builds a string from `(site, pauli)` pairs; later pairs on the same site win.
    pub fn from_sites(n_sites: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n_sites)?;
        for &(site, p) in sites {
            if site >= n_sites {
                return Err(Error::usage(format!(
                    "site {site} out of range for {n_sites} sites"
                )));
            }
            s = s.with_site(site, p);
        }
        Ok(s)
    }

    fn with_site(mut self, site: usize, p: Pauli) -> Self {
        let bit = 1u128 << site;
        let (xb, zb) = p.bits();
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    pub fn x_mask(&self) -> u128 {
        self.x
    }

    pub fn z_mask(&self) -> u128 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn site(&self, k: usize) -> Pauli {
        Pauli::from_bits(self.x >> k & 1 == 1, self.z >> k & 1 == 1)
    }

    /// Mask of sites carrying a non-identity factor.
    pub fn support(&self) -> u128 {
        self.x | self.z
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    /// Only X and I factors.
    pub fn is_x_type(&self) -> bool {
        self.z == 0
    }

    /// Length of the shortest arc of the ring that contains the support.
    pub fn ring_span(&self) -> usize {
        self.minimal_arc().map_or(0, |(_, span)| span)
    }

    /// Start site and length of the shortest covering arc. Ties between
    /// equally short arcs resolve to the earliest start.
    fn minimal_arc(&self) -> Option<(usize, usize)> {
        let sup = self.support();
        if sup == 0 {
            return None;
        }
        let n = self.n_sites();
        let first = sup.trailing_zeros() as usize;
        let last = 127 - sup.leading_zeros() as usize;
        // Largest run of identity sites, cyclically; the arc starts right after it.
        let mut best_gap = n - 1 - last + first;
        let mut best_start = first;
        let mut rest = sup & !(1u128 << first);
        let mut prev = first;
        while rest != 0 {
            let p = rest.trailing_zeros() as usize;
            let gap = p - prev - 1;
            if gap > best_gap {
                best_gap = gap;
                best_start = p;
            }
            prev = p;
            rest &= rest - 1;
        }
        Some((best_start, n - best_gap))
    }

    /// Cyclic shift by `shift` sites towards higher indices.
    pub fn rotate(&self, shift: usize) -> Self {
        let n = self.n_sites();
        PauliString {
            x: rotl(self.x, shift, n),
            z: rotl(self.z, shift, n),
            n_sites: self.n_sites,
        }
    }

    /// Representative of the translation orbit: rotated so the shortest
    /// covering arc starts at site 0. When several arcs tie, the smallest
    /// rotated string is chosen so the result is a class invariant.
    pub fn canonical(&self) -> Self {
        let Some((start, span)) = self.minimal_arc() else {
            return *self;
        };
        let n = self.n_sites();
        if 2 * span < n {
            return self.rotate(n - start);
        }
        (0..n)
            .map(|s| self.rotate(s))
            .filter(|r| {
                let sup = r.support();
                sup.trailing_zeros() == 0 && (128 - sup.leading_zeros() as usize) == span
            })
            .min()
            .unwrap_or(*self)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Operator product `self · other = phase · product`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.n_sites != other.n_sites {
            return Err(Error::SiteMismatch {
                left: self.n_sites(),
                right: other.n_sites(),
            });
        }
        Ok(self.multiply_unchecked(other))
    }

    #[inline]
    pub(crate) fn multiply_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        let (phase, x, z) = mul_masks(self.x, self.z, other.x, other.z);
        (
            phase,
            PauliString {
                x,
                z,
                n_sites: self.n_sites,
            },
        )
    }
}

/// Product of two strings given as raw masks. Each string is
/// `i^{|x&z|} X^x Z^z`, and moving `Z^z1` past `X^x2` costs `(-1)^{|z1&x2|}`.
#[inline]
pub(crate) fn mul_masks(x1: u128, z1: u128, x2: u128, z2: u128) -> (Phase, u128, u128) {
    let x = x1 ^ x2;
    let z = z1 ^ z2;
    let k = (x1 & z1).count_ones() + (x2 & z2).count_ones() + 2 * (z1 & x2).count_ones() + 4 * 128
        - (x & z).count_ones();
    (Phase::from_power(k), x, z)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n_sites() {
            write!(f, "{}", self.site(k).as_char())?;
        }
        Ok(())
    }
}

/// Parses one character per site, site 0 first.
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        let mut p = PauliString::identity(chars.len())?;
        for (k, c) in chars.into_iter().enumerate() {
            let pauli = Pauli::from_char(c)
                .ok_or_else(|| Error::usage(format!("invalid Pauli character {c:?}")))?;
            p = p.with_site(k, pauli);
        }
        Ok(p)
    }
}
