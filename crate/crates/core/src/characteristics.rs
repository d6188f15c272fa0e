//! Characteristic vectors with exact rational entries.
//!
//! A characteristic is a vector `v` in `Q^{2g}`, split into an upper half
//! `v_u` (first `g` entries) and a lower half `v_l`. Everything here is exact:
//! the downstream vanishing-order arithmetic depends on divisibility facts
//! that floating point cannot see.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Largest `N^{2g}` for which [`enumerate_index_classes`] materializes a list.
pub const MATERIALIZE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharError {
    #[error("characteristic has odd dimension {0}")]
    OddDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at component {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("I_N for g={genus}, N={level} has {size} residue vectors, above the materialization limit; use the iterator")]
    TooLarge { genus: usize, level: u64, size: u128 },
}

/// `⟨x⟩`, the representative of `x mod 1` in `[0, 1)`.
pub fn frac_part(x: &BigRational) -> BigRational {
    x - x.floor()
}

pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A vector of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FracVector {
    entries: Vec<BigRational>,
}

impl FracVector {
    pub fn new(entries: Vec<BigRational>) -> Self {
        FracVector { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        FracVector {
            entries: vec![BigRational::zero(); dim],
        }
    }

    /// Builds a vector from `(numerator, denominator)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Self {
        FracVector {
            entries: pairs.iter().map(|&(n, d)| rat(n, d)).collect(),
        }
    }

    /// The vector `residues / level`.
    pub fn from_residues(residues: &[u64], level: u64) -> Self {
        FracVector {
            entries: residues
                .iter()
                .map(|&r| BigRational::new(BigInt::from(r), BigInt::from(level)))
                .collect(),
        }
    }

    /// `(1/N)·e_j` in dimension `dim`, with `j` one-based.
    pub fn basis_over(dim: usize, j: usize, level: u64) -> Self {
        let mut res = vec![0u64; dim];
        res[j - 1] = 1;
        Self::from_residues(&res, level)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn genus(&self) -> Result<usize, CharError> {
        if self.entries.len() % 2 == 1 || self.entries.is_empty() {
            return Err(CharError::OddDimension(self.entries.len()));
        }
        Ok(self.entries.len() / 2)
    }

    /// Splits into `(v_u, v_l)`.
    pub fn split(&self) -> Result<(&[BigRational], &[BigRational]), CharError> {
        let g = self.genus()?;
        Ok(self.entries.split_at(g))
    }

    /// Entrywise fractional part `⟨v⟩`.
    pub fn reduced(&self) -> FracVector {
        FracVector {
            entries: self.entries.iter().map(frac_part).collect(),
        }
    }

    pub fn neg(&self) -> FracVector {
        FracVector {
            entries: self.entries.iter().map(|x| -x).collect(),
        }
    }

    pub fn add(&self, other: &FracVector) -> Result<FracVector, CharError> {
        if self.dim() != other.dim() {
            return Err(CharError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(FracVector {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &FracVector) -> Result<FracVector, CharError> {
        self.add(&other.neg())
    }

    /// Least common multiple of the entry denominators, i.e. the least
    /// positive `N` with `N·v` integral.
    pub fn exact_denominator(&self) -> BigInt {
        self.entries
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    /// True when every entry is an integer.
    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|x| x.is_integer())
    }

    /// `N·⟨v⟩` as residues mod `N`, or `None` if `N·v` is not integral.
    pub fn residues(&self, level: u64) -> Option<Vec<u64>> {
        let n = BigInt::from(level);
        self.entries
            .iter()
            .map(|x| {
                let scaled = frac_part(x) * BigRational::from_integer(n.clone());
                if scaled.is_integer() {
                    scaled.to_integer().to_u64()
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(rat_to_f64).collect()
    }

    /// `v_u^T v_l`.
    pub fn upper_dot_lower(&self) -> Result<BigRational, CharError> {
        let (u, l) = self.split()?;
        Ok(u.iter()
            .zip(l)
            .fold(BigRational::zero(), |acc, (a, b)| acc + a * b))
    }
}

pub(crate) fn rat_to_f64(x: &BigRational) -> f64 {
    // Entries are small; the ratio of the two f64 conversions is exact enough.
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) => n / d,
        _ => f64::NAN,
    }
}

fn lex_cmp(a: &[BigRational], b: &[BigRational]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

impl fmt::Display for FracVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for FracVector {
    type Err = CharError;

    /// Parses comma-separated rationals such as `1/3,0,-2/5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        for (position, part) in s.split(',').enumerate() {
            let part = part.trim();
            let parsed = BigRational::from_str(part).map_err(|_| CharError::Parse {
                position,
                message: format!("'{part}' is not a rational of the form a or a/b"),
            })?;
            entries.push(parsed);
        }
        Ok(FracVector { entries })
    }
}

/// A `±`-class of `v mod Z^{2g}` with exact denominator `level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexClass {
    rep: FracVector,
    level: u64,
    residues: Vec<u64>,
}

impl IndexClass {
    pub fn rep(&self) -> &FracVector {
        &self.rep
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// `N·rep`, entries in `[0, N)`.
    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn dim(&self) -> usize {
        self.residues.len()
    }

    /// Builds the class of `residues / level`. The residues need not be
    /// canonical; the exact denominator of the result may divide `level`.
    pub fn from_residues(residues: &[u64], level: u64) -> IndexClass {
        let reduced: Vec<u64> = residues.iter().map(|r| r % level).collect();
        let g = reduced.iter().fold(level, |acc, &r| acc.gcd(&r));
        let exact = level / g;
        let scaled: Vec<u64> = reduced.iter().map(|r| r / g).collect();
        canonical_residues(&scaled, exact)
    }
}

impl fmt::Display for IndexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rep)
    }
}

fn canonical_residues(residues: &[u64], level: u64) -> IndexClass {
    let negated: Vec<u64> = residues.iter().map(|&r| (level - r) % level).collect();
    let residues = if negated.as_slice() < residues {
        negated
    } else {
        residues.to_vec()
    };
    IndexClass {
        rep: FracVector::from_residues(&residues, level),
        level,
        residues,
    }
}

/// The representative of `{⟨v⟩, ⟨−v⟩}` that is lexicographically smaller.
pub fn canonical(v: &FracVector) -> IndexClass {
    let level = v.exact_denominator().to_u64().unwrap_or(u64::MAX);
    let pos = v.reduced();
    let neg = v.neg().reduced();
    let rep = if lex_cmp(neg.entries(), pos.entries()) == Ordering::Less {
        neg
    } else {
        pos
    };
    let residues = rep
        .residues(level)
        .expect("exact denominator clears every entry");
    IndexClass {
        rep,
        level,
        residues,
    }
}

/// Lazily walks `I_N / ±` in lexicographic order of canonical residues.
pub struct IndexClassIter {
    level: u64,
    current: Option<Vec<u64>>,
}

impl IndexClassIter {
    pub fn new(genus: usize, level: u64) -> Result<Self, CharError> {
        if genus == 0 {
            return Err(CharError::Argument("genus must be at least 1".into()));
        }
        if level < 2 {
            return Err(CharError::Argument(format!(
                "level must be at least 2, got {level}"
            )));
        }
        Ok(IndexClassIter {
            level,
            current: Some(vec![0; 2 * genus]),
        })
    }

    fn advance(&mut self) {
        if let Some(cur) = self.current.as_mut() {
            for slot in cur.iter_mut().rev() {
                *slot += 1;
                if *slot < self.level {
                    return;
                }
                *slot = 0;
            }
            self.current = None;
        }
    }
}

impl Iterator for IndexClassIter {
    type Item = IndexClass;

    fn next(&mut self) -> Option<IndexClass> {
        loop {
            let cur = self.current.clone()?;
            self.advance();
            let gcd = cur.iter().fold(self.level, |acc, &r| acc.gcd(&r));
            if gcd != 1 {
                continue;
            }
            let negated: Vec<u64> = cur.iter().map(|&r| (self.level - r) % self.level).collect();
            if negated < cur {
                continue;
            }
            return Some(IndexClass {
                rep: FracVector::from_residues(&cur, self.level),
                level: self.level,
                residues: cur,
            });
        }
    }
}

/// All classes of `I_N / ±` for genus `g`.
pub fn enumerate_index_classes(genus: usize, level: u64) -> Result<Vec<IndexClass>, CharError> {
    let iter = IndexClassIter::new(genus, level)?;
    let size = (level as u128).checked_pow(2 * genus as u32).unwrap_or(u128::MAX);
    if size > MATERIALIZE_LIMIT {
        return Err(CharError::TooLarge {
            genus,
            level,
            size,
        });
    }
    Ok(iter.collect())
}

/// A half-integral characteristic in `{0, 1/2}^{2g}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfChar {
    halves: Vec<bool>,
    parity: i8,
}

impl HalfChar {
    /// `halves[k]` is true when entry `k` equals 1/2.
    pub fn new(halves: Vec<bool>) -> Result<Self, CharError> {
        if halves.is_empty() || halves.len() % 2 == 1 {
            return Err(CharError::OddDimension(halves.len()));
        }
        let g = halves.len() / 2;
        let overlaps = (0..g).filter(|&i| halves[i] && halves[i + g]).count();
        let parity = if overlaps % 2 == 0 { 1 } else { -1 };
        Ok(HalfChar { halves, parity })
    }

    /// `e(2 a_u^T a_l)`, which is `−1` exactly on the vanishing set.
    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn is_odd(&self) -> bool {
        self.parity < 0
    }

    pub fn halves(&self) -> &[bool] {
        &self.halves
    }

    pub fn to_frac_vector(&self) -> FracVector {
        FracVector::new(
            self.halves
                .iter()
                .map(|&h| if h { rat(1, 2) } else { BigRational::zero() })
                .collect(),
        )
    }

    /// Recognizes `⟨v⟩ ∈ {0, 1/2}^{2g}`.
    pub fn from_frac_vector(v: &FracVector) -> Option<HalfChar> {
        let half = rat(1, 2);
        let halves: Option<Vec<bool>> = v
            .reduced()
            .entries()
            .iter()
            .map(|x| {
                if x.is_zero() {
                    Some(false)
                } else if *x == half {
                    Some(true)
                } else {
                    None
                }
            })
            .collect();
        HalfChar::new(halves?).ok()
    }
}

/// Splits `{0,1/2}^{2g}` into `(S_-, S_+)` by parity.
pub fn enumerate_half_chars(genus: usize) -> (Vec<HalfChar>, Vec<HalfChar>) {
    let dim = 2 * genus;
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    for mask in 0u64..(1u64 << dim) {
        // Most significant bit is the first coordinate, so masks run in
        // lexicographic order.
        let halves: Vec<bool> = (0..dim).map(|k| mask >> (dim - 1 - k) & 1 == 1).collect();
        let h = HalfChar::new(halves).expect("even dimension");
        if h.is_odd() {
            minus.push(h);
        } else {
            plus.push(h);
        }
    }
    (minus, plus)
}

/// `(n_0, n_{1/2})`: how many odd characteristics have a given coordinate
/// equal to 0, respectively 1/2. Independent of the coordinate.
pub fn n_counts(genus: usize) -> (u64, u64) {
    let g = genus as u32;
    let n_half = 1u64 << (2 * g - 2);
    let n_zero = n_half - (1u64 << (g - 1));
    (n_zero, n_half)
}

/// Per-coordinate counts over an explicit `S_-`, for cross-checking
/// [`n_counts`].
pub fn coordinate_counts(minus: &[HalfChar]) -> Vec<(u64, u64)> {
    let dim = minus.first().map_or(0, |a| a.halves.len());
    (0..dim)
        .map(|k| {
            let half = minus.iter().filter(|a| a.halves[k]).count() as u64;
            (minus.len() as u64 - half, half)
        })
        .collect()
}

/// `|S_-| = 2^{g-1}(2^g - 1)` and `|S_+| = 2^{g-1}(2^g + 1)`.
pub fn half_char_counts(genus: usize) -> (u64, u64) {
    let g = genus as u32;
    let p = 1u64 << (g - 1);
    let q = 1u64 << g;
    (p * (q - 1), p * (q + 1))
}

/// True iff some pair `(⟨v_k⟩, ⟨v_{k+g}⟩)` lies in `{0,1/2}^2`.
pub fn has_half_integral_pair(v: &FracVector) -> bool {
    let Ok(g) = v.genus() else { return false };
    let r = v.reduced();
    let half = rat(1, 2);
    let is_half_int = |x: &BigRational| x.is_zero() || *x == half;
    (0..g).any(|k| is_half_int(&r.entries()[k]) && is_half_int(&r.entries()[k + g]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_part_examples() {
        assert_eq!(frac_part(&rat(0, 1)), rat(0, 1));
        assert_eq!(frac_part(&rat(-1, 3)), rat(2, 3));
        assert_eq!(frac_part(&rat(7, 5)), rat(2, 5));
    }

    #[test]
    fn split_examples() {
        let v: FracVector = "1/3,0,0,2/3".parse().unwrap();
        let (u, l) = v.split().unwrap();
        assert_eq!(u, &[rat(1, 3), rat(0, 1)]);
        assert_eq!(l, &[rat(0, 1), rat(2, 3)]);

        let f = FracVector::from_residues(&[1, 1, 0, 0], 7);
        let (_, l) = f.split().unwrap();
        assert!(l.iter().all(|x| x.is_zero()));

        let odd: FracVector = "1/2,0,0".parse().unwrap();
        assert_eq!(odd.split(), Err(CharError::OddDimension(3)));
    }

    #[test]
    fn canonical_examples() {
        let c = canonical(&"2/3,0,0,0".parse().unwrap());
        assert_eq!(c.rep().to_string(), "1/3,0,0,0");
        assert_eq!(c.level(), 3);

        let c = canonical(&"1/5,0,0,0".parse().unwrap());
        assert_eq!(c.rep().to_string(), "1/5,0,0,0");

        let c = canonical(&"1/3,2/3,0,0".parse().unwrap());
        assert_eq!(c.rep().to_string(), "1/3,2/3,0,0");
        assert_eq!(c.residues(), &[1, 2, 0, 0]);
    }

    #[test]
    fn canonical_agrees_with_residue_form() {
        let v: FracVector = "-7/6,5/3,1/2,0".parse().unwrap();
        let a = canonical(&v);
        let b = IndexClass::from_residues(&v.residues(6).unwrap(), 6);
        assert_eq!(a, b);
    }

    #[test]
    fn enumeration_counts() {
        let g1n2 = enumerate_index_classes(1, 2).unwrap();
        let reps: Vec<String> = g1n2.iter().map(|c| c.to_string()).collect();
        assert_eq!(reps, vec!["0,1/2", "1/2,0", "1/2,1/2"]);
        assert_eq!(enumerate_index_classes(2, 3).unwrap().len(), 40);
        assert_eq!(enumerate_index_classes(2, 5).unwrap().len(), 312);
        assert!(matches!(
            enumerate_index_classes(2, 1),
            Err(CharError::Argument(_))
        ));
        assert!(matches!(
            enumerate_index_classes(3, 20),
            Err(CharError::TooLarge { .. })
        ));
        // The iterator still covers large cases lazily.
        assert!(IndexClassIter::new(3, 20).unwrap().next().is_some());
    }

    #[test]
    fn half_char_examples() {
        let (m, p) = enumerate_half_chars(1);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].to_frac_vector().to_string(), "1/2,1/2");
        assert_eq!(p.len(), 3);

        let (m, p) = enumerate_half_chars(2);
        assert_eq!((m.len(), p.len()), (6, 10));
        let a = HalfChar::from_frac_vector(&"1/2,0,1/2,0".parse().unwrap()).unwrap();
        assert_eq!(a.parity(), -1);
        assert!(m.contains(&a));
    }

    #[test]
    fn n_count_examples() {
        assert_eq!(n_counts(1), (0, 1));
        assert_eq!(n_counts(2), (2, 4));
        assert_eq!(n_counts(3), (12, 16));
        let (m, _) = enumerate_half_chars(3);
        assert_eq!(m.len(), 28);
        assert!(coordinate_counts(&m).iter().all(|&c| c == (12, 16)));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = FracVector::from_str("1/3,x,0").unwrap_err();
        assert!(matches!(err, CharError::Parse { position: 1, .. }));
    }

    #[test]
    fn half_pairs() {
        assert!(has_half_integral_pair(&"1/2,1/3,0,1/3".parse().unwrap()));
        assert!(!has_half_integral_pair(&"1/2,1/3,1/3,1/3".parse().unwrap()));
        assert!(has_half_integral_pair(&"0,1/5,0,1/5".parse().unwrap()));
    }
}
