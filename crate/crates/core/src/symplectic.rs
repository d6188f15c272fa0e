//! Symplectic and similitude matrices over `Z` and `Z/NZ`.
//!
//! Conventions: `J = [[O, -I], [I, O]]`, a similitude satisfies
//! `α^T J α = ν(α) J`, the action on the Siegel upper half-space is
//! `α(Z) = (AZ + B)(CZ + D)^{-1}` and the action on characteristic indices is
//! `v ↦ α^T v`. With these choices `Θ_v(α(Z)) = Θ_{α^T v}(Z)` holds for every
//! integral symplectic `α`, which the numeric suites check directly.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::characteristics::{FracVector, IndexClass};
use crate::par::Exec;
use crate::theta_num::{SiegelPoint, ThetaError};

/// Condition number above which `CZ + D` is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Default cap on the number of group elements a BFS may produce.
pub const DEFAULT_GROUP_BUDGET: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum SymplecticError {
    #[error("matrix must be square of even size, got {rows}x{cols}")]
    Dimension { rows: usize, cols: usize },
    #[error("matrix is not a similitude: {0}")]
    NotSimilitude(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("integer overflow in matrix product")]
    Overflow,
    #[error("CZ+D is numerically singular (condition estimate {condition:.3e}, residual {residual:.3e})")]
    Conditioning { condition: f64, residual: f64 },
    #[error("group closure exceeded the budget of {limit} elements")]
    BudgetExceeded { limit: usize },
    #[error("group cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Point(#[from] ThetaError),
}

fn modp(x: i64, n: u64) -> i64 {
    x.rem_euclid(n as i64)
}

/// Returns `ν` with `α^T J α = ν J`, rejecting non-similitudes and
/// non-invertible `ν` (`ν = ±1` over `Z`, `gcd(ν, N) = 1` mod `N`).
///
/// `entries` is row-major of side `size`.
pub fn is_gsp(entries: &[i64], size: usize, level: Option<u64>) -> Result<i64, SymplecticError> {
    if size == 0 || size % 2 == 1 || entries.len() != size * size {
        return Err(SymplecticError::Dimension {
            rows: size,
            cols: entries.len().checked_div(size).unwrap_or(0),
        });
    }
    let g = size / 2;
    let at = |i: usize, j: usize| entries[i * size + j] as i128;
    // (α^T J α)_{ij} = Σ_k α_{k+g, i} α_{k, j} − α_{k, i} α_{k+g, j}
    let form = |i: usize, j: usize| -> i128 {
        (0..g)
            .map(|k| at(k + g, i) * at(k, j) - at(k, i) * at(k + g, j))
            .sum()
    };
    let reduce = |x: i128| -> i128 {
        match level {
            Some(n) => x.rem_euclid(n as i128),
            None => x,
        }
    };
    let nu = reduce(form(g, 0));
    for i in 0..size {
        for j in 0..size {
            let target = if i >= g && j + g == i {
                nu
            } else if i < g && j == i + g {
                -nu
            } else {
                0
            };
            if reduce(form(i, j) - target) != 0 {
                return Err(SymplecticError::NotSimilitude(format!(
                    "(α^T J α)[{i}][{j}] breaks the similitude relation"
                )));
            }
        }
    }
    match level {
        None if nu == 1 || nu == -1 => Ok(nu as i64),
        None => Err(SymplecticError::NotSimilitude(format!(
            "multiplier {nu} is not a unit in Z"
        ))),
        Some(n) => {
            if (nu as i64).gcd(&(n as i64)) == 1 || n == 1 {
                Ok(nu as i64)
            } else {
                Err(SymplecticError::NotSimilitude(format!(
                    "multiplier {nu} is not a unit mod {n}"
                )))
            }
        }
    }
}

/// A `2g × 2g` similitude, integral or reduced mod `level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymplecticMatrix {
    genus: usize,
    level: Option<u64>,
    entries: Vec<i64>,
    nu: i64,
}

impl SymplecticMatrix {
    pub fn new(entries: Vec<i64>, level: Option<u64>) -> Result<Self, SymplecticError> {
        let size = (entries.len() as f64).sqrt().round() as usize;
        if size * size != entries.len() {
            return Err(SymplecticError::Dimension {
                rows: entries.len(),
                cols: 1,
            });
        }
        let entries = match level {
            Some(0) => return Err(SymplecticError::Argument("level must be positive".into())),
            Some(n) => entries.into_iter().map(|x| modp(x, n)).collect(),
            None => entries,
        };
        let nu = is_gsp(&entries, size, level)?;
        Ok(SymplecticMatrix {
            genus: size / 2,
            level,
            entries,
            nu,
        })
    }

    pub fn from_rows(rows: &[Vec<i64>], level: Option<u64>) -> Result<Self, SymplecticError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SymplecticError::Dimension {
                rows: n,
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        Self::new(rows.concat(), level)
    }

    /// Assembles `[[A, B], [C, D]]` from row-major `g × g` blocks.
    pub fn from_blocks(
        a: &[i64],
        b: &[i64],
        c: &[i64],
        d: &[i64],
        genus: usize,
        level: Option<u64>,
    ) -> Result<Self, SymplecticError> {
        let size = 2 * genus;
        let mut e = vec![0i64; size * size];
        for i in 0..genus {
            for j in 0..genus {
                e[i * size + j] = a[i * genus + j];
                e[i * size + j + genus] = b[i * genus + j];
                e[(i + genus) * size + j] = c[i * genus + j];
                e[(i + genus) * size + j + genus] = d[i * genus + j];
            }
        }
        Self::new(e, level)
    }

    pub fn identity(genus: usize) -> Self {
        let size = 2 * genus;
        let mut e = vec![0i64; size * size];
        for i in 0..size {
            e[i * size + i] = 1;
        }
        SymplecticMatrix {
            genus,
            level: None,
            entries: e,
            nu: 1,
        }
    }

    /// The standard form `J = [[O, -I], [I, O]]`.
    pub fn j_form(genus: usize) -> Self {
        let z = vec![0i64; genus * genus];
        let id = identity_block(genus);
        let neg: Vec<i64> = id.iter().map(|x| -x).collect();
        Self::from_blocks(&z, &neg, &id, &z, genus, None).expect("J is symplectic")
    }

    /// `diag(I, ν I)` mod `level`.
    pub fn similitude_diag(genus: usize, nu: u64, level: u64) -> Result<Self, SymplecticError> {
        let z = vec![0i64; genus * genus];
        let id = identity_block(genus);
        let d: Vec<i64> = id.iter().map(|x| x * nu as i64).collect();
        Self::from_blocks(&id, &z, &z, &d, genus, Some(level))
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn size(&self) -> usize {
        2 * self.genus
    }

    pub fn level(&self) -> Option<u64> {
        self.level
    }

    pub fn nu(&self) -> i64 {
        self.nu
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.size() + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.size()).map(|r| r.to_vec()).collect()
    }

    /// `(A, B, C, D)` as row-major `g × g` blocks.
    pub fn blocks(&self) -> [Vec<i64>; 4] {
        let g = self.genus;
        let block = |r0: usize, c0: usize| -> Vec<i64> {
            (0..g)
                .flat_map(|i| (0..g).map(move |j| (i, j)))
                .map(|(i, j)| self.get(r0 + i, c0 + j))
                .collect()
        };
        [block(0, 0), block(0, g), block(g, 0), block(g, g)]
    }

    pub fn transpose(&self) -> Result<Self, SymplecticError> {
        let n = self.size();
        let mut t = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = self.entries[i * n + j];
            }
        }
        Self::new(t, self.level)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SymplecticError> {
        if self.size() != other.size() {
            return Err(SymplecticError::Argument("size mismatch in product".into()));
        }
        let level = match (self.level, other.level) {
            (Some(a), Some(b)) if a != b => {
                return Err(SymplecticError::Argument(format!(
                    "level mismatch in product: {a} vs {b}"
                )))
            }
            (Some(a), _) | (_, Some(a)) => Some(a),
            (None, None) => None,
        };
        let n = self.size();
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: i64 = 0;
                for k in 0..n {
                    let term = self.entries[i * n + k]
                        .checked_mul(other.entries[k * n + j])
                        .ok_or(SymplecticError::Overflow)?;
                    acc = acc.checked_add(term).ok_or(SymplecticError::Overflow)?;
                }
                out[i * n + j] = match level {
                    Some(m) => modp(acc, m),
                    None => acc,
                };
            }
        }
        Self::new(out, level)
    }

    /// `α^{-1} = ν^{-1} J^{-1} α^T J`.
    pub fn inverse(&self) -> Result<Self, SymplecticError> {
        let j = match self.level {
            Some(n) => Self::j_form(self.genus).reduce(n)?,
            None => Self::j_form(self.genus),
        };
        let j_inv = j.mul(&j)?.mul(&j)?;
        let core = j_inv.mul(&self.transpose()?)?.mul(&j)?;
        let nu_inv = match self.level {
            None => self.nu,
            Some(n) => mod_inverse(self.nu, n).ok_or_else(|| {
                SymplecticError::NotSimilitude(format!("multiplier {} not invertible", self.nu))
            })?,
        };
        let scaled: Vec<i64> = core.entries.iter().map(|x| x * nu_inv).collect();
        Self::new(scaled, self.level)
    }

    pub fn reduce(&self, level: u64) -> Result<Self, SymplecticError> {
        if let Some(m) = self.level {
            if m % level != 0 {
                return Err(SymplecticError::Argument(format!(
                    "cannot reduce level {m} matrix mod {level}"
                )));
            }
        }
        Self::new(self.entries.clone(), Some(level))
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_row_slice(n, n, &self.entries.iter().map(|&x| x as f64).collect::<Vec<_>>())
    }

    /// `α^T v` computed exactly; requires an integral matrix.
    pub fn transpose_apply(&self, v: &FracVector) -> Result<FracVector, SymplecticError> {
        if self.level.is_some() {
            return Err(SymplecticError::Argument(
                "exact action on rational vectors needs an integral matrix".into(),
            ));
        }
        let n = self.size();
        if v.dim() != n {
            return Err(SymplecticError::Argument(format!(
                "vector of dimension {} against a {n}x{n} matrix",
                v.dim()
            )));
        }
        let out = (0..n)
            .map(|i| {
                (0..n).fold(BigRational::zero(), |acc, j| {
                    acc + BigRational::from_integer(BigInt::from(self.get(j, i))) * &v.entries()[j]
                })
            })
            .collect();
        Ok(FracVector::new(out))
    }
}

fn identity_block(genus: usize) -> Vec<i64> {
    let mut id = vec![0i64; genus * genus];
    for i in 0..genus {
        id[i * genus + i] = 1;
    }
    id
}

fn mod_inverse(a: i64, n: u64) -> Option<i64> {
    let n = n as i64;
    let e = a.rem_euclid(n).extended_gcd(&n);
    if e.gcd == 1 {
        Some(e.x.rem_euclid(n))
    } else {
        None
    }
}

/// `α(Z) = (AZ + B)(CZ + D)^{-1}` for a real similitude with `ν > 0`.
///
/// The product with `(CZ + D)^{-1}` is computed by an LU solve with partial
/// pivoting.
pub fn act_on_h_real(alpha: &DMatrix<f64>, z: &SiegelPoint) -> Result<SiegelPoint, SymplecticError> {
    let g = z.genus();
    if alpha.nrows() != 2 * g || alpha.ncols() != 2 * g {
        return Err(SymplecticError::Dimension {
            rows: alpha.nrows(),
            cols: alpha.ncols(),
        });
    }
    let mut jm = DMatrix::<f64>::zeros(2 * g, 2 * g);
    for i in 0..g {
        jm[(i, i + g)] = -1.0;
        jm[(i + g, i)] = 1.0;
    }
    let form = alpha.transpose() * &jm * alpha;
    let nu = form[(g, 0)];
    let scale = alpha.norm().max(1.0).powi(2);
    if (form - &jm * nu).norm() > 1e-9 * scale || nu <= 0.0 {
        return Err(SymplecticError::NotSimilitude(format!(
            "real action needs a similitude with positive multiplier (got ν ≈ {nu})"
        )));
    }
    let to_c = |m: DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let a = to_c(alpha.view((0, 0), (g, g)).into_owned());
    let b = to_c(alpha.view((0, g), (g, g)).into_owned());
    let c = to_c(alpha.view((g, 0), (g, g)).into_owned());
    let d = to_c(alpha.view((g, g), (g, g)).into_owned());
    let zc = z.to_complex();
    let num = &a * &zc + &b;
    let den = &c * &zc + &d;

    // W (CZ+D) = AZ+B  <=>  (CZ+D)^T W^T = (AZ+B)^T
    let den_t = den.transpose();
    let lu = den_t.clone().lu();
    let inv = lu.try_inverse();
    let condition = match &inv {
        Some(inv) => one_norm(&den_t) * one_norm(inv),
        None => f64::INFINITY,
    };
    let rhs = num.transpose();
    let solved = lu.solve(&rhs);
    let residual = match &solved {
        Some(w_t) => (&den_t * w_t - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE),
        None => f64::INFINITY,
    };
    if !(condition <= CONDITION_LIMIT) {
        return Err(SymplecticError::Conditioning {
            condition,
            residual,
        });
    }
    let w = solved
        .ok_or(SymplecticError::Conditioning {
            condition,
            residual,
        })?
        .transpose();
    let sym = (&w + w.transpose()) * Complex64::new(0.5, 0.0);
    Ok(SiegelPoint::from_complex(&sym)?)
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Integral-matrix convenience wrapper around [`act_on_h_real`].
pub fn act_on_h(alpha: &SymplecticMatrix, z: &SiegelPoint) -> Result<SiegelPoint, SymplecticError> {
    if alpha.level().is_some() {
        return Err(SymplecticError::Argument(
            "the action on H_g needs an integral matrix, not a residue class".into(),
        ));
    }
    act_on_h_real(&alpha.to_real(), z)
}

/// `canonical(α^T v)`.
pub fn act_on_index(alpha: &SymplecticMatrix, v: &IndexClass) -> Result<IndexClass, SymplecticError> {
    let n = v.level();
    if let Some(m) = alpha.level() {
        if m != n {
            return Err(SymplecticError::Argument(format!(
                "matrix level {m} does not match index level {n}"
            )));
        }
    }
    if alpha.size() != v.dim() {
        return Err(SymplecticError::Argument(format!(
            "index of dimension {} against a {}x{} matrix",
            v.dim(),
            alpha.size(),
            alpha.size()
        )));
    }
    let size = alpha.size();
    let res = v.residues();
    let out: Vec<u64> = (0..size)
        .map(|i| {
            let s: i128 = (0..size)
                .map(|j| alpha.get(j, i) as i128 * res[j] as i128)
                .sum();
            s.rem_euclid(n as i128) as u64
        })
        .collect();
    Ok(IndexClass::from_residues(&out, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CongruenceFlags {
    /// `α ≡ I (mod N)`.
    pub in_gamma: bool,
    /// `α ≡ [[I, *], [O, I]] (mod N)`.
    pub in_gamma_upper: bool,
    /// `α ≡ [[I, O], [*, I]] (mod N)`.
    pub in_gamma_lower: bool,
}

pub fn congruence_tests(alpha: &SymplecticMatrix, level: u64) -> CongruenceFlags {
    let g = alpha.genus();
    let n = level as i64;
    let is = |i: usize, j: usize, want: i64| (alpha.get(i, j) - want).rem_euclid(n) == 0;
    let block_is = |r0: usize, c0: usize, identity: bool| {
        (0..g).all(|i| (0..g).all(|j| is(r0 + i, c0 + j, (identity && i == j) as i64)))
    };
    let diag_ok = block_is(0, 0, true) && block_is(g, g, true);
    let b_zero = block_is(0, g, false);
    let c_zero = block_is(g, 0, false);
    CongruenceFlags {
        in_gamma: diag_ok && b_zero && c_zero,
        in_gamma_upper: diag_ok && c_zero,
        in_gamma_lower: diag_ok && b_zero,
    }
}

/// The elementary matrices used to transport characteristics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElementaryKind {
    /// `[[I + E_ij, O], [O, I − E_ji]]^T`, `i ≠ j ≤ g`.
    C1,
    /// `[[I − E_ij, O], [O, I + E_ji]]^T`, `i ≠ j ≤ g`.
    C2,
    /// `[[I, O], [E'_{i−g, j}, I]]^T`, `g < i ≤ 2g`, `j ≤ g`.
    C3,
    /// `[[I, O], [−E'_{i−g, j}, I]]^T`.
    C4,
    /// `[[O, I], [−I, O]]^T`, which sends `(v_u; v_l)` to `(v_l; −v_u)`.
    Rotation,
    /// `[[I + Σ E_{k j}, O], [O, I − Σ E_{j k}]]^T` over the listed `k`.
    Transport(Vec<usize>),
}

/// `E_rs` as a row-major `g × g` block (one-based indices).
pub fn unit_block(genus: usize, r: usize, s: usize) -> Vec<i64> {
    let mut m = vec![0i64; genus * genus];
    m[(r - 1) * genus + (s - 1)] = 1;
    m
}

/// `E'_rs = E_rs + E_sr` for `r ≠ s`, `E_rr` otherwise.
pub fn sym_unit_block(genus: usize, r: usize, s: usize) -> Vec<i64> {
    let mut m = unit_block(genus, r, s);
    if r != s {
        m[(s - 1) * genus + (r - 1)] += 1;
    }
    m
}

fn add_blocks(a: &[i64], b: &[i64], sign: i64) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + sign * y).collect()
}

/// Builds an elementary matrix; indices are one-based.
pub fn elementary(
    kind: &ElementaryKind,
    i: usize,
    j: usize,
    genus: usize,
) -> Result<SymplecticMatrix, SymplecticError> {
    let g = genus;
    let id = identity_block(g);
    let z = vec![0i64; g * g];
    let in_upper = |k: usize| (1..=g).contains(&k);
    let m = match kind {
        ElementaryKind::C1 | ElementaryKind::C2 => {
            if !in_upper(i) || !in_upper(j) || i == j {
                return Err(SymplecticError::Argument(format!(
                    "C1/C2 need distinct indices in 1..={g}, got ({i}, {j})"
                )));
            }
            let sign = if *kind == ElementaryKind::C1 { 1 } else { -1 };
            let a = add_blocks(&id, &unit_block(g, i, j), sign);
            let d = add_blocks(&id, &unit_block(g, j, i), -sign);
            SymplecticMatrix::from_blocks(&a, &z, &z, &d, g, None)?
        }
        ElementaryKind::C3 | ElementaryKind::C4 => {
            if !(g + 1..=2 * g).contains(&i) || !in_upper(j) {
                return Err(SymplecticError::Argument(format!(
                    "C3/C4 need i in {}..={} and j in 1..={g}, got ({i}, {j})",
                    g + 1,
                    2 * g
                )));
            }
            let sign = if *kind == ElementaryKind::C3 { 1 } else { -1 };
            let c: Vec<i64> = sym_unit_block(g, i - g, j).iter().map(|x| sign * x).collect();
            SymplecticMatrix::from_blocks(&id, &z, &c, &id, g, None)?
        }
        ElementaryKind::Rotation => {
            let neg: Vec<i64> = id.iter().map(|x| -x).collect();
            SymplecticMatrix::from_blocks(&z, &id, &neg, &z, g, None)?
        }
        ElementaryKind::Transport(ks) => {
            if !in_upper(j) || ks.is_empty() || ks.iter().any(|&k| !in_upper(k) || k == j) {
                return Err(SymplecticError::Argument(format!(
                    "transport needs j in 1..={g} and indices k ≠ j, got j={j}, k={ks:?}"
                )));
            }
            let mut a = id.clone();
            let mut d = id.clone();
            for &k in ks {
                a = add_blocks(&a, &unit_block(g, k, j), 1);
                d = add_blocks(&d, &unit_block(g, j, k), -1);
            }
            SymplecticMatrix::from_blocks(&a, &z, &z, &d, g, None)?
        }
    };
    m.transpose()
}

/// `[[I, O], [S, I]]` for a symmetric integral `S` (row-major `g × g`).
pub fn lower_unipotent(s: &[i64], genus: usize) -> Result<SymplecticMatrix, SymplecticError> {
    let id = identity_block(genus);
    let z = vec![0i64; genus * genus];
    SymplecticMatrix::from_blocks(&id, &z, s, &id, genus, None)
}

/// `[[I, S], [O, I]]` for a symmetric integral `S`.
pub fn upper_unipotent(s: &[i64], genus: usize) -> Result<SymplecticMatrix, SymplecticError> {
    let id = identity_block(genus);
    let z = vec![0i64; genus * genus];
    SymplecticMatrix::from_blocks(&id, s, &z, &id, genus, None)
}

/// `[[A, O], [O, (A^T)^{-1}]]` for unimodular `A`; `a_inv_t` must be `(A^T)^{-1}`.
pub fn block_diagonal(a: &[i64], a_inv_t: &[i64], genus: usize) -> Result<SymplecticMatrix, SymplecticError> {
    let z = vec![0i64; genus * genus];
    SymplecticMatrix::from_blocks(a, &z, &z, a_inv_t, genus, None)
}

/// The standard generators of `Sp_{2g}`: the rotation and every
/// `[[I, E'_rs], [O, I]]`.
pub fn standard_sp_generators(genus: usize) -> Vec<SymplecticMatrix> {
    let mut gens = vec![elementary(&ElementaryKind::Rotation, 1, 1, genus).expect("rotation")];
    for r in 1..=genus {
        for s in r..=genus {
            gens.push(upper_unipotent(&sym_unit_block(genus, r, s), genus).expect("unipotent"));
        }
    }
    gens
}

/// `|Sp_{2g}(Z/NZ)|` from the prime-power factorization of `N`.
pub fn sp_order(genus: usize, level: u64) -> u128 {
    let dim = (genus * (2 * genus + 1)) as u32;
    let mut n = level;
    let mut order: u128 = 1;
    let mut p = 2u64;
    while n > 1 {
        if p * p > n {
            p = n;
        }
        if n.is_multiple_of(p) {
            let mut k = 0u32;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            let pp = p as u128;
            let mut field: u128 = pp.pow((genus * genus) as u32);
            for i in 1..=genus as u32 {
                field *= pp.pow(2 * i) - 1;
            }
            order *= field * pp.pow(dim * (k - 1));
        }
        p += 1;
    }
    order
}

/// A residue matrix in canonical `±` form: the lexicographically smaller of
/// `α` and `−α` (row-major). Its first nonzero entry lies in `1..=⌊N/2⌋`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModElement(Vec<u32>);

impl ModElement {
    pub fn canonical(entries: Vec<u32>, level: u64) -> Self {
        let n = level as u32;
        let neg: Vec<u32> = entries.iter().map(|&x| (n - x) % n).collect();
        ModElement(if neg < entries { neg } else { entries })
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    fn mul(&self, other: &ModElement, size: usize, level: u64) -> ModElement {
        let mut out = vec![0u32; size * size];
        for i in 0..size {
            for j in 0..size {
                let mut acc = 0u64;
                for k in 0..size {
                    acc += self.0[i * size + k] as u64 * other.0[k * size + j] as u64;
                }
                out[i * size + j] = (acc % level) as u32;
            }
        }
        ModElement::canonical(out, level)
    }

    pub fn to_matrix(&self, level: u64) -> Result<SymplecticMatrix, SymplecticError> {
        SymplecticMatrix::new(self.0.iter().map(|&x| x as i64).collect(), Some(level))
    }
}

/// The finite group generated by a set of residue matrices, stored up to sign.
#[derive(Clone, Debug)]
pub struct GroupTable {
    genus: usize,
    level: u64,
    elements: Vec<ModElement>,
    lookup: HashMap<ModElement, usize>,
    generator_hash: [u8; 32],
    similitudes: bool,
}

fn hash_generators(gens: &[SymplecticMatrix], level: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(level.to_le_bytes());
    for g in gens {
        for &x in g.entries() {
            h.update(x.rem_euclid(level as i64).to_le_bytes());
        }
        h.update(b";");
    }
    h.finalize().into()
}

/// Closes `generators` under right multiplication starting from the identity.
pub fn bfs_group(
    genus: usize,
    level: u64,
    generators: &[SymplecticMatrix],
    budget: usize,
    exec: Exec,
) -> Result<GroupTable, SymplecticError> {
    if level < 2 {
        return Err(SymplecticError::Argument("level must be at least 2".into()));
    }
    let size = 2 * genus;
    let mut gens = Vec::with_capacity(generators.len());
    for g in generators {
        if g.size() != size {
            return Err(SymplecticError::Argument("generator has the wrong size".into()));
        }
        let reduced = g.reduce(level)?;
        gens.push(ModElement::canonical(
            reduced.entries().iter().map(|&x| x as u32).collect(),
            level,
        ));
    }
    let id = SymplecticMatrix::identity(genus);
    let start = ModElement::canonical(id.entries().iter().map(|&x| x as u32).collect(), level);
    let mut elements = vec![start.clone()];
    let mut lookup = HashMap::new();
    lookup.insert(start, 0usize);
    let mut frontier = 0..1;
    while !frontier.is_empty() {
        let base = frontier.start;
        let products: Vec<Vec<ModElement>> = exec.map_range(frontier.len(), |k| {
            let x = &elements[base + k];
            gens.iter().map(|g| x.mul(g, size, level)).collect()
        });
        let next_start = elements.len();
        for p in products.into_iter().flatten() {
            if !lookup.contains_key(&p) {
                if elements.len() >= budget {
                    return Err(SymplecticError::BudgetExceeded { limit: budget });
                }
                lookup.insert(p.clone(), elements.len());
                elements.push(p);
            }
        }
        frontier = next_start..elements.len();
    }
    Ok(GroupTable {
        genus,
        level,
        elements,
        lookup,
        generator_hash: hash_generators(generators, level),
        similitudes: false,
    })
}

impl GroupTable {
    /// `Sp_{2g}(Z/NZ)/{±I}` from the standard generators.
    pub fn symplectic(genus: usize, level: u64, budget: usize, exec: Exec) -> Result<Self, SymplecticError> {
        bfs_group(genus, level, &standard_sp_generators(genus), budget, exec)
    }

    /// `GSp_{2g}(Z/NZ)/{±I}` as the union of the cosets `diag(I, νI)·Sp`.
    pub fn similitude(genus: usize, level: u64, budget: usize, exec: Exec) -> Result<Self, SymplecticError> {
        let mut t = Self::symplectic(genus, level, budget, exec)?;
        t.extend_with_similitudes(budget)?;
        Ok(t)
    }

    pub fn extend_with_similitudes(&mut self, budget: usize) -> Result<(), SymplecticError> {
        if self.similitudes {
            return Ok(());
        }
        let size = 2 * self.genus;
        let sp: Vec<ModElement> = self.elements.clone();
        for nu in 2..self.level {
            if nu.gcd(&self.level) != 1 {
                continue;
            }
            let d = SymplecticMatrix::similitude_diag(self.genus, nu, self.level)?;
            let d = ModElement::canonical(d.entries().iter().map(|&x| x as u32).collect(), self.level);
            for s in &sp {
                let p = d.mul(s, size, self.level);
                if !self.lookup.contains_key(&p) {
                    if self.elements.len() >= budget {
                        return Err(SymplecticError::BudgetExceeded { limit: budget });
                    }
                    self.lookup.insert(p.clone(), self.elements.len());
                    self.elements.push(p);
                }
            }
        }
        self.similitudes = true;
        Ok(())
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ModElement] {
        &self.elements
    }

    pub fn includes_similitudes(&self) -> bool {
        self.similitudes
    }

    pub fn generator_hash(&self) -> [u8; 32] {
        self.generator_hash
    }

    pub fn contains(&self, m: &SymplecticMatrix) -> bool {
        let Ok(r) = m.reduce(self.level) else { return false };
        let e = ModElement::canonical(r.entries().iter().map(|&x| x as u32).collect(), self.level);
        self.lookup.contains_key(&e)
    }

    pub fn product(&self, a: usize, b: usize) -> &ModElement {
        let p = self.elements[a].mul(&self.elements[b], 2 * self.genus, self.level);
        &self.elements[self.lookup[&p]]
    }

    pub fn index_of(&self, e: &ModElement) -> Option<usize> {
        self.lookup.get(e).copied()
    }

    /// Writes the table through a temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), SymplecticError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.genus as u32).to_le_bytes());
        buf.extend_from_slice(&(self.level as u32).to_le_bytes());
        buf.push(self.similitudes as u8);
        buf.extend_from_slice(&self.generator_hash);
        buf.extend_from_slice(&(self.elements.len() as u64).to_le_bytes());
        for e in &self.elements {
            for &x in e.entries() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads a cached table, validating the header and every element.
    pub fn load(path: &Path) -> Result<Self, SymplecticError> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        let mut cur = Cursor { buf: &buf, pos: 0 };
        if cur.take(CACHE_MAGIC.len())? != CACHE_MAGIC {
            return Err(SymplecticError::Cache("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != CACHE_VERSION {
            return Err(SymplecticError::Cache(format!("unsupported version {version}")));
        }
        let genus = cur.u32()? as usize;
        let level = cur.u32()? as u64;
        let similitudes = cur.take(1)?[0] != 0;
        let generator_hash: [u8; 32] = cur.take(32)?.try_into().expect("32 bytes");
        let count = cur.u64()? as usize;
        let size = 2 * genus;
        if genus == 0 || level < 2 {
            return Err(SymplecticError::Cache("bad header".into()));
        }
        let mut elements = Vec::with_capacity(count);
        let mut lookup = HashMap::with_capacity(count);
        for idx in 0..count {
            let entries: Vec<u32> = (0..size * size).map(|_| cur.u32()).collect::<Result<_, _>>()?;
            if entries.iter().any(|&x| x as u64 >= level) {
                return Err(SymplecticError::Cache(format!("element {idx} has out-of-range entries")));
            }
            is_gsp(&entries.iter().map(|&x| x as i64).collect::<Vec<_>>(), size, Some(level))
                .map_err(|e| SymplecticError::Cache(format!("element {idx}: {e}")))?;
            let e = ModElement::canonical(entries, level);
            lookup.insert(e.clone(), idx);
            elements.push(e);
        }
        if cur.pos != buf.len() {
            return Err(SymplecticError::Cache("trailing bytes".into()));
        }
        if lookup.len() != elements.len() {
            return Err(SymplecticError::Cache("duplicate elements".into()));
        }
        Ok(GroupTable {
            genus,
            level,
            elements,
            lookup,
            generator_hash,
            similitudes,
        })
    }

    /// Loads `path` when its header matches the standard generators for
    /// `(genus, level)`; otherwise builds the table and writes the cache.
    pub fn load_or_build(
        path: &Path,
        genus: usize,
        level: u64,
        similitudes: bool,
        budget: usize,
        exec: Exec,
    ) -> Result<Self, SymplecticError> {
        let want = hash_generators(&standard_sp_generators(genus), level);
        if let Ok(t) = Self::load(path) {
            if t.genus == genus && t.level == level && t.generator_hash == want && t.similitudes == similitudes {
                return Ok(t);
            }
        }
        let t = if similitudes {
            Self::similitude(genus, level, budget, exec)?
        } else {
            Self::symplectic(genus, level, budget, exec)?
        };
        t.save(path)?;
        Ok(t)
    }
}

const CACHE_MAGIC: &[u8; 8] = b"SPGTABLE";
const CACHE_VERSION: u32 = 1;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SymplecticError> {
        if self.pos + n > self.buf.len() {
            return Err(SymplecticError::Cache("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, SymplecticError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, SymplecticError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Indices of table elements fixing every class in `targets`.
pub fn stabilizer(table: &GroupTable, targets: &[IndexClass], exec: Exec) -> Result<Vec<usize>, SymplecticError> {
    if let Some(w) = targets.iter().find(|w| w.level() != table.level()) {
        return Err(SymplecticError::Argument(format!(
            "index {w} has level {} but the table has level {}",
            w.level(),
            table.level()
        )));
    }
    let size = 2 * table.genus();
    let n = table.level();
    let fixes = |e: &ModElement, w: &IndexClass| -> bool {
        let res = w.residues();
        let out: Vec<u64> = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| e.entries()[j * size + i] as u64 * res[j])
                    .sum::<u64>()
                    % n
            })
            .collect();
        IndexClass::from_residues(&out, n) == *w
    };
    Ok(exec.filter_range(table.len(), |k| {
        targets.iter().all(|w| fixes(&table.elements()[k], w))
    }))
}
