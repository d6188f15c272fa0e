//! Exact vanishing-order arithmetic for the quotients `Θ_v`.
//!
//! Along the diagonal degeneration the order of `Θ_v` in the `k`-th variable is
//! governed by `n_0 B_2(⟨1/2 + v_k⟩) + n_{1/2} B_2(⟨v_k⟩)`. When no coordinate
//! pair `(⟨v_k⟩, ⟨v_{k+g}⟩)` lies in `{0, 1/2}^2`, equality of these numbers
//! is necessary for `Θ_v^n = Θ_{v'}^n`, and the condition is inherited by
//! `v'`. Everything in this module is exact.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::characteristics::{
    enumerate_index_classes, frac_part, has_half_integral_pair, n_counts, rat, CharError, FracVector,
    IndexClass,
};
use crate::genus1::b2;
use crate::par::Exec;
use crate::symplectic::{
    act_on_index, block_diagonal, elementary, lower_unipotent, sym_unit_block, upper_unipotent,
    ElementaryKind, SymplecticError, SymplecticMatrix,
};

#[derive(Debug, Error)]
pub enum OrdersError {
    #[error("the order calculus needs genus at least 2, got {0}")]
    GenusTooSmall(usize),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Char(#[from] CharError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

/// The exact vector `(n_0 B_2(⟨1/2+v_k⟩) + n_{1/2} B_2(⟨v_k⟩))_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderSignature {
    level: u64,
    entries: Vec<BigRational>,
}

impl OrderSignature {
    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }
}

impl Serialize for OrderSignature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = self.entries.iter().map(|x| x.to_string()).collect();
        strs.serialize(s)
    }
}

impl fmt::Display for OrderSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strs: Vec<String> = self.entries.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", strs.join(", "))
    }
}

/// One entry of the signature for a coordinate value `x`.
pub fn signature_entry(x: &BigRational, genus: usize) -> BigRational {
    let (n0, nh) = n_counts(genus);
    let n0 = BigRational::from_integer(BigInt::from(n0));
    let nh = BigRational::from_integer(BigInt::from(nh));
    n0 * b2(&frac_part(&(rat(1, 2) + x))) + nh * b2(&frac_part(x))
}

pub fn order_signature(v: &IndexClass) -> OrderSignature {
    let genus = v.dim() / 2;
    OrderSignature {
        level: v.level(),
        entries: v.rep().entries().iter().map(|x| signature_entry(x, genus)).collect(),
    }
}

/// `(v_u; v_l) ↦ (v_l; −v_u)`, the index action of the rotation.
pub fn rotate(v: &IndexClass) -> IndexClass {
    let g = v.dim() / 2;
    let n = v.level();
    let r = v.residues();
    let out: Vec<u64> = (0..2 * g)
        .map(|k| if k < g { r[k + g] } else { (n - r[k - g]) % n })
        .collect();
    IndexClass::from_residues(&out, n)
}

/// Relative position of `V` and `V'` in `[0, N/2)` ("lower") or `[N/2, N)` ("upper").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    BothLower,
    LowerUpper,
    UpperLower,
    BothUpper,
}

fn is_lower(v: u64, n: u64) -> bool {
    2 * v < n
}

/// `V'` in the case's half-range with equal signature entry to `V`, from the
/// factorization `(V − V'){(n_0 + n_{1/2})(V + V') − n_{1/2} N} = 0` and its
/// mixed-half analogues. Extra roots are kept only when integral.
pub fn case_candidates(v: u64, genus: usize, level: u64, case: Case) -> Result<BTreeSet<u64>, OrdersError> {
    if genus < 2 {
        return Err(OrdersError::GenusTooSmall(genus));
    }
    if level < 2 || v >= level {
        return Err(OrdersError::Argument(format!(
            "need 0 <= V < N with N >= 2, got V={v}, N={level}"
        )));
    }
    let (v_lower, vp_lower) = match case {
        Case::BothLower => (true, true),
        Case::LowerUpper => (true, false),
        Case::UpperLower => (false, true),
        Case::BothUpper => (false, false),
    };
    let mut out = BTreeSet::new();
    if is_lower(v, level) != v_lower {
        return Ok(out);
    }
    let n = level as i128;
    let vv = v as i128;
    let two_g = 1i128 << genus;
    let half_g = 1i128 << (genus - 1);
    // (2^{g-1} N) / (2^g − 1) and (2^{g-1} − 1) N / (2^g − 1), when integral.
    let exact = |num: i128| (num % (two_g - 1) == 0).then_some(num / (two_g - 1));
    let big = exact(half_g * n);
    let c = exact((half_g - 1) * n);
    let mut roots: Vec<Option<i128>> = Vec::new();
    match case {
        Case::BothLower => {
            roots.push(Some(vv));
            roots.push(big.map(|b| b - vv));
        }
        Case::LowerUpper => {
            roots.push(Some(n - vv));
            roots.push(c.map(|c| vv + c));
        }
        Case::UpperLower => {
            roots.push(Some(n - vv));
            roots.push(c.map(|c| vv - c));
        }
        Case::BothUpper => {
            roots.push(Some(vv));
            roots.push(c.map(|c| n + c - vv));
        }
    }
    for r in roots.into_iter().flatten() {
        if (0..n).contains(&r) && is_lower(r as u64, level) == vp_lower {
            out.insert(r as u64);
        }
    }
    Ok(out)
}

/// All `V'` with the same signature entry as `V`, over both half-ranges.
pub fn coordinate_candidates(v: u64, genus: usize, level: u64) -> Result<BTreeSet<u64>, OrdersError> {
    let cases = if is_lower(v, level) {
        [Case::BothLower, Case::LowerUpper]
    } else {
        [Case::UpperLower, Case::BothUpper]
    };
    let mut out = BTreeSet::new();
    for c in cases {
        out.extend(case_candidates(v, genus, level, c)?);
    }
    Ok(out)
}

/// Hypotheses under which primitivity is claimed: `g ≥ 2`, `N ∉ {1, 2, 4}`, `(2^g − 1) ∤ N`.
pub fn primitivity_precondition(genus: usize, level: u64) -> bool {
    genus >= 2 && !matches!(level, 0 | 1 | 2 | 4) && !level.is_multiple_of((1u64 << genus) - 1)
}

/// The first unmet primitivity hypothesis, if any.
pub fn failed_precondition(genus: usize, level: u64) -> Option<&'static str> {
    if genus < 2 {
        Some("g >= 2")
    } else if matches!(level, 0 | 1 | 2 | 4) {
        Some("N != 1,2,4")
    } else if level.is_multiple_of((1u64 << genus) - 1) {
        Some("(2^g-1) does not divide N")
    } else {
        None
    }
}

/// Signatures of `γ^T v` over a fixed list of `γ`, each recorded only when
/// `γ^T v` has no half-integral coordinate pair. Equal functions give equal
/// keys: `Θ_v^n = Θ_{v'}^n` implies the same for `γ^T v` and `γ^T v'`, and
/// the no-half-pair condition passes from one side to the other.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SignatureKey(Vec<Option<(OrderSignature, OrderSignature)>>);

impl SignatureKey {
    pub fn slots(&self) -> &[Option<(OrderSignature, OrderSignature)>] {
        &self.0
    }

    /// True when some slot differs, including defined against undefined.
    pub fn separates(&self, other: &SignatureKey) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a != b)
    }
}

/// Transports used by [`signature_key`]: the identity, then for every `j` and
/// every nonempty set `K` of other upper indices the matrix
/// `[[I + Σ_{k∈K} E_{kj}, O], [O, I − Σ_{k∈K} E_{jk}]]^T`.
pub fn key_transports(genus: usize) -> Result<Vec<SymplecticMatrix>, OrdersError> {
    let mut out = vec![SymplecticMatrix::identity(genus)];
    for j in 1..=genus {
        let others: Vec<usize> = (1..=genus).filter(|&k| k != j).collect();
        for mask in 1u32..(1u32 << others.len()) {
            let ks: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &k)| k)
                .collect();
            out.push(elementary(&ElementaryKind::Transport(ks), j, j, genus)?);
        }
    }
    Ok(out)
}

fn slot(v: &IndexClass) -> Option<(OrderSignature, OrderSignature)> {
    if has_half_integral_pair(v.rep()) {
        None
    } else {
        Some((order_signature(v), order_signature(&rotate(v))))
    }
}

pub fn signature_key(v: &IndexClass, transports: &[SymplecticMatrix]) -> Result<SignatureKey, OrdersError> {
    let slots = transports
        .iter()
        .map(|t| Ok(slot(&act_on_index(t, v)?)))
        .collect::<Result<Vec<_>, OrdersError>>()?;
    Ok(SignatureKey(slots))
}

/// The classes of `I_N/±` grouped by [`SignatureKey`].
#[derive(Clone, Debug, Serialize)]
pub struct CollisionPartition {
    pub genus: usize,
    pub level: u64,
    #[serde(skip)]
    pub classes: Vec<IndexClass>,
    /// Groups of indices into `classes`, each sorted, in order of first member.
    pub groups: Vec<Vec<usize>>,
}

impl CollisionPartition {
    pub fn singleton_count(&self) -> usize {
        self.groups.iter().filter(|g| g.len() == 1).count()
    }

    /// Pairs of distinct classes sharing a key; only these need numerics.
    pub fn unresolved_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for g in &self.groups {
            for (i, &a) in g.iter().enumerate() {
                for &b in &g[i + 1..] {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

pub fn signature_collision_classes(genus: usize, level: u64, exec: Exec) -> Result<CollisionPartition, OrdersError> {
    if genus < 2 {
        return Err(OrdersError::GenusTooSmall(genus));
    }
    let classes = enumerate_index_classes(genus, level)?;
    let transports = key_transports(genus)?;
    let keys = exec
        .map(&classes, |c| signature_key(c, &transports))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut index: HashMap<&SignatureKey, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        match index.get(k) {
            Some(&g) => groups[g].push(i),
            None => {
                index.insert(k, groups.len());
                groups.push(vec![i]);
            }
        }
    }
    Ok(CollisionPartition {
        genus,
        level,
        classes,
        groups,
    })
}

/// How `V'` relates to `V` in one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateSign {
    /// `V' ≡ V ≡ −V`, so either global sign fits.
    Both,
    Plus,
    Minus,
    Neither,
}

pub fn coordinate_signs(v: &IndexClass, w: &IndexClass) -> Result<Vec<CoordinateSign>, OrdersError> {
    if v.dim() != w.dim() || v.level() != w.level() {
        return Err(OrdersError::Argument("classes differ in dimension or level".into()));
    }
    let n = v.level();
    Ok(v.residues()
        .iter()
        .zip(w.residues())
        .map(|(&a, &b)| {
            let plus = a == b;
            let minus = (a + b) % n == 0;
            match (plus, minus) {
                (true, true) => CoordinateSign::Both,
                (true, false) => CoordinateSign::Plus,
                (false, true) => CoordinateSign::Minus,
                (false, false) => CoordinateSign::Neither,
            }
        })
        .collect())
}

/// Whether a claimed coincidence of `v` and `w` is consistent with the
/// conclusion `v ≡ ±w`: every coordinate must admit one common sign.
pub fn sign_pattern_consistent(v: &IndexClass, w: &IndexClass) -> Result<bool, OrdersError> {
    let signs = coordinate_signs(v, w)?;
    let all = |s: CoordinateSign| signs.iter().all(|&c| c == CoordinateSign::Both || c == s);
    Ok(all(CoordinateSign::Plus) || all(CoordinateSign::Minus))
}

/// A target whose fiber under `v ↦ Θ_v^n` is analysed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberTarget {
    /// `(1/N)f`, `f = (1,…,1,0,…,0)`.
    F,
    /// `(1/N)e`, `e = (1,…,1)`.
    E,
    /// `(1/N)e_j`, one-based.
    Basis(usize),
}

impl fmt::Display for FiberTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberTarget::F => write!(f, "f"),
            FiberTarget::E => write!(f, "e"),
            FiberTarget::Basis(j) => write!(f, "e_{j}"),
        }
    }
}

impl std::str::FromStr for FiberTarget {
    type Err = OrdersError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f" => Ok(FiberTarget::F),
            "e" => Ok(FiberTarget::E),
            _ => s
                .strip_prefix("e_")
                .or_else(|| s.strip_prefix('e'))
                .and_then(|j| j.parse().ok())
                .filter(|&j| j >= 1)
                .map(FiberTarget::Basis)
                .ok_or_else(|| OrdersError::Argument(format!("unknown target '{s}', expected f, e or e_j"))),
        }
    }
}

impl FiberTarget {
    pub fn vector(&self, genus: usize, level: u64) -> Result<FracVector, OrdersError> {
        let mut res = vec![0u64; 2 * genus];
        match *self {
            FiberTarget::F => res[..genus].iter_mut().for_each(|r| *r = 1),
            FiberTarget::E => res.iter_mut().for_each(|r| *r = 1),
            FiberTarget::Basis(j) if (1..=2 * genus).contains(&j) => res[j - 1] = 1,
            FiberTarget::Basis(j) => {
                return Err(OrdersError::Argument(format!("e_{j} out of range for genus {genus}")))
            }
        }
        Ok(FracVector::from_residues(&res, level))
    }

    pub fn class(&self, genus: usize, level: u64) -> Result<IndexClass, OrdersError> {
        Ok(IndexClass::from_residues(
            &self.vector(genus, level)?.residues(level).expect("level clears"),
            level,
        ))
    }

    /// An integral symplectic `α` with `α^T t = (1/N) f`.
    pub fn transport_to_f(&self, genus: usize) -> Result<SymplecticMatrix, OrdersError> {
        let g = genus;
        let id = identity(g);
        let z = vec![0i64; g * g];
        let alpha_t = match *self {
            FiberTarget::F => SymplecticMatrix::identity(g),
            FiberTarget::E => {
                let neg: Vec<i64> = id.iter().map(|x| -x).collect();
                SymplecticMatrix::from_blocks(&id, &z, &neg, &id, g, None)?
            }
            FiberTarget::Basis(j) if (1..=2 * g).contains(&j) => {
                let col = if j <= g { j } else { j - g };
                // A = I + Σ_{i≠col} E_{i,col}; (A^{-1})^T = I − Σ_{i≠col} E_{col,i}.
                let mut a = id.clone();
                let mut a_inv_t = id.clone();
                for i in 1..=g {
                    if i != col {
                        a[(i - 1) * g + (col - 1)] = 1;
                        a_inv_t[(col - 1) * g + (i - 1)] = -1;
                    }
                }
                if j <= g {
                    block_diagonal(&a, &a_inv_t, g)?
                } else {
                    let neg: Vec<i64> = a_inv_t.iter().map(|x| -x).collect();
                    SymplecticMatrix::from_blocks(&z, &a, &neg, &z, g, None)?
                }
            }
            FiberTarget::Basis(j) => {
                return Err(OrdersError::Argument(format!("e_{j} out of range for genus {g}")))
            }
        };
        Ok(alpha_t.transpose()?)
    }
}

fn identity(g: usize) -> Vec<i64> {
    let mut m = vec![0i64; g * g];
    for i in 0..g {
        m[i * g + i] = 1;
    }
    m
}

/// Transports that mix upper and lower coordinates, used to cut the
/// coordinatewise product down: `[[I, S], [O, I]]` and `[[I, O], [S, I]]` for
/// `S ∈ {E'_ii, E'_ij, (e_i ± e_j)(e_i ± e_j)^T}`, plus the rotation.
pub fn mixing_transports(genus: usize) -> Result<Vec<SymplecticMatrix>, OrdersError> {
    let g = genus;
    let mut blocks: Vec<Vec<i64>> = Vec::new();
    for i in 1..=g {
        for j in i..=g {
            blocks.push(sym_unit_block(g, i, j));
            if i != j {
                for sign in [1i64, -1] {
                    let mut s = vec![0i64; g * g];
                    s[(i - 1) * g + (i - 1)] = 1;
                    s[(j - 1) * g + (j - 1)] = 1;
                    s[(i - 1) * g + (j - 1)] = sign;
                    s[(j - 1) * g + (i - 1)] = sign;
                    blocks.push(s);
                }
            }
        }
    }
    let mut out = vec![elementary(&ElementaryKind::Rotation, 1, 1, g)?];
    for s in &blocks {
        out.push(upper_unipotent(s, g)?);
        out.push(lower_unipotent(s, g)?);
    }
    Ok(out)
}

/// Result of the exact fiber analysis for one target.
#[derive(Clone, Debug, Serialize)]
pub struct FiberCandidates {
    pub target: FiberTarget,
    pub genus: usize,
    pub level: u64,
    /// Residues allowed in each coordinate of the transported class `α^T v`.
    pub per_coordinate: Vec<Vec<u64>>,
    /// Residues dropped because `2V' = N` would make the coordinate `1/2`.
    pub excluded: Vec<u64>,
    /// Surviving classes `v` after assembling and filtering, in the target's frame.
    pub assembled: Vec<String>,
    #[serde(skip)]
    pub assembled_classes: Vec<IndexClass>,
}

/// Exact candidates for `v` with `Θ_v^n = Θ_t^n`. The target is moved to
/// `(1/N) f` by [`FiberTarget::transport_to_f`]; there the upper coordinates
/// must match the signature entry of `1/N` and the lower ones that of `0`.
pub fn special_fiber_candidates(target: FiberTarget, genus: usize, level: u64) -> Result<FiberCandidates, OrdersError> {
    if genus < 2 {
        return Err(OrdersError::GenusTooSmall(genus));
    }
    if level < 3 {
        return Err(OrdersError::Argument(format!("fiber analysis needs N >= 3, got {level}")));
    }
    let f = FiberTarget::F.class(genus, level)?;
    let mut excluded = BTreeSet::new();
    let mut upper: Vec<u64> = Vec::new();
    for c in coordinate_candidates(1, genus, level)? {
        if 2 * c == level {
            excluded.insert(c);
        } else {
            upper.push(c);
        }
    }
    let lower: Vec<u64> = coordinate_candidates(0, genus, level)?.into_iter().collect();
    let mut per_coordinate = vec![upper.clone(); genus];
    per_coordinate.extend(std::iter::repeat_n(lower.clone(), genus));

    let filters = mixing_transports(genus)?;
    let f_keys: Vec<Option<(OrderSignature, OrderSignature)>> = filters
        .iter()
        .map(|t| Ok(slot(&act_on_index(t, &f)?)))
        .collect::<Result<_, OrdersError>>()?;

    let mut survivors_f: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut idx = vec![0usize; 2 * genus];
    'outer: loop {
        let res: Vec<u64> = idx.iter().enumerate().map(|(k, &i)| per_coordinate[k][i]).collect();
        let gcd = res.iter().fold(level, |acc, &r| num_integer::gcd(acc, r));
        if gcd == 1 {
            let w = IndexClass::from_residues(&res, level);
            let mut ok = true;
            for (t, want) in filters.iter().zip(&f_keys) {
                if &slot(&act_on_index(t, &w)?) != want {
                    ok = false;
                    break;
                }
            }
            if ok {
                survivors_f.insert(w.residues().to_vec());
            }
        }
        for k in (0..2 * genus).rev() {
            idx[k] += 1;
            if idx[k] < per_coordinate[k].len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }

    // Back to the target's frame: v = (α^T)^{-1} w = (α^{-1})^T w.
    let alpha_inv = target.transport_to_f(genus)?.inverse()?;
    let mut assembled_classes: Vec<IndexClass> = survivors_f
        .iter()
        .map(|r| act_on_index(&alpha_inv, &IndexClass::from_residues(r, level)))
        .collect::<Result<_, _>>()?;
    assembled_classes.sort_by(|a, b| a.residues().cmp(b.residues()));
    assembled_classes.dedup();
    Ok(FiberCandidates {
        target,
        genus,
        level,
        per_coordinate,
        excluded: excluded.into_iter().collect(),
        assembled: assembled_classes.iter().map(|c| c.to_string()).collect(),
        assembled_classes,
    })
}
