//! Theta constants with rational characteristics and the quotient family `Θ_v`.
//!
//! `θ_v(Z) = Σ_{n ∈ Z^g} e(½ (n+v_u)^T Z (n+v_u) + (n+v_u)^T v_l)` is summed over
//! the ellipsoid `‖U(n + v_u)‖ ≤ R`, where `Y = Im Z = U^T U`. The radius grows
//! until a Gaussian tail bound falls below the requested tolerance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::characteristics::{
    enumerate_half_chars, frac_part, CharError, FracVector, HalfChar, IndexClass,
};
use crate::par::Exec;
use crate::symplectic::{act_on_h, act_on_index, SymplecticError, SymplecticMatrix};

pub const DEFAULT_EPS: f64 = 1e-12;
pub const DEFAULT_RADIUS_CAP: f64 = 40.0;
const RADIUS_GROWTH: f64 = 1.25;

#[derive(Debug, Error)]
pub enum ThetaError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("not a point of the Siegel upper half-space: {0}")]
    NotInHalfSpace(String),
    #[error("tail bound {achieved:.3e} still above tolerance at the radius cap {radius}")]
    Truncation { achieved: f64, radius: f64 },
    #[error("the quotient family at level 2 becomes identically zero when N=2; evaluate with the unchecked quotient instead")]
    Degenerate,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Char(#[from] CharError),
}

/// A point `Z = X + iY` of the Siegel upper half-space.
#[derive(Clone, Debug)]
pub struct SiegelPoint {
    genus: usize,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    /// Upper-triangular `U` with `Y = U^T U`.
    u: DMatrix<f64>,
    lambda_min: f64,
}

impl SiegelPoint {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self, ThetaError> {
        let g = x.nrows();
        if g == 0 || x.ncols() != g || y.nrows() != g || y.ncols() != g {
            return Err(ThetaError::NotInHalfSpace(format!(
                "real and imaginary parts must be square of equal size, got {}x{} and {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        let tol = 1e-10 * (1.0 + x.norm() + y.norm());
        if (&x - x.transpose()).norm() > tol || (&y - y.transpose()).norm() > tol {
            return Err(ThetaError::NotInHalfSpace("matrix is not symmetric".into()));
        }
        let x = (&x + x.transpose()) * 0.5;
        let y = (&y + y.transpose()) * 0.5;
        if !x.iter().chain(y.iter()).all(|t| t.is_finite()) {
            return Err(ThetaError::NotInHalfSpace("non-finite entry".into()));
        }
        let lambda_min = SymmetricEigen::new(y.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(lambda_min > 0.0) {
            return Err(ThetaError::NotInHalfSpace(format!(
                "imaginary part is not positive definite (λ_min = {lambda_min:.3e})"
            )));
        }
        let chol = y.clone().cholesky().ok_or_else(|| {
            ThetaError::NotInHalfSpace("Cholesky factorization of Im Z failed".into())
        })?;
        let u = chol.l().transpose();
        Ok(SiegelPoint {
            genus: g,
            x,
            y,
            u,
            lambda_min,
        })
    }

    pub fn from_complex(z: &DMatrix<Complex64>) -> Result<Self, ThetaError> {
        Self::new(z.map(|c| c.re), z.map(|c| c.im))
    }

    /// `diag(τ_1, …, τ_g)`.
    pub fn diagonal(taus: &[Complex64]) -> Result<Self, ThetaError> {
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(taus));
        Self::from_complex(&z)
    }

    /// `X + i(Q^T Q + I)` with `X` symmetric and all entries of `X`, `Q`
    /// uniform in `[-1/2, 1/2]`, so `λ_min ≥ 1`.
    pub fn random<R: Rng + ?Sized>(genus: usize, rng: &mut R) -> Self {
        let mut x = DMatrix::<f64>::zeros(genus, genus);
        for i in 0..genus {
            for j in i..genus {
                let t = rng.gen_range(-0.5..=0.5);
                x[(i, j)] = t;
                x[(j, i)] = t;
            }
        }
        let q = DMatrix::<f64>::from_fn(genus, genus, |_, _| rng.gen_range(-0.5..=0.5));
        let y = q.transpose() * q + DMatrix::identity(genus, genus);
        Self::new(x, y).expect("Q^T Q + I is positive definite")
    }

    /// `t·Z` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self, ThetaError> {
        if !(t > 0.0) {
            return Err(ThetaError::Argument(format!("scale must be positive, got {t}")));
        }
        Self::new(&self.x * t, &self.y * t)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn real(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn imag(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.x.zip_map(&self.y, Complex64::new)
    }
}

/// Numerical tolerances for theta evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Precision {
    pub eps: f64,
    pub radius_cap: f64,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            eps: DEFAULT_EPS,
            radius_cap: DEFAULT_RADIUS_CAP,
        }
    }
}

impl Precision {
    pub fn validate(&self) -> Result<(), ThetaError> {
        if !(self.eps > 0.0) || !(self.radius_cap > 0.0) {
            return Err(ThetaError::Argument(format!(
                "eps and radius cap must be positive, got {} and {}",
                self.eps, self.radius_cap
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ThetaValue {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub radius: f64,
    pub tail_bound: f64,
}

pub(crate) fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &c.re)?;
    st.serialize_field("im", &c.im)?;
    st.end()
}

/// `∫_a^∞ s^k e^{-πs²} ds` for `a ≥ 0`.
fn gaussian_moment(k: usize, a: f64) -> f64 {
    let i0 = 0.5 * libm::erfc(a * PI.sqrt());
    let i1 = (-PI * a * a).exp() / (2.0 * PI);
    match k {
        0 => i0,
        1 => i1,
        _ => a.powi(k as i32 - 1) * (-PI * a * a).exp() / (2.0 * PI)
            + (k as f64 - 1.0) / (2.0 * PI) * gaussian_moment(k - 2, a),
    }
}

/// Bound on `Σ exp(-π‖x‖²)` over points `x` of a shifted lattice with minimal
/// distance `d` and `‖x‖ > R`. Packing balls of radius `d/2` gives
/// `g (2/d)^g ∫_{R-d}^∞ (s + d/2)^{g-1} e^{-πs²} ds`, valid for `R ≥ d`.
pub fn tail_bound(radius: f64, lambda_min: f64, genus: usize) -> f64 {
    let d = lambda_min.sqrt();
    if radius < d {
        return f64::INFINITY;
    }
    let a = radius - d;
    let mut binom = 1.0;
    let mut sum = 0.0;
    for k in 0..genus {
        sum += binom * (d / 2.0).powi((genus - 1 - k) as i32) * gaussian_moment(k, a);
        binom = binom * (genus - 1 - k) as f64 / (k + 1) as f64;
    }
    genus as f64 * (2.0 / d).powi(genus as i32) * sum
}

/// Smallest radius on the geometric schedule whose tail bound is below `eps`.
pub fn choose_radius(z: &SiegelPoint, prec: &Precision) -> Result<(f64, f64), ThetaError> {
    prec.validate()?;
    let d = z.lambda_min().sqrt();
    let mut r = d.max(0.5);
    loop {
        let t = tail_bound(r, z.lambda_min(), z.genus());
        if t < prec.eps {
            return Ok((r, t));
        }
        if r >= prec.radius_cap {
            return Err(ThetaError::Truncation {
                achieved: t,
                radius: r,
            });
        }
        r = (r * RADIUS_GROWTH).min(prec.radius_cap);
    }
}

fn check_dim(v: &FracVector, z: &SiegelPoint) -> Result<(), ThetaError> {
    if v.dim() != 2 * z.genus() {
        return Err(ThetaError::Dimension {
            expected: 2 * z.genus(),
            got: v.dim(),
        });
    }
    Ok(())
}

/// The partial sum over `‖U(n + v_u)‖ ≤ radius`.
pub fn theta_at_radius(v: &FracVector, z: &SiegelPoint, radius: f64) -> Result<Complex64, ThetaError> {
    check_dim(v, z)?;
    let g = z.genus();
    let vf = v.to_f64();
    let (c, vl) = vf.split_at(g);
    let mut m = vec![0.0; g];
    let mut acc = Complex64::zero();
    enumerate(z, c, vl, radius * radius, g, 0.0, &mut m, &mut acc);
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    z: &SiegelPoint,
    c: &[f64],
    vl: &[f64],
    budget: f64,
    level: usize,
    used: f64,
    m: &mut [f64],
    acc: &mut Complex64,
) {
    let g = z.genus();
    if level == 0 {
        let x = z.real();
        let mut phase = 0.0;
        for i in 0..g {
            let mut row = 0.0;
            for j in 0..g {
                row += x[(i, j)] * m[j];
            }
            phase += 0.5 * m[i] * row + m[i] * vl[i];
        }
        *acc += Complex64::from_polar((-PI * used).exp(), 2.0 * PI * phase);
        return;
    }
    let i = level - 1;
    let u = &z.u;
    let t: f64 = (i + 1..g).map(|j| u[(i, j)] * m[j]).sum();
    let room = (budget - used).max(0.0).sqrt();
    let uii = u[(i, i)];
    let lo = ((-t - room) / uii - c[i]).ceil() as i64;
    let hi = ((-t + room) / uii - c[i]).floor() as i64;
    for n in lo..=hi {
        m[i] = n as f64 + c[i];
        let coord = uii * m[i] + t;
        let next = used + coord * coord;
        if next <= budget {
            enumerate(z, c, vl, budget, i, next, m, acc);
        }
    }
}

/// The raw lattice sum with a certified tail, with no shortcut for vanishing
/// characteristics.
pub fn theta_series(v: &FracVector, z: &SiegelPoint, prec: &Precision) -> Result<ThetaValue, ThetaError> {
    check_dim(v, z)?;
    let (radius, tail) = choose_radius(z, prec)?;
    Ok(ThetaValue {
        value: theta_at_radius(v, z, radius)?,
        radius,
        tail_bound: tail,
    })
}

/// `θ_v(Z)`; exactly zero for odd half-integral characteristics.
pub fn theta(v: &FracVector, z: &SiegelPoint, prec: &Precision) -> Result<ThetaValue, ThetaError> {
    check_dim(v, z)?;
    prec.validate()?;
    if is_vanishing_char(v) {
        return Ok(ThetaValue {
            value: Complex64::zero(),
            radius: 0.0,
            tail_bound: 0.0,
        });
    }
    theta_series(v, z, prec)
}

/// True iff `⟨v⟩ ∈ {0,1/2}^{2g}` with `e(2⟨v⟩_u^T⟨v⟩_l) = -1`.
pub fn is_vanishing_char(v: &FracVector) -> bool {
    HalfChar::from_frac_vector(v).is_some_and(|h| h.is_odd())
}

/// `log|w| + i arg w`, with the argument on any branch.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LogValue {
    pub log_magnitude: f64,
    pub argument: f64,
}

impl LogValue {
    pub fn from_complex(w: Complex64) -> Self {
        LogValue {
            log_magnitude: w.norm().ln(),
            argument: w.arg(),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.log_magnitude.exp(), self.argument)
    }

    pub fn zero() -> Self {
        LogValue {
            log_magnitude: 0.0,
            argument: 0.0,
        }
    }

    /// `self · w^k`.
    pub fn add_scaled(self, w: LogValue, k: f64) -> Self {
        LogValue {
            log_magnitude: self.log_magnitude + k * w.log_magnitude,
            argument: wrap_angle(self.argument + k * w.argument),
        }
    }

    /// `|self / other − 1|`, computed without leaving log space.
    pub fn relative_difference(self, other: LogValue) -> f64 {
        let d = Complex64::new(
            self.log_magnitude - other.log_magnitude,
            wrap_angle(self.argument - other.argument),
        );
        (d.exp() - 1.0).norm()
    }
}

fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Evaluates `Θ_v(Z)` for many `v` at one point, sharing the `S_+` factor.
pub struct BigTheta<'a> {
    z: &'a SiegelPoint,
    prec: Precision,
    minus: Vec<FracVector>,
    /// `Σ_{b ∈ S_+} log θ_b(Z)`.
    plus_log: LogValue,
}

impl<'a> BigTheta<'a> {
    pub fn new(z: &'a SiegelPoint, prec: Precision) -> Result<Self, ThetaError> {
        prec.validate()?;
        let (minus, plus) = enumerate_half_chars(z.genus());
        let mut plus_log = LogValue::zero();
        for b in &plus {
            let t = theta_series(&b.to_frac_vector(), z, &prec)?;
            if t.value.norm() <= t.tail_bound {
                return Err(ThetaError::Evaluation(format!(
                    "θ at the even characteristic {} is below its tail bound",
                    b.to_frac_vector()
                )));
            }
            plus_log = plus_log.add_scaled(LogValue::from_complex(t.value), 1.0);
        }
        Ok(BigTheta {
            z,
            prec,
            minus: minus.iter().map(HalfChar::to_frac_vector).collect(),
            plus_log,
        })
    }

    pub fn point(&self) -> &SiegelPoint {
        self.z
    }

    /// `log Θ_v(Z)` for any representative `v` of exact denominator `N ≥ 3`.
    pub fn log_value(&self, v: &FracVector) -> Result<LogValue, ThetaError> {
        let level = level_of(v)?;
        match level {
            2 => return Err(ThetaError::Degenerate),
            0 | 1 => {
                return Err(ThetaError::Argument(format!(
                    "the quotient family needs exact denominator at least 3, got {level}"
                )))
            }
            _ => {}
        }
        self.quotient(v, level, false)
    }

    fn quotient(&self, v: &FracVector, level: u64, raw: bool) -> Result<LogValue, ThetaError> {
        check_dim(v, self.z)?;
        let g = self.z.genus() as u32;
        let two_g = 1u64 << g;
        let w_minus = (4 * level * (two_g + 1)) as f64;
        let w_plus = (4 * level * (two_g - 1)) as f64;

        // e(-2^g N (2^g-1)(2^g+1) v_u^T v_l), reduced mod 1 exactly.
        let c = num_bigint::BigInt::from(two_g * level * (two_g - 1) * (two_g + 1));
        let phase = frac_part(&-(v.upper_dot_lower()? * num_rational::BigRational::from_integer(c)));
        let phase = crate::characteristics::rat_to_f64(&phase);
        let mut acc = LogValue {
            log_magnitude: 4.0 * level as f64 * std::f64::consts::LN_2,
            argument: 2.0 * PI * phase,
        };
        for a in &self.minus {
            let shifted = a.sub(v)?;
            let t = if raw {
                theta_series(&shifted, self.z, &self.prec)?
            } else {
                theta(&shifted, self.z, &self.prec)?
            };
            if t.value.is_zero() {
                return Ok(LogValue {
                    log_magnitude: f64::NEG_INFINITY,
                    argument: 0.0,
                });
            }
            acc = acc.add_scaled(LogValue::from_complex(t.value), w_minus);
        }
        Ok(acc.add_scaled(self.plus_log, -w_plus))
    }

    pub fn value(&self, v: &FracVector) -> Result<Complex64, ThetaError> {
        Ok(self.log_value(v)?.to_complex())
    }

    /// The defining quotient without the level check, summing every theta
    /// constant directly. Used to observe the level-2 degeneracy.
    pub fn unchecked_log_value(&self, v: &FracVector) -> Result<LogValue, ThetaError> {
        let level = level_of(v)?;
        self.quotient(v, level, true)
    }
}

fn level_of(v: &FracVector) -> Result<u64, ThetaError> {
    v.exact_denominator()
        .to_u64()
        .ok_or_else(|| ThetaError::Argument("denominator too large".into()))
}

/// `Θ_v(Z)` for an index class.
pub fn big_theta(v: &IndexClass, z: &SiegelPoint, prec: &Precision) -> Result<Complex64, ThetaError> {
    BigTheta::new(z, *prec)?.value(v.rep())
}

pub fn big_theta_log(v: &IndexClass, z: &SiegelPoint, prec: &Precision) -> Result<LogValue, ThetaError> {
    BigTheta::new(z, *prec)?.log_value(v.rep())
}

/// `log Θ_v(Z)` for every `v`, evaluated under `exec`.
pub fn big_theta_vec(
    vs: &[IndexClass],
    z: &SiegelPoint,
    prec: &Precision,
    exec: Exec,
) -> Result<Vec<LogValue>, ThetaError> {
    let ev = BigTheta::new(z, *prec)?;
    exec.map(vs, |v| ev.log_value(v.rep())).into_iter().collect()
}

#[derive(Debug, Error)]
pub enum ActionError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

/// `|Θ_v(α(Z)) / Θ_{α^T v}(Z) − 1|` for integral symplectic `α`.
pub fn check_sp_action(
    alpha: &SymplecticMatrix,
    v: &IndexClass,
    z: &SiegelPoint,
    prec: &Precision,
) -> Result<f64, ActionError> {
    if alpha.level().is_some() || alpha.nu() != 1 {
        return Err(SymplecticError::Argument(
            "the numeric action check needs an integral symplectic matrix".into(),
        )
        .into());
    }
    let w = act_on_index(alpha, v)?;
    let moved = act_on_h(alpha, z)?;
    let lhs = big_theta_log(v, &moved, prec)?;
    let rhs = big_theta_log(&w, z, prec)?;
    Ok(lhs.relative_difference(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{canonical, enumerate_index_classes};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn i() -> Complex64 {
        Complex64::new(0.0, 1.0)
    }

    /// Box summation over `|n_k| ≤ 12`, with no use of the ellipsoid or the
    /// tail bound.
    fn box_oracle(v: &FracVector, z: &SiegelPoint) -> Complex64 {
        let g = z.genus();
        let vf = v.to_f64();
        let zc = z.to_complex();
        let k = 12i64;
        let count = (2 * k + 1).pow(g as u32);
        let mut acc = Complex64::zero();
        for idx in 0..count {
            let mut rest = idx;
            let m: Vec<f64> = (0..g)
                .map(|j| {
                    let n = rest % (2 * k + 1) - k;
                    rest /= 2 * k + 1;
                    n as f64 + vf[j]
                })
                .collect();
            let mut q = Complex64::zero();
            for a in 0..g {
                for b in 0..g {
                    q += zc[(a, b)] * m[a] * m[b];
                }
            }
            let lin: f64 = (0..g).map(|a| m[a] * vf[g + a]).sum();
            acc += (2.0 * PI * i() * (0.5 * q + lin)).exp();
        }
        acc
    }

    #[test]
    fn classical_value_at_i() {
        let z = SiegelPoint::diagonal(&[i()]).unwrap();
        let t = theta(&FracVector::zeros(2), &z, &Precision::default()).unwrap();
        let oracle: f64 = (-30i64..=30).map(|n| (-PI * (n * n) as f64).exp()).sum();
        assert!((t.value.re - oracle).abs() < 1e-12);
        assert!((t.value.re - 1.086_434_811_213_308).abs() < 1e-12);
        assert!(t.value.im.abs() < 1e-15);
        assert!(t.tail_bound < 1e-12);
    }

    #[test]
    fn odd_characteristic_is_exactly_zero() {
        let z = SiegelPoint::diagonal(&[Complex64::new(0.3, 0.7)]).unwrap();
        let v: FracVector = "1/2,1/2".parse().unwrap();
        assert_eq!(theta(&v, &z, &Precision::default()).unwrap().value, Complex64::zero());
        assert!(theta_series(&v, &z, &Precision::default()).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn diagonal_factorizes() {
        let t1 = Complex64::new(0.2, 1.1);
        let t2 = Complex64::new(-0.4, 0.8);
        let z = SiegelPoint::diagonal(&[t1, t2]).unwrap();
        let p = Precision::default();
        let both = theta(&FracVector::zeros(4), &z, &p).unwrap().value;
        let a = theta(&FracVector::zeros(2), &SiegelPoint::diagonal(&[t1]).unwrap(), &p).unwrap().value;
        let b = theta(&FracVector::zeros(2), &SiegelPoint::diagonal(&[t2]).unwrap(), &p).unwrap().value;
        assert!((both - a * b).norm() < 1e-12);
    }

    #[test]
    fn matches_box_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let z = SiegelPoint::random(2, &mut rng);
            let v: FracVector = "1/3,-2/5,1/7,3/4".parse().unwrap();
            let t = theta(&v, &z, &Precision::default()).unwrap();
            assert!((t.value - box_oracle(&v, &z)).norm() < 1e-12);
        }
    }

    #[test]
    fn vanishing_predicate() {
        assert!(is_vanishing_char(&"1/2,0,1/2,0".parse().unwrap()));
        assert!(!is_vanishing_char(&"1/2,0,0,0".parse().unwrap()));
        assert!(!is_vanishing_char(&"1/3,0,0,0".parse().unwrap()));
        assert!(is_vanishing_char(&"3/2,0,-1/2,0".parse().unwrap()));
    }

    #[test]
    fn small_lambda_needs_larger_radius() {
        let z = SiegelPoint::diagonal(&[Complex64::new(0.0, 0.03), i()]).unwrap();
        let (r, t) = choose_radius(&z, &Precision::default()).unwrap();
        assert!(t < 1e-12 && r > 3.0);
        let capped = Precision { eps: 1e-12, radius_cap: 1.0 };
        assert!(matches!(choose_radius(&z, &capped), Err(ThetaError::Truncation { .. })));
        let v: FracVector = "1/3,0,1/5,0".parse().unwrap();
        let val = theta(&v, &z, &Precision::default()).unwrap().value;
        let g1 = theta(&"1/3,1/5".parse().unwrap(), &SiegelPoint::diagonal(&[Complex64::new(0.0, 0.03)]).unwrap(), &Precision::default()).unwrap().value;
        let g2 = theta(&FracVector::zeros(2), &SiegelPoint::diagonal(&[i()]).unwrap(), &Precision::default()).unwrap().value;
        assert!((val - g1 * g2).norm() < 1e-11);
    }

    #[test]
    fn rejects_bad_points() {
        let bad = DMatrix::from_row_slice(1, 1, &[Complex64::new(0.0, -1.0)]);
        assert!(SiegelPoint::from_complex(&bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[i(), Complex64::new(0.1, 0.0), Complex64::zero(), i()]);
        assert!(SiegelPoint::from_complex(&asym).is_err());
        let z = SiegelPoint::diagonal(&[i()]).unwrap();
        assert!(matches!(
            theta(&FracVector::zeros(4), &z, &Precision::default()),
            Err(ThetaError::Dimension { .. })
        ));
    }

    #[test]
    fn big_theta_exponents_and_degenerate_level() {
        let z = SiegelPoint::diagonal(&[i(), i()]).unwrap();
        let v = canonical(&"1/2,0,0,0".parse().unwrap());
        assert!(matches!(big_theta(&v, &z, &Precision::default()), Err(ThetaError::Degenerate)));
        let msg = ThetaError::Degenerate.to_string();
        assert!(msg.contains("becomes identically zero when N=2"));
    }

    #[test]
    fn big_theta_prefactor_at_g2_n3() {
        // With the S_+ product and every θ_{a-v} factored out, Θ_v reduces
        // to 2^12 e(-180 v_u^T v_l). Compare the ratio of two classes whose
        // theta factors agree.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = SiegelPoint::random(2, &mut rng);
        let ev = BigTheta::new(&z, Precision::default()).unwrap();
        let v: FracVector = "1/3,0,0,1/3".parse().unwrap();
        let shifted: FracVector = "4/3,0,0,1/3".parse().unwrap();
        // Translating v_u by an integer leaves each θ_{a-v} up to the phase
        // e(-(a_l - v_l)) and the prefactor absorbs the rest.
        let a = ev.log_value(&v).unwrap();
        let b = ev.log_value(&shifted).unwrap();
        assert!(a.relative_difference(b) < 1e-9);
        let l = ev.log_value(&v).unwrap();
        let direct: Complex64 = {
            let (minus, plus) = enumerate_half_chars(2);
            let p = Precision::default();
            let mut num = Complex64::new(1.0, 0.0);
            for m in &minus {
                num *= theta(&m.to_frac_vector().sub(&v).unwrap(), &z, &p).unwrap().value.powi(60);
            }
            let mut den = Complex64::new(1.0, 0.0);
            for b in &plus {
                den *= theta(&b.to_frac_vector(), &z, &p).unwrap().value.powi(36);
            }
            let pre = Complex64::from_polar(4096.0, -2.0 * PI * 180.0 / 9.0);
            pre * num / den
        };
        assert!((l.to_complex() / direct - 1.0).norm() < 1e-8);
    }

    #[test]
    fn big_theta_sign_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let classes = enumerate_index_classes(2, 3).unwrap();
        for _ in 0..3 {
            let z = SiegelPoint::random(2, &mut rng);
            let ev = BigTheta::new(&z, Precision::default()).unwrap();
            for c in classes.iter().take(10) {
                let a = ev.log_value(c.rep()).unwrap();
                let b = ev.log_value(&c.rep().neg()).unwrap();
                assert!(a.relative_difference(b) < 1e-8);
            }
        }
    }

    #[test]
    fn sp_action_identity_and_rotation() {
        use crate::symplectic::{elementary, ElementaryKind};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = SiegelPoint::random(2, &mut rng);
        let v = canonical(&"1/5,2/5,0,3/5".parse().unwrap());
        let p = Precision::default();
        let id = SymplecticMatrix::identity(2);
        assert!(check_sp_action(&id, &v, &z, &p).unwrap() < 1e-12);
        let rot = elementary(&ElementaryKind::Rotation, 1, 1, 2).unwrap();
        assert!(check_sp_action(&rot, &v, &z, &p).unwrap() < 1e-6);
        let reduced = id.reduce(5).unwrap();
        assert!(check_sp_action(&reduced, &v, &z, &p).is_err());
    }

    #[test]
    fn log_value_round_trip() {
        let w = Complex64::new(-3.5, 0.25);
        let l = LogValue::from_complex(w);
        assert!((l.to_complex() - w).norm() / w.norm() < 1e-15);
        let sq = LogValue::zero().add_scaled(l, 2.0);
        assert!((sq.to_complex() - w * w).norm() / (w * w).norm() < 1e-14);
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let z = SiegelPoint::random(2, &mut rng);
            let v: FracVector = "1/3,1/4,2/5,0".parse().unwrap();
            for r in [1.0, 1.5, 2.0] {
                let partial = theta_at_radius(&v, &z, r).unwrap();
                let full = theta_at_radius(&v, &z, 8.0).unwrap();
                assert!((full - partial).norm() <= tail_bound(r, z.lambda_min(), 2));
            }
        }
    }
}
