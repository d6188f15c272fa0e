//! Genus one: Siegel functions as q-products and the identities linking them
//! to theta constants.
//!
//! `g_{(r,s)}(τ) = −q^{B_2(r)/2} e(s(r−1)/2) (1 − q^r e(s))
//!     Π_{n≥1} (1 − q^{n+r} e(s)) (1 − q^{n−r} e(−s))`, with `q^x = e(xτ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::characteristics::{frac_part, rat, rat_to_f64, FracVector, IndexClass};
use crate::theta_num::{big_theta_log, theta_series, LogValue, Precision, SiegelPoint, ThetaError};

/// Fewest product factors ever used.
pub const MIN_FACTORS: usize = 40;
const MAX_FACTORS: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum Genus1Error {
    #[error("Siegel functions are undefined at integral index ({}, {})", .0.0, .0.1)]
    IntegralIndex(Box<(BigRational, BigRational)>),
    #[error("τ = {0} is not in the upper half-plane")]
    NotInHalfPlane(Complex64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("product needs more than {MAX_FACTORS} factors at |q| = {0}")]
    Truncation(f64),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QProductValue {
    pub value: Complex64,
    pub terms_used: usize,
    /// Bound on the relative error from truncating the product.
    pub truncation_error: f64,
}

/// `B_2(x) = x² − x + 1/6`.
pub fn b2(x: &BigRational) -> BigRational {
    x * x - x + rat(1, 6)
}

/// `(1/2) B_2(⟨r⟩)`, the order of `g_{(r,s)}` at the cusp in powers of `q`.
pub fn ord_q(r: &BigRational, s: &BigRational) -> Result<BigRational, Genus1Error> {
    if r.is_integer() && s.is_integer() {
        return Err(Genus1Error::IntegralIndex(Box::new((r.clone(), s.clone()))));
    }
    Ok(b2(&frac_part(r)) / rat(2, 1))
}

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// `e(xτ)`.
fn q_pow(x: f64, tau: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * tau * x).exp()
}

/// `g_{(r,s)}(τ)` with the infinite product truncated once
/// `|q|^{n/2} < eps`, and never before [`MIN_FACTORS`] factors.
pub fn siegel_g(
    r: &BigRational,
    s: &BigRational,
    tau: Complex64,
    eps: f64,
) -> Result<QProductValue, Genus1Error> {
    if r.is_integer() && s.is_integer() {
        return Err(Genus1Error::IntegralIndex(Box::new((r.clone(), s.clone()))));
    }
    if !(tau.im > 0.0) || !tau.re.is_finite() {
        return Err(Genus1Error::NotInHalfPlane(tau));
    }
    if !(eps > 0.0) {
        return Err(Genus1Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let rf = rat_to_f64(r);
    let qa = (-2.0 * PI * tau.im).exp();

    let needed = (2.0 * eps.ln() / qa.ln()).ceil();
    // Also make every exponent n − r positive before the tail estimate applies.
    let needed = needed.max(rf.abs().ceil() + 1.0);
    if !(needed < MAX_FACTORS as f64) {
        return Err(Genus1Error::Truncation(qa));
    }
    let terms = (needed as usize).max(MIN_FACTORS);

    let half_b2 = rat_to_f64(&(b2(r) / rat(2, 1)));
    let lead_phase = frac_part(&(s * (r - BigRational::one()) / rat(2, 1)));
    let es = e(rat_to_f64(&frac_part(s)));
    let es_inv = es.conj();

    let mut value = -q_pow(half_b2, tau) * e(rat_to_f64(&lead_phase)) * (1.0 - q_pow(rf, tau) * es);
    let qr = q_pow(rf, tau);
    let qmr = q_pow(-rf, tau);
    let q = q_pow(1.0, tau);
    let mut qn = Complex64::new(1.0, 0.0);
    for _ in 1..=terms {
        qn *= q;
        value *= (1.0 - qn * qr * es) * (1.0 - qn * qmr * es_inv);
    }
    let m = terms as f64;
    let tail = qa.powf(m + 1.0) * (qa.powf(rf) + qa.powf(-rf)) / (1.0 - qa);
    Ok(QProductValue {
        value,
        terms_used: terms,
        truncation_error: (2.0 * tail).exp_m1(),
    })
}

/// Unweighted least-squares slope of `log|g_v(iy)|` against `−2πy`.
pub fn numeric_order(r: &BigRational, s: &BigRational, y_grid: &[f64]) -> Result<f64, Genus1Error> {
    if y_grid.len() < 2 {
        return Err(Genus1Error::Argument("the y grid needs at least two points".into()));
    }
    if y_grid[0] < 2.0 || y_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Genus1Error::Argument(
            "the y grid must be increasing with minimum at least 2".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = y_grid
        .iter()
        .map(|&y| {
            let v = siegel_g(r, s, Complex64::new(0.0, y), 1e-15)?;
            Ok((-2.0 * PI * y, v.value.norm().ln()))
        })
        .collect::<Result<_, Genus1Error>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Which side of the diagonal-restriction identity applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagBranch {
    Product,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DiagResidual {
    pub branch: DiagBranch,
    /// Relative difference on the product branch, `|θ_v(diag τ)|` on the zero branch.
    pub residual: f64,
}

/// Compares `θ_v(diag(τ_1, …, τ_g))` against
/// `Π_k ξ_k g_{(1/2−v_k, 1/2−v_{k+g})}(τ_k) / g_{(1/2,1/2)}(τ_k) · θ_{00}(τ_k)`,
/// `ξ_k = e((2v_k v_{k+g} + v_k − v_{k+g})/4)`. When some pair
/// `⟨(v_k, v_{k+g})⟩` is `(1/2, 1/2)` the right side is zero.
pub fn diag_restrict_check(
    v: &FracVector,
    taus: &[Complex64],
    prec: &Precision,
) -> Result<DiagResidual, Genus1Error> {
    let g = taus.len();
    if v.dim() != 2 * g {
        return Err(Genus1Error::Argument(format!(
            "characteristic of dimension {} against {g} points",
            v.dim()
        )));
    }
    let z = SiegelPoint::diagonal(taus)?;
    // The raw sum, so odd characteristics are not zeroed by definition.
    let lhs = theta_series(v, &z, prec)?.value;

    let half = rat(1, 2);
    let entries = v.entries();
    let zero_branch = (0..g).any(|k| frac_part(&entries[k]) == half && frac_part(&entries[k + g]) == half);
    if zero_branch {
        return Ok(DiagResidual {
            branch: DiagBranch::Zero,
            residual: lhs.norm(),
        });
    }
    let mut rhs = Complex64::new(1.0, 0.0);
    for (k, &tau) in taus.iter().enumerate() {
        let (a, b) = (&entries[k], &entries[k + g]);
        let xi = frac_part(&((rat(2, 1) * a * b + a - b) / rat(4, 1)));
        let num = siegel_g(&(&half - a), &(&half - b), tau, prec.eps)?.value;
        let den = siegel_g(&half, &half, tau, prec.eps)?.value;
        let t00 = theta_series(&FracVector::zeros(2), &SiegelPoint::diagonal(&[tau])?, prec)?.value;
        rhs *= e(rat_to_f64(&xi)) * num / den * t00;
    }
    Ok(DiagResidual {
        branch: DiagBranch::Product,
        residual: (lhs - rhs).norm() / rhs.norm(),
    })
}

/// `|Θ_v(τ) / g_v(τ)^{12N} − 1|` for a genus-one class of level `N ≥ 3`.
pub fn genus1_identity_residual(v: &IndexClass, tau: Complex64, prec: &Precision) -> Result<f64, Genus1Error> {
    if v.dim() != 2 {
        return Err(Genus1Error::Argument(format!(
            "genus-one identity needs a 2-vector, got dimension {}",
            v.dim()
        )));
    }
    let n = v.level();
    let z = SiegelPoint::diagonal(&[tau])?;
    let lhs = big_theta_log(v, &z, prec)?;
    let e = v.rep().entries();
    let gv = siegel_g(&e[0], &e[1], tau, prec.eps)?.value;
    let rhs = LogValue::zero().add_scaled(LogValue::from_complex(gv), (12 * n) as f64);
    Ok(lhs.relative_difference(rhs))
}

/// `g_{(r,s)}(τ)^{12N}` in log form.
pub fn siegel_g_power_log(
    r: &BigRational,
    s: &BigRational,
    tau: Complex64,
    power: u64,
    eps: f64,
) -> Result<LogValue, Genus1Error> {
    let gv = siegel_g(r, s, tau, eps)?.value;
    if gv.is_zero() {
        return Err(Genus1Error::Argument("Siegel function evaluated to zero".into()));
    }
    Ok(LogValue::zero().add_scaled(LogValue::from_complex(gv), power as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{canonical, enumerate_index_classes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent evaluation through the Jacobi triple product:
    /// `(1−z) Π (1−q^n z)(1−q^n/z) = Σ_n (−1)^n q^{n(n−1)/2} z^n / Π (1−q^n)`,
    /// with `Π(1−q^n)` from the pentagonal number series.
    fn oracle(r: f64, s: f64, tau: Complex64) -> Complex64 {
        let q = |x: f64| q_pow(x, tau);
        let z = q(r) * e(s);
        let mut theta = Complex64::zero();
        for n in -60i64..=60 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            theta += sign * q((n * (n - 1)) as f64 / 2.0) * z.powi(n as i32);
        }
        let mut euler = Complex64::zero();
        for k in -40i64..=40 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            euler += sign * q((k * (3 * k - 1)) as f64 / 2.0);
        }
        let b2 = r * r - r + 1.0 / 6.0;
        -q(b2 / 2.0) * e(s * (r - 1.0) / 2.0) * theta / euler
    }

    #[test]
    fn b2_examples() {
        assert_eq!(b2(&rat(0, 1)), rat(1, 6));
        assert_eq!(b2(&rat(1, 2)), rat(-1, 12));
        assert_eq!(b2(&rat(1, 3)), rat(-1, 18));
    }

    #[test]
    fn ord_examples() {
        assert_eq!(ord_q(&rat(0, 1), &rat(1, 2)).unwrap(), rat(1, 12));
        assert_eq!(ord_q(&rat(1, 2), &rat(1, 5)).unwrap(), rat(-1, 24));
        assert_eq!(ord_q(&rat(1, 3), &rat(0, 1)).unwrap(), rat(-1, 36));
        assert_eq!(ord_q(&rat(-2, 3), &rat(0, 1)).unwrap(), rat(-1, 36));
        assert!(ord_q(&rat(1, 1), &rat(0, 1)).is_err());
    }

    #[test]
    fn matches_triple_product_oracle() {
        let i = Complex64::new(0.0, 1.0);
        let v = siegel_g(&rat(1, 3), &rat(0, 1), i, 1e-15).unwrap();
        assert!(v.value.norm() > 0.0);
        assert!((v.value - oracle(1.0 / 3.0, 0.0, i)).norm() < 1e-10);
        let tau = Complex64::new(0.3, 0.8);
        for (r, s) in [(2, 5), (3, 7), (1, 2)] {
            let (rq, sq) = (rat(r, s + 3), rat(s, r + s + 1));
            let v = siegel_g(&rq, &sq, tau, 1e-15).unwrap();
            let o = oracle(rat_to_f64(&rq), rat_to_f64(&sq), tau);
            assert!((v.value - o).norm() / o.norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_integral_index_and_bad_tau() {
        assert!(matches!(
            siegel_g(&rat(1, 1), &rat(-2, 1), Complex64::new(0.0, 1.0), 1e-12),
            Err(Genus1Error::IntegralIndex(..))
        ));
        assert!(siegel_g(&rat(1, 3), &rat(0, 1), Complex64::new(0.0, -1.0), 1e-12).is_err());
    }

    #[test]
    fn truncation_error_below_eps() {
        for y in [0.05, 0.5, 3.0] {
            let v = siegel_g(&rat(1, 5), &rat(2, 5), Complex64::new(0.1, y), 1e-12).unwrap();
            assert!(v.truncation_error < 1e-12);
            assert!(v.terms_used >= MIN_FACTORS);
        }
    }

    #[test]
    fn power_is_invariant_under_translation() {
        let tau = Complex64::new(0.2, 0.9);
        let n = 3u64;
        let a = siegel_g_power_log(&rat(1, 3), &rat(0, 1), tau, 12 * n, 1e-15).unwrap();
        let b = siegel_g_power_log(&rat(4, 3), &rat(0, 1), tau, 12 * n, 1e-15).unwrap();
        assert!(a.relative_difference(b) < 1e-8);
    }

    #[test]
    fn numeric_order_small_denominators() {
        let grid = [6.0, 8.0, 10.0, 12.0];
        for (r, s) in [(rat(1, 3), rat(0, 1)), (rat(1, 2), rat(1, 2)), (rat(0, 1), rat(1, 3))] {
            let got = numeric_order(&r, &s, &grid).unwrap();
            let want = rat_to_f64(&ord_q(&r, &s).unwrap());
            assert!((got - want).abs() < 1e-6, "{r} {s}: {got} vs {want}");
        }
        assert!(numeric_order(&rat(1, 3), &rat(0, 1), &[1.0, 2.0]).is_err());
        assert!(numeric_order(&rat(1, 3), &rat(0, 1), &[4.0, 3.0]).is_err());
    }

    #[test]
    fn diag_examples() {
        let p = Precision::default();
        let taus = [Complex64::new(0.0, 1.0), Complex64::new(0.25, 2.0)];
        let r = diag_restrict_check(&"1/3,0,0,2/3".parse().unwrap(), &taus, &p).unwrap();
        assert_eq!(r.branch, DiagBranch::Product);
        assert!(r.residual < 1e-8, "{}", r.residual);

        let r = diag_restrict_check(&"1/2,0,1/2,0".parse().unwrap(), &taus, &p).unwrap();
        assert_eq!(r.branch, DiagBranch::Zero);
        assert!(r.residual < 1e-10);

        let r = diag_restrict_check(&"2/5,7/5,-1/5,3/5".parse().unwrap(), &taus, &p).unwrap();
        assert_eq!(r.branch, DiagBranch::Product);
        assert!(r.residual < 1e-8, "{}", r.residual);
    }

    #[test]
    fn genus1_collapse_examples() {
        let p = Precision::default();
        let v = canonical(&"1/3,0".parse().unwrap());
        assert!(genus1_identity_residual(&v, Complex64::new(0.0, 1.0), &p).unwrap() < 1e-6);
        let v = canonical(&"2/5,1/5".parse().unwrap());
        assert!(genus1_identity_residual(&v, Complex64::new(1.0 / 3.0, 1.0), &p).unwrap() < 1e-6);
    }

    #[test]
    fn genus1_collapse_sign_pair() {
        let p = Precision::default();
        let tau = Complex64::new(-0.2, 0.7);
        let plus = siegel_g_power_log(&rat(1, 3), &rat(0, 1), tau, 36, 1e-15).unwrap();
        let minus = siegel_g_power_log(&rat(2, 3), &rat(0, 1), tau, 36, 1e-15).unwrap();
        assert!(plus.relative_difference(minus) < 1e-8);
        let z = SiegelPoint::diagonal(&[tau]).unwrap();
        let big = big_theta_log(&canonical(&"2/3,0".parse().unwrap()), &z, &p).unwrap();
        assert!(big.relative_difference(plus) < 1e-6);
    }

    #[test]
    fn distinct_classes_at_level_5() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let taus: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.8..1.5)))
            .collect();
        let classes = enumerate_index_classes(1, 5).unwrap();
        let sigs: Vec<Vec<LogValue>> = classes
            .iter()
            .map(|c| {
                let e = c.rep().entries();
                taus.iter()
                    .map(|&t| siegel_g_power_log(&e[0], &e[1], t, 60, 1e-15).unwrap())
                    .collect()
            })
            .collect();
        for a in 0..sigs.len() {
            for b in a + 1..sigs.len() {
                let same = sigs[a].iter().zip(&sigs[b]).all(|(x, y)| x.relative_difference(*y) < 1e-6);
                assert!(!same, "{} and {}", classes[a], classes[b]);
            }
        }
    }
}
