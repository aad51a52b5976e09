//! Exact binary-form combinatorics: binomials, the symmetric split map f₅,
//! the split coefficients b_{m,l} and rotated-frame coefficients.

use rug::ops::Pow;
use rug::{Complex, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;

/// Exact binomial coefficient C(n, k).
pub fn binom(n: u32, k: u32) -> Result<Integer> {
    if k > n {
        return Err(Error::domain(format!("binom({n}, {k}): k exceeds n")));
    }
    Ok(Integer::from(Integer::binomial_u(n, k)))
}

fn binom_unchecked(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}

/// "p/q" rendering of a rational ("p" when integral).
pub fn rational_string(r: &Rational) -> String {
    r.to_string()
}

/// Parse "p/q" or an integer literal.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: Integer = p.trim().parse().ok()?;
        let q: Integer = q.trim().parse().ok()?;
        if q.cmp0().is_eq() {
            return None;
        }
        Some(Rational::from((p, q)))
    } else {
        s.parse::<Integer>().ok().map(Rational::from)
    }
}

fn ser_rationals<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational_string))
}

/// Binary form Σ_k c_k v₀^(d-k) v₁^k with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryForm {
    pub coeffs: Vec<Rational>,
}

impl BinaryForm {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a binary form has at least one coefficient"
        );
        BinaryForm { coeffs }
    }

    /// The monomial v₀^(d-k) v₁^k.
    pub fn monomial(d: usize, k: usize) -> Self {
        let mut c = vec![Rational::new(); d + 1];
        c[k] = Rational::from(1);
        BinaryForm { coeffs: c }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, v0: &Complex, v1: &Complex) -> Complex {
        let prec = v0.prec().0;
        let d = self.degree() as i64;
        let mut acc = numeric::czero(prec);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.cmp0().is_eq() {
                continue;
            }
            let k = k as i64;
            let t = numeric::cpow(v0, d - k) * numeric::cpow(v1, k);
            acc += t * c;
        }
        acc
    }
}

/// Element of M_m ⊗ M_m: `entries[a][b]` multiplies
/// v₀^(m-a) v₁^a ⊗ v₀^(m-b) v₁^b.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitTensor {
    pub m: usize,
    pub entries: Vec<Vec<Rational>>,
}

impl SplitTensor {
    pub fn zero(m: usize) -> Self {
        SplitTensor {
            m,
            entries: vec![vec![Rational::new(); m + 1]; m + 1],
        }
    }

    pub fn entry(&self, a: usize, b: usize) -> &Rational {
        &self.entries[a][b]
    }

    pub fn add_scaled(&mut self, o: &SplitTensor, k: &Rational) {
        assert_eq!(self.m, o.m);
        for (ra, rb) in self.entries.iter_mut().zip(&o.entries) {
            for (x, y) in ra.iter_mut().zip(rb) {
                *x += Rational::from(y * k);
            }
        }
    }

    pub fn scaled(&self, k: &Rational) -> SplitTensor {
        let mut out = SplitTensor::zero(self.m);
        out.add_scaled(self, k);
        out
    }

    /// Nonzero entries as (a, b, value), row-major.
    pub fn support(&self) -> Vec<(usize, usize, Rational)> {
        let mut v = Vec::new();
        for (a, row) in self.entries.iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                if x.cmp0().is_ne() {
                    v.push((a, b, x.clone()));
                }
            }
        }
        v
    }
}

/// f₅ applied to C(2m,l)·v₀^(2m-l) v₁^l, following the two displayed sums.
pub fn split_monomial(m: usize, l: usize) -> Result<SplitTensor> {
    if l > 2 * m {
        return Err(Error::domain(format!(
            "split_monomial: l = {l} exceeds 2m = {}",
            2 * m
        )));
    }
    let mu = m as u32;
    let mut t = SplitTensor::zero(m);
    if l <= m {
        // v₀^(m-l+l₁) v₁^(l-l₁) ⊗ v₀^(m-l₁) v₁^(l₁)
        for l1 in 0..=l {
            let c = binom_unchecked(mu, l1 as u32) * binom_unchecked(mu, (l - l1) as u32);
            t.entries[l - l1][l1] += Rational::from(c);
        }
    } else {
        // v₀^(2m-l₁) v₁^(l₁-m) ⊗ v₀^(l₁-l) v₁^(m+l-l₁)
        for l1 in l..=2 * m {
            let c = binom_unchecked(mu, (2 * m - l1) as u32) * binom_unchecked(mu, (l1 - l) as u32);
            t.entries[l1 - m][m + l - l1] += Rational::from(c);
        }
    }
    Ok(t)
}

/// Linear extension of f₅ to binary forms of even degree 2m.
pub fn apply_f5(form: &BinaryForm) -> Result<SplitTensor> {
    let d = form.degree();
    if d % 2 == 1 {
        return Err(Error::domain(format!("apply_f5: odd degree {d}")));
    }
    let m = d / 2;
    let mut out = SplitTensor::zero(m);
    for (l, c) in form.coeffs.iter().enumerate() {
        if c.cmp0().is_eq() {
            continue;
        }
        let norm = Rational::from(binom_unchecked(d as u32, l as u32));
        let k = Rational::from(c / &norm);
        out.add_scaled(&split_monomial(m, l)?, &k);
    }
    Ok(out)
}

/// The exact vector b_{m,0..m} with f₅(v₀^m v₁^m) = Σ_l b_{m,l}·v₀^l v₁^(m-l) ⊗ v₀^(m-l) v₁^l.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitCoefficients {
    pub m: usize,
    #[serde(serialize_with = "ser_rationals")]
    pub values: Vec<Rational>,
}

/// Reads b_{m,l} off the displayed split of C(2m,m)·v₀^m v₁^m. The order
/// m = 0 is accepted and gives the single coefficient 1.
pub fn split_coefficients(m: usize) -> SplitCoefficients {
    let t = split_monomial(m, m).expect("l = m is always in range");
    let norm = Rational::from(binom_unchecked(2 * m as u32, m as u32));
    // v₀^l v₁^(m-l) ⊗ v₀^(m-l) v₁^l sits at a = m - l, b = l.
    let values = (0..=m)
        .map(|l| Rational::from(t.entry(m - l, l) / &norm))
        .collect();
    SplitCoefficients { m, values }
}

/// Outcome of the exact identity checks on one split-coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientVerdict {
    pub m: usize,
    pub sum_is_one: bool,
    pub symmetric: bool,
    pub integral_scaled: bool,
    pub halving_bound: bool,
    pub upper_regime_bound: bool,
}

impl CoefficientVerdict {
    pub fn pass(&self) -> bool {
        self.sum_is_one
            && self.symmetric
            && self.integral_scaled
            && self.halving_bound
            && self.upper_regime_bound
    }
}

impl SplitCoefficients {
    pub fn sum(&self) -> Rational {
        self.values.iter().fold(Rational::new(), |a, b| a + b)
    }

    /// C(2m,m)·b_{m,l} as integers, when they are integers.
    pub fn scaled_integers(&self) -> Option<Vec<Integer>> {
        let c = binom_unchecked(2 * self.m as u32, self.m as u32);
        self.values
            .iter()
            .map(|b| {
                let x = Rational::from(b * &c);
                (*x.denom() == 1).then(|| x.numer().clone())
            })
            .collect()
    }

    pub fn verdict(&self) -> CoefficientVerdict {
        let m = self.m;
        let v = &self.values;
        CoefficientVerdict {
            m,
            sum_is_one: self.sum() == 1,
            symmetric: (0..=m).all(|l| v[l] == v[m - l]),
            integral_scaled: self.scaled_integers().is_some(),
            halving_bound: (0..=m).all(|l| halving_bound_holds(m, l)),
            upper_regime_bound: (m / 2 + 1..=m).all(|l| upper_regime_bound_holds(m, l)),
        }
    }
}

/// (2m-l)!·l!/(2m)! · m!/((m-l)!·l!) = C(m,l)/C(2m,l).
pub fn coefficient_ratio(m: usize, l: usize) -> Rational {
    let (m, l) = (m as u32, l as u32);
    Rational::from((binom_unchecked(m, l), binom_unchecked(2 * m, l)))
}

/// C(m,l)/C(2m,l) ≤ 2^(-l).
pub fn halving_bound_holds(m: usize, l: usize) -> bool {
    let r = coefficient_ratio(m, l);
    r * Rational::from(Integer::from(1) << l as u32) <= 1
}

/// C(m,l)/C(2m,l) ≤ (3/2)^(m/2)·3^(-l), compared after squaring:
/// ratio²·2^m·9^l ≤ 3^m.
pub fn upper_regime_bound_holds(m: usize, l: usize) -> bool {
    let r = coefficient_ratio(m, l);
    let lhs = Rational::from(&r * &r)
        * Rational::from(Integer::from(1) << m as u32)
        * Rational::from(Integer::from(Integer::u_pow_u(9, l as u32)));
    lhs <= Integer::from(Integer::u_pow_u(3, m as u32))
}

/// Rows (m, l, numerator, denominator) for CSV export.
pub fn coefficient_rows(c: &SplitCoefficients) -> Vec<(usize, usize, String, String)> {
    c.values
        .iter()
        .enumerate()
        .map(|(l, b)| (c.m, l, b.numer().to_string(), b.denom().to_string()))
        .collect()
}

/// The unitary frame attached to ϱ = (v₁/v₀)(x):
/// v_{x,0} = (ϱ̄v₁ + v₀)/n, v_{x,1} = (v₁ - ϱv₀)/n with n = (1+|ϱ|²)^½.
pub fn rotate(rho: &Complex, v0: &Complex, v1: &Complex) -> (Complex, Complex) {
    let prec = rho.prec().0;
    let n = frame_norm(rho);
    let conj = Complex::with_val(prec, rho.conj_ref());
    let x0 = (Complex::with_val(prec, &conj * v1) + v0) / &n;
    let x1 = (v1.clone() - Complex::with_val(prec, rho * v0)) / &n;
    (x0, x1)
}

/// Inverse of [`rotate`]: v₀ = (v_{x,0} - ϱ̄v_{x,1})/n, v₁ = (ϱv_{x,0} + v_{x,1})/n.
pub fn unrotate(rho: &Complex, x0: &Complex, x1: &Complex) -> (Complex, Complex) {
    let prec = rho.prec().0;
    let n = frame_norm(rho);
    let conj = Complex::with_val(prec, rho.conj_ref());
    let v0 = (x0.clone() - Complex::with_val(prec, &conj * x1)) / &n;
    let v1 = (Complex::with_val(prec, rho * x0) + x1) / &n;
    (v0, v1)
}

/// (1+|ϱ|²)^½.
pub fn frame_norm(rho: &Complex) -> rug::Float {
    let prec = rho.prec().0;
    let r2 = rug::Float::with_val(prec, rho.norm_ref());
    (r2 + 1u32).sqrt()
}

/// Coefficients b_{m,i,x} of v₀^m v₁^m = Σ_i b_{m,i,x} v_{x,0}^(2m-i) v_{x,1}^i,
/// from (1+|ϱ|²)^(-m)·(ϱX² + (1-|ϱ|²)XY - ϱ̄Y²)^m.
pub fn rotated_frame_coeffs(m: usize, rho: &Complex) -> Vec<Complex> {
    let prec = rho.prec().0;
    let r2 = rug::Float::with_val(prec, rho.norm_ref());
    let tri = [
        rho.clone(),
        Complex::with_val(prec, Complex::with_val(prec, 1) - &r2),
        -Complex::with_val(prec, rho.conj_ref()),
    ];
    let mut acc = vec![numeric::cone(prec)];
    for _ in 0..m {
        let mut next = vec![numeric::czero(prec); acc.len() + 2];
        for (i, a) in acc.iter().enumerate() {
            for (j, t) in tri.iter().enumerate() {
                next[i + j] += Complex::with_val(prec, a * t);
            }
        }
        acc = next;
    }
    let scale = (r2 + 1u32).pow(-(m as i32));
    acc.into_iter().map(|c| c * &scale).collect()
}

/// Expands Σ_i c_i X^(2m-i) Y^i back into the standard basis, returning the
/// coefficients of v₀^(2m-k) v₁^k.
pub fn to_standard_basis(rho: &Complex, coeffs: &[Complex]) -> Vec<Complex> {
    let prec = rho.prec().0;
    let deg = coeffs.len() - 1;
    let n = frame_norm(rho);
    let conj = Complex::with_val(prec, rho.conj_ref());
    // X and Y as linear forms [coeff of v₀, coeff of v₁].
    let x = [Complex::with_val(prec, 1) / &n, conj / &n];
    let y = [
        -Complex::with_val(prec, rho / &n),
        Complex::with_val(prec, 1) / &n,
    ];
    let lin_pow = |f: &[Complex; 2], e: usize| -> Vec<Complex> {
        let mut acc = vec![numeric::cone(prec)];
        for _ in 0..e {
            let mut next = vec![numeric::czero(prec); acc.len() + 1];
            for (k, a) in acc.iter().enumerate() {
                next[k] += Complex::with_val(prec, a * &f[0]);
                next[k + 1] += Complex::with_val(prec, a * &f[1]);
            }
            acc = next;
        }
        acc
    };
    let mut out = vec![numeric::czero(prec); deg + 1];
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let px = lin_pow(&x, deg - i);
        let py = lin_pow(&y, i);
        for (a, u) in px.iter().enumerate() {
            for (b, v) in py.iter().enumerate() {
                out[a + b] += Complex::with_val(prec, u * v) * c;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from((p, d))
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binom(0, 0).unwrap(), 1);
        assert_eq!(binom(6, 3).unwrap(), 20);
        assert!(binom(2, 3).is_err());
    }

    #[test]
    fn split_values_low_order() {
        assert_eq!(split_coefficients(1).values, vec![q(1, 2), q(1, 2)]);
        assert_eq!(
            split_coefficients(2).values,
            vec![q(1, 6), q(2, 3), q(1, 6)]
        );
        assert_eq!(split_coefficients(0).values, vec![q(1, 1)]);
    }

    #[test]
    fn split_monomial_edges() {
        let t = split_monomial(1, 0).unwrap();
        assert_eq!(t.support(), vec![(0, 0, q(1, 1))]);
        let t = split_monomial(1, 1).unwrap();
        assert_eq!(t.support(), vec![(0, 1, q(1, 1)), (1, 0, q(1, 1))]);
        assert!(split_monomial(2, 5).is_err());
    }

    #[test]
    fn f5_of_mixed_monomial() {
        let t = apply_f5(&BinaryForm::monomial(2, 1)).unwrap();
        assert_eq!(t.support(), vec![(0, 1, q(1, 2)), (1, 0, q(1, 2))]);
        assert!(apply_f5(&BinaryForm::monomial(3, 1)).is_err());
    }

    #[test]
    fn rotated_coefficients_examples() {
        let prec = 128;
        let c = rotated_frame_coeffs(1, &numeric::cf64(prec, 1.0, 0.0));
        let want = [0.5, 0.0, -0.5];
        for (a, b) in c.iter().zip(want) {
            assert!(numeric::cabs_f64(&(a.clone() - b)) < 1e-30);
        }
        let c = rotated_frame_coeffs(1, &numeric::czero(prec));
        let want = [0.0, 1.0, 0.0];
        for (a, b) in c.iter().zip(want) {
            assert!(numeric::cabs_f64(&(a.clone() - b)) < 1e-30);
        }
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rational("-3/6"), Some(q(-1, 2)));
        assert_eq!(parse_rational("12"), Some(q(12, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(rational_string(&q(2, 4)), "1/2");
    }
}
