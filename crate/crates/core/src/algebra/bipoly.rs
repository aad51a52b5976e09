//! Polynomials and rational functions in two variables (t, w) over ℚ.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::{Complex, Rational};

use super::poly::{forward_owned, Poly};
use crate::numeric;

/// Element of ℚ[t][w]: `c[k]` is the coefficient of w^k, itself a polynomial
/// in t. Trailing zero coefficients are stripped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BiPoly {
    c: Vec<Poly>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly { c: Vec::new() }
    }

    pub fn one() -> Self {
        BiPoly::from_t(Poly::one())
    }

    pub fn constant(r: Rational) -> Self {
        BiPoly::from_t(Poly::constant(r))
    }

    pub fn t() -> Self {
        BiPoly::from_t(Poly::x())
    }

    pub fn w() -> Self {
        BiPoly::from_w_coeffs(vec![Poly::zero(), Poly::one()])
    }

    pub fn from_t(p: Poly) -> Self {
        BiPoly::from_w_coeffs(vec![p])
    }

    pub fn from_w_coeffs(mut c: Vec<Poly>) -> Self {
        while c.last().is_some_and(Poly::is_zero) {
            c.pop();
        }
        BiPoly { c }
    }

    /// `rows[k][j]` is the coefficient of w^k·t^j.
    pub fn from_nested(rows: Vec<Vec<Rational>>) -> Self {
        BiPoly::from_w_coeffs(rows.into_iter().map(Poly::from_coeffs).collect())
    }

    pub fn from_nested_ints(rows: &[&[i64]]) -> Self {
        BiPoly::from_w_coeffs(rows.iter().map(|r| Poly::from_ints(r)).collect())
    }

    pub fn to_nested(&self) -> Vec<Vec<Rational>> {
        self.c.iter().map(|p| p.coeffs().to_vec()).collect()
    }

    pub fn w_coeffs(&self) -> &[Poly] {
        &self.c
    }

    pub fn coeff_w(&self, k: usize) -> Poly {
        self.c.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn deg_w(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn deg_t(&self) -> usize {
        self.c.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    /// Nonzero constant (no t or w dependence).
    pub fn as_constant(&self) -> Option<Rational> {
        if self.c.len() == 1 && self.c[0].is_constant() {
            Some(self.c[0].coeff(0))
        } else {
            None
        }
    }

    pub fn is_monic_w(&self) -> bool {
        self.c.last().is_some_and(|p| *p == Poly::one())
    }

    pub fn is_integral(&self) -> bool {
        self.c.iter().all(Poly::is_integral)
    }

    pub fn scale(&self, k: &Rational) -> BiPoly {
        BiPoly::from_w_coeffs(self.c.iter().map(|p| p.scale(k)).collect())
    }

    pub fn mul_t(&self, p: &Poly) -> BiPoly {
        BiPoly::from_w_coeffs(self.c.iter().map(|q| q * p).collect())
    }

    pub fn pow(&self, e: u32) -> BiPoly {
        let mut acc = BiPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn partial_t(&self) -> BiPoly {
        BiPoly::from_w_coeffs(self.c.iter().map(Poly::derivative).collect())
    }

    pub fn partial_w(&self) -> BiPoly {
        BiPoly::from_w_coeffs(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, p)| p.scale(&Rational::from(k as u64)))
                .collect(),
        )
    }

    /// p(a·t, w).
    pub fn scale_t(&self, a: &Rational) -> BiPoly {
        BiPoly::from_w_coeffs(self.c.iter().map(|p| p.scale_var(a)).collect())
    }

    /// Specialize t to a rational; the result is a polynomial in w.
    pub fn at_t(&self, t: &Rational) -> Poly {
        Poly::from_coeffs(self.c.iter().map(|p| p.eval(t)).collect())
    }

    /// Complex coefficients in w at a given t.
    pub fn at_t_complex(&self, t: &Complex) -> Vec<Complex> {
        self.c.iter().map(|p| p.eval_complex(t)).collect()
    }

    pub fn eval(&self, t: &Complex, w: &Complex) -> Complex {
        let prec = t.prec().0.max(w.prec().0);
        let mut acc = numeric::czero(prec);
        for p in self.c.iter().rev() {
            acc *= w;
            acc += p.eval_complex(t);
        }
        acc
    }

    /// Swap the roles of t and w.
    pub fn swap_vars(&self) -> BiPoly {
        let dt = self.deg_t();
        let rows: Vec<Vec<Rational>> = (0..=dt)
            .map(|j| self.c.iter().map(|p| p.coeff(j)).collect())
            .collect();
        BiPoly::from_nested(rows)
    }

    /// Resultant in w, a polynomial in t, via the Sylvester matrix and
    /// fraction-free elimination over ℚ[t].
    pub fn resultant_w(&self, o: &BiPoly) -> Poly {
        let (Some(m), Some(n)) = (self.deg_w(), o.deg_w()) else {
            return Poly::zero();
        };
        if m == 0 && n == 0 {
            return Poly::one();
        }
        if m == 0 {
            return self.c[0].pow(n as u32);
        }
        if n == 0 {
            return o.c[0].pow(m as u32);
        }
        let size = m + n;
        let mut mat = vec![vec![Poly::zero(); size]; size];
        for r in 0..n {
            for k in 0..=m {
                mat[r][r + k] = self.c[m - k].clone();
            }
        }
        for r in 0..m {
            for k in 0..=n {
                mat[n + r][r + k] = o.c[n - k].clone();
            }
        }
        bareiss_det(mat)
    }
}

/// Determinant of a square matrix over ℚ[t] by Bareiss elimination.
pub fn bareiss_det(mut a: Vec<Vec<Poly>>) -> Poly {
    let n = a.len();
    let mut sign = false;
    let mut prev = Poly::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return Poly::zero();
            };
            a.swap(k, p);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero());
                a[i][j] = q;
            }
            a[i][k] = Poly::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign {
        -d
    } else {
        d
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        for (k, p) in self.c.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let wpart = match k {
                0 => String::new(),
                1 => "w".into(),
                _ => format!("w^{k}"),
            };
            if wpart.is_empty() {
                parts.push(p.to_string());
            } else if *p == Poly::one() {
                parts.push(wpart);
            } else {
                parts.push(format!("({p})*{wpart}"));
            }
        }
        f.write_str(&parts.join(" + "))
    }
}

impl Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, o: &BiPoly) -> BiPoly {
        let n = self.c.len().max(o.c.len());
        BiPoly::from_w_coeffs((0..n).map(|k| &self.coeff_w(k) + &o.coeff_w(k)).collect())
    }
}

impl Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, o: &BiPoly) -> BiPoly {
        self + &(-o)
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        BiPoly {
            c: self.c.iter().map(|p| -p).collect(),
        }
    }
}

impl Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, o: &BiPoly) -> BiPoly {
        if self.is_zero() || o.is_zero() {
            return BiPoly::zero();
        }
        let mut v = vec![Poly::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                v[i + j] = &v[i + j] + &(a * b);
            }
        }
        BiPoly::from_w_coeffs(v)
    }
}

forward_owned!(Add, add, BiPoly);
forward_owned!(Sub, sub, BiPoly);
forward_owned!(Mul, mul, BiPoly);

impl Neg for BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        -&self
    }
}

/// Quotient of two bivariate polynomials. No cancellation is attempted; the
/// denominator is only normalized when it is a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BiRat {
    num: BiPoly,
    den: BiPoly,
}

impl BiRat {
    pub fn new(num: BiPoly, den: BiPoly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if let Some(c) = den.as_constant() {
            return Some(BiRat::from_poly(num.scale(&c.recip())));
        }
        Some(BiRat { num, den })
    }

    pub fn from_poly(p: BiPoly) -> Self {
        BiRat {
            num: p,
            den: BiPoly::one(),
        }
    }

    pub fn constant(r: Rational) -> Self {
        BiRat::from_poly(BiPoly::constant(r))
    }

    pub fn zero() -> Self {
        BiRat::from_poly(BiPoly::zero())
    }

    pub fn one() -> Self {
        BiRat::from_poly(BiPoly::one())
    }

    pub fn num(&self) -> &BiPoly {
        &self.num
    }

    pub fn den(&self) -> &BiPoly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.num.is_integral() && self.den.is_integral()
    }

    pub fn inv(&self) -> Option<BiRat> {
        BiRat::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, e: i32) -> Option<BiRat> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let e = e.unsigned_abs();
        BiRat::new(base.num.pow(e), base.den.pow(e))
    }

    pub fn partial_t(&self) -> BiRat {
        self.quotient_rule(self.num.partial_t(), self.den.partial_t())
    }

    pub fn partial_w(&self) -> BiRat {
        self.quotient_rule(self.num.partial_w(), self.den.partial_w())
    }

    fn quotient_rule(&self, dn: BiPoly, dd: BiPoly) -> BiRat {
        if dd.is_zero() {
            return BiRat::new(dn, self.den.clone()).unwrap();
        }
        let n = &(&dn * &self.den) - &(&self.num * &dd);
        BiRat::new(n, &self.den * &self.den).unwrap()
    }

    pub fn scale_t(&self, a: &Rational) -> BiRat {
        BiRat::new(self.num.scale_t(a), self.den.scale_t(a)).unwrap()
    }

    pub fn eval(&self, t: &Complex, w: &Complex) -> Complex {
        let n = self.num.eval(t, w);
        if self.den == BiPoly::one() {
            return n;
        }
        n / self.den.eval(t, w)
    }
}

/// Bivariate polynomial with complex coefficients, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledBiPoly {
    c: Vec<Vec<Complex>>,
    prec: u32,
}

impl CompiledBiPoly {
    pub fn new(p: &BiPoly, prec: u32) -> Self {
        CompiledBiPoly {
            c: p.w_coeffs()
                .iter()
                .map(|q| {
                    q.coeffs()
                        .iter()
                        .map(|x| Complex::with_val(prec, x))
                        .collect()
                })
                .collect(),
            prec,
        }
    }

    pub fn eval(&self, t: &Complex, w: &Complex) -> Complex {
        let mut acc = numeric::czero(self.prec);
        for row in self.c.iter().rev() {
            acc *= w;
            let mut r = numeric::czero(self.prec);
            for c in row.iter().rev() {
                r *= t;
                r += c;
            }
            acc += r;
        }
        acc
    }

    /// Coefficients in w at a fixed t.
    pub fn at_t(&self, t: &Complex) -> Vec<Complex> {
        self.c
            .iter()
            .map(|row| {
                let mut r = numeric::czero(self.prec);
                for c in row.iter().rev() {
                    r *= t;
                    r += c;
                }
                r
            })
            .collect()
    }
}

/// Compiled quotient of bivariate polynomials.
#[derive(Clone, Debug)]
pub struct CompiledBiRat {
    num: CompiledBiPoly,
    den: Option<CompiledBiPoly>,
}

impl CompiledBiRat {
    pub fn new(f: &BiRat, prec: u32) -> Self {
        CompiledBiRat {
            num: CompiledBiPoly::new(f.num(), prec),
            den: (f.den() != &BiPoly::one()).then(|| CompiledBiPoly::new(f.den(), prec)),
        }
    }

    pub fn eval(&self, t: &Complex, w: &Complex) -> Complex {
        let n = self.num.eval(t, w);
        match &self.den {
            None => n,
            Some(d) => n / d.eval(t, w),
        }
    }

    /// Denominator value, 1 for polynomials.
    pub fn eval_den(&self, t: &Complex, w: &Complex) -> Complex {
        match &self.den {
            None => numeric::cone(self.num.prec),
            Some(d) => d.eval(t, w),
        }
    }
}

impl fmt::Display for BiRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == BiPoly::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "[{}]/[{}]", self.num, self.den)
        }
    }
}

impl Add for &BiRat {
    type Output = BiRat;
    fn add(self, o: &BiRat) -> BiRat {
        if self.den == o.den {
            return BiRat::new(&self.num + &o.num, self.den.clone()).unwrap();
        }
        BiRat::new(
            &(&self.num * &o.den) + &(&o.num * &self.den),
            &self.den * &o.den,
        )
        .unwrap()
    }
}

impl Sub for &BiRat {
    type Output = BiRat;
    fn sub(self, o: &BiRat) -> BiRat {
        self + &(-o)
    }
}

impl Neg for &BiRat {
    type Output = BiRat;
    fn neg(self) -> BiRat {
        BiRat {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &BiRat {
    type Output = BiRat;
    fn mul(self, o: &BiRat) -> BiRat {
        BiRat::new(&self.num * &o.num, &self.den * &o.den).unwrap()
    }
}

forward_owned!(Add, add, BiRat);
forward_owned!(Sub, sub, BiRat);
forward_owned!(Mul, mul, BiRat);

impl Neg for BiRat {
    type Output = BiRat;
    fn neg(self) -> BiRat {
        -&self
    }
}

impl From<BiPoly> for BiRat {
    fn from(p: BiPoly) -> Self {
        BiRat::from_poly(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resultant_by_hand() {
        // Res_w(w^2 - t, w) = -t
        let p = BiPoly::from_nested_ints(&[&[0, -1], &[], &[1]]);
        let q = BiPoly::w();
        assert_eq!(p.resultant_w(&q), Poly::from_ints(&[0, -1]));
        // Res_w(w^2 - t, w - 2) = 4 - t
        let q2 = BiPoly::from_nested_ints(&[&[-2], &[1]]);
        assert_eq!(p.resultant_w(&q2), Poly::from_ints(&[4, -1]));
    }

    #[test]
    fn partials() {
        // t^2 w^3 + 5 t w
        let p = BiPoly::from_nested_ints(&[&[], &[0, 5], &[], &[0, 0, 1]]);
        assert_eq!(
            p.partial_w(),
            BiPoly::from_nested_ints(&[&[0, 5], &[], &[0, 0, 3]])
        );
        assert_eq!(
            p.partial_t(),
            BiPoly::from_nested_ints(&[&[], &[5], &[], &[0, 2]])
        );
    }

    #[test]
    fn swap_roundtrip() {
        let p = BiPoly::from_nested_ints(&[&[1, 2], &[0, 0, 3], &[4]]);
        assert_eq!(p.swap_vars().swap_vars(), p);
    }
}
