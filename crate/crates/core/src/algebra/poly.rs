//! Univariate polynomials over ℚ and the rational function field ℚ(t).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::{Complex, Integer, Rational};

use crate::numeric;

/// Dense univariate polynomial with exact rational coefficients, lowest
/// degree first. Trailing zeros are always stripped, so the zero polynomial
/// has an empty coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    c: Vec<Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Rational::from(1))
    }

    pub fn constant(c: Rational) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// The variable itself.
    pub fn x() -> Self {
        Poly::monomial(1, Rational::from(1))
    }

    pub fn monomial(k: usize, c: Rational) -> Self {
        let mut v = vec![Rational::new(); k + 1];
        v[k] = c;
        Poly::from_coeffs(v)
    }

    pub fn from_coeffs(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| x.cmp0().is_eq()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Poly::from_coeffs(c.iter().map(|&x| Rational::from(x)).collect())
    }

    pub fn from_integers(c: &[Integer]) -> Self {
        Poly::from_coeffs(c.iter().map(|x| Rational::from(x.clone())).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    /// Coefficient of x^k (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Rational {
        self.c.get(k).cloned().unwrap_or_default()
    }

    pub fn lead(&self) -> Rational {
        self.c.last().cloned().unwrap_or_default()
    }

    /// Exponent of the lowest nonzero term; `None` for the zero polynomial.
    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|x| x.cmp0().is_ne())
    }

    pub fn is_constant(&self) -> bool {
        self.c.len() <= 1
    }

    pub fn is_integral(&self) -> bool {
        self.c.iter().all(|x| *x.denom() == 1)
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        Poly::from_coeffs(self.c.iter().map(|x| Rational::from(x * k)).collect())
    }

    /// Multiply by x^k.
    pub fn shift_up(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![Rational::new(); k];
        v.extend(self.c.iter().cloned());
        Poly { c: v }
    }

    /// Exact division by x^k; the low coefficients must vanish.
    pub fn shift_down(&self, k: usize) -> Poly {
        debug_assert!(self.c.iter().take(k).all(|x| x.cmp0().is_eq()));
        Poly::from_coeffs(self.c.iter().skip(k).cloned().collect())
    }

    pub fn truncate(&self, n: usize) -> Poly {
        Poly::from_coeffs(self.c.iter().take(n).cloned().collect())
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::from_coeffs(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, x)| Rational::from(x * k as u64))
                .collect(),
        )
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead_inv = d.lead().recip();
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![Rational::new(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = Rational::from(&r[k + dd] * &lead_inv);
            if f.cmp0().is_ne() {
                for (j, dj) in d.c.iter().enumerate() {
                    r[k + j] -= Rational::from(&f * dj);
                }
            }
            q[k] = f;
        }
        r.truncate(dd);
        (Poly::from_coeffs(q), Poly::from_coeffs(r))
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        self.scale(&self.lead().recip())
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Split into a positive rational content and a primitive integer
    /// polynomial whose leading coefficient is positive.
    pub fn primitive_part(&self) -> (Rational, Poly) {
        if self.is_zero() {
            return (Rational::from(1), Poly::zero());
        }
        let mut den = Integer::from(1);
        for x in &self.c {
            den.lcm_mut(x.denom());
        }
        let ints: Vec<Integer> = self
            .c
            .iter()
            .map(|x| x.numer() * Integer::from(&den / x.denom()))
            .collect();
        let mut g = Integer::new();
        for x in &ints {
            g.gcd_mut(x);
        }
        if ints.last().is_some_and(|x| x.cmp0().is_lt()) {
            g = -g;
        }
        let prim: Vec<Integer> = ints.iter().map(|x| Integer::from(x / &g)).collect();
        (Rational::from((g, den)), Poly::from_integers(&prim))
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.c.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn eval_complex(&self, x: &Complex) -> Complex {
        let prec = x.prec().0;
        let mut acc = numeric::czero(prec);
        for c in self.c.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    /// x^n·p(1/x) with n = deg p: coefficient reversal.
    pub fn reversed(&self) -> Poly {
        Poly::from_coeffs(self.c.iter().rev().cloned().collect())
    }

    /// p(a·x).
    pub fn scale_var(&self, a: &Rational) -> Poly {
        let mut f = Rational::from(1);
        let mut out = Vec::with_capacity(self.c.len());
        for c in &self.c {
            out.push(Rational::from(c * &f));
            f *= a;
        }
        Poly::from_coeffs(out)
    }

    /// Composition p(g(x)).
    pub fn compose(&self, g: &Poly) -> Poly {
        let mut acc = Poly::zero();
        for c in self.c.iter().rev() {
            acc = &(&acc * g) + &Poly::constant(c.clone());
        }
        acc
    }

    /// Formatting with a chosen variable name.
    pub fn display_var(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, c) in self.c.iter().enumerate() {
            if c.cmp0().is_eq() {
                continue;
            }
            let neg = c.cmp0().is_lt();
            let a = Rational::from(c.abs_ref());
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let unit = a == 1;
            match k {
                0 => s.push_str(&a.to_string()),
                _ => {
                    if !unit {
                        s.push_str(&format!("{a}*"));
                    }
                    s.push_str(var);
                    if k > 1 {
                        s.push_str(&format!("^{k}"));
                    }
                }
            }
        }
        s
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_var("t"))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs(
            (0..n)
                .map(|k| match (self.c.get(k), o.c.get(k)) {
                    (Some(a), Some(b)) => Rational::from(a + b),
                    (Some(a), None) => a.clone(),
                    (None, Some(b)) => b.clone(),
                    (None, None) => unreachable!(),
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            c: self.c.iter().map(|x| Rational::from(-x)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![Rational::new(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.cmp0().is_eq() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                v[i + j] += Rational::from(a * b);
            }
        }
        Poly::from_coeffs(v)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident, $ty:ty) => {
        impl $tr for $ty {
            type Output = $ty;
            fn $m(self, o: $ty) -> $ty {
                (&self).$m(&o)
            }
        }
    };
}
pub(crate) use forward_owned;

forward_owned!(Add, add, Poly);
forward_owned!(Sub, sub, Poly);
forward_owned!(Mul, mul, Poly);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

/// Element of ℚ(t), kept in lowest terms with a monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl Default for RatFunc {
    fn default() -> Self {
        RatFunc::zero()
    }
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        RatFunc::from_poly(Poly::constant(c))
    }

    /// `num/den` reduced; `None` when `den` is zero.
    pub fn new(num: Poly, den: Poly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(RatFunc::zero());
        }
        let g = Poly::gcd(&num, &den);
        let (mut n, _) = num.div_rem(&g);
        let (mut d, _) = den.div_rem(&g);
        let l = d.lead().recip();
        n = n.scale(&l);
        d = d.scale(&l);
        Some(RatFunc { num: n, den: d })
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn inv(&self) -> Option<RatFunc> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &RatFunc) -> Option<RatFunc> {
        o.inv().map(|i| self * &i)
    }

    pub fn pow(&self, e: i32) -> Option<RatFunc> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let e = e.unsigned_abs();
        Some(RatFunc {
            num: base.num.pow(e),
            den: base.den.pow(e),
        })
    }

    pub fn scale(&self, k: &Rational) -> RatFunc {
        RatFunc {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
        .renorm()
    }

    fn renorm(self) -> RatFunc {
        if self.num.is_zero() {
            RatFunc::zero()
        } else {
            self
        }
    }

    pub fn derivative(&self) -> RatFunc {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RatFunc::new(n, &self.den * &self.den).expect("nonzero denominator")
    }

    /// t·d/dt, the Euler derivation.
    pub fn euler(&self) -> RatFunc {
        &RatFunc::from_poly(Poly::x()) * &self.derivative()
    }

    /// Substitute t ↦ 1/t.
    pub fn inversion_pullback(&self) -> RatFunc {
        if self.is_zero() {
            return RatFunc::zero();
        }
        let dn = self.num.degree().unwrap();
        let dd = self.den.degree().unwrap();
        let n = self.num.reversed();
        let d = self.den.reversed();
        if dd >= dn {
            RatFunc::new(n.shift_up(dd - dn), d)
        } else {
            RatFunc::new(n, d.shift_up(dn - dd))
        }
        .expect("nonzero denominator")
    }

    /// f(a·t).
    pub fn scale_var(&self, a: &Rational) -> RatFunc {
        RatFunc::new(self.num.scale_var(a), self.den.scale_var(a)).expect("nonzero")
    }

    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        let d = self.den.eval(x);
        if d.cmp0().is_eq() {
            return None;
        }
        Some(self.num.eval(x) / d)
    }

    pub fn eval_complex(&self, x: &Complex) -> Complex {
        let n = self.num.eval_complex(x);
        let d = self.den.eval_complex(x);
        n / d
    }

    /// Order of vanishing at t=0 (negative for a pole); `None` for zero.
    pub fn order_at_zero(&self) -> Option<i64> {
        let vn = self.num.valuation()? as i64;
        let vd = self.den.valuation().unwrap() as i64;
        Some(vn - vd)
    }
}

/// Polynomial with coefficients converted once to complex numbers.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    c: Vec<Complex>,
    prec: u32,
}

impl CompiledPoly {
    pub fn new(p: &Poly, prec: u32) -> Self {
        CompiledPoly {
            c: p.coeffs()
                .iter()
                .map(|x| Complex::with_val(prec, x))
                .collect(),
            prec,
        }
    }

    pub fn eval(&self, x: &Complex) -> Complex {
        let mut acc = numeric::czero(self.prec);
        for c in self.c.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }
}

/// Rational function with compiled numerator and denominator.
#[derive(Clone, Debug)]
pub struct CompiledRatFunc {
    num: CompiledPoly,
    den: CompiledPoly,
}

impl CompiledRatFunc {
    pub fn new(f: &RatFunc, prec: u32) -> Self {
        CompiledRatFunc {
            num: CompiledPoly::new(f.num(), prec),
            den: CompiledPoly::new(f.den(), prec),
        }
    }

    pub fn eval(&self, x: &Complex) -> Complex {
        self.num.eval(x) / self.den.eval(x)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone()).unwrap();
        }
        RatFunc::new(
            &(&self.num * &o.den) + &(&o.num * &self.den),
            &self.den * &o.den,
        )
        .unwrap()
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, o: &RatFunc) -> RatFunc {
        self + &(-o)
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero();
        }
        if self.den.is_constant() && o.den.is_constant() {
            return RatFunc::from_poly(&self.num * &o.num);
        }
        RatFunc::new(&self.num * &o.num, &self.den * &o.den).unwrap()
    }
}

forward_owned!(Add, add, RatFunc);
forward_owned!(Sub, sub, RatFunc);
forward_owned!(Mul, mul, RatFunc);

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Poly {
        Poly::from_ints(c)
    }

    #[test]
    fn division_roundtrip() {
        let a = p(&[1, -3, 0, 2, 5]);
        let b = p(&[2, 1, 3]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(&(&q * &b) + &r, a);
        assert!(r.degree().unwrap() < 2);
    }

    #[test]
    fn gcd_and_reduction() {
        let a = &p(&[-1, 1]) * &p(&[2, 1]);
        let b = &p(&[-1, 1]) * &p(&[3, 0, 1]);
        assert_eq!(Poly::gcd(&a, &b), p(&[-1, 1]));
        let f = RatFunc::new(a, b).unwrap();
        assert_eq!(f.num(), &p(&[2, 1]));
        assert_eq!(f.den(), &p(&[3, 0, 1]));
    }

    #[test]
    fn primitive_part_normalizes_sign() {
        let q = Poly::from_coeffs(vec![Rational::from((1, 2)), Rational::from((-3, 4))]);
        let (c, pp) = q.primitive_part();
        assert_eq!(pp, p(&[-2, 3]));
        assert_eq!(c, Rational::from((-1, 4)));
    }

    #[test]
    fn inversion_is_involution() {
        let f = RatFunc::new(p(&[1, 2, 0, 3]), p(&[0, 0, 1, 1])).unwrap();
        assert_eq!(f.inversion_pullback().inversion_pullback(), f);
        let t3 = RatFunc::from_poly(p(&[0, 0, 0, 1]));
        assert_eq!(t3.inversion_pullback(), t3.inv().unwrap());
    }

    #[test]
    fn euler_on_monomials() {
        let t4 = RatFunc::from_poly(p(&[0, 0, 0, 0, 7]));
        assert_eq!(t4.euler(), t4.scale(&Rational::from(4)));
        assert!(RatFunc::constant(Rational::from(5)).euler().is_zero());
    }
}
