//! Quotient algebras R[w]/(P) for a monic P, with traces and inverses
//! computed through the multiplication matrix in the basis 1, w, …, w^(d-1).

use rug::Rational;

use super::bipoly::{BiPoly, BiRat};
use super::poly::{Poly, RatFunc};
use super::series::{ps_inv, ps_mul};

/// Coefficient ring operations. Implementations carry whatever context the
/// ring needs (a truncation order, for instance).
pub trait CoeffRing {
    type E: Clone + std::fmt::Debug;
    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    /// Multiplicative inverse when `a` is a unit.
    fn inv(&self, a: &Self::E) -> Option<Self::E>;
    fn from_poly(&self, p: &Poly) -> Self::E;
}

/// The field ℚ.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rationals;

impl CoeffRing for Rationals {
    type E = Rational;
    fn zero(&self) -> Rational {
        Rational::new()
    }
    fn one(&self) -> Rational {
        Rational::from(1)
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.cmp0().is_eq()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        Rational::from(a + b)
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        Rational::from(a - b)
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        Rational::from(a * b)
    }
    fn neg(&self, a: &Rational) -> Rational {
        Rational::from(-a)
    }
    fn inv(&self, a: &Rational) -> Option<Rational> {
        (a.cmp0().is_ne()).then(|| Rational::from(a.recip_ref()))
    }
    fn from_poly(&self, p: &Poly) -> Rational {
        assert!(p.is_constant(), "non-constant polynomial in ℚ");
        p.coeff(0)
    }
}

/// The rational function field ℚ(t).
#[derive(Clone, Copy, Debug, Default)]
pub struct RatFuncs;

impl CoeffRing for RatFuncs {
    type E = RatFunc;
    fn zero(&self) -> RatFunc {
        RatFunc::zero()
    }
    fn one(&self) -> RatFunc {
        RatFunc::one()
    }
    fn is_zero(&self, a: &RatFunc) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a + b
    }
    fn sub(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a - b
    }
    fn mul(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a * b
    }
    fn neg(&self, a: &RatFunc) -> RatFunc {
        -a
    }
    fn inv(&self, a: &RatFunc) -> Option<RatFunc> {
        a.inv()
    }
    fn from_poly(&self, p: &Poly) -> RatFunc {
        RatFunc::from_poly(p.clone())
    }
}

/// ℚ[[t]]/(t^order): power series truncated after `order` terms.
#[derive(Clone, Copy, Debug)]
pub struct TruncatedSeries {
    pub order: usize,
}

impl CoeffRing for TruncatedSeries {
    type E = Vec<Rational>;
    fn zero(&self) -> Vec<Rational> {
        Vec::new()
    }
    fn one(&self) -> Vec<Rational> {
        if self.order == 0 {
            Vec::new()
        } else {
            vec![Rational::from(1)]
        }
    }
    fn is_zero(&self, a: &Vec<Rational>) -> bool {
        a.is_empty()
    }
    fn add(&self, a: &Vec<Rational>, b: &Vec<Rational>) -> Vec<Rational> {
        let n = a.len().max(b.len()).min(self.order);
        let mut v: Vec<Rational> = (0..n)
            .map(|k| {
                let x = a.get(k).cloned().unwrap_or_default();
                match b.get(k) {
                    Some(y) => x + y,
                    None => x,
                }
            })
            .collect();
        while v.last().is_some_and(|x| x.cmp0().is_eq()) {
            v.pop();
        }
        v
    }
    fn sub(&self, a: &Vec<Rational>, b: &Vec<Rational>) -> Vec<Rational> {
        self.add(a, &self.neg(b))
    }
    fn mul(&self, a: &Vec<Rational>, b: &Vec<Rational>) -> Vec<Rational> {
        ps_mul(a, b, self.order)
    }
    fn neg(&self, a: &Vec<Rational>) -> Vec<Rational> {
        a.iter().map(|x| Rational::from(-x)).collect()
    }
    fn inv(&self, a: &Vec<Rational>) -> Option<Vec<Rational>> {
        ps_inv(a, self.order)
    }
    fn from_poly(&self, p: &Poly) -> Vec<Rational> {
        p.truncate(self.order).coeffs().to_vec()
    }
}

/// Solve A·x = b by Gaussian elimination, choosing pivots that are units of
/// the ring. Returns `None` when no unit pivot exists in some column.
pub fn solve<R: CoeffRing>(ring: &R, a: &[Vec<R::E>], b: &[R::E]) -> Option<Vec<R::E>> {
    let n = a.len();
    let mut m: Vec<Vec<R::E>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for k in 0..n {
        let (p, pinv) = (k..n).find_map(|r| ring.inv(&m[r][k]).map(|i| (r, i)))?;
        m.swap(k, p);
        for j in k..=n {
            m[k][j] = ring.mul(&m[k][j], &pinv);
        }
        for i in 0..n {
            if i == k || ring.is_zero(&m[i][k]) {
                continue;
            }
            let f = m[i][k].clone();
            for j in k..=n {
                let t = ring.mul(&f, &m[k][j]);
                m[i][j] = ring.sub(&m[i][j], &t);
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// R[w]/(P) with P monic of degree d ≥ 1.
#[derive(Clone, Debug)]
pub struct QuotientAlgebra<R: CoeffRing> {
    ring: R,
    /// Coefficients of P, lowest first; `p[d]` is one.
    p: Vec<R::E>,
    /// Tr(w^k) for k < d.
    traces: Vec<R::E>,
}

impl<R: CoeffRing> QuotientAlgebra<R> {
    /// Builds the algebra for a bivariate P monic in w.
    pub fn new(ring: R, p: &BiPoly) -> Self {
        assert!(p.is_monic_w(), "modulus must be monic in w");
        let pc: Vec<R::E> = p.w_coeffs().iter().map(|c| ring.from_poly(c)).collect();
        let mut alg = QuotientAlgebra {
            ring,
            p: pc,
            traces: Vec::new(),
        };
        alg.traces = alg.power_traces();
        alg
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn degree(&self) -> usize {
        self.p.len() - 1
    }

    fn power_traces(&self) -> Vec<R::E> {
        let d = self.degree();
        // w^n mod P for n < 2d - 1.
        let mut pw = vec![self.one()];
        for _ in 1..(2 * d).saturating_sub(1) {
            let last = pw.last().unwrap();
            pw.push(self.mul_w(last));
        }
        (0..d)
            .map(|k| {
                (0..d).fold(self.ring.zero(), |acc, j| {
                    self.ring.add(&acc, &pw[j + k][j])
                })
            })
            .collect()
    }

    pub fn zero(&self) -> Vec<R::E> {
        vec![self.ring.zero(); self.degree()]
    }

    pub fn one(&self) -> Vec<R::E> {
        let mut v = self.zero();
        v[0] = self.ring.one();
        v
    }

    pub fn scalar(&self, c: R::E) -> Vec<R::E> {
        let mut v = self.zero();
        v[0] = c;
        v
    }

    fn mul_w(&self, a: &[R::E]) -> Vec<R::E> {
        let d = self.degree();
        let top = a[d - 1].clone();
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let shifted = if k == 0 {
                self.ring.zero()
            } else {
                a[k - 1].clone()
            };
            let corr = self.ring.mul(&top, &self.p[k]);
            out.push(self.ring.sub(&shifted, &corr));
        }
        out
    }

    /// Reduce a polynomial in w of arbitrary length modulo P.
    pub fn reduce(&self, mut c: Vec<R::E>) -> Vec<R::E> {
        let d = self.degree();
        while c.len() > d {
            let top = c.pop().unwrap();
            if self.ring.is_zero(&top) {
                continue;
            }
            let base = c.len() - d;
            for k in 0..d {
                let t = self.ring.mul(&top, &self.p[k]);
                c[base + k] = self.ring.sub(&c[base + k], &t);
            }
        }
        c.resize(d, self.ring.zero());
        c
    }

    pub fn add(&self, a: &[R::E], b: &[R::E]) -> Vec<R::E> {
        a.iter().zip(b).map(|(x, y)| self.ring.add(x, y)).collect()
    }

    pub fn sub(&self, a: &[R::E], b: &[R::E]) -> Vec<R::E> {
        a.iter().zip(b).map(|(x, y)| self.ring.sub(x, y)).collect()
    }

    pub fn scale(&self, a: &[R::E], k: &R::E) -> Vec<R::E> {
        a.iter().map(|x| self.ring.mul(x, k)).collect()
    }

    pub fn mul(&self, a: &[R::E], b: &[R::E]) -> Vec<R::E> {
        let d = self.degree();
        let mut c = vec![self.ring.zero(); 2 * d - 1];
        for (i, x) in a.iter().enumerate() {
            if self.ring.is_zero(x) {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if self.ring.is_zero(y) {
                    continue;
                }
                let t = self.ring.mul(x, y);
                c[i + j] = self.ring.add(&c[i + j], &t);
            }
        }
        self.reduce(c)
    }

    pub fn pow(&self, a: &[R::E], e: u32) -> Vec<R::E> {
        let mut acc = self.one();
        let mut base = a.to_vec();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Matrix of multiplication by `a`: column j holds a·w^j.
    pub fn mul_matrix(&self, a: &[R::E]) -> Vec<Vec<R::E>> {
        let d = self.degree();
        let mut cols = Vec::with_capacity(d);
        let mut cur = a.to_vec();
        for j in 0..d {
            if j > 0 {
                cur = self.mul_w(&cur);
            }
            cols.push(cur.clone());
        }
        (0..d)
            .map(|i| (0..d).map(|j| cols[j][i].clone()).collect())
            .collect()
    }

    /// Trace of the multiplication-by-`a` map.
    pub fn trace(&self, a: &[R::E]) -> R::E {
        a.iter()
            .zip(&self.traces)
            .fold(self.ring.zero(), |acc, (x, t)| {
                self.ring.add(&acc, &self.ring.mul(x, t))
            })
    }

    /// Inverse of `a`, when the multiplication matrix is invertible with unit
    /// pivots.
    pub fn inv(&self, a: &[R::E]) -> Option<Vec<R::E>> {
        if a[1..].iter().all(|x| self.ring.is_zero(x)) {
            let c = self.ring.inv(&a[0])?;
            return Some(self.scalar(c));
        }
        let m = self.mul_matrix(a);
        solve(&self.ring, &m, &self.one())
    }

    pub fn from_bipoly(&self, p: &BiPoly) -> Vec<R::E> {
        let c: Vec<R::E> = p
            .w_coeffs()
            .iter()
            .map(|x| self.ring.from_poly(x))
            .collect();
        if c.is_empty() {
            return self.zero();
        }
        self.reduce(c)
    }

    /// Image of a bivariate rational function; `None` when the denominator is
    /// not invertible.
    pub fn from_birat(&self, f: &BiRat) -> Option<Vec<R::E>> {
        let n = self.from_bipoly(f.num());
        if f.den() == &BiPoly::one() {
            return Some(n);
        }
        let d = self.from_bipoly(f.den());
        Some(self.mul(&n, &self.inv(&d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_t() -> BiPoly {
        BiPoly::from_nested_ints(&[&[0, -1], &[], &[1]])
    }

    #[test]
    fn trace_of_w_squared() {
        let alg = QuotientAlgebra::new(RatFuncs, &sqrt_t());
        let w2 = alg.from_bipoly(&BiPoly::w().pow(2));
        assert_eq!(alg.trace(&w2), RatFunc::from_poly(Poly::from_ints(&[0, 2])));
        let w = alg.from_bipoly(&BiPoly::w());
        assert!(alg.trace(&w).is_zero());
    }

    #[test]
    fn inverse_in_function_field() {
        let alg = QuotientAlgebra::new(RatFuncs, &sqrt_t());
        let a = alg.from_bipoly(&BiPoly::from_nested_ints(&[&[-2], &[1]]));
        let inv = alg.inv(&a).unwrap();
        let prod = alg.mul(&a, &inv);
        assert_eq!(prod, alg.one());
        // Tr(1/(w-2)) = 4/(t-4); at t = 0 both sheets give -1/2.
        let tr = alg.trace(&inv);
        let expect = RatFunc::new(Poly::from_ints(&[4]), Poly::from_ints(&[-4, 1])).unwrap();
        assert_eq!(tr, expect);
    }

    #[test]
    fn series_inverse_matches_field() {
        // w^2 = 1 + t; invert (w + 3) locally.
        let p = BiPoly::from_nested_ints(&[&[-1, -1], &[], &[1]]);
        let alg = QuotientAlgebra::new(TruncatedSeries { order: 6 }, &p);
        let a = alg.from_bipoly(&BiPoly::from_nested_ints(&[&[3], &[1]]));
        let inv = alg.inv(&a).unwrap();
        assert_eq!(alg.mul(&a, &inv), alg.one());
    }
}
