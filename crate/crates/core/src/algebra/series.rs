//! Truncated power series and Laurent series over ℚ at t = 0.

use rug::Rational;

use super::poly::{Poly, RatFunc};

/// Product of two truncated power series, keeping `order` terms.
pub fn ps_mul(a: &[Rational], b: &[Rational], order: usize) -> Vec<Rational> {
    let n = order.min(a.len() + b.len().saturating_sub(1));
    let mut out = vec![Rational::new(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.cmp0().is_eq() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += Rational::from(x * y);
        }
    }
    trim(out)
}

/// Inverse of a power series with nonzero constant term, to `order` terms.
pub fn ps_inv(a: &[Rational], order: usize) -> Option<Vec<Rational>> {
    let a0 = a.first().filter(|x| x.cmp0().is_ne())?;
    let inv0 = Rational::from(a0.recip_ref());
    let mut out: Vec<Rational> = Vec::with_capacity(order);
    for k in 0..order {
        if k == 0 {
            out.push(inv0.clone());
            continue;
        }
        let mut s = Rational::new();
        for j in 1..=k.min(a.len() - 1) {
            s += Rational::from(&a[j] * &out[k - j]);
        }
        out.push(-s * &inv0);
    }
    Some(trim(out))
}

fn trim(mut v: Vec<Rational>) -> Vec<Rational> {
    while v.last().is_some_and(|x| x.cmp0().is_eq()) {
        v.pop();
    }
    v
}

/// Laurent series Σ c_k t^(val+k) known for all exponents below `end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    val: i64,
    c: Vec<Rational>,
    end: i64,
}

impl Laurent {
    pub fn zero(end: i64) -> Self {
        Laurent {
            val: end,
            c: Vec::new(),
            end,
        }
    }

    /// Power series (exponent 0 upward) known modulo t^order.
    pub fn from_power_series(c: Vec<Rational>, order: usize) -> Self {
        Laurent {
            val: 0,
            c,
            end: order as i64,
        }
        .normalized()
    }

    /// Expansion of a rational function at t = 0 through exponent `end - 1`.
    pub fn from_ratfunc(f: &RatFunc, end: i64) -> Self {
        let Some(v) = f.order_at_zero() else {
            return Laurent::zero(end);
        };
        if end <= v {
            return Laurent::zero(end);
        }
        let vn = f.num().valuation().unwrap();
        let vd = f.den().valuation().unwrap();
        let n = f.num().shift_down(vn);
        let d = f.den().shift_down(vd);
        let len = (end - v) as usize;
        let dinv = ps_inv(d.coeffs(), len).expect("unit denominator after shift");
        let c = ps_mul(n.coeffs(), &dinv, len);
        Laurent { val: v, c, end }.normalized()
    }

    fn normalized(mut self) -> Self {
        let lead = self.c.iter().position(|x| x.cmp0().is_ne());
        match lead {
            None => Laurent::zero(self.end),
            Some(k) => {
                self.c.drain(..k);
                self.val += k as i64;
                while self.c.last().is_some_and(|x| x.cmp0().is_eq()) {
                    self.c.pop();
                }
                self
            }
        }
    }

    /// Exponent of the lowest nonzero term (`end` when zero to the known order).
    pub fn valuation(&self) -> i64 {
        self.val
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    /// Coefficient of t^e, or `None` when e is beyond the known order.
    pub fn coeff(&self, e: i64) -> Option<Rational> {
        if e >= self.end {
            return None;
        }
        if e < self.val {
            return Some(Rational::new());
        }
        Some(
            self.c
                .get((e - self.val) as usize)
                .cloned()
                .unwrap_or_default(),
        )
    }

    pub fn mul(&self, o: &Laurent) -> Laurent {
        let val = self.val + o.val;
        let end = (self.end + o.val).min(o.end + self.val);
        if end <= val {
            return Laurent::zero(end);
        }
        let len = (end - val) as usize;
        Laurent {
            val,
            c: ps_mul(&self.c, &o.c, len),
            end,
        }
        .normalized()
    }

    pub fn add(&self, o: &Laurent) -> Laurent {
        let end = self.end.min(o.end);
        let val = self.val.min(o.val);
        if end <= val {
            return Laurent::zero(end);
        }
        let len = (end - val) as usize;
        let c = (0..len)
            .map(|k| {
                let e = val + k as i64;
                self.coeff(e).unwrap() + o.coeff(e).unwrap()
            })
            .collect();
        Laurent { val, c, end }.normalized()
    }

    pub fn scale(&self, k: &Rational) -> Laurent {
        Laurent {
            val: self.val,
            c: self.c.iter().map(|x| Rational::from(x * k)).collect(),
            end: self.end,
        }
        .normalized()
    }

    /// Polynomial part truncated into a `Poly` after multiplying by t^shift.
    pub fn to_shifted_poly(&self, shift: i64) -> Poly {
        let v = self.val + shift;
        assert!(v >= 0 || self.c.is_empty());
        Poly::from_coeffs(self.c.clone()).shift_up(v.max(0) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        // 1/(1 - t)
        let f = RatFunc::new(Poly::one(), Poly::from_ints(&[1, -1])).unwrap();
        let l = Laurent::from_ratfunc(&f, 5);
        for e in 0..5 {
            assert_eq!(l.coeff(e), Some(Rational::from(1)));
        }
        assert_eq!(l.coeff(5), None);
    }

    #[test]
    fn pole_expansion() {
        // (1 + t)/(t^2 (1 - 2t)) = t^-2 + 3 t^-1 + 6 + ...
        let f = RatFunc::new(Poly::from_ints(&[1, 1]), Poly::from_ints(&[0, 0, 1, -2])).unwrap();
        let l = Laurent::from_ratfunc(&f, 1);
        assert_eq!(l.valuation(), -2);
        assert_eq!(l.coeff(-1), Some(Rational::from(3)));
        assert_eq!(l.coeff(0), Some(Rational::from(6)));
    }

    #[test]
    fn inverse_series() {
        let a = vec![Rational::from(2), Rational::from(3), Rational::from(-1)];
        let inv = ps_inv(&a, 8).unwrap();
        let prod = ps_mul(&a, &inv, 8);
        assert_eq!(prod, vec![Rational::from(1)]);
    }
}
