//! Multiprecision complex helpers, polynomial roots and quadrature nodes.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Rational};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

pub fn czero(prec: u32) -> Complex {
    Complex::new(prec)
}

pub fn cone(prec: u32) -> Complex {
    Complex::with_val(prec, 1)
}

pub fn cf64(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

pub fn crat(prec: u32, r: &Rational) -> Complex {
    Complex::with_val(prec, r)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// exp(2πi·k/n).
pub fn unit_root(n: u32, k: i64, prec: u32) -> Complex {
    let k = k.rem_euclid(n as i64);
    let theta = pi(prec) * Float::with_val(prec, 2 * k) / n;
    let (s, c) = theta.sin_cos(Float::new(prec));
    Complex::with_val(prec, (c, s))
}

/// r·exp(iθ).
pub fn polar(r: &Float, theta: &Float) -> Complex {
    let prec = r.prec();
    let (s, c) = theta.clone().sin_cos(Float::new(prec));
    Complex::with_val(prec, (c * r, s * r))
}

pub fn cabs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

pub fn cabs_f64(z: &Complex) -> f64 {
    cabs(z).to_f64()
}

pub fn to_pair(z: &Complex) -> (f64, f64) {
    (z.real().to_f64(), z.imag().to_f64())
}

/// Integer power by repeated squaring (negative exponents invert).
pub fn cpow(z: &Complex, e: i64) -> Complex {
    let prec = z.prec().0;
    let mut acc = cone(prec);
    let mut base = z.clone();
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            acc *= &base;
        }
        k >>= 1;
        if k > 0 {
            base.square_mut();
        }
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// 2^-e at the given precision.
pub fn eps(prec: u32, e: i32) -> Float {
    Float::with_val(prec, 2).pow(-e)
}

/// Horner evaluation of p and p' with coefficients lowest degree first.
pub fn horner_with_derivative(c: &[Complex], z: &Complex) -> (Complex, Complex) {
    let prec = z.prec().0;
    let mut p = czero(prec);
    let mut dp = czero(prec);
    for a in c.iter().rev() {
        dp *= z;
        dp += &p;
        p *= z;
        p += a;
    }
    (p, dp)
}

/// All roots of a polynomial (coefficients lowest degree first, leading
/// coefficient nonzero) by Aberth–Ehrlich iteration. Multiple roots converge
/// only linearly; callers decide about clustering.
pub fn poly_roots(coeffs: &[Complex], prec: u32) -> Vec<Complex> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d].clone();
    let c: Vec<Complex> = coeffs
        .iter()
        .map(|a| Complex::with_val(prec, a / &lead))
        .collect();
    // Fujiwara-style radius bound for the starting circle.
    let mut radius: f64 = 0.0;
    for (k, a) in c.iter().enumerate().take(d) {
        let v = cabs_f64(a).powf(1.0 / (d - k) as f64);
        radius = radius.max(v);
    }
    let radius = Float::with_val(prec, 2.0 * radius.max(1e-3));
    let mut z: Vec<Complex> = (0..d)
        .map(|k| {
            let th = Float::with_val(
                prec,
                (2.0 * std::f64::consts::PI * k as f64 + 0.4) / d as f64,
            );
            polar(&radius, &th)
        })
        .collect();
    let tol = eps(prec, prec as i32 - 12);
    let mut stall = 0;
    for _ in 0..(200 + 40 * d) {
        let mut max_step = Float::with_val(prec, 0);
        for i in 0..d {
            let (p, dp) = horner_with_derivative(&c, &z[i]);
            if p.is_zero() {
                continue;
            }
            let ratio = Complex::with_val(prec, &p / &dp);
            let mut s = czero(prec);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let diff = Complex::with_val(prec, &z[i] - zj);
                    if !diff.is_zero() {
                        s += diff.recip();
                    }
                }
            }
            let denom = cone(prec) - Complex::with_val(prec, &ratio * &s);
            let step = if denom.is_zero() {
                ratio
            } else {
                ratio / denom
            };
            let m = cabs(&step) / (Float::with_val(prec, 1) + cabs(&z[i]));
            if m > max_step {
                max_step = m;
            }
            z[i] -= step;
        }
        if max_step <= tol {
            stall += 1;
            if stall >= 2 {
                break;
            }
        }
    }
    // Newton polish against the original coefficients.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner_with_derivative(&c, zi);
            if dp.is_zero() || p.is_zero() {
                break;
            }
            *zi -= p / dp;
        }
    }
    z
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize, prec: u32) -> Vec<(Float, Float)> {
    let mut out = Vec::with_capacity(n);
    let tol = eps(prec, prec as i32 - 8);
    for i in 1..=n {
        let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(prec, guess);
        let mut dp = Float::new(prec);
        for _ in 0..100 {
            let (p, d) = legendre(n, &x);
            dp = d;
            let step = Float::with_val(prec, &p / &dp);
            x -= &step;
            if step.abs() < tol {
                break;
            }
        }
        let (_, d) = legendre(n, &x);
        dp = if d.is_zero() { dp } else { d };
        let one_minus = Float::with_val(prec, 1) - Float::with_val(prec, &x * &x);
        let w = Float::with_val(prec, 2) / (one_minus * Float::with_val(prec, &dp * &dp));
        out.push((x, w));
    }
    out
}

fn legendre(n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    if n == 0 {
        return (p0, Float::new(prec));
    }
    for k in 2..=n {
        let k = k as u32;
        let t = Float::with_val(prec, (2 * k - 1) * x.clone() * &p1)
            - Float::with_val(prec, (k - 1) * p0);
        p0 = p1;
        p1 = t / k;
    }
    let denom = Float::with_val(prec, x * x) - 1u32;
    let d = Float::with_val(prec, n as u32 * (Float::with_val(prec, x * &p1) - &p0)) / denom;
    (p1, d)
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_cyclotomic() {
        let prec = 128;
        let mut c = vec![czero(prec); 6];
        c[0] = cf64(prec, -1.0, 0.0);
        c[5] = cone(prec);
        let r = poly_roots(&c, prec);
        assert_eq!(r.len(), 5);
        for z in &r {
            let (p, _) = horner_with_derivative(&c, z);
            assert!(cabs_f64(&p) < 1e-30);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let nodes = gauss_legendre(8, 128);
        let s: Float = nodes
            .iter()
            .map(|(x, w)| Float::with_val(128, x.clone().pow(14u32) * w))
            .fold(Float::with_val(128, 0), |a, b| a + b);
        assert!((s.to_f64() - 2.0 / 15.0).abs() < 1e-30);
    }

    #[test]
    fn unit_root_wraps() {
        let a = unit_root(5, 7, 128);
        let b = unit_root(5, 2, 128);
        assert!(cabs_f64(&(a - b)) < 1e-35);
    }
}
