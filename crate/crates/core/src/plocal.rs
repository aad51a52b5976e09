//! The roots-of-unity localization kernel f_{4,x}(x′) = Σ_l b_{m,l}·(ζ′/ζ)^l
//! on the projective line, ζ = v₁/v₀, and its empirical checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactkernel::{self, split_coefficients};
use crate::numeric::{self, cabs, cabs_f64, cf64};

/// The n₁-th roots of unity with disks of radius r₁ around them.
#[derive(Clone, Debug)]
pub struct AnchorSet {
    pub n1: u32,
    pub g: u32,
    pub r1: f64,
    pub anchors: Vec<Complex>,
    pub precision: u32,
}

impl AnchorSet {
    pub fn new(n1: u32, g: u32, r1: f64, precision: u32) -> Result<Self> {
        if n1 < 2 {
            return Err(Error::config(format!(
                "n1 = {n1}: at least two anchors are needed"
            )));
        }
        if !(r1 > 0.0 && r1 < 1.0) {
            return Err(Error::config(format!("r1 = {r1} must lie in (0, 1)")));
        }
        let anchors = (0..n1)
            .map(|k| numeric::unit_root(n1, k as i64, precision))
            .collect();
        Ok(AnchorSet {
            n1,
            g,
            r1,
            anchors,
            precision,
        })
    }

    /// Distance between adjacent anchors, 2·sin(π/n₁).
    pub fn anchor_gap(&self) -> f64 {
        2.0 * (std::f64::consts::PI / self.n1 as f64).sin()
    }

    pub fn disks_disjoint(&self) -> bool {
        2.0 * self.r1 < self.anchor_gap()
    }

    /// Configuration warnings that do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n1 <= 9 * self.g * self.g {
            w.push(format!(
                "n1 = {} does not exceed 9g^2 = {} for nominal genus {}",
                self.n1,
                9 * self.g * self.g,
                self.g
            ));
        }
        w
    }

    /// Index of the anchor nearest to z, with its distance.
    pub fn nearest(&self, z: &Complex) -> (usize, f64) {
        self.anchors
            .iter()
            .enumerate()
            .map(|(i, a)| (i, cabs_f64(&Complex::with_val(self.precision, z - a))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }
}

/// Order, anchors and working precision of a kernel.
#[derive(Clone, Debug)]
pub struct KernelParams {
    pub m: usize,
    pub anchors: AnchorSet,
    pub precision: u32,
}

impl KernelParams {
    pub fn new(m: usize, anchors: AnchorSet, precision: u32) -> Result<Self> {
        if m < 1 {
            return Err(Error::config("kernel order m must be at least 1"));
        }
        if precision < 64 {
            return Err(Error::config(format!(
                "precision {precision} is below 64 bits"
            )));
        }
        Ok(KernelParams {
            m,
            anchors,
            precision,
        })
    }
}

/// A point of P¹ by its affine coordinate ζ = v₁/v₀.
#[derive(Clone, Debug, PartialEq)]
pub enum ProjPoint {
    Finite(Complex),
    Infinity,
}

impl ProjPoint {
    pub fn finite(z: Complex) -> Self {
        ProjPoint::Finite(z)
    }

    fn coord(&self, what: &str) -> Result<&Complex> {
        match self {
            ProjPoint::Finite(z) => Ok(z),
            ProjPoint::Infinity => Err(Error::domain(format!("{what} is the point at infinity"))),
        }
    }
}

/// Linear form a·v₀ + b·v₁ on V.
#[derive(Clone, Debug)]
pub struct LinearForm {
    pub a: Complex,
    pub b: Complex,
}

impl LinearForm {
    /// Fubini–Study norm |a + bζ|/(1+|ζ|²)^½ (|b| at infinity).
    pub fn fs_norm(&self, p: &ProjPoint) -> Float {
        let prec = self.a.prec().0;
        match p {
            ProjPoint::Infinity => cabs(&self.b),
            ProjPoint::Finite(z) => {
                let v = Complex::with_val(prec, &self.b * z) + &self.a;
                cabs(&v) / exactkernel::frame_norm(z)
            }
        }
    }
}

/// Projective chordal distance between two points.
fn chordal(p: &ProjPoint, q: &ProjPoint, prec: u32) -> Float {
    match (p, q) {
        (ProjPoint::Infinity, ProjPoint::Infinity) => Float::with_val(prec, 0),
        (ProjPoint::Infinity, ProjPoint::Finite(z))
        | (ProjPoint::Finite(z), ProjPoint::Infinity) => {
            Float::with_val(prec, 1) / exactkernel::frame_norm(z)
        }
        (ProjPoint::Finite(a), ProjPoint::Finite(b)) => {
            cabs(&Complex::with_val(prec, a - b))
                / (exactkernel::frame_norm(a) * exactkernel::frame_norm(b))
        }
    }
}

/// A section with norm 1 at `points[i]` and norm < 1 at every other point:
/// the Fubini–Study dual of the point.
pub fn distinguishing_section(points: &[ProjPoint], i: usize, prec: u32) -> Result<LinearForm> {
    if i >= points.len() {
        return Err(Error::domain(format!(
            "index {i} out of range for {} points",
            points.len()
        )));
    }
    let tol = numeric::eps(prec, prec as i32 / 2);
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if chordal(&points[a], &points[b], prec) < tol {
                return Err(Error::domain(format!("points {a} and {b} coincide")));
            }
        }
    }
    Ok(match &points[i] {
        ProjPoint::Infinity => LinearForm {
            a: numeric::czero(prec),
            b: numeric::cone(prec),
        },
        ProjPoint::Finite(z) => {
            let n = exactkernel::frame_norm(z);
            LinearForm {
                a: Complex::with_val(prec, 1) / &n,
                b: Complex::with_val(prec, z.conj_ref()) / &n,
            }
        }
    })
}

/// The kernel with its split coefficients cached at a working precision.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub m: usize,
    pub precision: u32,
    b: Vec<Complex>,
}

impl Kernel {
    pub fn new(m: usize, precision: u32) -> Self {
        let b = split_coefficients(m)
            .values
            .iter()
            .map(|x| Complex::with_val(precision, x))
            .collect();
        Kernel { m, precision, b }
    }

    /// Σ_l b_l r^l by Horner.
    pub fn eval_ratio(&self, r: &Complex) -> Complex {
        let mut acc = numeric::czero(self.precision);
        for c in self.b.iter().rev() {
            acc *= r;
            acc += c;
        }
        acc
    }

    /// f_{4,x}(x′) for affine coordinates ζ = ζ(x), ζ′ = ζ(x′).
    pub fn eval(&self, zeta: &Complex, zeta_p: &Complex) -> Result<Complex> {
        if zeta.is_zero() {
            return Err(Error::domain("kernel anchored at v1/v0 = 0"));
        }
        let r = Complex::with_val(self.precision, zeta_p / zeta);
        Ok(self.eval_ratio(&r))
    }
}

pub fn kernel_eval(params: &KernelParams, x: &ProjPoint, xp: &ProjPoint) -> Result<Complex> {
    let z = x.coord("x")?;
    let zp = xp.coord("x'")?;
    Kernel::new(params.m, params.precision).eval(z, zp)
}

/// Exact kernel value at rational coordinates.
pub fn kernel_eval_exact(m: usize, zeta: &Rational, zeta_p: &Rational) -> Result<Rational> {
    if zeta.cmp0().is_eq() {
        return Err(Error::domain("kernel anchored at v1/v0 = 0"));
    }
    let r = Rational::from(zeta_p / zeta);
    let mut acc = Rational::new();
    for c in split_coefficients(m).values.iter().rev() {
        acc *= &r;
        acc += c;
    }
    Ok(acc)
}

fn disk_samples(
    anchor: &Complex,
    r1: f64,
    k: usize,
    rng: &mut ChaCha8Rng,
    prec: u32,
) -> Vec<Complex> {
    let mut v = vec![anchor.clone()];
    while v.len() < k {
        let rad = r1 * rng.gen::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.gen::<f64>();
        v.push(Complex::with_val(
            prec,
            anchor + cf64(prec, rad * th.cos(), rad * th.sin()),
        ));
    }
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub m: usize,
    pub sup: f64,
    pub sup_pow_inv_m: f64,
    pub argmax: (usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct RateCheck {
    pub m: usize,
    pub sup_m: f64,
    pub sup_2m: f64,
    pub ratio_to_square: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CenterCheck {
    pub value: String,
    pub expected: String,
    pub abs_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanViolation {
    pub m: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OffdiagReport {
    pub n1: u32,
    pub r1: f64,
    pub samples_per_disk: usize,
    pub seed: u64,
    pub precision: u32,
    pub per_m: Vec<ScanRow>,
    pub rho1_hat: f64,
    pub rate_checks: Vec<RateCheck>,
    pub center_m1: Option<CenterCheck>,
    pub violations: Vec<ScanViolation>,
    /// (m, i, j, max |f|) over the samples of disks i and j.
    #[serde(skip)]
    pub grid: Vec<(usize, usize, usize, f64)>,
}

impl OffdiagReport {
    /// ρ̂₁ spread between the two largest orders.
    pub fn tail_variation(&self) -> Option<f64> {
        let n = self.per_m.len();
        (n >= 2).then(|| {
            let a = self.per_m[n - 2].sup_pow_inv_m;
            let b = self.per_m[n - 1].sup_pow_inv_m;
            (a - b).abs() / b
        })
    }
}

/// Relative tolerance ε in the rate check sup(2m) ≤ sup(m)²·(1+ε).
pub const RATE_EPS: f64 = 0.05;

/// sup |f_{4,x}(x′)| over x ∈ U_{x_i}(r₁), x′ ∈ U_{x_j}(r₁), i ≠ j, for each m.
/// Anchor centres are always part of the sample set.
pub fn offdiag_decay_scan(
    anchors: &AnchorSet,
    m_list: &[usize],
    samples_per_disk: usize,
    seed: u64,
) -> Result<OffdiagReport> {
    if !anchors.disks_disjoint() {
        return Err(Error::config(format!(
            "anchor disks of radius {} overlap (anchor gap {:.6})",
            anchors.r1,
            anchors.anchor_gap()
        )));
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::config("m_list must be non-empty with entries >= 1"));
    }
    let prec = anchors.precision;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<Complex>> = anchors
        .anchors
        .iter()
        .map(|a| disk_samples(a, anchors.r1, samples_per_disk.max(1), &mut rng, prec))
        .collect();
    let inverses: Vec<Vec<Complex>> = samples
        .iter()
        .map(|s| {
            s.iter()
                .map(|z| Complex::with_val(prec, z.recip_ref()))
                .collect()
        })
        .collect();
    let n = samples.len();
    let mut per_m = Vec::new();
    let mut grid = Vec::new();
    let mut violations = Vec::new();
    let mut sups = Vec::new();
    for &m in m_list {
        let kernel = Kernel::new(m, prec);
        let cells: Vec<(usize, usize, f64)> = (0..n * n)
            .into_par_iter()
            .filter(|c| c / n != c % n)
            .map(|c| {
                let (i, j) = (c / n, c % n);
                let mut best = 0.0f64;
                for zi in &inverses[i] {
                    for zj in &samples[j] {
                        let r = Complex::with_val(prec, zj * zi);
                        best = best.max(cabs_f64(&kernel.eval_ratio(&r)));
                    }
                }
                (i, j, best)
            })
            .collect();
        let (mut sup, mut arg) = (0.0f64, (0, 0));
        for &(i, j, v) in &cells {
            if v > sup {
                sup = v;
                arg = (i, j);
            }
            if v >= 1.0 {
                violations.push(ScanViolation { m, i, j, value: v });
            }
            grid.push((m, i, j, v));
        }
        sups.push((m, sup));
        per_m.push(ScanRow {
            m,
            sup,
            sup_pow_inv_m: sup.powf(1.0 / m as f64),
            argmax: arg,
        });
    }
    let rho1_hat = per_m.iter().map(|r| r.sup_pow_inv_m).fold(0.0, f64::max);
    let rate_checks = sups
        .iter()
        .filter_map(|&(m, s)| {
            let &(_, s2) = sups.iter().find(|(m2, _)| *m2 == 2 * m)?;
            let ratio = s2 / (s * s);
            Some(RateCheck {
                m,
                sup_m: s,
                sup_2m: s2,
                ratio_to_square: ratio,
                ok: ratio <= 1.0 + RATE_EPS,
            })
        })
        .collect();
    let center_m1 = m_list.contains(&1).then(|| center_check(anchors));
    Ok(OffdiagReport {
        n1: anchors.n1,
        r1: anchors.r1,
        samples_per_disk,
        seed,
        precision: prec,
        per_m,
        rho1_hat,
        rate_checks,
        center_m1,
        violations,
        grid,
    })
}

/// max_{i≠j} |f_{4,x_i}(x_j)| at m = 1 against cos(π/n₁).
pub fn center_check(anchors: &AnchorSet) -> CenterCheck {
    let prec = anchors.precision;
    let kernel = Kernel::new(1, prec);
    let mut best = Float::with_val(prec, 0);
    for a in &anchors.anchors {
        for b in &anchors.anchors {
            if a == b {
                continue;
            }
            let v = cabs(&kernel.eval(a, b).expect("anchors are nonzero"));
            if v > best {
                best = v;
            }
        }
    }
    let expected = (numeric::pi(prec) / anchors.n1).cos();
    let err = Float::with_val(prec, &best - &expected).abs().to_f64();
    CenterCheck {
        value: best.to_string_radix(10, Some(40)),
        expected: expected.to_string_radix(10, Some(40)),
        abs_error: err,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzViolation {
    pub anchor: usize,
    pub x: (f64, f64),
    pub xp: (f64, f64),
    pub delta: f64,
    pub deviation: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub window: f64,
    pub vacuous: bool,
    pub max_ratio: f64,
    pub violations: Vec<LipschitzViolation>,
}

/// Samples same-disk pairs with |ζ′ - ζ| < 1/(3m) and checks
/// |f_{4,x}(x′) - 1| ≤ 2m·|ζ′ - ζ|.
pub fn neardiag_lipschitz_check(
    params: &KernelParams,
    trials: usize,
    seed: u64,
) -> LipschitzReport {
    let anchors = &params.anchors;
    let prec = params.precision;
    let m = params.m;
    let window = 1.0 / (3.0 * m as f64);
    let reach = window.min(2.0 * anchors.r1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(trials);
    while pairs.len() < trials {
        let i = rng.gen_range(0..anchors.anchors.len());
        let (rx, tx) = (
            anchors.r1 * rng.gen::<f64>().sqrt(),
            std::f64::consts::TAU * rng.gen::<f64>(),
        );
        let (rd, td) = (
            reach * rng.gen::<f64>().sqrt(),
            std::f64::consts::TAU * rng.gen::<f64>(),
        );
        let off = (rx * tx.cos(), rx * tx.sin());
        let offp = (off.0 + rd * td.cos(), off.1 + rd * td.sin());
        if offp.0.hypot(offp.1) >= anchors.r1 || rd >= window {
            continue;
        }
        pairs.push((i, off, offp));
    }
    let kernel = Kernel::new(m, prec);
    let results: Vec<(f64, Option<LipschitzViolation>)> = pairs
        .par_iter()
        .map(|&(i, off, offp)| {
            let a = &anchors.anchors[i];
            let x = Complex::with_val(prec, a + cf64(prec, off.0, off.1));
            let xp = Complex::with_val(prec, a + cf64(prec, offp.0, offp.1));
            let delta = Complex::with_val(prec, &xp - &x);
            let dev = kernel.eval(&x, &xp).expect("disk points are nonzero") - 1u32;
            let dev_f = cabs(&dev);
            let bound_f = cabs(&delta) * (2 * m as u32);
            let ratio = if bound_f.is_zero() {
                0.0
            } else {
                Float::with_val(prec, &dev_f / &bound_f).to_f64()
            };
            let viol = (dev_f > bound_f).then(|| LipschitzViolation {
                anchor: i,
                x: numeric::to_pair(&x),
                xp: numeric::to_pair(&xp),
                delta: cabs_f64(&delta),
                deviation: dev_f.to_f64(),
                bound: bound_f.to_f64(),
            });
            (ratio, viol)
        })
        .collect();
    let max_ratio = results.iter().map(|r| r.0).fold(0.0, f64::max);
    LipschitzReport {
        m,
        trials,
        seed,
        window,
        vacuous: trials == 0,
        max_ratio,
        violations: results.into_iter().filter_map(|r| r.1).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// |v_{x,1}/v_{x,0}| at x′; `None` when v_{x,0}(x′) = 0.
    pub lambda1: Option<Float>,
    pub head_sum: Complex,
    pub tail_sum: Complex,
    /// ϱ^m·f_{4,x}(x′) evaluated directly.
    pub f3_direct: Complex,
}

impl Diagnostics {
    pub fn large_lambda_regime(&self) -> bool {
        self.lambda1.as_ref().is_none_or(|l| *l >= 2)
    }

    pub fn consistency_error(&self) -> f64 {
        let s = Complex::with_val(self.f3_direct.prec().0, &self.head_sum + &self.tail_sum);
        cabs_f64(&(s - &self.f3_direct))
    }
}

/// Rotated-frame evaluation of f_{3,x}(v₀^m v₁^m)(x′) split at ⌊m/2⌋.
pub fn kernel_diagnostics(
    params: &KernelParams,
    x: &ProjPoint,
    xp: &ProjPoint,
) -> Result<Diagnostics> {
    let rho = x.coord("x")?;
    let zp = xp.coord("x'")?;
    let prec = params.precision;
    let m = params.m;
    let f3_direct = numeric::cpow(rho, m as i64) * Kernel::new(m, prec).eval(rho, zp)?;
    let n = exactkernel::frame_norm(rho);
    let one = numeric::cone(prec);
    let (x0, x1) = exactkernel::rotate(rho, &one, zp);
    let lambda1 = (!x0.is_zero()).then(|| cabs(&x1) / cabs(&x0));
    let b = exactkernel::rotated_frame_coeffs(m, rho);
    let nm = Float::with_val(prec, n.pow(m as u32));
    let mut head = numeric::czero(prec);
    let mut tail = numeric::czero(prec);
    for (i, bi) in b.iter().enumerate().take(m + 1) {
        let ratio = exactkernel::coefficient_ratio(m, i);
        let term = numeric::cpow(&x0, (m - i) as i64) * numeric::cpow(&x1, i as i64) * &nm * &ratio;
        let v = Complex::with_val(prec, bi * &term);
        if i <= m / 2 {
            head += v;
        } else {
            tail += v;
        }
    }
    Ok(Diagnostics {
        lambda1,
        head_sum: head,
        tail_sum: tail,
        f3_direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 128;

    fn pt(re: f64, im: f64) -> ProjPoint {
        ProjPoint::Finite(cf64(P, re, im))
    }

    fn params(m: usize) -> KernelParams {
        KernelParams::new(m, AnchorSet::new(5, 2, 0.05, P).unwrap(), P).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let v = kernel_eval(&params(1), &pt(1.0, 0.0), &pt(-1.0, 0.0)).unwrap();
        assert!(cabs_f64(&v) < 1e-35);
        let v = kernel_eval(&params(2), &pt(1.0, 0.0), &pt(-1.0, 0.0)).unwrap();
        assert!(cabs_f64(&(v + Rational::from((1, 3)))) < 1e-35);
        assert!(kernel_eval(&params(2), &pt(0.0, 0.0), &pt(1.0, 0.0)).is_err());
        assert!(kernel_eval(&params(2), &ProjPoint::Infinity, &pt(1.0, 0.0)).is_err());
    }

    #[test]
    fn exact_kernel_on_diagonal() {
        let z = Rational::from((3, 7));
        assert_eq!(kernel_eval_exact(9, &z, &z).unwrap(), 1);
        let d = kernel_eval_exact(1, &Rational::from(1), &Rational::from((1001, 1000))).unwrap();
        assert_eq!(d - 1u32, Rational::from((1, 2000)));
    }

    #[test]
    fn section_at_zero_and_infinity() {
        let pts = vec![pt(0.0, 0.0), ProjPoint::Infinity];
        let w = distinguishing_section(&pts, 0, P).unwrap();
        assert!((w.fs_norm(&pts[0]).to_f64() - 1.0).abs() < 1e-30);
        assert!(w.fs_norm(&pts[1]).to_f64() < 1e-30);
        let dup = vec![pt(1.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0)];
        assert!(distinguishing_section(&dup, 0, P).is_err());
    }

    #[test]
    fn diagnostics_opposite_points() {
        let d = kernel_diagnostics(&params(3), &pt(1.0, 0.0), &pt(-1.0, 0.0)).unwrap();
        assert!(d.lambda1.is_none());
        assert!(d.large_lambda_regime());
        assert!(d.consistency_error() < 1e-30);
        let d = kernel_diagnostics(&params(3), &pt(0.3, 0.4), &pt(0.3, 0.4)).unwrap();
        assert!(d.lambda1.unwrap().to_f64() < 1e-30);
        assert!(cabs_f64(&d.tail_sum) < 1e-30);
    }

    #[test]
    fn overlapping_disks_rejected() {
        let a = AnchorSet::new(37, 2, 0.2, P).unwrap();
        assert!(matches!(
            offdiag_decay_scan(&a, &[1], 2, 0),
            Err(Error::Config(_))
        ));
    }
}
