//! The local antiderivative G_x: null families, the area-integral metric on
//! their span, the adapted basis at x, and the residual of G_x against
//! (ω/dz)(x)·z.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Complex, Float};
use serde::Serialize;

use crate::algebra::{BiPoly, BiRat, CompiledBiPoly, CompiledBiRat, CompiledRatFunc, Poly};
use crate::cover::{self, euler_level_traces, CoverModel, DifferentialFamily, FamilyPair};
use crate::error::{Error, Result};
use crate::exactkernel::split_coefficients;
use crate::numeric::{self, cabs_f64};
use crate::plocal::KernelParams;

/// How to build a null family.
#[derive(Clone, Debug)]
pub enum NullFamilySpec {
    /// ((f, -g), (g, f)): ω = f dg - g df.
    Paired { f: BiRat, g: BiRat },
    /// u_a = Σ_b c_ab e_b with c antisymmetric, so Σ u_a e_a = 0.
    Random {
        degree: usize,
        count: usize,
        seed: u64,
    },
}

fn random_bipoly(rng: &mut ChaCha8Rng, degree: usize) -> BiPoly {
    let rows = (0..=degree)
        .map(|k| {
            let c: Vec<i64> = (0..=degree - k).map(|_| rng.gen_range(-3..=3)).collect();
            Poly::from_ints(&c)
        })
        .collect();
    BiPoly::from_w_coeffs(rows)
}

/// The plane 1-form ω = Σ u_j de_j as (dt, dw) components.
pub fn plane_omega(fam: &DifferentialFamily) -> (BiRat, BiRat) {
    fam.pairs
        .iter()
        .fold((BiRat::zero(), BiRat::zero()), |(a, b), p| {
            (
                &a + &(&p.u * &p.e.partial_t()),
                &b + &(&p.u * &p.e.partial_w()),
            )
        })
}

pub fn make_null_family(spec: &NullFamilySpec) -> Result<DifferentialFamily> {
    let fam = match spec {
        NullFamilySpec::Paired { f, g } => DifferentialFamily::paired(f.clone(), g.clone()),
        NullFamilySpec::Random {
            degree,
            count,
            seed,
        } => {
            if *count < 2 {
                return Err(Error::domain("a null family needs at least two pairs"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let e: Vec<BiPoly> = (0..*count)
                .map(|_| random_bipoly(&mut rng, *degree))
                .collect();
            let mut c = vec![vec![Poly::zero(); *count]; *count];
            for a in 0..*count {
                for b in a + 1..*count {
                    let x = Poly::from_ints(&[rng.gen_range(-2..=2), rng.gen_range(-2..=2)]);
                    c[b][a] = -&x;
                    c[a][b] = x;
                }
            }
            let pairs = (0..*count)
                .map(|a| {
                    let u = (0..*count).fold(BiPoly::zero(), |acc, b| &acc + &e[b].mul_t(&c[a][b]));
                    FamilyPair {
                        u: BiRat::from_poly(u),
                        e: BiRat::from_poly(e[a].clone()),
                    }
                })
                .collect();
            DifferentialFamily::new(pairs)?
        }
    };
    let (a, b) = plane_omega(&fam);
    if a.is_zero() && b.is_zero() {
        return Err(Error::Degenerate("omega vanishes identically".into()));
    }
    Ok(fam)
}

/// One sheet of the cover over a disk around z = 0, followed by Newton
/// continuation along the segment from 0.
#[derive(Clone, Debug)]
pub struct Chart {
    p: CompiledBiPoly,
    pt: CompiledBiPoly,
    pw: CompiledBiPoly,
    pub w0: Complex,
    pub sheet: usize,
    prec: u32,
}

/// Fiber over z = 0 sorted by argument, then modulus.
pub fn sorted_fiber_at_zero(model: &CoverModel, prec: u32) -> Result<Vec<Complex>> {
    let mut ws = cover::simple_fiber(model, &numeric::czero(prec), prec)?;
    ws.sort_by(|a, b| {
        let (ra, ia) = numeric::to_pair(a);
        let (rb, ib) = numeric::to_pair(b);
        ia.atan2(ra)
            .total_cmp(&ib.atan2(rb))
            .then(ra.hypot(ia).total_cmp(&rb.hypot(ib)))
    });
    Ok(ws)
}

impl Chart {
    pub fn new(model: &CoverModel, sheet: usize, prec: u32) -> Result<Self> {
        let ws = sorted_fiber_at_zero(model, prec)?;
        let w0 = ws.get(sheet).cloned().ok_or_else(|| {
            Error::domain(format!("sheet {sheet} out of range (degree {})", ws.len()))
        })?;
        Ok(Chart {
            p: CompiledBiPoly::new(&model.p, prec),
            pt: CompiledBiPoly::new(&model.p.partial_t(), prec),
            pw: CompiledBiPoly::new(&model.p.partial_w(), prec),
            w0,
            sheet,
            prec,
        })
    }

    fn newton(&self, z: &Complex, mut w: Complex) -> Result<Complex> {
        let tol = numeric::eps(self.prec, self.prec as i32 - 16).to_f64();
        for _ in 0..60 {
            let f = self.p.eval(z, &w);
            let d = self.pw.eval(z, &w);
            if cabs_f64(&d) == 0.0 {
                return Err(Error::domain("chart meets a ramification point"));
            }
            let step = Complex::with_val(self.prec, &f / &d);
            w -= &step;
            if cabs_f64(&step) <= tol * cabs_f64(&w).max(1.0) {
                return Ok(w);
            }
        }
        Ok(w)
    }

    /// w on this sheet at z, continuing from `from = (z0, w0)`.
    pub fn continue_from(&self, from: (&Complex, &Complex), z: &Complex) -> Result<Complex> {
        let dz = Complex::with_val(self.prec, z - from.0);
        let steps = 4 + (cabs_f64(&dz) / 0.02).ceil() as usize;
        let mut w = from.1.clone();
        for k in 1..=steps {
            let zk = Complex::with_val(
                self.prec,
                from.0 + Complex::with_val(self.prec, &dz * k as u32) / steps as u32,
            );
            w = self.newton(&zk, w)?;
        }
        Ok(w)
    }

    pub fn w_at(&self, z: &Complex) -> Result<Complex> {
        self.continue_from((&numeric::czero(self.prec), &self.w0), z)
    }

    pub fn point(&self, z: &Complex) -> Result<ChartPoint> {
        Ok(ChartPoint {
            z: z.clone(),
            w: self.w_at(z)?,
        })
    }

    /// dw/dz = -P_t/P_w.
    pub fn wz(&self, z: &Complex, w: &Complex) -> Complex {
        -(self.pt.eval(z, w) / self.pw.eval(z, w))
    }
}

#[derive(Clone, Debug)]
pub struct ChartPoint {
    pub z: Complex,
    pub w: Complex,
}

/// A function of (z, w) with its derivative along the curve.
#[derive(Clone, Debug)]
pub struct ChartFunction {
    f: CompiledBiRat,
    ft: CompiledBiRat,
    fw: CompiledBiRat,
}

impl ChartFunction {
    pub fn new(f: &BiRat, prec: u32) -> Self {
        ChartFunction {
            f: CompiledBiRat::new(f, prec),
            ft: CompiledBiRat::new(&f.partial_t(), prec),
            fw: CompiledBiRat::new(&f.partial_w(), prec),
        }
    }

    pub fn eval(&self, x: &ChartPoint) -> Complex {
        self.f.eval(&x.z, &x.w)
    }

    /// d/dz along the curve, given dw/dz at the point.
    pub fn dz(&self, x: &ChartPoint, wz: &Complex) -> Complex {
        self.ft.eval(&x.z, &x.w) + self.fw.eval(&x.z, &x.w) * wz
    }
}

/// Polar Gauss–Legendre rule on the disk |z| < radius.
#[derive(Clone, Debug, Serialize)]
pub struct DiskQuadrature {
    pub radial: usize,
    pub angular: usize,
    pub radius: f64,
}

impl Default for DiskQuadrature {
    fn default() -> Self {
        DiskQuadrature {
            radial: 64,
            angular: 64,
            radius: 0.25,
        }
    }
}

type CMatrix = Vec<Vec<Complex>>;

/// Basis of the span V of the e_j adapted to x, with dual coefficients.
#[derive(Clone, Debug)]
pub struct AdaptedBasis {
    pub x: ChartPoint,
    /// gram[i][j] = ∫ e_i·conj(e_j) dA.
    pub gram: CMatrix,
    /// Column i holds e_{x,i} in the coordinates of the e_j.
    pub basis: CMatrix,
    /// Row i holds u_{x,i} in the coordinates of the u_j.
    pub dual: CMatrix,
    /// u_{x,i}(x).
    pub u_at_x: Vec<Complex>,
    /// e_{x,i}(x) and (d/dz) e_{x,i}(x).
    pub e_at_x: Vec<Complex>,
    pub de_at_x: Vec<Complex>,
    /// ω/dz(x) evaluated directly from the family.
    pub omega_at_x: Complex,
    /// Smallest Gram–Schmidt pivot relative to the diagonal.
    pub min_pivot: f64,
}

impl AdaptedBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Σ_i u_{x,i}·e_{x,i} at a chart point.
    pub fn null_defect(&self, fam: &[(ChartFunction, ChartFunction)], p: &ChartPoint) -> f64 {
        let prec = p.z.prec().0;
        let u: Vec<Complex> = fam.iter().map(|f| f.0.eval(p)).collect();
        let e: Vec<Complex> = fam.iter().map(|f| f.1.eval(p)).collect();
        let k = self.dim();
        let mut acc = numeric::czero(prec);
        for i in 0..k {
            let ui = dot(&self.dual[i], &u, prec);
            let ei = (0..k).fold(numeric::czero(prec), |a, j| {
                a + Complex::with_val(prec, &self.basis[j][i] * &e[j])
            });
            acc += ui * ei;
        }
        cabs_f64(&acc)
    }
}

fn dot(a: &[Complex], b: &[Complex], prec: u32) -> Complex {
    a.iter().zip(b).fold(numeric::czero(prec), |acc, (x, y)| {
        acc + Complex::with_val(prec, x * y)
    })
}

fn conj(z: &Complex) -> Complex {
    z.clone().conj()
}

/// Gram matrix of the e_j over the disk on the chart.
pub fn gram_matrix(es: &[ChartFunction], chart: &Chart, quad: &DiskQuadrature) -> Result<CMatrix> {
    let prec = chart.prec;
    let k = es.len();
    let rad = numeric::gauss_legendre(quad.radial, prec);
    let ang = numeric::gauss_legendre(quad.angular, prec);
    let r_max = Float::with_val(prec, quad.radius);
    let two_pi = numeric::pi(prec) * 2u32;
    // GL nodes on [-1, 1] mapped to [0, R] and [0, 2π].
    let rows: Vec<CMatrix> = ang
        .par_iter()
        .map(|(xa, wa)| -> Result<CMatrix> {
            let theta = Float::with_val(prec, xa + 1u32) * &two_pi / 2u32;
            let wth = Float::with_val(prec, wa * &two_pi) / 2u32;
            let dir = numeric::polar(&Float::with_val(prec, 1), &theta);
            let mut acc = vec![vec![numeric::czero(prec); k]; k];
            let mut prev = (numeric::czero(prec), chart.w0.clone());
            for (xr, wr) in &rad {
                let r = Float::with_val(prec, xr + 1u32) * &r_max / 2u32;
                let wgt = Float::with_val(prec, wr * &r_max) / 2u32 * &r * &wth;
                let z = Complex::with_val(prec, &dir * &r);
                let w = chart.continue_from((&prev.0, &prev.1), &z)?;
                let pt = ChartPoint {
                    z: z.clone(),
                    w: w.clone(),
                };
                let vals: Vec<Complex> = es.iter().map(|e| e.eval(&pt)).collect();
                for i in 0..k {
                    for j in 0..k {
                        acc[i][j] += Complex::with_val(prec, &vals[i] * conj(&vals[j])) * &wgt;
                    }
                }
                prev = (z, w);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![vec![numeric::czero(prec); k]; k];
    for part in rows {
        for i in 0..k {
            for j in 0..k {
                g[i][j] += &part[i][j];
            }
        }
    }
    Ok(g)
}

/// Hermitian form <a, b> = Σ a_i conj(b_j) G_ij.
fn herm(g: &CMatrix, a: &[Complex], b: &[Complex], prec: u32) -> Complex {
    let mut acc = numeric::czero(prec);
    for i in 0..a.len() {
        for j in 0..b.len() {
            acc += Complex::with_val(prec, &a[i] * conj(&b[j])) * &g[i][j];
        }
    }
    acc
}

fn axpy(y: &mut [Complex], a: &Complex, x: &[Complex], prec: u32) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= Complex::with_val(prec, a * xi);
    }
}

fn scal(x: &[Complex], a: &Complex, prec: u32) -> Vec<Complex> {
    x.iter().map(|v| Complex::with_val(prec, v * a)).collect()
}

/// Modified Gram–Schmidt (two passes) of `v` against orthonormal `q` under
/// the inner product `ip`. Returns the residual.
fn mgs<F: Fn(&[Complex], &[Complex]) -> Complex>(
    v: &[Complex],
    q: &[Vec<Complex>],
    ip: &F,
    prec: u32,
) -> Vec<Complex> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for qj in q {
            let c = ip(&r, qj);
            axpy(&mut r, &c, qj, prec);
        }
    }
    r
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn cinverse(a: &CMatrix, prec: u32) -> Option<CMatrix> {
    let n = a.len();
    let mut m: CMatrix = a.clone();
    let mut inv: CMatrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        numeric::cone(prec)
                    } else {
                        numeric::czero(prec)
                    }
                })
                .collect()
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| cabs_f64(&m[i][c]).total_cmp(&cabs_f64(&m[j][c])))?;
        if cabs_f64(&m[p][c]) == 0.0 {
            return None;
        }
        m.swap(c, p);
        inv.swap(c, p);
        let piv = Complex::with_val(prec, m[c][c].recip_ref());
        m[c] = scal(&m[c], &piv, prec);
        inv[c] = scal(&inv[c], &piv, prec);
        for r in 0..n {
            if r != c {
                let f = m[r][c].clone();
                let (mc, ic) = (m[c].clone(), inv[c].clone());
                axpy(&mut m[r], &f, &mc, prec);
                axpy(&mut inv[r], &f, &ic, prec);
            }
        }
    }
    Some(inv)
}

pub const GRAM_TOL: f64 = 1e-20;

/// Builds the metric on span{e_j} over the disk and the basis adapted to x.
pub fn gram_and_adapted_basis(
    model: &CoverModel,
    chart: &Chart,
    x: &ChartPoint,
    quad: &DiskQuadrature,
) -> Result<AdaptedBasis> {
    let prec = chart.prec;
    let k = model.family.pairs.len();
    if k < 2 {
        return Err(Error::Degenerate(
            "the span of the e_j needs dimension >= 2".into(),
        ));
    }
    if cabs_f64(&x.z) >= quad.radius {
        return Err(Error::domain("x must lie inside the quadrature disk"));
    }
    let es: Vec<ChartFunction> = model
        .family
        .pairs
        .iter()
        .map(|p| ChartFunction::new(&p.e, prec))
        .collect();
    let us: Vec<ChartFunction> = model
        .family
        .pairs
        .iter()
        .map(|p| ChartFunction::new(&p.u, prec))
        .collect();
    let gram = gram_matrix(&es, chart, quad)?;
    let ip = |a: &[Complex], b: &[Complex]| herm(&gram, a, b, prec);

    // Orthonormal basis of V under the metric.
    let mut q: Vec<Vec<Complex>> = Vec::with_capacity(k);
    let mut min_pivot = f64::INFINITY;
    for j in 0..k {
        let ej: Vec<Complex> = (0..k)
            .map(|i| {
                if i == j {
                    numeric::cone(prec)
                } else {
                    numeric::czero(prec)
                }
            })
            .collect();
        let r = mgs(&ej, &q, &ip, prec);
        let n2 = ip(&r, &r).real().to_f64();
        let rel = n2 / gram[j][j].real().to_f64().max(f64::MIN_POSITIVE);
        min_pivot = min_pivot.min(rel);
        if !(rel > GRAM_TOL) {
            return Err(Error::Degenerate(format!(
                "Gram matrix is not positive definite (pivot {rel:.3e} at e_{j})"
            )));
        }
        let inv = Complex::with_val(prec, Float::with_val(prec, n2).sqrt().recip());
        q.push(scal(&r, &inv, prec));
    }
    // Functionals at x in orthonormal coordinates: α·y = e(x), δ·y = e'(x).
    let wz = chart.wz(&x.z, &x.w);
    let ev: Vec<Complex> = es.iter().map(|e| e.eval(x)).collect();
    let der: Vec<Complex> = es.iter().map(|e| e.dz(x, &wz)).collect();
    let in_q = |f: &[Complex]| -> Vec<Complex> { q.iter().map(|qi| dot(f, qi, prec)).collect() };
    let alpha = in_q(&ev);
    let delta = in_q(&der);
    let eip = |a: &[Complex], b: &[Complex]| -> Complex {
        a.iter().zip(b).fold(numeric::czero(prec), |acc, (x, y)| {
            acc + Complex::with_val(prec, x * conj(y))
        })
    };
    let a_bar: Vec<Complex> = alpha.iter().map(conj).collect();
    let a2 = eip(&a_bar, &a_bar);
    if cabs_f64(&a2) < GRAM_TOL {
        return Err(Error::Degenerate(
            "every element of the span vanishes at x".into(),
        ));
    }
    // e_{x,0} ⟂ ker α, normalised by e_{x,0}(x) = 1.
    let y0 = scal(&a_bar, &Complex::with_val(prec, a2.recip_ref()), prec);
    // e_{x,1} ∈ ker α, ⟂ ker α ∩ ker δ, with derivative 1 at x.
    let d_bar: Vec<Complex> = delta.iter().map(conj).collect();
    let mut y1 = d_bar.clone();
    let c = Complex::with_val(prec, eip(&d_bar, &a_bar) / &a2);
    axpy(&mut y1, &c, &a_bar, prec);
    let s = dot(&delta, &y1, prec);
    if cabs_f64(&s) < GRAM_TOL {
        return Err(Error::Degenerate(
            "no element of the span has nonzero derivative at x".into(),
        ));
    }
    let y1 = scal(&y1, &Complex::with_val(prec, s.recip_ref()), prec);
    // Remaining vectors: orthonormal basis of ker α ∩ ker δ.
    let mut fixed: Vec<Vec<Complex>> = Vec::new();
    for v in [&a_bar, &d_bar] {
        let r = mgs(v, &fixed, &eip, prec);
        let n = eip(&r, &r).real().to_f64().sqrt();
        if n > 1e-30 {
            fixed.push(scal(&r, &numeric::cf64(prec, 1.0 / n, 0.0), prec));
        }
    }
    let mut rest: Vec<Vec<Complex>> = Vec::new();
    let mut cands: Vec<(f64, Vec<Complex>)> = (0..k)
        .map(|j| {
            let ej: Vec<Complex> = (0..k)
                .map(|i| {
                    if i == j {
                        numeric::cone(prec)
                    } else {
                        numeric::czero(prec)
                    }
                })
                .collect();
            let r = mgs(&ej, &fixed, &eip, prec);
            (eip(&r, &r).real().to_f64(), r)
        })
        .collect();
    while rest.len() + 2 < k {
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (_, v) = cands.remove(0);
        let mut basis = fixed.clone();
        basis.extend(rest.iter().cloned());
        let r = mgs(&v, &basis, &eip, prec);
        let n = eip(&r, &r).real().to_f64().sqrt();
        let r = scal(&r, &numeric::cf64(prec, 1.0 / n, 0.0), prec);
        rest.push(r);
        for cd in cands.iter_mut() {
            let mut all = fixed.clone();
            all.extend(rest.iter().cloned());
            let r = mgs(&cd.1, &all, &eip, prec);
            cd.0 = eip(&r, &r).real().to_f64();
        }
    }
    // Back to e_j coordinates: c = Σ_i y_i q_i.
    let to_e = |y: &[Complex]| -> Vec<Complex> {
        (0..k)
            .map(|j| {
                (0..k).fold(numeric::czero(prec), |acc, i| {
                    acc + Complex::with_val(prec, &y[i] * &q[i][j])
                })
            })
            .collect()
    };
    let cols: Vec<Vec<Complex>> = std::iter::once(y0)
        .chain(std::iter::once(y1))
        .chain(rest)
        .map(|y| to_e(&y))
        .collect();
    // basis[j][i] = coefficient of e_j in e_{x,i}.
    let basis: CMatrix = (0..k)
        .map(|j| (0..k).map(|i| cols[i][j].clone()).collect())
        .collect();
    let dual = cinverse(&basis, prec)
        .ok_or_else(|| Error::Degenerate("adapted basis is singular".into()))?;
    let u_vals: Vec<Complex> = us.iter().map(|u| u.eval(x)).collect();
    let u_at_x = (0..k).map(|i| dot(&dual[i], &u_vals, prec)).collect();
    let e_at_x = (0..k).map(|i| dot(&cols[i], &ev, prec)).collect();
    let de_at_x = (0..k).map(|i| dot(&cols[i], &der, prec)).collect();
    let omega_at_x = CompiledBiRat::new(&model.omega_over_dt(), prec).eval(&x.z, &x.w);
    Ok(AdaptedBasis {
        x: x.clone(),
        gram,
        basis,
        dual,
        u_at_x,
        e_at_x,
        de_at_x,
        omega_at_x,
        min_pivot,
    })
}

/// B′ measured on a sample grid: max of |u_j|, |e_j|, |∂e_j/∂z|, |∂τ/∂z|
/// over |ω/dz|.
pub fn measure_bound(
    model: &CoverModel,
    chart: &Chart,
    radius: f64,
    samples: usize,
    prec: u32,
) -> Result<f64> {
    let fs: Vec<(ChartFunction, ChartFunction)> = model
        .family
        .pairs
        .iter()
        .map(|p| {
            (
                ChartFunction::new(&p.u, prec),
                ChartFunction::new(&p.e, prec),
            )
        })
        .collect();
    let tau = ChartFunction::new(&model.tau, prec);
    let omega = CompiledBiRat::new(&model.omega_over_dt(), prec);
    let mut best = 0.0f64;
    for a in 0..samples {
        for r in 1..=samples {
            let rr = radius * r as f64 / samples as f64;
            let th = std::f64::consts::TAU * a as f64 / samples as f64;
            let z = numeric::cf64(prec, rr * th.cos(), rr * th.sin());
            let pt = chart.point(&z)?;
            let wz = chart.wz(&pt.z, &pt.w);
            let om = cabs_f64(&omega.eval(&pt.z, &pt.w));
            let mut top = cabs_f64(&tau.dz(&pt, &wz));
            for (u, e) in &fs {
                top = top
                    .max(cabs_f64(&u.eval(&pt)))
                    .max(cabs_f64(&e.eval(&pt)))
                    .max(cabs_f64(&e.dz(&pt, &wz)));
            }
            best = best.max(top / om);
        }
    }
    Ok(best)
}

/// Compiled G_x(x′) = Σ_j Σ_l b_{m,l} τ(x)^{-l} u_j(x)·θ Tr(τ^l e_j)(z′).
pub struct GxEvaluator {
    pub m: usize,
    prec: u32,
    b: Vec<Complex>,
    traces: Vec<Vec<CompiledRatFunc>>,
    tau: ChartFunction,
    us: Vec<ChartFunction>,
    es: Vec<ChartFunction>,
    omega: CompiledBiRat,
    p: CompiledBiPoly,
    pt: CompiledBiPoly,
    pw: CompiledBiPoly,
}

impl GxEvaluator {
    pub fn new(model: &CoverModel, m: usize, prec: u32) -> Result<Self> {
        let traces = euler_level_traces(model, m)?
            .iter()
            .map(|row| row.iter().map(|f| CompiledRatFunc::new(f, prec)).collect())
            .collect();
        Ok(GxEvaluator {
            m,
            prec,
            b: split_coefficients(m)
                .values
                .iter()
                .map(|x| numeric::crat(prec, x))
                .collect(),
            traces,
            tau: ChartFunction::new(&model.tau, prec),
            us: model
                .family
                .pairs
                .iter()
                .map(|p| ChartFunction::new(&p.u, prec))
                .collect(),
            es: model
                .family
                .pairs
                .iter()
                .map(|p| ChartFunction::new(&p.e, prec))
                .collect(),
            omega: CompiledBiRat::new(&model.omega_over_dt(), prec),
            p: CompiledBiPoly::new(&model.p, prec),
            pt: CompiledBiPoly::new(&model.p.partial_t(), prec),
            pw: CompiledBiPoly::new(&model.p.partial_w(), prec),
        })
    }

    /// (ω/dz)(x).
    pub fn beta(&self, x: &ChartPoint) -> Complex {
        self.omega.eval(&x.z, &x.w)
    }

    /// Weights b_{m,l}·τ(x)^{-l}·u_j(x), indexed `[l][j]`.
    fn weights(&self, x: &ChartPoint) -> Result<Vec<Vec<Complex>>> {
        let zeta = self.tau.eval(x);
        if cabs_f64(&zeta) < 1e-30 {
            return Err(Error::domain("kernel coordinate vanishes at x"));
        }
        let inv = Complex::with_val(self.prec, zeta.recip_ref());
        let u: Vec<Complex> = self.us.iter().map(|f| f.eval(x)).collect();
        let mut p = numeric::cone(self.prec);
        let mut out = Vec::with_capacity(self.m + 1);
        for l in 0..=self.m {
            let bl = Complex::with_val(self.prec, &self.b[l] * &p);
            out.push(
                u.iter()
                    .map(|uj| Complex::with_val(self.prec, &bl * uj))
                    .collect(),
            );
            p *= &inv;
        }
        Ok(out)
    }

    /// G_x(z′) from the exact traces.
    pub fn eval(&self, x: &ChartPoint, zp: &Complex) -> Result<Complex> {
        let wts = self.weights(x)?;
        let mut acc = numeric::czero(self.prec);
        for (l, row) in wts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let v = self.traces[l][j].eval(zp);
                if !(v.real().is_finite() && v.imag().is_finite()) {
                    return Err(Error::PoleOnFiber(format!(
                        "trace at level {l} has a pole at z'"
                    )));
                }
                acc += Complex::with_val(self.prec, c * &v);
            }
        }
        Ok(acc)
    }

    /// G_x(z′) by summing z′·d/dz(τ^l e_j) over the numerical fiber.
    pub fn eval_numeric(&self, x: &ChartPoint, zp: &Complex) -> Result<Complex> {
        let wts = self.weights(x)?;
        let ws = cover::simple_fiber_compiled(&self.p, zp, self.prec)?;
        let mut acc = numeric::czero(self.prec);
        for w in ws {
            let wz = -(self.pt.eval(zp, &w) / self.pw.eval(zp, &w));
            let pt = ChartPoint { z: zp.clone(), w };
            let tau = self.tau.eval(&pt);
            let tau_z = self.tau.dz(&pt, &wz);
            let mut tl = numeric::cone(self.prec);
            let mut tl1 = numeric::czero(self.prec); // l·τ^(l-1)
            for row in &wts {
                for (j, c) in row.iter().enumerate() {
                    let e = self.es[j].eval(&pt);
                    let ez = self.es[j].dz(&pt, &wz);
                    let d = Complex::with_val(self.prec, &tl1 * &tau_z) * e
                        + Complex::with_val(self.prec, &tl * &ez);
                    acc += Complex::with_val(self.prec, c * &d);
                }
                tl1 = Complex::with_val(self.prec, &tl1 * &tau) + &tl;
                tl *= &tau;
            }
        }
        Ok(acc * zp)
    }
}

/// G_x at one point.
pub fn g_x(
    model: &CoverModel,
    params: &KernelParams,
    x: &ChartPoint,
    zp: &Complex,
) -> Result<Complex> {
    GxEvaluator::new(model, params.m, params.precision)?.eval(x, zp)
}

/// Grid z′ = z(x)·κ·e^{iφ} inside the window |z′ - z(x)| < 1/(3m).
pub fn residual_grid(zx: &Complex, m: usize, kappas: &[f64], angles: usize) -> Vec<Complex> {
    let prec = zx.prec().0;
    let win = 1.0 / (3.0 * m as f64);
    let mut out = Vec::new();
    for &k in kappas {
        for a in 0..angles {
            let th = std::f64::consts::TAU * a as f64 / angles as f64;
            let zp = Complex::with_val(prec, zx * numeric::cf64(prec, k * th.cos(), k * th.sin()));
            if cabs_f64(&Complex::with_val(prec, &zp - zx)) < win {
                out.push(zp);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ResidualOptions {
    pub rho2_hat: f64,
    pub n1: u32,
    /// |z′| of the slope and limit checks; `None` skips them.
    pub slope_radius: Option<f64>,
    pub slope_step: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub z: (f64, f64),
    pub abs_z: f64,
    pub residual: f64,
    pub bound: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeCheck {
    pub abs_z: f64,
    /// Finite-difference slope of G_x at z′.
    pub slope: (f64, f64),
    pub slope_defect: f64,
    /// |G_x(z′)/z′ - ω/dz(x)| / |ω/dz(x)|.
    pub limit_defect: f64,
    pub slope_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub model_id: String,
    pub m: usize,
    pub n1: u32,
    pub x: (f64, f64),
    pub beta: (f64, f64),
    pub rho2_hat: f64,
    pub rows: Vec<ResidualRow>,
    pub a5_hat: f64,
    pub slope: Option<SlopeCheck>,
}

pub const SLOPE_TOL: f64 = 0.01;

/// Residual |G_x(x′) - (ω/dz)(x)·z′| against (m|z′|² + n₁ρ̂₂^m|z′|)·|ω/dz(x)|.
pub fn antiderivative_residual(
    model: &CoverModel,
    gx: &GxEvaluator,
    x: &ChartPoint,
    grid: &[Complex],
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    let prec = gx.prec;
    let m = gx.m;
    let win = 1.0 / (3.0 * m as f64);
    let beta = gx.beta(x);
    let bn = cabs_f64(&beta);
    if bn == 0.0 {
        return Err(Error::Degenerate("omega/dz vanishes at x".into()));
    }
    if let Some(bad) = grid
        .iter()
        .find(|zp| cabs_f64(&Complex::with_val(prec, *zp - &x.z)) >= win)
    {
        return Err(Error::domain(format!(
            "grid point {:?} is outside the window |z' - z(x)| < 1/(3m)",
            numeric::to_pair(bad)
        )));
    }
    let decay = opts.n1 as f64 * opts.rho2_hat.powi(m as i32);
    let rows = grid
        .par_iter()
        .map(|zp| -> Result<ResidualRow> {
            let g = gx.eval(x, zp)?;
            let res = cabs_f64(&(g - Complex::with_val(prec, &beta * zp)));
            let az = cabs_f64(zp);
            let bound = (m as f64 * az * az + decay * az) * bn;
            Ok(ResidualRow {
                z: numeric::to_pair(zp),
                abs_z: az,
                residual: res,
                bound,
                normalized: res / bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let a5_hat = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
    let slope = match opts.slope_radius {
        None => None,
        Some(r) => {
            let ax = cabs_f64(&x.z);
            let zs = Complex::with_val(prec, &x.z * (r / ax));
            if cabs_f64(&Complex::with_val(prec, &zs - &x.z)) >= win {
                return Err(Error::domain("slope point is outside the window around x"));
            }
            let h = opts.slope_step;
            let zp = Complex::with_val(prec, &zs * (1.0 + h));
            let zm = Complex::with_val(prec, &zs * (1.0 - h));
            let d = gx.eval(x, &zp)? - gx.eval(x, &zm)?;
            let s = d / Complex::with_val(prec, &zs * (2.0 * h));
            let slope_defect = cabs_f64(&Complex::with_val(prec, &s - &beta)) / bn;
            let q = gx.eval(x, &zs)? / &zs;
            let limit_defect = cabs_f64(&(q - &beta)) / bn;
            Some(SlopeCheck {
                abs_z: r,
                slope: numeric::to_pair(&s),
                slope_defect,
                limit_defect,
                slope_ok: slope_defect < SLOPE_TOL,
            })
        }
    };
    Ok(ResidualReport {
        model_id: model.id.clone(),
        m,
        n1: opts.n1,
        x: numeric::to_pair(&x.z),
        beta: numeric::to_pair(&beta),
        rho2_hat: opts.rho2_hat,
        rows,
        a5_hat,
        slope,
    })
}

/// Settings of the residual suite on one family.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualSuiteOptions {
    /// Fixed m; `None` picks the smallest multiple of 4, at least 16, with
    /// n₁ρ̂₂^m ≤ `decay_target`.
    pub m: Option<usize>,
    pub decay_target: f64,
    pub radii: Vec<f64>,
    pub kappas: Vec<f64>,
    pub angles: usize,
    pub x_angle: f64,
    pub slope_radius: f64,
    pub slope_step: f64,
    pub r1: f64,
    pub scan_m: Vec<usize>,
    pub scan_samples: usize,
    pub seed: u64,
    pub precision: u32,
}

impl Default for ResidualSuiteOptions {
    fn default() -> Self {
        ResidualSuiteOptions {
            m: None,
            decay_target: 1e-3,
            radii: vec![1e-2, 1e-3, 1e-4],
            kappas: vec![0.5, 1.0, 2.0],
            angles: 8,
            x_angle: 0.7,
            slope_radius: 1e-4,
            slope_step: 1e-3,
            r1: 0.02,
            scan_m: vec![8, 16, 32, 64],
            scan_samples: 8,
            seed: 0,
            precision: 128,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSuiteReport {
    pub model_id: String,
    pub n1: u32,
    pub m: usize,
    pub rho2_hat: f64,
    /// (m, sup^(1/m)) rows of the anchor scan behind ρ̂₂.
    pub rho_samples: Vec<(usize, f64)>,
    pub b_prime: f64,
    pub per_radius: Vec<ResidualReport>,
    pub a5_hat: f64,
    pub a5_cap: f64,
    pub slope: SlopeCheck,
    pub limit_ok: bool,
    pub pass: bool,
}

/// Upper limit accepted for the single fitted â₅ of a family.
pub const A5_CAP: f64 = 10.0;
pub const LIMIT_TOL: f64 = 1e-3;

/// Smallest m (multiple of 4, at least 16) with n₁ρ^m ≤ target.
pub fn m_for_decay(n1: u32, rho: f64, target: f64) -> usize {
    let m = ((target / n1 as f64).ln() / rho.ln()).ceil().max(16.0) as usize;
    m.div_ceil(4) * 4
}

/// Residual grids on several working circles around z = 0 on sheet 0,
/// with ρ̂₂ taken from the anchor scan at n₁ = deg φ₂.
pub fn residual_suite(
    model: &CoverModel,
    opts: &ResidualSuiteOptions,
) -> Result<ResidualSuiteReport> {
    let prec = opts.precision;
    let n1 = model.n1;
    let anchors = crate::plocal::AnchorSet::new(n1, model.g, opts.r1, prec)?;
    let scan =
        crate::plocal::offdiag_decay_scan(&anchors, &opts.scan_m, opts.scan_samples, opts.seed)?;
    let rho = scan.rho1_hat;
    let m = opts
        .m
        .unwrap_or_else(|| m_for_decay(n1, rho, opts.decay_target));
    let gx = GxEvaluator::new(model, m, prec)?;
    let chart = Chart::new(model, 0, prec)?;
    let b_prime = measure_bound(
        model,
        &chart,
        opts.radii.iter().cloned().fold(0.0, f64::max) * 2.0,
        6,
        prec,
    )?;
    let dir = (opts.x_angle.cos(), opts.x_angle.sin());
    let mut per_radius = Vec::new();
    for &r in &opts.radii {
        let zx = numeric::cf64(prec, r * dir.0, r * dir.1);
        let x = chart.point(&zx)?;
        let grid = residual_grid(&zx, m, &opts.kappas, opts.angles);
        let ro = ResidualOptions {
            rho2_hat: rho,
            n1,
            slope_radius: None,
            slope_step: opts.slope_step,
        };
        per_radius.push(antiderivative_residual(model, &gx, &x, &grid, &ro)?);
    }
    let zs = numeric::cf64(prec, opts.slope_radius * dir.0, opts.slope_radius * dir.1);
    let xs = chart.point(&zs)?;
    let ro = ResidualOptions {
        rho2_hat: rho,
        n1,
        slope_radius: Some(opts.slope_radius),
        slope_step: opts.slope_step,
    };
    let slope = antiderivative_residual(model, &gx, &xs, &[], &ro)?
        .slope
        .expect("slope requested");
    let a5_hat = per_radius.iter().map(|r| r.a5_hat).fold(0.0, f64::max);
    let limit_ok = slope.limit_defect < LIMIT_TOL;
    Ok(ResidualSuiteReport {
        model_id: model.id.clone(),
        n1,
        m,
        rho2_hat: rho,
        rho_samples: scan.per_m.iter().map(|r| (r.m, r.sup_pow_inv_m)).collect(),
        b_prime,
        pass: a5_hat.is_finite() && a5_hat <= A5_CAP && slope.slope_ok && limit_ok,
        per_radius,
        a5_hat,
        a5_cap: A5_CAP,
        slope,
        limit_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::corpus_model;

    const P: u32 = 128;

    fn plane_model(f: BiRat, g: BiRat) -> CoverModel {
        CoverModel::new(
            "plane",
            BiPoly::w(),
            BiRat::one(),
            DifferentialFamily::paired(f, g),
        )
        .unwrap()
    }

    #[test]
    fn paired_omegas() {
        let t = BiRat::from_poly(BiPoly::t());
        let m = plane_model(BiRat::one(), t.clone());
        assert_eq!(m.omega_over_dt(), BiRat::one());
        let m = plane_model(t.clone(), &t * &t);
        assert_eq!(m.omega_over_dt(), &t * &t);
    }

    #[test]
    fn random_family_is_null() {
        let f = make_null_family(&NullFamilySpec::Random {
            degree: 3,
            count: 3,
            seed: 7,
        })
        .unwrap();
        assert!(f.null_identity_holds());
        assert!(make_null_family(&NullFamilySpec::Random {
            degree: 3,
            count: 1,
            seed: 7
        })
        .is_err());
        let zero = make_null_family(&NullFamilySpec::Paired {
            f: BiRat::one(),
            g: BiRat::one(),
        });
        assert!(matches!(zero, Err(Error::Degenerate(_))));
    }

    #[test]
    fn unit_disk_gram() {
        let m = plane_model(BiRat::one(), BiRat::from_poly(BiPoly::t()));
        let chart = Chart::new(&m, 0, P).unwrap();
        let x = chart.point(&numeric::czero(P)).unwrap();
        let quad = DiskQuadrature {
            radial: 8,
            angular: 16,
            radius: 1.0 + 1e-9,
        };
        let ab = gram_and_adapted_basis(&m, &chart, &x, &quad).unwrap();
        let pi = std::f64::consts::PI;
        // e = (z, 1): diag(π/2, π).
        assert!((ab.gram[0][0].real().to_f64() - pi / 2.0).abs() < 1e-6);
        assert!((ab.gram[1][1].real().to_f64() - pi).abs() < 1e-6);
        assert!(cabs_f64(&ab.gram[0][1]) < 1e-12);
        assert!(cabs_f64(&ab.u_at_x[0]) < 1e-20);
        assert!(cabs_f64(&(ab.u_at_x[1].clone() - &ab.omega_at_x)) < 1e-20);
    }

    #[test]
    fn exact_and_numeric_gx_agree() {
        let model = corpus_model("canonical-d2").unwrap();
        let gx = GxEvaluator::new(&model, 6, P).unwrap();
        let chart = Chart::new(&model, 0, P).unwrap();
        let x = chart.point(&numeric::cf64(P, 0.01, 0.02)).unwrap();
        let zp = numeric::cf64(P, 0.015, 0.01);
        let a = gx.eval(&x, &zp).unwrap();
        let b = gx.eval_numeric(&x, &zp).unwrap();
        assert!(cabs_f64(&(a - b)) < 1e-25);
        // θ kills constants: G_x(0) = 0.
        assert!(cabs_f64(&gx.eval(&x, &numeric::czero(P)).unwrap()) == 0.0);
    }
}
