//! Toy models of the cover φ₂: a curve P(t, w) = 0 monic in w over the
//! t-line, the function τ, and a differential family (u_j, e_j).

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complex, Float, Integer, Rational};
use serde::Serialize;

use crate::algebra::{
    BiPoly, BiRat, CompiledBiPoly, CompiledBiRat, Laurent, Poly, QuotientAlgebra, RatFunc, RatFuncs,
};
use crate::error::{Error, Result};
use crate::numeric::{self, cabs, cabs_f64};
use crate::plocal::AnchorSet;

/// One pair (u_j, e_j) of the differential family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPair {
    pub u: BiRat,
    pub e: BiRat,
}

/// Pairs with Σ u_j·e_j = 0, defining ω = Σ u_j de_j.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialFamily {
    pub pairs: Vec<FamilyPair>,
    /// The model bound B (informational).
    pub bound: f64,
}

impl DifferentialFamily {
    /// Checks Σ u_j·e_j = 0 identically in (t, w).
    pub fn new(pairs: Vec<FamilyPair>) -> Result<Self> {
        let fam = DifferentialFamily { pairs, bound: 1.0 };
        if !fam.null_identity_holds() {
            return Err(Error::domain(
                "family violates the null identity sum u_j e_j = 0",
            ));
        }
        Ok(fam)
    }

    /// The block ((f, -g), (g, f)), for which ω = f dg - g df.
    pub fn paired(f: BiRat, g: BiRat) -> Self {
        DifferentialFamily {
            pairs: vec![
                FamilyPair {
                    u: f.clone(),
                    e: g.clone(),
                },
                FamilyPair { u: -&g, e: f },
            ],
            bound: 1.0,
        }
    }

    pub fn null_identity_holds(&self) -> bool {
        self.pairs
            .iter()
            .fold(BiRat::zero(), |acc, p| &acc + &(&p.u * &p.e))
            .is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| p.u.is_integral() && p.e.is_integral())
    }

    /// Substitute t ↦ a·t in every member.
    pub fn scale_t(&self, a: &Rational) -> Self {
        DifferentialFamily {
            pairs: self
                .pairs
                .iter()
                .map(|p| FamilyPair {
                    u: p.u.scale_t(a),
                    e: p.e.scale_t(a),
                })
                .collect(),
            bound: self.bound,
        }
    }

    /// ω/dt on the curve P = 0: Σ u_j (∂_t e_j + ∂_w e_j · w_t), w_t = -P_t/P_w.
    pub fn omega_over_dt(&self, p: &BiPoly) -> BiRat {
        let pt = BiRat::from_poly(p.partial_t());
        let pw = BiRat::from_poly(p.partial_w());
        let wt = -&(&pt * &pw.inv().expect("P depends on w"));
        self.pairs.iter().fold(BiRat::zero(), |acc, pr| {
            let de = &pr.e.partial_t() + &(&pr.e.partial_w() * &wt);
            &acc + &(&pr.u * &de)
        })
    }
}

/// The cover model. `p` is monic in w; the remaining invariants are checked
/// by [`CoverModel::check_invariants`] so that deliberately degenerate models
/// can still be built for error-path tests.
#[derive(Clone, Debug)]
pub struct CoverModel {
    pub id: String,
    pub p: BiPoly,
    pub tau: BiRat,
    pub scale: Rational,
    pub family: DifferentialFamily,
    pub n1: u32,
    pub g: u32,
    pub contour_radius: Rational,
    field: OnceLock<QuotientAlgebra<RatFuncs>>,
}

impl CoverModel {
    pub fn new(
        id: impl Into<String>,
        p: BiPoly,
        tau: BiRat,
        family: DifferentialFamily,
    ) -> Result<Self> {
        if !p.is_monic_w() || p.deg_w().unwrap_or(0) == 0 {
            return Err(Error::domain(
                "defining polynomial must be monic in w of degree >= 1",
            ));
        }
        let d = p.deg_w().unwrap() as u32;
        Ok(CoverModel {
            id: id.into(),
            p,
            tau,
            scale: Rational::from(1),
            family,
            n1: d,
            g: 2,
            contour_radius: Rational::from(1),
            field: OnceLock::new(),
        })
    }

    pub fn with_scale(mut self, s: Rational) -> Self {
        self.scale = s;
        self
    }

    pub fn with_n1(mut self, n1: u32) -> Self {
        self.n1 = n1;
        self
    }

    pub fn with_contour_radius(mut self, r: Rational) -> Self {
        self.contour_radius = r;
        self
    }

    /// The canonical model w^d = R(t) with τ = w and family (1, g) paired.
    pub fn canonical(d: usize, r: Poly, g: BiRat) -> Result<Self> {
        let mut rows = vec![Poly::zero(); d + 1];
        rows[0] = -&r;
        rows[d] = Poly::one();
        let p = BiPoly::from_w_coeffs(rows);
        let fam = DifferentialFamily::paired(BiRat::one(), g);
        CoverModel::new(
            format!("canonical-d{d}"),
            p,
            BiRat::from_poly(BiPoly::w()),
            fam,
        )
    }

    pub fn degree(&self) -> usize {
        self.p.deg_w().unwrap()
    }

    pub fn is_integral(&self) -> bool {
        self.p.is_integral() && self.tau.is_integral() && self.family.is_integral()
    }

    /// ℚ(t)[w]/(P).
    pub fn function_field(&self) -> &QuotientAlgebra<RatFuncs> {
        self.field
            .get_or_init(|| QuotientAlgebra::new(RatFuncs, &self.p))
    }

    /// P(0, w) as a polynomial in w.
    pub fn fiber_poly_at_zero(&self) -> Poly {
        self.p.at_t(&Rational::new())
    }

    /// Discriminant-like quantity Res_w(P(0,w), ∂_w P(0,w)); zero iff the
    /// fiber over t = 0 is ramified.
    pub fn fiber_discriminant(&self) -> Rational {
        let p0 = self.fiber_poly_at_zero();
        let as_bi = |q: &Poly| {
            BiPoly::from_w_coeffs(
                q.coeffs()
                    .iter()
                    .map(|c| Poly::constant(c.clone()))
                    .collect(),
            )
        };
        as_bi(&p0).resultant_w(&as_bi(&p0.derivative())).coeff(0)
    }

    /// Res_w(P(0,w), h(0,w)) for a bivariate h.
    fn resultant_at_zero(&self, h: &BiPoly) -> Rational {
        let zero = Rational::new();
        let p0 = BiPoly::from_w_coeffs(
            self.p
                .at_t(&zero)
                .coeffs()
                .iter()
                .map(|c| Poly::constant(c.clone()))
                .collect(),
        );
        let h0 = BiPoly::from_w_coeffs(
            h.at_t(&zero)
                .coeffs()
                .iter()
                .map(|c| Poly::constant(c.clone()))
                .collect(),
        );
        p0.resultant_w(&h0).coeff(0)
    }

    /// Model invariants: s > 0, unramified fiber over t = 0, τ regular there,
    /// null identity.
    pub fn check_invariants(&self) -> Result<()> {
        if self.scale.cmp0().is_le() {
            return Err(Error::domain(format!(
                "scale {} is not positive",
                self.scale
            )));
        }
        if self.fiber_discriminant().cmp0().is_eq() {
            return Err(Error::domain("fiber over t = 0 is ramified"));
        }
        if self.resultant_at_zero(self.tau.den()).cmp0().is_eq() {
            return Err(Error::domain("tau has a pole on the fiber over t = 0"));
        }
        if !self.family.null_identity_holds() {
            return Err(Error::domain("family violates the null identity"));
        }
        Ok(())
    }

    /// τ nonzero on the fiber over t = 0.
    pub fn tau_nonvanishing_at_zero(&self) -> bool {
        self.resultant_at_zero(self.tau.num()).cmp0().is_ne()
    }

    pub fn omega_over_dt(&self) -> BiRat {
        self.family.omega_over_dt(&self.p)
    }
}

/// A fiber point with its multiplicity.
#[derive(Clone, Debug)]
pub struct FiberPoint {
    pub w: Complex,
    pub multiplicity: usize,
}

/// Roots of a complex polynomial in w grouped into clusters of radius
/// 2^(-prec/4), with precision doubling up to `ceiling` bits.
pub fn cluster_roots(
    coeffs_at: impl Fn(u32) -> Vec<Complex>,
    prec: u32,
    ceiling: u32,
) -> Result<Vec<FiberPoint>> {
    let mut p = prec;
    let mut prev: Option<(u32, Vec<(Complex, usize, f64)>)> = None;
    loop {
        let coeffs = coeffs_at(p);
        let roots = numeric::poly_roots(&coeffs, p);
        let clusters = group(&roots, p);
        if clusters.iter().all(|c| c.1 == 1) {
            return Ok(clusters
                .into_iter()
                .map(|(w, k, _)| FiberPoint { w, multiplicity: k })
                .collect());
        }
        if p >= ceiling {
            // A genuine k-fold root shrinks like 2^(-p/k) as p grows; a pair of
            // distinct close roots does not shrink at all.
            let Some((pp, prev_clusters)) = prev else {
                return Err(Error::PrecisionExhausted {
                    msg: "root cluster unresolved at the precision ceiling".into(),
                    suggested: 2 * p,
                });
            };
            for (c, k, diam) in &clusters {
                if *k == 1 {
                    continue;
                }
                let before = prev_clusters
                    .iter()
                    .filter(|(w, kk, _)| *kk == *k && cabs_f64(&Complex::with_val(p, w - c)) < 1e-3)
                    .map(|x| x.2)
                    .next();
                let genuine = match before {
                    Some(b) if b == 0.0 => *diam == 0.0,
                    Some(b) => {
                        *diam == 0.0 || diam / b < 2f64.powf(-(pp as f64) / (4.0 * *k as f64))
                    }
                    None => false,
                };
                if !genuine {
                    return Err(Error::PrecisionExhausted {
                        msg: format!("cannot separate {k} roots near {}", fmt_c(c)),
                        suggested: 2 * p,
                    });
                }
            }
            return Ok(clusters
                .into_iter()
                .map(|(w, k, _)| FiberPoint { w, multiplicity: k })
                .collect());
        }
        prev = Some((p, clusters));
        p = (2 * p).min(ceiling);
    }
}

fn fmt_c(z: &Complex) -> String {
    let (a, b) = numeric::to_pair(z);
    format!("{a:.6e}{b:+.6e}i")
}

/// Single-linkage clusters: (centre, size, diameter).
fn group(roots: &[Complex], prec: u32) -> Vec<(Complex, usize, f64)> {
    let tol = 2f64.powf(-(prec as f64) / 4.0);
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0f64.max(cabs_f64(&roots[i]));
            if cabs_f64(&Complex::with_val(prec, &roots[i] - &roots[j])) < tol * scale {
                let (a, b) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == b {
                        *l = a;
                    }
                }
            }
        }
    }
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for i in 0..n {
        if seen.contains(&label[i]) {
            continue;
        }
        seen.push(label[i]);
        let members: Vec<&Complex> = (0..n)
            .filter(|&j| label[j] == label[i])
            .map(|j| &roots[j])
            .collect();
        let mut c = numeric::czero(prec);
        for m in &members {
            c += *m;
        }
        c /= members.len() as u32;
        let mut diam = 0.0f64;
        for a in &members {
            for b in &members {
                diam = diam.max(cabs_f64(&Complex::with_val(prec, *a - *b)));
            }
        }
        out.push((c, members.len(), diam));
    }
    out
}

/// All roots of P(α, w) with multiplicities.
pub fn fiber(model: &CoverModel, alpha: &Complex, prec: u32) -> Result<Vec<FiberPoint>> {
    fiber_of(&model.p, alpha, prec)
}

pub fn fiber_of(p: &BiPoly, alpha: &Complex, prec: u32) -> Result<Vec<FiberPoint>> {
    cluster_roots(
        |bits| p.at_t_complex(&Complex::with_val(bits, alpha)),
        prec,
        4 * prec,
    )
}

/// Fiber at an unramified point: the d distinct roots.
pub fn simple_fiber(model: &CoverModel, alpha: &Complex, prec: u32) -> Result<Vec<Complex>> {
    let pts = fiber(model, alpha, prec)?;
    if pts.iter().any(|p| p.multiplicity > 1) {
        return Err(Error::domain(format!(
            "t = {} is a ramification point",
            fmt_c(alpha)
        )));
    }
    Ok(pts
        .into_iter()
        .map(|p| Complex::with_val(prec, p.w))
        .collect())
}

/// Fast fiber for repeated evaluation on compiled coefficients; no clustering
/// check beyond a separation test.
pub fn simple_fiber_compiled(
    p: &CompiledBiPoly,
    alpha: &Complex,
    prec: u32,
) -> Result<Vec<Complex>> {
    let coeffs = p.at_t(alpha);
    let roots = numeric::poly_roots(&coeffs, prec);
    let clusters = group(&roots, prec);
    if clusters.iter().any(|c| c.1 > 1) {
        return Err(Error::domain(format!(
            "t = {} is (numerically) a ramification point",
            fmt_c(alpha)
        )));
    }
    Ok(roots)
}

/// Σ over the fiber of f(α, w_k).
pub fn trace_numeric(model: &CoverModel, f: &BiRat, alpha: &Complex, prec: u32) -> Result<Complex> {
    let pts = simple_fiber(model, alpha, prec)?;
    let cf = CompiledBiRat::new(f, prec);
    let a = Complex::with_val(prec, alpha);
    let tiny = numeric::eps(prec, prec as i32 / 2);
    let mut acc = numeric::czero(prec);
    for w in &pts {
        let den = cf.eval_den(&a, w);
        if cabs(&den) < tiny {
            return Err(Error::PoleOnFiber(format!(
                "f has a pole at (t, w) = ({}, {})",
                fmt_c(&a),
                fmt_c(w)
            )));
        }
        acc += cf.eval(&a, w);
    }
    Ok(acc)
}

/// Field trace from ℚ(t)[w]/(P) down to ℚ(t).
pub fn trace_exact(model: &CoverModel, f: &BiRat) -> Result<RatFunc> {
    let alg = model.function_field();
    let el = alg
        .from_birat(f)
        .ok_or_else(|| Error::domain("denominator shares a factor with P"))?;
    Ok(alg.trace(&el))
}

/// t·d/dt (equal to z·d/dz for z = t/s).
pub fn euler_derivation(f: &RatFunc) -> RatFunc {
    f.euler()
}

/// t ↦ 1/t.
pub fn inversion_pullback(f: &RatFunc) -> RatFunc {
    f.inversion_pullback()
}

/// The vanishing polynomial of τ's poles and its diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct VanishingPolynomial {
    #[serde(serialize_with = "ser_poly")]
    pub q: Poly,
    #[serde(serialize_with = "ser_poly")]
    pub resultant: Poly,
    pub leading: String,
    pub unit_leading: bool,
}

pub(crate) fn ser_poly<S: serde::Serializer>(
    p: &Poly,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.coeffs().iter().map(|c| c.to_string()))
}

/// Res_w(P, den τ) with no checks.
pub fn tau_pole_resultant(model: &CoverModel) -> Poly {
    model.p.resultant_w(model.tau.den())
}

/// q = primitive part of Res_w(P, den τ). Rejects models where τ has a pole
/// over t = 0 (q(0) = 0).
pub fn vanishing_polynomial(model: &CoverModel) -> Result<VanishingPolynomial> {
    let res = tau_pole_resultant(model);
    if res.is_zero() {
        return Err(Error::domain("denominator of tau shares a factor with P"));
    }
    if res.coeff(0).cmp0().is_eq() {
        return Err(Error::domain(format!(
            "tau has a pole on the fiber over t = 0 (q = {res}); the model violates C2 = 0"
        )));
    }
    let (_, q) = res.primitive_part();
    let lead = q.lead();
    Ok(VanishingPolynomial {
        unit_leading: Rational::from(lead.abs_ref()) == 1,
        leading: lead.to_string(),
        q,
        resultant: res,
    })
}

/// Trace of τ^l e_i (or its Euler derivative) written as q^(-k)·N(t) with N a
/// Laurent polynomial: coefficients of t^k1..t^k2.
#[derive(Clone, Debug, Serialize)]
pub struct TraceExpansion {
    pub i: usize,
    pub l: usize,
    pub q_power: u32,
    pub k1: i64,
    pub k2: i64,
    #[serde(serialize_with = "ser_rat_vec")]
    pub coeffs: Vec<Rational>,
    pub integral: bool,
}

fn ser_rat_vec<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| c.to_string()))
}

/// Tr(τ^l e_i) (with `euler`, θ Tr(τ^l e_i)) in q-power form.
pub fn trace_expansion(
    model: &CoverModel,
    i: usize,
    l: usize,
    euler: bool,
) -> Result<TraceExpansion> {
    let q = vanishing_polynomial(model)?.q;
    let f = trace_level(model, i, l)?;
    let f = if euler { f.euler() } else { f };
    let k = l as u32 + euler as u32;
    let n = &f * &RatFunc::from_poly(q.pow(k));
    // N must be a Laurent polynomial: denominator a monomial.
    let den = n.den();
    let v = den.valuation().unwrap();
    if den.degree().unwrap() != v {
        return Err(Error::InvariantViolation(format!(
            "trace at level {l} is not of the form q^-{k} times a Laurent polynomial"
        )));
    }
    let scale = den.lead().recip();
    let num = n.num().scale(&scale);
    let k1 = num.valuation().map_or(0, |x| x as i64) - v as i64;
    let coeffs: Vec<Rational> = num
        .coeffs()
        .iter()
        .skip(num.valuation().unwrap_or(0))
        .cloned()
        .collect();
    let k2 = k1 + coeffs.len() as i64 - 1;
    Ok(TraceExpansion {
        i,
        l,
        q_power: k,
        k1,
        k2,
        integral: coeffs.iter().all(|c| *c.denom() == 1),
        coeffs,
    })
}

/// Tr(τ^l·e_i).
pub fn trace_level(model: &CoverModel, i: usize, l: usize) -> Result<RatFunc> {
    let pair = model
        .family
        .pairs
        .get(i)
        .ok_or_else(|| Error::domain(format!("family has no member {i}")))?;
    let tl = model.tau.pow(l as i32).expect("non-negative power");
    trace_exact(model, &(&tl * &pair.e))
}

/// θ Tr(τ^l·e_i) for l = 0..=m, indexed `[l][i]`.
pub fn euler_level_traces(model: &CoverModel, m: usize) -> Result<Vec<Vec<RatFunc>>> {
    let alg = model.function_field();
    let tau = alg
        .from_birat(&model.tau)
        .ok_or_else(|| Error::domain("denominator of tau shares a factor with P"))?;
    let es = model
        .family
        .pairs
        .iter()
        .map(|p| {
            alg.from_birat(&p.e)
                .ok_or_else(|| Error::domain("denominator of e_i shares a factor with P"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pw = alg.one();
    let mut out = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        out.push(
            es.iter()
                .map(|e| alg.trace(&alg.mul(&pw, e)).euler())
                .collect(),
        );
        pw = alg.mul(&pw, &tau);
    }
    Ok(out)
}

/// Options for [`attest_conditions`].
#[derive(Clone, Debug)]
pub struct AttestOptions {
    /// Sampling radius in t for the proximity defect.
    pub proximity_radius: f64,
    /// Outer sampling radius in t for â₁.
    pub outer_radius: f64,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub seed: u64,
    pub precision: u32,
}

impl Default for AttestOptions {
    fn default() -> Self {
        AttestOptions {
            proximity_radius: 2.0,
            outer_radius: 4.0,
            radial_samples: 24,
            angular_samples: 24,
            seed: 0,
            precision: 128,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberAssignment {
    pub j: usize,
    pub w: (f64, f64),
    pub tau: (f64, f64),
    pub anchor: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Attestation {
    pub model_id: String,
    pub unramified: bool,
    pub assignments: Vec<FiberAssignment>,
    pub anchors_distinct: bool,
    /// s·max |τ - ϱ_{i_j}| over sampled points with |t| below the proximity radius.
    pub a2_hat: f64,
    pub max_proximity_defect: f64,
    /// min |t|/s over sampled curve points outside every U_j.
    pub a1_hat: f64,
    /// True when no sampled point left the sets U_j; â₁ is then a lower bound.
    pub a1_censored: bool,
    pub scale_exceeds_8_over_a1: bool,
    pub warnings: Vec<String>,
}

/// Checks the model conditions on the toy cover: unramified fiber, distinct
/// anchor assignment, and measured â₁, â₂.
pub fn attest_conditions(
    model: &CoverModel,
    anchors: &AnchorSet,
    opts: &AttestOptions,
) -> Result<Attestation> {
    let prec = opts.precision;
    let s = model.scale.to_f64();
    let unramified = model.fiber_discriminant().cmp0().is_ne();
    if !unramified {
        return Err(Error::Attestation("fiber over t = 0 is ramified".into()));
    }
    model.check_invariants()?;
    let zero = numeric::czero(prec);
    let roots = simple_fiber(model, &zero, prec)?;
    let tau = CompiledBiRat::new(&model.tau, prec);
    let mut assignments = Vec::new();
    for (j, w) in roots.iter().enumerate() {
        let tv = tau.eval(&zero, w);
        let (a, dist) = anchors.nearest(&tv);
        assignments.push(FiberAssignment {
            j,
            w: numeric::to_pair(w),
            tau: numeric::to_pair(&tv),
            anchor: a,
            distance: dist,
        });
    }
    let mut used: Vec<usize> = assignments.iter().map(|a| a.anchor).collect();
    used.sort_unstable();
    used.dedup();
    let anchors_distinct = used.len() == assignments.len();
    if !anchors_distinct {
        return Err(Error::Attestation(format!(
            "two fiber points over t = 0 are assigned the same anchor (model {})",
            model.id
        )));
    }
    // Follow each sheet by continuation along rays and record |τ - ϱ_{i_j}|.
    let p = CompiledBiPoly::new(&model.p, prec);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut max_def = 0.0f64;
    let mut a1 = f64::INFINITY;
    let r1 = anchors.r1;
    let radii: Vec<f64> = (1..=opts.radial_samples)
        .map(|k| opts.outer_radius * (k as f64 / opts.radial_samples as f64).powi(2))
        .collect();
    for ai in 0..opts.angular_samples {
        let th =
            std::f64::consts::TAU * (ai as f64 + rng.gen::<f64>()) / opts.angular_samples as f64;
        let mut sheets = roots.clone();
        for &r in &radii {
            let t = numeric::cf64(prec, r * th.cos(), r * th.sin());
            sheets = continue_sheets(&p, &t, &sheets, prec)?;
            for (j, w) in sheets.iter().enumerate() {
                let tv = tau.eval(&t, w);
                let anchor = &anchors.anchors[assignments[j].anchor];
                let dev = cabs_f64(&Complex::with_val(prec, &tv - anchor));
                if r < opts.proximity_radius {
                    max_def = max_def.max(dev);
                }
                // Outside U_j: τ is not within r₁ of any assigned anchor.
                let inside = assignments.iter().any(|a| {
                    cabs_f64(&Complex::with_val(prec, &tv - &anchors.anchors[a.anchor])) < r1
                });
                if !inside {
                    a1 = a1.min(r / s);
                }
            }
        }
    }
    let a1_censored = !a1.is_finite();
    if a1_censored {
        a1 = opts.outer_radius / s;
    }
    let mut warnings = anchors.warnings();
    if a1_censored {
        warnings.push("no sampled point left the sets U_j; a1_hat is a lower bound".into());
    }
    Ok(Attestation {
        model_id: model.id.clone(),
        unramified,
        assignments,
        anchors_distinct,
        a2_hat: s * max_def,
        max_proximity_defect: max_def,
        a1_hat: a1,
        a1_censored,
        scale_exceeds_8_over_a1: s > 8.0 / a1,
        warnings,
    })
}

/// Newton continuation of each sheet to a new base point, with a fallback to
/// matching the full root set when a step is ambiguous.
pub fn continue_sheets(
    p: &CompiledBiPoly,
    t: &Complex,
    prev: &[Complex],
    prec: u32,
) -> Result<Vec<Complex>> {
    let coeffs = p.at_t(t);
    let roots = numeric::poly_roots(&coeffs, prec);
    let mut out = Vec::with_capacity(prev.len());
    let mut taken = vec![false; roots.len()];
    for w in prev {
        let (k, _) = roots
            .iter()
            .enumerate()
            .filter(|(k, _)| !taken[*k])
            .map(|(k, r)| (k, cabs_f64(&Complex::with_val(prec, r - w))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::domain("sheet continuation lost a root"))?;
        taken[k] = true;
        out.push(roots[k].clone());
    }
    Ok(out)
}

/// Agreement of exact and numerical traces at random unramified points.
#[derive(Clone, Debug, Serialize)]
pub struct TraceAgreement {
    pub model_id: String,
    pub function: String,
    pub points: usize,
    pub seed: u64,
    pub precision: u32,
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Default test function τ²·e_last + w³·u_0 + t.
pub fn probe_function(model: &CoverModel) -> BiRat {
    let t2 = model.tau.pow(2).expect("non-negative power");
    let el = model
        .family
        .pairs
        .last()
        .map_or(BiRat::one(), |p| p.e.clone());
    let u0 = model
        .family
        .pairs
        .first()
        .map_or(BiRat::zero(), |p| p.u.clone());
    let w3 = BiRat::from_poly(BiPoly::w().pow(3));
    &(&(&t2 * &el) + &(&w3 * &u0)) + &BiRat::from_poly(BiPoly::t())
}

/// Compares trace_exact with trace_numeric at `points` random α with
/// |α| < radius, to 10^-(digits - 10) relative.
pub fn trace_equivalence(
    model: &CoverModel,
    f: &BiRat,
    points: usize,
    radius: f64,
    seed: u64,
    prec: u32,
) -> Result<TraceAgreement> {
    let exact = trace_exact(model, f)?;
    let digits = (prec as f64 * std::f64::consts::LOG10_2).floor();
    let tol = 10f64.powf(-(digits - 10.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < points {
        attempts += 1;
        if attempts > 20 * points {
            return Err(Error::domain(
                "could not find enough unramified sample points",
            ));
        }
        let r = radius * rng.gen::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.gen::<f64>();
        let a = numeric::cf64(prec, r * th.cos(), r * th.sin());
        let num = match trace_numeric(model, f, &a, prec) {
            Ok(v) => v,
            Err(Error::Domain(_)) | Err(Error::PoleOnFiber(_)) => continue,
            Err(e) => return Err(e),
        };
        let ex = exact.eval_complex(&a);
        if !(ex.real().is_finite() && ex.imag().is_finite()) {
            continue;
        }
        worst = worst.max(rel_diff(&num, &ex).to_f64());
        done += 1;
    }
    Ok(TraceAgreement {
        model_id: model.id.clone(),
        function: f.to_string(),
        points,
        seed,
        precision: prec,
        max_rel_err: worst,
        tol,
        pass: worst < tol,
    })
}

/// Relative agreement |a - b| / max(1, |b|).
pub fn rel_diff(a: &Complex, b: &Complex) -> Float {
    let prec = a.prec().0;
    let d = cabs(&Complex::with_val(prec, a - b));
    let m = cabs(b).max(&Float::with_val(prec, 1));
    d / m
}

/// Integer coefficients of an integral polynomial.
pub fn integer_coeffs(p: &Poly) -> Option<Vec<Integer>> {
    p.coeffs()
        .iter()
        .map(|c| (*c.denom() == 1).then(|| c.numer().clone()))
        .collect()
}

/// Laurent expansion at t = 0 helper re-exported for the arithmetic layer.
pub fn laurent(f: &RatFunc, end: i64) -> Laurent {
    Laurent::from_ratfunc(f, end)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 128;

    fn sqrt_model() -> CoverModel {
        let p = BiPoly::from_nested_ints(&[&[0, -1], &[], &[1]]);
        let fam = DifferentialFamily::paired(BiRat::one(), BiRat::from_poly(BiPoly::t()));
        CoverModel::new("sqrt", p, BiRat::one(), fam).unwrap()
    }

    #[test]
    fn fiber_examples() {
        let m = sqrt_model();
        let f = fiber(&m, &numeric::cf64(P, 1.0, 0.0), P).unwrap();
        let mut re: Vec<f64> = f.iter().map(|p| p.w.real().to_f64()).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-30 && (re[1] - 1.0).abs() < 1e-30);
        let f0 = fiber(&m, &numeric::czero(P), P).unwrap();
        assert_eq!(f0.len(), 1);
        assert_eq!(f0[0].multiplicity, 2);
    }

    #[test]
    fn traces_on_sqrt_model() {
        let m = sqrt_model();
        let w = BiRat::from_poly(BiPoly::w());
        let w2 = BiRat::from_poly(BiPoly::w().pow(2));
        assert!(trace_exact(&m, &w).unwrap().is_zero());
        assert_eq!(
            trace_exact(&m, &w2).unwrap(),
            RatFunc::from_poly(Poly::from_ints(&[0, 2]))
        );
        let a = numeric::cf64(P, 0.3, -0.7);
        let v = trace_numeric(&m, &w2, &a, P).unwrap();
        assert!(cabs_f64(&(v - numeric::cf64(P, 0.6, -1.4))) < 1e-30);
        let bad = BiRat::new(BiPoly::one(), &BiPoly::w().pow(2) - &BiPoly::t()).unwrap();
        assert!(matches!(trace_exact(&m, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn vanishing_polynomial_cases() {
        let mut m = sqrt_model();
        m.tau = BiRat::new(BiPoly::one(), BiPoly::w()).unwrap();
        assert_eq!(tau_pole_resultant(&m), Poly::from_ints(&[0, -1]));
        assert!(matches!(vanishing_polynomial(&m), Err(Error::Domain(_))));
        let p = BiPoly::from_nested_ints(&[&[-1, -1], &[], &[1]]);
        let fam = DifferentialFamily::paired(BiRat::one(), BiRat::from_poly(BiPoly::t()));
        let m2 = CoverModel::new("plain", p, BiRat::from_poly(BiPoly::w()), fam).unwrap();
        let q = vanishing_polynomial(&m2).unwrap();
        assert_eq!(q.q, Poly::one());
        assert!(q.unit_leading);
    }

    #[test]
    fn null_identity_rejected_when_broken() {
        let pairs = vec![FamilyPair {
            u: BiRat::one(),
            e: BiRat::one(),
        }];
        assert!(DifferentialFamily::new(pairs).is_err());
    }
}
