//! The arithmetic side: G₂, contour integrals of ω·G₂, exact residues and
//! their integrality, the scale sweep, and the height-bound chain.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};
use serde::Serialize;

use crate::algebra::{
    BiRat, CompiledBiPoly, CompiledBiRat, CompiledRatFunc, Laurent, Poly, QuotientAlgebra, RatFunc,
    TruncatedSeries,
};
use crate::cover::{self, euler_level_traces, CoverModel};
use crate::error::{Error, Result};
use crate::exactkernel::{binom, split_coefficients};
use crate::numeric::{self, cabs_f64};

/// Compiled G₂ = Σ_l b_{m,l} τ^{-l} Σ_i u_i·ψ*(θ Tr(τ^l e_i)).
pub struct G2Evaluator {
    pub m: usize,
    prec: u32,
    b: Vec<Complex>,
    /// ψ*(θ Tr(τ^l e_i)), indexed `[l][i]`.
    pub pulled: Vec<Vec<RatFunc>>,
    a: Vec<Vec<CompiledRatFunc>>,
    tau: CompiledBiRat,
    u: Vec<CompiledBiRat>,
    omega: CompiledBiRat,
    p: CompiledBiPoly,
}

impl G2Evaluator {
    pub fn new(model: &CoverModel, m: usize, prec: u32) -> Result<Self> {
        let pulled: Vec<Vec<RatFunc>> = euler_level_traces(model, m)?
            .into_iter()
            .map(|row| row.iter().map(cover::inversion_pullback).collect())
            .collect();
        let a = pulled
            .iter()
            .map(|row| row.iter().map(|f| CompiledRatFunc::new(f, prec)).collect())
            .collect();
        Ok(G2Evaluator {
            m,
            prec,
            b: split_coefficients(m)
                .values
                .iter()
                .map(|x| numeric::crat(prec, x))
                .collect(),
            pulled,
            a,
            tau: CompiledBiRat::new(&model.tau, prec),
            u: model
                .family
                .pairs
                .iter()
                .map(|p| CompiledBiRat::new(&p.u, prec))
                .collect(),
            omega: CompiledBiRat::new(&model.omega_over_dt(), prec),
            p: CompiledBiPoly::new(&model.p, prec),
        })
    }

    /// ψ*(θ Tr(τ^l e_i)) at t.
    pub fn pulled_trace(&self, l: usize, i: usize, t: &Complex) -> Result<Complex> {
        finite(self.a[l][i].eval(t), || {
            format!("pulled-back trace at level {l} has a pole at t")
        })
    }

    /// G₂ at a curve point (t, w).
    pub fn eval(&self, t: &Complex, w: &Complex) -> Result<Complex> {
        let tau = self.tau.eval(t, w);
        if cabs_f64(&tau) < 1e-30 {
            return Err(Error::domain("tau vanishes at the evaluation point"));
        }
        let tau_inv = finite(Complex::with_val(self.prec, tau.recip_ref()), || {
            "tau has a pole".into()
        })?;
        let u: Vec<Complex> = self.u.iter().map(|u| u.eval(t, w)).collect();
        let mut acc = numeric::czero(self.prec);
        let mut tp = numeric::cone(self.prec);
        for l in 0..=self.m {
            let mut inner = numeric::czero(self.prec);
            for (i, ui) in u.iter().enumerate() {
                inner += Complex::with_val(self.prec, ui * &self.pulled_trace(l, i, t)?);
            }
            acc += Complex::with_val(self.prec, &self.b[l] * &tp) * inner;
            tp *= &tau_inv;
        }
        Ok(acc)
    }

    /// (ω/dt)·G₂ at (t, w).
    pub fn integrand(&self, t: &Complex, w: &Complex) -> Result<Complex> {
        Ok(self.omega.eval(t, w) * self.eval(t, w)?)
    }

    /// Σ over the fiber of (ω/dt)·G₂.
    pub fn fiber_integrand(&self, t: &Complex) -> Result<Complex> {
        let ws = cover::simple_fiber_compiled(&self.p, t, self.prec)?;
        let mut acc = numeric::czero(self.prec);
        for w in &ws {
            acc += self.integrand(t, w)?;
        }
        Ok(acc)
    }
}

fn finite(z: Complex, msg: impl FnOnce() -> String) -> Result<Complex> {
    if z.real().is_finite() && z.imag().is_finite() {
        Ok(z)
    } else {
        Err(Error::domain(msg()))
    }
}

/// G₂ at a single point.
pub fn g2_eval(
    model: &CoverModel,
    m: usize,
    t: &Complex,
    w: &Complex,
    prec: u32,
) -> Result<Complex> {
    G2Evaluator::new(model, m, prec)?.eval(t, w)
}

/// Circle |t| = radius discretised by the trapezoidal rule.
#[derive(Clone, Debug, Serialize)]
pub struct ContourSpec {
    #[serde(serialize_with = "ser_rat")]
    pub radius: Rational,
    pub nodes: usize,
    pub precision: u32,
    /// Stop once doubling the node count changes the value by less than this.
    pub tol: f64,
    pub max_nodes: usize,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl ContourSpec {
    pub fn new(radius: Rational, nodes: usize, precision: u32) -> Result<Self> {
        if nodes < 16 || !nodes.is_multiple_of(2) {
            return Err(Error::config(format!(
                "contour needs an even node count >= 16, got {nodes}"
            )));
        }
        if radius.cmp0().is_le() {
            return Err(Error::config("contour radius must be positive"));
        }
        Ok(ContourSpec {
            radius,
            nodes,
            precision,
            tol: 1e-10,
            max_nodes: 1 << 14,
        })
    }

    pub fn for_model(model: &CoverModel, precision: u32) -> Self {
        ContourSpec::new(model.contour_radius.clone(), 64, precision).expect("valid defaults")
    }
}

#[derive(Clone, Debug)]
pub struct ContourResult {
    pub value: Complex,
    pub nodes: usize,
    /// |I_N - I_{N/2}| at the accepted N.
    pub doubling_change: f64,
}

/// (1/2πi)∮ f(t) dt over |t| = radius, doubling N until the self-check passes.
pub fn contour_integral<F>(f: F, spec: &ContourSpec) -> Result<ContourResult>
where
    F: Fn(&Complex) -> Result<Complex> + Sync,
{
    let prec = spec.precision;
    let r = Float::with_val(prec, &spec.radius);
    let node = |k: usize, n: usize| -> Complex {
        let z = numeric::unit_root(n as u32, k as i64, prec);
        Complex::with_val(prec, &z * &r)
    };
    // Σ f(t_k)·t_k over the given node indices.
    let partial = |ks: Vec<usize>, n: usize| -> Result<Complex> {
        let terms: Vec<Complex> = ks
            .into_par_iter()
            .map(|k| {
                let t = node(k, n);
                Ok(f(&t)? * t)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = numeric::czero(prec);
        for x in &terms {
            acc += x;
        }
        Ok(acc)
    };
    let mut n = spec.nodes;
    let mut sum = partial((0..n).collect(), n)?;
    let mut value = Complex::with_val(prec, &sum / n as u32);
    loop {
        let odd = partial((1..2 * n).step_by(2).collect(), 2 * n)?;
        sum += odd;
        n *= 2;
        let next = Complex::with_val(prec, &sum / n as u32);
        let change = cabs_f64(&Complex::with_val(prec, &next - &value));
        let scale = cabs_f64(&next).max(1.0);
        value = next;
        if change < spec.tol * scale {
            return Ok(ContourResult {
                value,
                nodes: n,
                doubling_change: change,
            });
        }
        if 2 * n > spec.max_nodes {
            return Err(Error::PrecisionExhausted {
                msg: format!(
                    "contour quadrature did not settle at {n} nodes (last change {change:.3e})"
                ),
                suggested: 2 * prec,
            });
        }
    }
}

/// Singular point of the integrand ω·G₂ in the t-plane.
#[derive(Clone, Debug, Serialize)]
pub struct Singularity {
    pub t: (f64, f64),
    pub abs: f64,
    pub source: String,
}

/// Candidate singularities of Σ_sheets (ω/dt)·G₂ other than t = 0: branch
/// points, zeros of τ, poles of the family, and inverted poles of the traces.
pub fn integrand_singularities(model: &CoverModel, prec: u32) -> Vec<Singularity> {
    let p = &model.p;
    let mut sources: Vec<(String, Poly)> = vec![
        ("branch point".into(), p.resultant_w(&p.partial_w())),
        ("zero of tau".into(), p.resultant_w(model.tau.num())),
    ];
    let mut inverted: Vec<(String, Poly)> =
        vec![("pole of tau".into(), p.resultant_w(model.tau.den()))];
    for (j, pr) in model.family.pairs.iter().enumerate() {
        sources.push((format!("pole of u_{j}"), p.resultant_w(pr.u.den())));
        sources.push((format!("pole of e_{j}"), p.resultant_w(pr.e.den())));
        inverted.push((format!("pole of e_{j}"), p.resultant_w(pr.e.den())));
    }
    let mut out = Vec::new();
    let mut push = |src: &str, q: &Poly, invert: bool| {
        if q.is_zero() || q.is_constant() {
            return;
        }
        let q = q.shift_down(q.valuation().unwrap_or(0));
        let c: Vec<Complex> = q.coeffs().iter().map(|x| numeric::crat(prec, x)).collect();
        if c.len() < 2 {
            return;
        }
        for z in numeric::poly_roots(&c, prec) {
            let z = if invert {
                Complex::with_val(prec, z.recip_ref())
            } else {
                z
            };
            let (re, im) = numeric::to_pair(&z);
            let s = Singularity {
                t: (re, im),
                abs: re.hypot(im),
                source: if invert {
                    format!("{src} (inverted)")
                } else {
                    src.to_string()
                },
            };
            if !out.iter().any(|o: &Singularity| {
                o.source == s.source && (o.t.0 - re).hypot(o.t.1 - im) < 1e-12
            }) {
                out.push(s);
            }
        }
    };
    for (s, q) in &sources {
        push(s, q, false);
    }
    for (s, q) in &inverted {
        push(s, q, true);
    }
    out.sort_by(|a, b| a.abs.total_cmp(&b.abs).then(a.source.cmp(&b.source)));
    out
}

/// Ensures the only singularity inside |t| ≤ radius is t = 0.
pub fn check_contour(model: &CoverModel, radius: &Rational, prec: u32) -> Result<()> {
    let r = radius.to_f64();
    let sing = integrand_singularities(model, prec);
    if let Some(s) = sing
        .iter()
        .find(|s| s.abs > 1e-12 && s.abs <= r * (1.0 + 1e-3))
    {
        return Err(Error::domain(format!(
            "contour |t| = {r} encloses or touches a singularity at {:.6}{:+.6}i ({}); choose a smaller radius",
            s.t.0, s.t.1, s.source
        )));
    }
    if sing.iter().any(|s| s.abs <= 1e-12) {
        return Err(Error::domain("integrand has an extra singularity at t = 0"));
    }
    Ok(())
}

/// (1/2πi)∮ ω·G₂ over the model's contour, summed over sheets.
pub fn omega_g2_integral(
    model: &CoverModel,
    m: usize,
    spec: &ContourSpec,
) -> Result<ContourResult> {
    check_contour(model, &spec.radius, spec.precision)?;
    let g2 = G2Evaluator::new(model, m, spec.precision)?;
    contour_integral(|t| g2.fiber_integrand(t), spec)
}

/// Exact value of (1/2πi)∮ ω·G₂ as a residue at t = 0.
#[derive(Clone, Debug, Serialize)]
pub struct ResidueDetail {
    pub m: usize,
    #[serde(serialize_with = "ser_rat")]
    pub value: Rational,
    /// Residue of the level-l part Σ_i, before weighting by b_{m,l}.
    #[serde(serialize_with = "ser_rats")]
    pub level_residues: Vec<Rational>,
    /// Highest pole order seen in ψ*(θ Tr(τ^l e_i)).
    pub pole_order: i64,
    /// Series order used for the traced factor.
    pub series_order: usize,
}

fn ser_rats<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

/// Σ_l b_{m,l} Res_{t=0} Σ_i A_{i,l}(t)·Tr((ω/dt)·τ^{-l}·u_i), with
/// A_{i,l} = ψ*(θ Tr(τ^l e_i)), by exact Laurent expansion. Valid over ℚ.
pub fn residue_rational(model: &CoverModel, m: usize) -> Result<ResidueDetail> {
    model.check_invariants()?;
    if !model.tau_nonvanishing_at_zero() {
        return Err(Error::domain("tau vanishes on the fiber over t = 0"));
    }
    let pulled: Vec<Vec<Laurent>> = euler_level_traces(model, m)?
        .iter()
        .map(|row| {
            row.iter()
                .map(|f| Laurent::from_ratfunc(&cover::inversion_pullback(f), 1))
                .collect()
        })
        .collect();
    let pole_order = pulled
        .iter()
        .flatten()
        .map(|a| -a.valuation().min(0))
        .max()
        .unwrap_or(0);
    // A has exponents ≥ -pole_order; the traced factor is needed through
    // t^pole_order to fix every coefficient up to t^0.
    let order = pole_order as usize + 1;
    let alg = QuotientAlgebra::new(TruncatedSeries { order }, &model.p);
    let conv = |f: &BiRat, what: &str| {
        alg.from_birat(f)
            .ok_or_else(|| Error::domain(format!("{what} is not regular on the fiber over t = 0")))
    };
    let omega = conv(&model.omega_over_dt(), "omega/dt")?;
    let tau = conv(&model.tau, "tau")?;
    let tau_inv = alg
        .inv(&tau)
        .ok_or_else(|| Error::domain("tau is not invertible near t = 0"))?;
    let us = model
        .family
        .pairs
        .iter()
        .map(|p| conv(&p.u, "u_i"))
        .collect::<Result<Vec<_>>>()?;
    let b = split_coefficients(m).values;
    let mut level_residues = Vec::with_capacity(m + 1);
    let mut total = Laurent::zero(1);
    let mut weight = omega;
    for l in 0..=m {
        let mut level = Laurent::zero(1);
        for (i, u) in us.iter().enumerate() {
            let c = alg.trace(&alg.mul(&weight, u));
            let c = Laurent::from_power_series(c, order);
            level = level.add(&pulled[l][i].mul(&c));
        }
        if level.end() < 1 {
            return Err(Error::InvariantViolation(format!(
                "expansion at level {l} lost precision"
            )));
        }
        if level.valuation() < -pole_order {
            return Err(Error::InvariantViolation(format!(
                "pole of order {} at level {l} exceeds the expected {pole_order}",
                -level.valuation()
            )));
        }
        level_residues.push(level.coeff(-1).unwrap());
        total = total.add(&level.scale(&b[l]));
        weight = alg.mul(&weight, &tau_inv);
    }
    Ok(ResidueDetail {
        m,
        value: total.coeff(-1).unwrap(),
        level_residues,
        pole_order,
        series_order: order,
    })
}

/// Why an exact residue is not guaranteed integral, if it is not.
pub fn integrality_obstruction(model: &CoverModel) -> Result<Option<String>> {
    if !model.is_integral() {
        return Ok(Some("model is not defined over Z".into()));
    }
    let vp = cover::vanishing_polynomial(model)?;
    if !vp.unit_leading {
        return Ok(Some(format!(
            "vanishing polynomial q = {} has non-unit leading coefficient {}",
            vp.q, vp.leading
        )));
    }
    Ok(None)
}

/// C(2m,m)·(1/2πi)∮ ω·G₂ computed exactly; must be an integer.
pub fn exact_residue(model: &CoverModel, m: usize) -> Result<Integer> {
    if let Some(why) = integrality_obstruction(model)? {
        return Err(Error::IntegralityRefused(why));
    }
    let r = residue_rational(model, m)?;
    let scaled = Rational::from(&r.value * binom(2 * m as u32, m as u32)?);
    if *scaled.denom() != 1 {
        return Err(Error::InvariantViolation(format!(
            "C(2m,m)-scaled residue {scaled} of model {} at m = {m} is not an integer",
            model.id
        )));
    }
    Ok(scaled.numer().clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralityReport {
    pub model_id: String,
    pub m: usize,
    pub exact: Option<String>,
    pub refused: Option<String>,
    pub numeric: (f64, f64),
    pub distance: Option<f64>,
    pub nodes: usize,
    pub pass: bool,
}

pub const INTEGRALITY_TOL: f64 = 1e-8;

/// Exact integer against C(2m,m)·(quadrature). A refused exact path still
/// reports the numeric value.
pub fn integrality_check(
    model: &CoverModel,
    m: usize,
    spec: &ContourSpec,
) -> Result<IntegralityReport> {
    let quad = omega_g2_integral(model, m, spec)?;
    let c = binom(2 * m as u32, m as u32)?;
    let numeric = Complex::with_val(spec.precision, &quad.value * &c);
    let (exact, refused) = match exact_residue(model, m) {
        Ok(v) => (Some(v), None),
        Err(Error::IntegralityRefused(why)) => (None, Some(why)),
        Err(e) => return Err(e),
    };
    let distance = exact.as_ref().map(|v| {
        let d = Complex::with_val(spec.precision, &numeric - v);
        cabs_f64(&d)
    });
    Ok(IntegralityReport {
        model_id: model.id.clone(),
        m,
        pass: distance.is_some_and(|d| d < INTEGRALITY_TOL),
        exact: exact.map(|v| v.to_string()),
        refused,
        numeric: numeric::to_pair(&numeric),
        distance,
        nodes: quad.nodes,
    })
}

/// Σ_j β_j² with β_j = (ω/dz)(x_j) over the fiber of z = 0, computed as the
/// exact trace of (ω/dz)² at z = 0.
pub fn beta_sum_sq(model: &CoverModel) -> Result<Rational> {
    let w = model.omega_over_dt();
    let tr = cover::trace_exact(model, &(&w * &w))?;
    tr.eval(&Rational::new())
        .ok_or_else(|| Error::domain("omega has a pole on the fiber over z = 0"))
}

/// The model in the t-coordinate t = s·z.
pub fn scaled_model(base: &CoverModel, s: &Rational) -> CoverModel {
    let a = Rational::from(s.recip_ref());
    let tau = base.tau.scale_t(&a);
    let fam = base.family.scale_t(&a);
    CoverModel::new(format!("{}@s={s}", base.id), base.p.scale_t(&a), tau, fam)
        .expect("scaling keeps P monic")
        .with_scale(s.clone())
        .with_n1(base.n1)
        .with_contour_radius(base.contour_radius.clone())
}

/// Base model of the scale sweep: w² = 1 + z, τ = w, ω = d(z(2 + w)).
pub fn lemma24_base() -> CoverModel {
    let g = BiRat::from_poly(crate::algebra::BiPoly::from_nested_ints(&[
        &[0, 2],
        &[0, 1],
    ]));
    CoverModel::canonical(2, Poly::from_ints(&[1, 1]), g)
        .expect("monic")
        .with_contour_radius(Rational::from(1))
}

#[derive(Clone, Debug)]
pub struct Lemma24Options {
    pub scales: Vec<u64>,
    pub m_at_scales: usize,
    pub scale_for_m: u64,
    pub m_list: Vec<usize>,
    pub rho2_hat: f64,
    /// Quadrature cross-check of one cell, at (smallest scale, m_at_scales).
    pub quadrature_check: bool,
    pub precision: u32,
}

impl Default for Lemma24Options {
    fn default() -> Self {
        Lemma24Options {
            scales: vec![100, 200, 400, 800],
            m_at_scales: 24,
            scale_for_m: 1000,
            m_list: vec![2, 4, 6, 8, 10, 12],
            rho2_hat: 0.52,
            quadrature_check: true,
            precision: 128,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma24Cell {
    pub s: u64,
    pub m: usize,
    pub integral: String,
    pub target: String,
    pub err: f64,
    pub bound: f64,
    pub scale_condition: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureCrossCheck {
    pub s: u64,
    pub m: usize,
    pub exact: f64,
    pub numeric: (f64, f64),
    pub distance: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma24Report {
    pub model_id: String,
    pub beta_sum_sq: String,
    pub omega_norm_sq: f64,
    pub rho2_hat: f64,
    pub scale_rows: Vec<Lemma24Cell>,
    pub m_rows: Vec<Lemma24Cell>,
    pub order_in_s: f64,
    pub order_ok: bool,
    pub rate_in_m: f64,
    pub rate_ok: bool,
    pub a10_hat: f64,
    pub a11_hat: usize,
    pub quadrature: Option<QuadratureCrossCheck>,
    pub pass: bool,
}

pub const ORDER_MIN: f64 = 2.8;
pub const RATE_SLACK: f64 = 1.05;

/// Error of the contour integral against Σβ²/s² over a scale sweep and an
/// m sweep. Integrals are exact residues (the contour |t| = radius encloses
/// only t = 0, checked per scale).
pub fn lemma24_experiment(base: &CoverModel, opts: &Lemma24Options) -> Result<Lemma24Report> {
    let beta = beta_sum_sq(base)?;
    // ‖ω‖² is taken as Σ|β_j|², equal to Σβ_j² for real β.
    let omega_norm_sq = beta.to_f64().abs();
    let cell = |s: u64, m: usize| -> Result<(Lemma24Cell, Rational)> {
        let sr = Rational::from(s);
        let model = scaled_model(base, &sr);
        model
            .check_invariants()
            .map_err(|e| Error::Attestation(format!("scale s = {s}: {e}")))?;
        check_contour(&model, &model.contour_radius, opts.precision)
            .map_err(|e| Error::Attestation(format!("scale s = {s}: {e}")))?;
        let r = residue_rational(&model, m)?.value;
        let target: Rational = (&beta / Rational::from(&sr * &sr)).into();
        let err = Rational::from(&r - &target).abs().to_f64();
        let sf = s as f64;
        Ok((
            Lemma24Cell {
                s,
                m,
                integral: r.to_string(),
                target: target.to_string(),
                err,
                bound: 0.0,
                scale_condition: true,
                pass: true,
            },
            r,
        ))
        .map(|(mut c, r)| {
            c.bound = opts.rho2_hat.powi(m as i32) / (sf * sf) * omega_norm_sq;
            (c, r)
        })
    };
    let mut scale_rows = opts
        .scales
        .par_iter()
        .map(|&s| cell(s, opts.m_at_scales).map(|c| c.0))
        .collect::<Result<Vec<_>>>()?;
    let mut m_rows = opts
        .m_list
        .par_iter()
        .map(|&m| cell(opts.scale_for_m, m).map(|c| c.0))
        .collect::<Result<Vec<_>>>()?;

    // â₁₀ from the large-m scale sweep, then â₁₁ from the m sweep.
    let excess = |c: &Lemma24Cell| -> f64 {
        let s = c.s as f64;
        ((c.err - c.bound).max(0.0)) * s.powi(3) / (c.m.max(1) as f64 * omega_norm_sq)
    };
    let a10 = scale_rows.iter().map(excess).fold(0.0, f64::max);
    let mut a11 = 0;
    for rows in [&mut scale_rows, &mut m_rows] {
        for c in rows.iter_mut() {
            let s = c.s as f64;
            c.bound += a10 * c.m as f64 / s.powi(3) * omega_norm_sq;
            c.pass = c.err <= c.bound * (1.0 + 1e-12);
            c.scale_condition = s > a10 * c.m as f64;
        }
    }
    for c in &m_rows {
        if !c.pass {
            a11 = a11.max(c.m);
        }
    }
    let xs: Vec<f64> = scale_rows.iter().map(|c| (c.s as f64).ln()).collect();
    let ys: Vec<f64> = scale_rows.iter().map(|c| c.err.ln()).collect();
    let order_in_s = -numeric::ls_slope(&xs, &ys);
    let xm: Vec<f64> = m_rows.iter().map(|c| c.m as f64).collect();
    let ym: Vec<f64> = m_rows.iter().map(|c| c.err.ln()).collect();
    let rate_in_m = numeric::ls_slope(&xm, &ym).exp();
    let quadrature = if opts.quadrature_check {
        let s = *opts
            .scales
            .first()
            .ok_or_else(|| Error::config("empty scale list"))?;
        let model = scaled_model(base, &Rational::from(s));
        let spec = ContourSpec::new(model.contour_radius.clone(), 64, opts.precision)?;
        let q = omega_g2_integral(&model, opts.m_at_scales, &spec)?;
        let exact = Rational::from_str_radix(&scale_rows[0].integral, 10)
            .map_err(|e| Error::InvariantViolation(e.to_string()))?;
        let d = Complex::with_val(opts.precision, &q.value - &exact);
        Some(QuadratureCrossCheck {
            s,
            m: opts.m_at_scales,
            exact: exact.to_f64(),
            numeric: numeric::to_pair(&q.value),
            distance: cabs_f64(&d),
            nodes: q.nodes,
        })
    } else {
        None
    };
    let order_ok = order_in_s >= ORDER_MIN;
    let rate_ok = rate_in_m <= opts.rho2_hat * RATE_SLACK;
    Ok(Lemma24Report {
        model_id: base.id.clone(),
        beta_sum_sq: beta.to_string(),
        omega_norm_sq,
        rho2_hat: opts.rho2_hat,
        pass: order_ok
            && rate_ok
            && quadrature
                .as_ref()
                .is_none_or(|q| q.distance < INTEGRALITY_TOL),
        scale_rows,
        m_rows,
        order_in_s,
        order_ok,
        rate_in_m,
        rate_ok,
        a10_hat: a10,
        a11_hat: a11,
        quadrature,
    })
}

/// Inputs of the height bound, with F = ℚ unless `degree` says otherwise.
#[derive(Clone, Debug, Serialize)]
pub struct HeightInputs {
    pub degree: u32,
    pub log_norm_xi1: f64,
    /// Σ_j β_{j,σ}² per embedding, as (re, im).
    pub beta_sums: Vec<(f64, f64)>,
    pub omega_norm: f64,
    pub a9: f64,
    /// Defaults to m·ln 2.
    pub a7: Option<f64>,
    pub m: usize,
}

impl HeightInputs {
    /// One input per scale-sweep row of a scale-sweep report.
    pub fn from_lemma24(report: &Lemma24Report, a9: f64) -> Vec<HeightInputs> {
        let beta: f64 =
            Rational::from_str_radix(&report.beta_sum_sq, 10).map_or(f64::NAN, |r| r.to_f64());
        report
            .scale_rows
            .iter()
            .map(|c| HeightInputs {
                degree: 1,
                log_norm_xi1: (c.s as f64).ln(),
                beta_sums: vec![(beta, 0.0)],
                omega_norm: report.omega_norm_sq.sqrt(),
                a9,
                a7: None,
                m: c.m,
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightReport {
    pub inputs: HeightInputs,
    pub hypothesis_ok: bool,
    pub a7: f64,
    pub bound_value: f64,
    pub margin: f64,
    pub central_binomial_ok: bool,
    pub pivot_lhs: f64,
    pub pivot_rhs: String,
    pub pivot_ok: bool,
    pub pass: bool,
}

/// C(2m,m) < 4^m, exactly.
pub fn central_binomial_below_power(m: usize) -> bool {
    let c = binom(2 * m as u32, m as u32).expect("in range");
    c < Integer::from(4).pow(m as u32)
}

/// First m in 1..=m_max where C(2m,m) < 4^m fails, if any.
pub fn central_binomial_chain(m_max: usize) -> Option<usize> {
    let mut c = Integer::from(1);
    let mut p = Integer::from(1);
    for m in 1..=m_max {
        // C(2m,m) = C(2m-2,m-1)·(2m)(2m-1)/m².
        c *= (2 * m) as u64 * (2 * m - 1) as u64;
        c /= (m * m) as u64;
        p <<= 2;
        if c >= p {
            return Some(m);
        }
    }
    None
}

/// Hypothesis, conclusion and proof-chain checks of the height bound.
pub fn height_bound(inputs: &HeightInputs) -> Result<HeightReport> {
    if inputs.m < 1 || inputs.degree < 1 || inputs.beta_sums.is_empty() {
        return Err(Error::config(
            "height inputs need m >= 1, degree >= 1 and at least one embedding",
        ));
    }
    if !(inputs.omega_norm > 0.0 && inputs.a9 > 0.0) {
        return Err(Error::config("omega_norm and a9 must be positive"));
    }
    let prec = 256;
    let abs: Vec<f64> = inputs.beta_sums.iter().map(|(a, b)| a.hypot(*b)).collect();
    let w2 = inputs.omega_norm * inputs.omega_norm;
    let hypothesis_ok = abs.iter().all(|&x| x > inputs.a9 * w2);
    let total: f64 = abs.iter().sum();
    let deg = inputs.degree as f64;
    let a7 = inputs
        .a7
        .unwrap_or(inputs.m as f64 * std::f64::consts::LN_2);
    let bound_value = a7 + 0.5 * (2.0 * total / deg).ln();
    let margin = bound_value - inputs.log_norm_xi1;
    // Pivot: 2Σ|Σβ²| / ([F:ℚ]·‖ξ₁‖²) > m!m!/(2m)!.
    let lhs = Float::with_val(prec, 2.0 * total)
        / Float::with_val(prec, deg)
        / Float::with_val(prec, 2.0 * inputs.log_norm_xi1).exp();
    let rhs = Rational::from((
        Integer::from(1),
        binom(2 * inputs.m as u32, inputs.m as u32)?,
    ));
    let pivot_ok = lhs > Float::with_val(prec, &rhs);
    let central_binomial_ok = central_binomial_below_power(inputs.m);
    Ok(HeightReport {
        inputs: inputs.clone(),
        hypothesis_ok,
        a7,
        bound_value,
        margin,
        central_binomial_ok,
        pivot_lhs: lhs.to_f64(),
        pivot_rhs: rhs.to_string(),
        pivot_ok,
        pass: hypothesis_ok && central_binomial_ok && pivot_ok && margin > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::corpus_model;

    const P: u32 = 128;

    #[test]
    fn contour_of_basic_functions() {
        let spec = ContourSpec::new(Rational::from(1), 16, P).unwrap();
        let r = contour_integral(|t| Ok(Complex::with_val(P, t.recip_ref())), &spec).unwrap();
        assert!(cabs_f64(&(r.value - numeric::cone(P))) < 1e-30);
        for k in 0..4 {
            let r = contour_integral(|t| Ok(numeric::cpow(t, k)), &spec).unwrap();
            assert!(cabs_f64(&r.value) < 1e-30);
        }
        assert!(ContourSpec::new(Rational::from(1), 15, P).is_err());
    }

    #[test]
    fn canonical_m0_residue_by_hand() {
        // G₂ = 4/t; Res of 4/t·Tr(ω/dt) = 4·Tr(2 + w) at t = 0 = 16.
        let m = corpus_model("canonical-d2").unwrap();
        assert_eq!(exact_residue(&m, 0).unwrap(), 16);
    }

    #[test]
    fn nonunit_q_refused() {
        let m = corpus_model("nonunit-q").unwrap();
        assert!(matches!(
            exact_residue(&m, 2),
            Err(Error::IntegralityRefused(_))
        ));
    }

    #[test]
    fn binomial_chain() {
        assert_eq!(central_binomial_chain(1000), None);
        assert!(!central_binomial_below_power(0));
    }
}
