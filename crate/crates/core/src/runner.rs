//! Configuration-driven experiment runner.
//!
//! A config is a flat TOML document:
//!
//! ```toml
//! command = "integrality"
//! model = "corpus:canonical-d2"   # a path, "corpus:<id>", or "corpus"
//! m_list = [0, 1, 2, 3, 4, 5, 6]
//! seed = 7
//! ```
//!
//! Keys that a command does not use are ignored by it; unknown keys are a
//! configuration error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::antideriv::{residual_suite, ResidualSuiteOptions, A5_CAP, LIMIT_TOL};
use crate::arithcheck::{
    self, central_binomial_chain, check_contour, height_bound, integrality_check,
    integrality_obstruction, integrand_singularities, lemma24_base, lemma24_experiment,
    omega_g2_integral, residue_rational, ContourSpec, HeightInputs, Lemma24Options, Lemma24Report,
    INTEGRALITY_TOL,
};
use crate::cover::{
    self, attest_conditions, probe_function, trace_equivalence, AttestOptions, CoverModel,
};
use crate::error::{Error, Result};
use crate::exactkernel::{coefficient_rows, split_coefficients};
use crate::model::{corpus, corpus_model, load_model, toml_error};
use crate::plocal::{
    center_check, neardiag_lipschitz_check, offdiag_decay_scan, AnchorSet, KernelParams,
};
use crate::report::{emit_report, emit_timing, fmt_f64, ExperimentReport, Format, Table, Verdict};

pub const PRECISION_ENV: &str = "ANTIDER_PRECISION";
pub const DEFAULT_PRECISION: u32 = 256;

pub const COMMANDS: &[&str] = &[
    "coeffs",
    "kernel",
    "cover-check",
    "antideriv",
    "contour",
    "integrality",
    "lemma24",
    "height",
    "sweep",
];

/// Commands that run once per model and can be swept over several.
const PER_MODEL: &[&str] = &["cover-check", "antideriv", "contour", "integrality"];

/// m = 1 anchor-centre check tolerance.
pub const CENTER_TOL: f64 = 1e-20;
/// Relative ρ̂₁ spread allowed between the two largest orders.
pub const TAIL_TOL: f64 = 0.05;

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub model: Option<String>,
    pub models: Option<Vec<String>>,
    pub sweep_command: Option<String>,
    pub m_list: Option<Vec<usize>>,
    pub m: Option<usize>,
    pub n1: Option<u32>,
    pub g: Option<u32>,
    pub r1: Option<f64>,
    pub precision: Option<u32>,
    pub nodes: Option<usize>,
    pub seed: Option<u64>,
    pub scale_list: Option<Vec<u64>>,
    pub scale_for_m: Option<u64>,
    pub rho2_hat: Option<f64>,
    pub samples: Option<usize>,
    pub trials: Option<usize>,
    pub lipschitz_m: Option<Vec<usize>>,
    pub points: Option<usize>,
    pub radius: Option<f64>,
    pub degree: Option<u32>,
    pub log_norm_xi1: Option<f64>,
    pub beta_sums_re: Option<Vec<f64>>,
    pub beta_sums_im: Option<Vec<f64>>,
    pub omega_norm: Option<f64>,
    pub a9: Option<f64>,
    pub a7: Option<f64>,
    pub m_max: Option<usize>,
    pub formats: Option<Vec<String>>,
    #[serde(skip_serializing)]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| toml_error(src, &e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&src)
    }

    pub fn precision(&self) -> u32 {
        self.precision.unwrap_or_else(default_precision)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn command(&self) -> Result<&str> {
        let c = self
            .command
            .as_deref()
            .ok_or_else(|| Error::config("no command given"))?;
        if !COMMANDS.contains(&c) {
            return Err(Error::config(format!(
                "unknown command {c:?}; expected one of {COMMANDS:?}"
            )));
        }
        Ok(c)
    }

    pub fn formats(&self) -> Result<Vec<Format>> {
        match &self.formats {
            None => Ok(vec![Format::Json, Format::Csv]),
            Some(v) => v.iter().map(|s| s.parse()).collect(),
        }
    }

    /// Fills seed and precision so the echo records what was used.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.seed = Some(self.seed());
        c.precision = Some(self.precision());
        c
    }

    fn validate(&self) -> Result<()> {
        let p = self.precision();
        if !(64..=1 << 16).contains(&p) {
            return Err(Error::config(format!("precision {p} outside [64, 65536]")));
        }
        if let Some(r1) = self.r1 {
            if !(r1 > 0.0 && r1 < 1.0) {
                return Err(Error::config(format!("r1 = {r1} must lie in (0, 1)")));
            }
        }
        self.formats()?;
        Ok(())
    }
}

/// `ANTIDER_PRECISION`, or 256 bits.
pub fn default_precision() -> u32 {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_PRECISION)
}

/// Models named by `model` / `models`. Relative paths resolve against `base`.
pub fn resolve_models(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<CoverModel>> {
    let names: Vec<String> = match (&cfg.model, &cfg.models) {
        (Some(m), None) => vec![m.clone()],
        (None, Some(ms)) => ms.clone(),
        (Some(_), Some(_)) => return Err(Error::config("give either model or models, not both")),
        (None, None) => return Err(Error::config("this command needs a model")),
    };
    let mut out = Vec::new();
    for n in names {
        if n == "corpus" {
            out.extend(corpus());
        } else if let Some(id) = n.strip_prefix("corpus:") {
            out.push(corpus_model(id)?);
        } else {
            let p = PathBuf::from(&n);
            out.push(load_model(&if p.is_absolute() { p } else { base.join(p) })?);
        }
    }
    Ok(out)
}

/// The report of a run and the error that stopped it, if any.
pub struct Outcome {
    pub report: ExperimentReport,
    pub error: Option<Error>,
}

impl Outcome {
    /// 0 pass, 1 verdict failure, 2 configuration error, 3 precision exhausted.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code(),
            None if self.report.pass => 0,
            None => 1,
        }
    }
}

/// Runs the configured command. Errors are recorded in the report together
/// with whatever results were gathered before them.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Outcome {
    let cfg = cfg.resolved();
    let command = cfg.command.clone().unwrap_or_default();
    let echo = serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null);
    let mut report = ExperimentReport::new(&command, echo);
    let error = cfg
        .validate()
        .and_then(|_| dispatch(&cfg, base, &mut report))
        .err();
    if let Some(e) = &error {
        report.error = Some(e.to_string());
    }
    report.finish();
    Outcome { report, error }
}

fn dispatch(cfg: &ExperimentConfig, base: &Path, report: &mut ExperimentReport) -> Result<()> {
    match cfg.command()? {
        "coeffs" => run_coeffs(cfg, report),
        "kernel" => run_kernel(cfg, report),
        "lemma24" => run_lemma24(cfg, base, report).map(|_| ()),
        "height" => run_height(cfg, base, report),
        "sweep" => {
            let sub = cfg
                .sweep_command
                .as_deref()
                .ok_or_else(|| Error::config("sweep needs sweep_command"))?;
            if !PER_MODEL.contains(&sub) {
                return Err(Error::config(format!(
                    "sweep_command must be one of {PER_MODEL:?}"
                )));
            }
            let mut cfg = cfg.clone();
            if cfg.model.is_none() && cfg.models.is_none() {
                cfg.model = Some("corpus".into());
            }
            per_model(&cfg, base, sub, report)
        }
        c => per_model(cfg, base, c, report),
    }
}

/// Runs a per-model command over all models in parallel and merges the
/// results in input order. The first error is returned after merging.
fn per_model(
    cfg: &ExperimentConfig,
    base: &Path,
    command: &str,
    report: &mut ExperimentReport,
) -> Result<()> {
    let models = resolve_models(cfg, base)?;
    let parts: Vec<(String, ExperimentReport, Option<Error>)> = models
        .par_iter()
        .map(|model| {
            let mut part = ExperimentReport::new(command, serde_json::Value::Null);
            let res = match command {
                "cover-check" => run_cover_check(cfg, model, &mut part),
                "antideriv" => run_antideriv(cfg, model, &mut part),
                "contour" => run_contour(cfg, model, &mut part),
                "integrality" => run_integrality(cfg, model, &mut part),
                _ => unreachable!("per-model commands are checked by dispatch"),
            };
            (model.id.clone(), part, res.err())
        })
        .collect();
    let mut first = None;
    for (id, part, err) in parts {
        merge(report, &id, part);
        if let Some(e) = err {
            report.warnings.push(format!("{id}: {e}"));
            first.get_or_insert(e);
        }
    }
    first.map_or(Ok(()), Err)
}

fn merge(into: &mut ExperimentReport, id: &str, part: ExperimentReport) {
    for mut v in part.verdicts {
        v.name = format!("{id}/{}", v.name);
        into.verdicts.push(v);
    }
    for (k, f) in part.fitted {
        into.fitted.insert(format!("{id}/{k}"), f);
    }
    into.warnings
        .extend(part.warnings.into_iter().map(|w| format!("{id}: {w}")));
    if !part.body.is_empty() {
        into.body.insert(
            id.to_string(),
            serde_json::to_value(&part.body).expect("json values"),
        );
    }
    for t in part.tables {
        match into.tables.iter_mut().find(|x| x.name == t.name) {
            Some(x) => x.rows.extend(t.rows),
            None => into.tables.push(t),
        }
    }
}

fn failing<T: std::fmt::Display>(items: impl IntoIterator<Item = (T, bool)>) -> (bool, String) {
    let bad: Vec<String> = items
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(x, _)| x.to_string())
        .collect();
    if bad.is_empty() {
        (true, "all hold".into())
    } else {
        (false, format!("fails at {}", bad.join(", ")))
    }
}

fn run_coeffs(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let ms = cfg.m_list.clone().unwrap_or_else(|| (1..=64).collect());
    let rows: Vec<_> = ms
        .par_iter()
        .map(|&m| {
            let c = split_coefficients(m);
            (c.verdict(), coefficient_rows(&c))
        })
        .collect();
    let verdicts: Vec<_> = rows.iter().map(|(v, _)| v.clone()).collect();
    let checks: [(&str, fn(&crate::exactkernel::CoefficientVerdict) -> bool); 5] = [
        ("sum_is_one", |v| v.sum_is_one),
        ("symmetric", |v| v.symmetric),
        ("integral_scaled", |v| v.integral_scaled),
        ("halving_bound", |v| v.halving_bound),
        ("upper_regime_bound", |v| v.upper_regime_bound),
    ];
    for (name, f) in checks {
        let (ok, detail) = failing(verdicts.iter().map(|v| (v.m, f(v))));
        report.verdict(Verdict::new(
            name,
            "exactkernel::SplitCoefficients::verdict",
            ok,
            detail,
        ));
    }
    let mut t = Table::new(
        "coeffs",
        "split coefficients b_{m,l} = numerator/denominator",
        &["m", "l", "numerator", "denominator"],
    );
    for (_, rs) in rows {
        for (m, l, n, d) in rs {
            t.push(vec![m.to_string(), l.to_string(), n, d]);
        }
    }
    report.put("per_m", &verdicts);
    report.table(t);
    Ok(())
}

fn run_kernel(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let prec = cfg.precision();
    let seed = cfg.seed();
    let anchors = AnchorSet::new(
        cfg.n1.unwrap_or(37),
        cfg.g.unwrap_or(2),
        cfg.r1.unwrap_or(0.02),
        prec,
    )?;
    report.warnings.extend(anchors.warnings());
    let m_list = cfg.m_list.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
    let scan = offdiag_decay_scan(&anchors, &m_list, cfg.samples.unwrap_or(8), seed)?;
    let (ok, detail) = failing(scan.per_m.iter().map(|r| (r.m, r.sup < 1.0)));
    report.verdict(Verdict::new(
        "offdiag_sup_below_one",
        "plocal::offdiag_decay_scan",
        ok,
        detail,
    ));
    let (ok, detail) = failing(scan.rate_checks.iter().map(|r| (r.m, r.ok)));
    report.verdict(Verdict::new(
        "rate_consistency",
        "plocal::offdiag_decay_scan",
        ok,
        detail,
    ));
    if let Some(v) = scan.tail_variation() {
        report.verdict(Verdict::new(
            "tail_variation",
            "plocal::OffdiagReport::tail_variation",
            v < TAIL_TOL,
            format!("{v:.4e} (limit {TAIL_TOL})"),
        ));
    }
    let center = center_check(&anchors);
    report.verdict(Verdict::new(
        "center_m1",
        "plocal::center_check",
        center.abs_error < CENTER_TOL,
        format!("|error| = {:.3e} at {prec} bits", center.abs_error),
    ));
    report.fit(
        "rho1_hat",
        scan.rho1_hat,
        "max over m of sup^(1/m)",
        scan.per_m.iter().map(|r| r.sup_pow_inv_m).collect(),
    );
    let trials = cfg.trials.unwrap_or(10_000);
    let mut lips = Vec::new();
    for &m in cfg.lipschitz_m.as_deref().unwrap_or(&[8, 32]) {
        let params = KernelParams::new(m, anchors.clone(), prec)?;
        let l = neardiag_lipschitz_check(&params, trials, seed.wrapping_add(m as u64));
        let detail = if l.vacuous {
            "no eligible pairs (vacuous)".to_string()
        } else {
            format!(
                "{} violations in {} pairs, max ratio {:.4}",
                l.violations.len(),
                l.trials,
                l.max_ratio
            )
        };
        report.verdict(Verdict::new(
            format!("lipschitz_m{m}"),
            "plocal::neardiag_lipschitz_check",
            l.violations.is_empty(),
            detail,
        ));
        lips.push(l);
    }
    let mut grid = scan.grid.clone();
    grid.sort_by_key(|g| (g.0, g.1, g.2));
    let mut t = Table::new(
        "kernel_grid",
        "max |f| over samples of disks i and j",
        &["m", "i", "j", "value"],
    );
    for (m, i, j, v) in grid {
        t.push(vec![
            m.to_string(),
            i.to_string(),
            j.to_string(),
            fmt_f64(v),
        ]);
    }
    report.table(t);
    let mut t = Table::new(
        "kernel_scan",
        "cross-disk sup of |f| per order",
        &["m", "sup", "sup_pow_inv_m"],
    );
    for r in &scan.per_m {
        t.push(vec![
            r.m.to_string(),
            fmt_f64(r.sup),
            fmt_f64(r.sup_pow_inv_m),
        ]);
    }
    report.table(t);
    report.put("scan", &scan);
    report.put("center_m1", &center);
    report.put("lipschitz", &lips);
    Ok(())
}

fn run_cover_check(
    cfg: &ExperimentConfig,
    model: &CoverModel,
    report: &mut ExperimentReport,
) -> Result<()> {
    let prec = cfg.precision();
    let seed = cfg.seed();
    model.check_invariants()?;
    report.verdict(Verdict::new(
        "invariants",
        "cover::CoverModel::check_invariants",
        true,
        "monic, family null",
    ));
    match cover::vanishing_polynomial(model) {
        Ok(q) => report.put("vanishing_polynomial", &q),
        Err(e) => report.warnings.push(e.to_string()),
    }
    let anchors = AnchorSet::new(model.n1, cfg.g.unwrap_or(2), cfg.r1.unwrap_or(0.02), prec)?;
    let opts = AttestOptions {
        seed,
        precision: prec.min(256),
        ..AttestOptions::default()
    };
    let att = attest_conditions(model, &anchors, &opts)?;
    report.verdict(Verdict::new(
        "attestation",
        "cover::attest_conditions",
        att.unramified && att.anchors_distinct,
        format!(
            "unramified {}, anchors distinct {}",
            att.unramified, att.anchors_distinct
        ),
    ));
    report.fit(
        "a2_hat",
        att.a2_hat,
        "s * max |tau - anchor| over samples near t = 0",
        att.assignments.iter().map(|a| a.distance).collect(),
    );
    report.fit(
        "a1_hat",
        att.a1_hat,
        "min |t|/s outside the fiber sets",
        vec![att.a1_hat],
    );
    report.warnings.extend(att.warnings.iter().cloned());
    let f = probe_function(model);
    let tr = trace_equivalence(
        model,
        &f,
        cfg.points.unwrap_or(100),
        cfg.radius.unwrap_or(1.0),
        seed,
        prec,
    )?;
    report.verdict(Verdict::new(
        "trace_agreement",
        "cover::trace_equivalence",
        tr.pass,
        format!("max rel err {:.3e} (tol {:.1e})", tr.max_rel_err, tr.tol),
    ));
    let mut t = Table::new(
        "traces",
        "exact against numerical traces at random unramified points",
        &["model", "points", "max_rel_err", "tol"],
    );
    t.push(vec![
        model.id.clone(),
        tr.points.to_string(),
        fmt_f64(tr.max_rel_err),
        fmt_f64(tr.tol),
    ]);
    report.table(t);
    report.put("attestation", &att);
    report.put("traces", &tr);
    Ok(())
}

fn run_antideriv(
    cfg: &ExperimentConfig,
    model: &CoverModel,
    report: &mut ExperimentReport,
) -> Result<()> {
    let d = ResidualSuiteOptions::default();
    let opts = ResidualSuiteOptions {
        m: cfg.m,
        r1: cfg.r1.unwrap_or(d.r1),
        scan_samples: cfg.samples.unwrap_or(d.scan_samples),
        seed: cfg.seed(),
        precision: cfg.precision(),
        ..d
    };
    let r = residual_suite(model, &opts)?;
    report.verdict(Verdict::new(
        "residual_bounded",
        "antideriv::antiderivative_residual",
        r.a5_hat.is_finite() && r.a5_hat <= A5_CAP,
        format!("a5_hat {:.4} (cap {A5_CAP}) at m = {}", r.a5_hat, r.m),
    ));
    report.verdict(Verdict::new(
        "leading_slope",
        "antideriv::antiderivative_residual",
        r.slope.slope_ok,
        format!(
            "slope defect {:.3e} at |z'| = {:.0e}",
            r.slope.slope_defect, r.slope.abs_z
        ),
    ));
    report.verdict(Verdict::new(
        "limit",
        "antideriv::antiderivative_residual",
        r.limit_ok,
        format!(
            "limit defect {:.3e} (tol {LIMIT_TOL})",
            r.slope.limit_defect
        ),
    ));
    report.fit(
        "rho2_hat",
        r.rho2_hat,
        "max over m of the anchor-scan sup^(1/m) at n1",
        r.rho_samples.iter().map(|s| s.1).collect(),
    );
    report.fit(
        "a5_hat",
        r.a5_hat,
        "max normalized residual over the grid",
        r.per_radius
            .iter()
            .flat_map(|p| p.rows.iter().map(|x| x.normalized))
            .collect(),
    );
    let mut t = Table::new(
        "residuals",
        "|G_x(z') - (omega/dz)(x) z'| against its bound",
        &[
            "model",
            "abs_x",
            "abs_z",
            "m",
            "residual",
            "bound",
            "normalized",
        ],
    );
    for p in &r.per_radius {
        let ax = p.x.0.hypot(p.x.1);
        for row in &p.rows {
            t.push(vec![
                model.id.clone(),
                fmt_f64(ax),
                fmt_f64(row.abs_z),
                p.m.to_string(),
                fmt_f64(row.residual),
                fmt_f64(row.bound),
                fmt_f64(row.normalized),
            ]);
        }
    }
    report.table(t);
    report.put("suite", &r);
    Ok(())
}

fn contour_spec(cfg: &ExperimentConfig, model: &CoverModel) -> Result<ContourSpec> {
    let radius = match cfg.radius {
        Some(r) => Rational::from_f64(r)
            .ok_or_else(|| Error::config(format!("radius {r} is not finite")))?,
        None => model.contour_radius.clone(),
    };
    ContourSpec::new(radius, cfg.nodes.unwrap_or(64), cfg.precision())
}

fn run_contour(
    cfg: &ExperimentConfig,
    model: &CoverModel,
    report: &mut ExperimentReport,
) -> Result<()> {
    let spec = contour_spec(cfg, model)?;
    let prec = cfg.precision();
    report.put(
        "singularities",
        &integrand_singularities(model, prec.min(256)),
    );
    check_contour(model, &spec.radius, prec.min(256))?;
    let mut t = Table::new(
        "contour",
        "(1/2 pi i) of the contour integral of omega G_2 against the exact residue",
        &[
            "model",
            "m",
            "re",
            "im",
            "residue",
            "distance",
            "nodes",
            "doubling_change",
        ],
    );
    let mut rows = Vec::new();
    for &m in cfg.m_list.as_deref().unwrap_or(&[0, 1, 2, 3]) {
        let q = omega_g2_integral(model, m, &spec)?;
        let res = residue_rational(model, m)?;
        let diff = rug::Complex::with_val(prec, &q.value - &res.value);
        let dist = crate::numeric::cabs_f64(&diff);
        let (re, im) = crate::numeric::to_pair(&q.value);
        rows.push((m, dist < INTEGRALITY_TOL));
        t.push(vec![
            model.id.clone(),
            m.to_string(),
            fmt_f64(re),
            fmt_f64(im),
            res.value.to_string(),
            fmt_f64(dist),
            q.nodes.to_string(),
            fmt_f64(q.doubling_change),
        ]);
    }
    let (ok, detail) = failing(rows);
    report.verdict(Verdict::new(
        "quadrature_matches_residue",
        "arithcheck::omega_g2_integral",
        ok,
        detail,
    ));
    report.put("spec", &spec);
    report.table(t);
    Ok(())
}

fn run_integrality(
    cfg: &ExperimentConfig,
    model: &CoverModel,
    report: &mut ExperimentReport,
) -> Result<()> {
    let spec = contour_spec(cfg, model)?;
    let obstruction = integrality_obstruction(model)?;
    report.put("obstruction", &obstruction);
    let mut t = Table::new(
        "integrality",
        "exact residue integer against C(2m,m) times the quadrature",
        &[
            "model",
            "m",
            "exact",
            "numeric_re",
            "numeric_im",
            "distance",
            "pass",
        ],
    );
    let mut rows = Vec::new();
    for &m in cfg.m_list.as_deref().unwrap_or(&[0, 1, 2, 3, 4, 5, 6]) {
        let r = integrality_check(model, m, &spec)?;
        let detail = match (&r.exact, &r.refused, r.distance) {
            (Some(e), _, Some(d)) => format!("exact {e}, distance {d:.3e}"),
            (_, Some(why), _) => format!("refused: {why}"),
            _ => "no exact value".into(),
        };
        report.verdict(Verdict::new(
            format!("integrality_m{m}"),
            "arithcheck::integrality_check",
            r.pass,
            detail,
        ));
        t.push(vec![
            model.id.clone(),
            m.to_string(),
            r.exact.clone().unwrap_or_default(),
            fmt_f64(r.numeric.0),
            fmt_f64(r.numeric.1),
            r.distance.map(fmt_f64).unwrap_or_default(),
            r.pass.to_string(),
        ]);
        rows.push(r);
    }
    report.put("checks", &rows);
    report.table(t);
    Ok(())
}

fn lemma24_options(cfg: &ExperimentConfig) -> Lemma24Options {
    let d = Lemma24Options::default();
    Lemma24Options {
        scales: cfg.scale_list.clone().unwrap_or(d.scales),
        m_at_scales: cfg.m.unwrap_or(d.m_at_scales),
        scale_for_m: cfg.scale_for_m.unwrap_or(d.scale_for_m),
        m_list: cfg.m_list.clone().unwrap_or(d.m_list),
        rho2_hat: cfg.rho2_hat.unwrap_or(d.rho2_hat),
        quadrature_check: d.quadrature_check,
        precision: cfg.precision(),
    }
}

fn run_lemma24(
    cfg: &ExperimentConfig,
    base: &Path,
    report: &mut ExperimentReport,
) -> Result<Lemma24Report> {
    let model = match (&cfg.model, &cfg.models) {
        (None, None) => lemma24_base(),
        _ => {
            let mut ms = resolve_models(cfg, base)?;
            if ms.len() != 1 {
                return Err(Error::config("lemma24 takes a single base model"));
            }
            ms.remove(0)
        }
    };
    let r = lemma24_experiment(&model, &lemma24_options(cfg))?;
    report.verdict(Verdict::new(
        "order_in_s",
        "arithcheck::lemma24_experiment",
        r.order_ok,
        format!(
            "measured order {:.4} (minimum {})",
            r.order_in_s,
            arithcheck::ORDER_MIN
        ),
    ));
    report.verdict(Verdict::new(
        "rate_in_m",
        "arithcheck::lemma24_experiment",
        r.rate_ok,
        format!(
            "measured rate {:.4} (limit {:.4})",
            r.rate_in_m,
            r.rho2_hat * arithcheck::RATE_SLACK
        ),
    ));
    if let Some(q) = &r.quadrature {
        report.verdict(Verdict::new(
            "quadrature_cross_check",
            "arithcheck::omega_g2_integral",
            q.distance < INTEGRALITY_TOL,
            format!("s = {}, m = {}: distance {:.3e}", q.s, q.m, q.distance),
        ));
    }
    let errs = |rows: &[arithcheck::Lemma24Cell]| rows.iter().map(|c| c.err).collect::<Vec<_>>();
    report.fit(
        "order_in_s",
        r.order_in_s,
        "least-squares slope of -ln err against ln s",
        errs(&r.scale_rows),
    );
    report.fit(
        "rate_in_m",
        r.rate_in_m,
        "geometric fit of err against m",
        errs(&r.m_rows),
    );
    report.fit(
        "a10_hat",
        r.a10_hat,
        "max s^2 err / ||omega||^2 over the scale sweep",
        errs(&r.scale_rows),
    );
    report.fit(
        "a11_hat",
        r.a11_hat as f64,
        "largest m in the m-sweep whose cell fails",
        errs(&r.m_rows),
    );
    let mut t = Table::new(
        "lemma24",
        "error of the contour integral against sum beta^2 / s^2",
        &["s", "m", "err", "bound", "pass"],
    );
    for c in r.scale_rows.iter().chain(&r.m_rows) {
        t.push(vec![
            c.s.to_string(),
            c.m.to_string(),
            fmt_f64(c.err),
            fmt_f64(c.bound),
            c.pass.to_string(),
        ]);
    }
    report.table(t);
    report.put("lemma24", &r);
    Ok(r)
}

fn run_height(cfg: &ExperimentConfig, base: &Path, report: &mut ExperimentReport) -> Result<()> {
    let m_max = cfg.m_max.unwrap_or(1000);
    let first_fail = central_binomial_chain(m_max);
    report.verdict(Verdict::new(
        "central_binomial_chain",
        "arithcheck::central_binomial_chain",
        first_fail.is_none(),
        match first_fail {
            None => format!("C(2m,m) < 4^m for 1 <= m <= {m_max}"),
            Some(m) => format!("fails at m = {m}"),
        },
    ));
    let a9 = cfg.a9.unwrap_or(0.5);
    let inputs = match cfg.log_norm_xi1 {
        Some(l) => {
            let re = cfg
                .beta_sums_re
                .clone()
                .ok_or_else(|| Error::config("height inputs need beta_sums_re"))?;
            let im = cfg
                .beta_sums_im
                .clone()
                .unwrap_or_else(|| vec![0.0; re.len()]);
            if im.len() != re.len() {
                return Err(Error::config(
                    "beta_sums_re and beta_sums_im differ in length",
                ));
            }
            vec![HeightInputs {
                degree: cfg.degree.unwrap_or(re.len() as u32),
                log_norm_xi1: l,
                beta_sums: re.into_iter().zip(im).collect(),
                omega_norm: cfg
                    .omega_norm
                    .ok_or_else(|| Error::config("height inputs need omega_norm"))?,
                a9,
                a7: cfg.a7,
                m: cfg.m.ok_or_else(|| Error::config("height inputs need m"))?,
            }]
        }
        None => {
            let mut sub = ExperimentReport::new("lemma24", serde_json::Value::Null);
            let lr = run_lemma24(cfg, base, &mut sub)?;
            report.put("harvested_from", &sub.verdicts);
            if !lr.pass {
                return Err(Error::InvariantViolation(
                    "harvesting needs a passing scale sweep; it failed".into(),
                ));
            }
            HeightInputs::from_lemma24(&lr, a9)
                .into_iter()
                .map(|mut h| {
                    h.a7 = cfg.a7;
                    h
                })
                .collect()
        }
    };
    let mut t = Table::new(
        "height",
        "height bound per input set",
        &[
            "m",
            "log_norm_xi1",
            "bound_value",
            "margin",
            "hypothesis_ok",
            "pivot_ok",
            "pass",
        ],
    );
    let mut reports = Vec::new();
    for h in &inputs {
        let r = height_bound(h)?;
        t.push(vec![
            h.m.to_string(),
            fmt_f64(h.log_norm_xi1),
            fmt_f64(r.bound_value),
            fmt_f64(r.margin),
            r.hypothesis_ok.to_string(),
            r.pivot_ok.to_string(),
            r.pass.to_string(),
        ]);
        reports.push(r);
    }
    let (ok, detail) = failing(
        reports
            .iter()
            .map(|r| (format!("log|xi1| = {:.4}", r.inputs.log_norm_xi1), r.pass)),
    );
    report.verdict(Verdict::new(
        "height_bound",
        "arithcheck::height_bound",
        ok,
        detail,
    ));
    report.table(t);
    report.put("bounds", &reports);
    Ok(())
}

/// Runs a config, writes report.json, CSVs and timing.json into `out`, and
/// returns the outcome.
pub fn run_and_emit(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let outcome = run_experiment(cfg, base);
    let formats = cfg.formats().unwrap_or_else(|_| vec![Format::Json]);
    emit_report(&outcome.report, &formats, out)?;
    emit_timing(out, &outcome.report.command, start.elapsed().as_secs_f64())?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_a_parse_error() {
        let e = ExperimentConfig::parse("command = \"coeffs\"\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn coeffs_small_run_passes() {
        let cfg = ExperimentConfig::parse("command = \"coeffs\"\nm_list = [2, 3, 4]\n").unwrap();
        let o = run_experiment(&cfg, Path::new("."));
        assert_eq!(o.exit_code(), 0);
        assert_eq!(o.report.tables[0].rows.len(), 3 + 4 + 5);
    }

    #[test]
    fn coeffs_m1_fails_upper_regime_only() {
        let cfg = ExperimentConfig::parse("command = \"coeffs\"\nm_list = [1]\n").unwrap();
        let o = run_experiment(&cfg, Path::new("."));
        assert_eq!(o.exit_code(), 1);
        let failing: Vec<_> = o.report.verdicts.iter().filter(|v| !v.pass).collect();
        assert_eq!(failing.len(), 1);
        assert!(failing[0].name.contains("upper_regime"), "{:?}", failing[0]);
    }

    #[test]
    fn overlapping_disks_exit_2() {
        let cfg =
            ExperimentConfig::parse("command = \"kernel\"\nn1 = 37\nr1 = 0.5\nm_list = [8]\n")
                .unwrap();
        let o = run_experiment(&cfg, Path::new("."));
        assert_eq!(o.exit_code(), 2);
        assert!(o.report.error.is_some());
    }
}
