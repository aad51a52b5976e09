//! Declarative model documents (TOML) and the built-in model corpus.
//!
//! ```toml
//! id = "canonical-d2"
//! P = [[-1, -1], [], [1]]        # P[k][j] multiplies w^k t^j
//! contour_radius = "1/2"
//! [tau]
//! num = [[], [1]]
//! [paired]                       # or explicit [[family]] entries with u, e
//! f = [[1]]
//! g = [[0, 2], [0, 1]]
//! ```
//!
//! Coefficients are TOML integers or decimal strings, optionally `"p/q"`.

use std::path::Path;

use rug::{Integer, Rational};
use serde::Deserialize;

use crate::algebra::{BiPoly, BiRat};
use crate::cover::{CoverModel, DifferentialFamily, FamilyPair};
use crate::error::{Error, Result};
use crate::exactkernel::parse_rational;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Str(String),
}

type Nested = Vec<Vec<Num>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TauDoc {
    num: Nested,
    den: Option<Nested>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    u: Nested,
    u_den: Option<Nested>,
    e: Nested,
    e_den: Option<Nested>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairedDoc {
    f: Nested,
    f_den: Option<Nested>,
    g: Nested,
    g_den: Option<Nested>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    id: String,
    #[serde(rename = "P")]
    p: Nested,
    tau: TauDoc,
    #[serde(default)]
    family: Vec<PairDoc>,
    paired: Option<PairedDoc>,
    n1: Option<u32>,
    g: Option<u32>,
    scale: Option<Num>,
    contour_radius: Option<Num>,
    bound: Option<f64>,
}

/// Line and column (1-based) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// TOML syntax or shape error with its position.
pub fn toml_error(src: &str, e: &toml::de::Error) -> Error {
    let (line, column) = e.span().map_or((0, 0), |s| line_col(src, s.start));
    Error::Parse {
        line,
        column,
        msg: e.message().to_string(),
    }
}

fn num(n: &Num, what: &str) -> Result<Rational> {
    match n {
        Num::Int(i) => Ok(Rational::from(*i)),
        Num::Str(s) => parse_rational(s)
            .or_else(|| s.trim().parse::<Integer>().ok().map(Rational::from))
            .ok_or_else(|| {
                Error::config(format!("{what}: cannot read {s:?} as a rational number"))
            }),
    }
}

fn bipoly(rows: &Nested, what: &str) -> Result<BiPoly> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|c| num(c, what)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(BiPoly::from_nested(rows))
}

fn birat(n: &Nested, d: Option<&Nested>, what: &str) -> Result<BiRat> {
    let num = bipoly(n, what)?;
    let den = match d {
        Some(d) => bipoly(d, what)?,
        None => BiPoly::one(),
    };
    BiRat::new(num, den).ok_or_else(|| Error::config(format!("{what}: zero denominator")))
}

/// Parses a model document.
pub fn parse_model(src: &str) -> Result<CoverModel> {
    let doc: ModelDoc = toml::from_str(src).map_err(|e| toml_error(src, &e))?;
    let id = doc.id.clone();
    let ctx = |what: &str| format!("model {id}: {what}");
    let p = bipoly(&doc.p, &ctx("P"))?;
    let tau = birat(&doc.tau.num, doc.tau.den.as_ref(), &ctx("tau"))?;
    let mut family = match (&doc.paired, doc.family.is_empty()) {
        (Some(pd), true) => DifferentialFamily::paired(
            birat(&pd.f, pd.f_den.as_ref(), &ctx("paired.f"))?,
            birat(&pd.g, pd.g_den.as_ref(), &ctx("paired.g"))?,
        ),
        (None, false) => {
            let pairs = doc
                .family
                .iter()
                .enumerate()
                .map(|(j, pd)| {
                    Ok(FamilyPair {
                        u: birat(&pd.u, pd.u_den.as_ref(), &ctx(&format!("family[{j}].u")))?,
                        e: birat(&pd.e, pd.e_den.as_ref(), &ctx(&format!("family[{j}].e")))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            DifferentialFamily::new(pairs).map_err(|e| Error::config(ctx(&e.to_string())))?
        }
        (Some(_), false) => {
            return Err(Error::config(ctx(
                "give either [paired] or [[family]], not both",
            )))
        }
        (None, true) => return Err(Error::config(ctx("missing family"))),
    };
    if let Some(b) = doc.bound {
        family.bound = b;
    }
    let mut model = CoverModel::new(id.clone(), p, tau, family)
        .map_err(|e| Error::config(ctx(&e.to_string())))?;
    if let Some(n1) = doc.n1 {
        model = model.with_n1(n1);
    }
    if let Some(g) = doc.g {
        model.g = g;
    }
    if let Some(s) = &doc.scale {
        model = model.with_scale(num(s, &ctx("scale"))?);
    }
    if let Some(r) = &doc.contour_radius {
        let r = num(r, &ctx("contour_radius"))?;
        if r.cmp0().is_le() {
            return Err(Error::config(ctx("contour_radius must be positive")));
        }
        model = model.with_contour_radius(r);
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<CoverModel> {
    let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&src)
}

/// Built-in corpus, shipped as documents under `models/`.
pub const CORPUS: &[(&str, &str)] = &[
    ("canonical-d2", include_str!("../models/canonical-d2.toml")),
    ("canonical-d3", include_str!("../models/canonical-d3.toml")),
    ("linear-d1", include_str!("../models/linear-d1.toml")),
    (
        "skew-quadratic",
        include_str!("../models/skew-quadratic.toml"),
    ),
    ("cubic-mixed", include_str!("../models/cubic-mixed.toml")),
    ("quartic", include_str!("../models/quartic.toml")),
    ("quintic", include_str!("../models/quintic.toml")),
    ("rational-tau", include_str!("../models/rational-tau.toml")),
    (
        "rational-family",
        include_str!("../models/rational-family.toml"),
    ),
    ("nonunit-q", include_str!("../models/nonunit-q.toml")),
];

pub fn corpus_model(id: &str) -> Result<CoverModel> {
    let (_, src) = CORPUS
        .iter()
        .find(|(k, _)| *k == id)
        .ok_or_else(|| Error::config(format!("no corpus model named {id}")))?;
    parse_model(src)
}

pub fn corpus() -> Vec<CoverModel> {
    CORPUS
        .iter()
        .map(|(id, src)| parse_model(src).unwrap_or_else(|e| panic!("corpus model {id}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_has_position() {
        let err = parse_model("id = \"x\"\nP = [[1, ]\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn big_and_fractional_coefficients() {
        let src = r#"
id = "big"
P = [["-123456789012345678901234567890", "1/2"], [], [1]]
[tau]
num = [[], [1]]
[paired]
f = [[1]]
g = [[0, 1]]
"#;
        let m = parse_model(src).unwrap();
        assert_eq!(
            m.p.coeff_w(0).coeff(0),
            "-123456789012345678901234567890"
                .parse::<Integer>()
                .unwrap()
        );
        assert_eq!(m.p.coeff_w(0).coeff(1), Rational::from((1, 2)));
    }

    #[test]
    fn rejects_broken_family() {
        let src = r#"
id = "bad"
P = [[-1], [], [1]]
[tau]
num = [[], [1]]
[[family]]
u = [[1]]
e = [[1]]
"#;
        assert!(matches!(parse_model(src), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_loads() {
        let c = corpus();
        assert_eq!(c.len(), CORPUS.len());
        assert!(c.iter().all(|m| m.degree() <= 5));
    }
}
