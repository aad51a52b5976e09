//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1 and 3 are known to fail at their stated parameters (a false
//! inequality at m = 1, and no decay at r1 = 0.02); the suite asserts they
//! still fail for that reason, so a change in either outcome is noticed.

use std::path::Path;
use std::time::{Duration, Instant};

use antider_kit::exactkernel::split_coefficients;
use antider_kit::report::ExperimentReport;
use antider_kit::runner::{run_and_emit, run_experiment, ExperimentConfig};
use rug::{Integer, Rational};

struct Outcome {
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn run(cfg: &str) -> ExperimentReport {
    let cfg = ExperimentConfig::parse(cfg).expect("config parses");
    run_experiment(&cfg, Path::new(".")).report
}

fn verdict<'a>(r: &'a ExperimentReport, name: &str) -> &'a antider_kit::report::Verdict {
    r.verdicts
        .iter()
        .find(|v| v.name == name)
        .unwrap_or_else(|| panic!("no verdict {name} in {}", r.command))
}

fn all_named(r: &ExperimentReport, suffix: &str) -> (bool, usize) {
    let vs: Vec<_> = r
        .verdicts
        .iter()
        .filter(|v| v.name.ends_with(suffix))
        .collect();
    (!vs.is_empty() && vs.iter().all(|v| v.pass), vs.len())
}

fn timed(limit_s: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_s);
    Outcome {
        pass: pass && elapsed <= limit,
        detail,
        elapsed,
        limit,
    }
}

const C1: &str = "command = \"coeffs\"\nm_list = [MLIST]\n";
const C3: &str = "command = \"kernel\"\nn1 = 37\nr1 = 0.02\nm_list = [8, 16, 32, 64]\nsamples = 8\nlipschitz_m = []\nseed = 11\nprecision = 256\n";
const C3_SMALL_R1: &str = "command = \"kernel\"\nn1 = 37\nr1 = 0.001\nm_list = [8, 16, 32, 64]\nsamples = 8\nlipschitz_m = []\nseed = 11\nprecision = 256\n";
const C4: &str = "command = \"kernel\"\nn1 = 37\nr1 = 0.02\nm_list = [8]\nsamples = 1\nlipschitz_m = [8, 32]\ntrials = 10000\nseed = 12\nprecision = 256\n";
const C5: &str =
    "command = \"cover-check\"\nmodel = \"corpus\"\npoints = 100\nseed = 13\nprecision = 256\n";
const C6: &str = "command = \"antideriv\"\nmodel = \"corpus\"\nseed = 14\nprecision = 128\n";
const C7: &str = "command = \"integrality\"\nmodel = \"corpus:canonical-d2\"\nm_list = [0, 1, 2, 3, 4, 5, 6]\nprecision = 256\n";
const C7_NEG: &str = "command = \"integrality\"\nmodel = \"corpus:nonunit-q\"\nm_list = [0, 1, 2, 3]\nprecision = 256\n";
const C8: &str = "command = \"lemma24\"\nscale_list = [100, 200, 400, 800]\nm = 24\nscale_for_m = 1000\nm_list = [2, 4, 6, 8, 10, 12]\nrho2_hat = 0.52\nprecision = 128\n";
const C9: &str = "command = \"height\"\nscale_list = [100, 200, 400, 800]\nm = 24\nscale_for_m = 1000\nm_list = [2, 4, 6, 8, 10, 12]\nrho2_hat = 0.52\na9 = 0.5\nm_max = 1000\nprecision = 128\n";

fn c1_config() -> String {
    let ms: Vec<String> = (1..=200).map(|m| m.to_string()).collect();
    C1.replace("MLIST", &ms.join(", "))
}

/// b_{m,l} by enumerating the 2m-slot words with m v₀ and m v₁ and counting
/// those whose first m slots hold exactly l copies of v₀.
fn brute_force_split(m: usize) -> Vec<Rational> {
    let n = 2 * m;
    let mut counts = vec![Integer::new(); m + 1];
    let mut total = Integer::new();
    for word in 0u32..(1 << n) {
        if word.count_ones() as usize != m {
            continue;
        }
        let first_v1 = (word & ((1 << m) - 1)).count_ones() as usize;
        counts[m - first_v1] += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|c| Rational::from((c, total.clone())))
        .collect()
}

fn criterion_1() -> Outcome {
    timed(5, || {
        let r = run(&c1_config());
        let names = [
            "sum_is_one",
            "symmetric",
            "integral_scaled",
            "halving_bound",
            "upper_regime_bound",
        ];
        let bad: Vec<String> = names
            .iter()
            .map(|n| verdict(&r, n))
            .filter(|v| !v.pass)
            .map(|v| format!("{} {}", v.name, v.detail))
            .collect();
        let detail = if bad.is_empty() {
            "all identities and inequalities hold for 1 <= m <= 200".into()
        } else {
            format!("identities hold; {}", bad.join("; "))
        };
        (bad.is_empty(), detail)
    })
}

fn criterion_2() -> Outcome {
    timed(30, || {
        let bad: Vec<usize> = (0..=8)
            .filter(|&m| split_coefficients(m).values != brute_force_split(m))
            .collect();
        (
            bad.is_empty(),
            format!("m = 0..8 compared exactly, mismatches at {bad:?}"),
        )
    })
}

fn criterion_3() -> Outcome {
    timed(120, || {
        let r = run(C3);
        let sup = verdict(&r, "offdiag_sup_below_one");
        let tail = verdict(&r, "tail_variation");
        let center = verdict(&r, "center_m1");
        let small = run(C3_SMALL_R1);
        let rho_small = small.fitted["rho1_hat"].value;
        (
            sup.pass && tail.pass && center.pass,
            format!(
                "rho1_hat {:.5} (sup < 1: {}), tail_ok {} ({}), center_ok {} ({}); at r1 = 0.001 rho1_hat = {:.5}",
                r.fitted["rho1_hat"].value, sup.pass, tail.pass, tail.detail, center.pass, center.detail, rho_small
            ),
        )
    })
}

fn criterion_4() -> Outcome {
    timed(60, || {
        let r = run(C4);
        let a = verdict(&r, "lipschitz_m8");
        let b = verdict(&r, "lipschitz_m32");
        (
            a.pass && b.pass,
            format!("m = 8: {}; m = 32: {}", a.detail, b.detail),
        )
    })
}

fn criterion_5() -> Outcome {
    timed(60, || {
        let r = run(C5);
        let (ok, n) = all_named(&r, "/trace_agreement");
        let worst = r
            .body
            .values()
            .filter_map(|b| b["traces"]["max_rel_err"].as_f64())
            .fold(0.0, f64::max);
        (
            ok && n == 10 && r.error.is_none(),
            format!("{n} covers, worst relative error {worst:.3e}"),
        )
    })
}

fn criterion_6() -> Outcome {
    timed(300, || {
        let r = run(C6);
        let ok = r.error.is_none() && r.verdicts.len() == 30 && r.verdicts.iter().all(|v| v.pass);
        let a5 = r
            .fitted
            .iter()
            .filter(|(k, _)| k.ends_with("/a5_hat"))
            .map(|(_, f)| f.value)
            .fold(0.0, f64::max);
        let slope = r
            .body
            .values()
            .filter_map(|b| b["suite"]["slope"]["slope_defect"].as_f64())
            .fold(0.0, f64::max);
        (
            ok,
            format!("10 families, max a5_hat {a5:.3}, max slope defect {slope:.2e}"),
        )
    })
}

fn criterion_7() -> Outcome {
    timed(300, || {
        let r = run(C7);
        let (ok, n) = all_named(&r, "");
        let neg = run(C7_NEG);
        let refused = !neg.verdicts.is_empty()
            && neg.error.is_none()
            && neg
                .verdicts
                .iter()
                .all(|v| !v.pass && v.detail.starts_with("refused"));
        let worst = r
            .body
            .values()
            .flat_map(|b| b["checks"].as_array().cloned().unwrap_or_default())
            .filter_map(|c| c["distance"].as_f64())
            .fold(0.0, f64::max);
        (
            ok && n == 7 && refused,
            format!("m = 0..6 integral, worst distance {worst:.2e}; non-unit q refused: {refused}"),
        )
    })
}

fn criterion_8() -> Outcome {
    timed(600, || {
        let r = run(C8);
        let order = verdict(&r, "order_in_s");
        let rate = verdict(&r, "rate_in_m");
        let quad = verdict(&r, "quadrature_cross_check");
        (
            order.pass && rate.pass && quad.pass,
            format!("{}; {}; {}", order.detail, rate.detail, quad.detail),
        )
    })
}

fn criterion_9() -> Outcome {
    timed(1, || {
        let r = run(C9);
        let chain = verdict(&r, "central_binomial_chain");
        let bound = verdict(&r, "height_bound");
        let margin = r.body["bounds"]
            .as_array()
            .map(|b| {
                b.iter()
                    .filter_map(|x| x["margin"].as_f64())
                    .fold(f64::INFINITY, f64::min)
            })
            .unwrap_or(f64::NAN);
        (
            chain.pass && bound.pass && r.error.is_none(),
            format!("{}; harvested bounds min margin {margin:.4}", chain.detail),
        )
    })
}

fn criterion_10() -> Outcome {
    timed(600, || {
        let configs = [
            c1_config(),
            C3.into(),
            C4.into(),
            C5.into(),
            C6.into(),
            C7.into(),
            C8.into(),
            C9.into(),
        ];
        let dir = tempfile::tempdir().expect("tempdir");
        let mut differing = Vec::new();
        for (k, src) in configs.iter().enumerate() {
            let cfg = ExperimentConfig::parse(src).expect("config parses");
            let a = dir.path().join(format!("{k}a"));
            let b = dir.path().join(format!("{k}b"));
            run_and_emit(&cfg, Path::new("."), &a).expect("emit");
            run_and_emit(&cfg, Path::new("."), &b).expect("emit");
            let mut names: Vec<_> = std::fs::read_dir(&a)
                .unwrap()
                .map(|e| e.unwrap().file_name())
                .filter(|n| n != "timing.json")
                .collect();
            names.sort();
            for n in names {
                if std::fs::read(a.join(&n)).unwrap() != std::fs::read(b.join(&n)).unwrap() {
                    differing.push(format!(
                        "{}:{}",
                        cfg.command.clone().unwrap_or_default(),
                        n.to_string_lossy()
                    ));
                }
            }
        }
        (
            differing.is_empty(),
            format!(
                "{} configs run twice, differing files {differing:?}",
                configs.len()
            ),
        )
    })
}

/// Criteria that fail at their stated parameters; see the module doc.
const KNOWN_FAILING: &[usize] = &[1, 3];

#[test]
fn acceptance() {
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut results = Vec::new();
    for (k, f) in criteria {
        let o = f();
        println!(
            "criterion {k:2}: {} ({:.2}s of {}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.limit.as_secs(),
            o.detail
        );
        results.push((k, o));
    }
    for (k, o) in &results {
        if KNOWN_FAILING.contains(k) {
            assert!(
                !o.pass,
                "criterion {k} now passes; update KNOWN_FAILING and the notes"
            );
        } else {
            assert!(o.pass, "criterion {k} failed: {}", o.detail);
        }
    }
    // The known failures are exactly the documented ones.
    let c1 = &results[0].1.detail;
    assert!(
        c1.contains("upper_regime_bound fails at 1") && !c1.contains("fails at 1,"),
        "{c1}"
    );
    let c3 = &results[2].1.detail;
    assert!(
        c3.contains("(sup < 1: false)")
            && c3.contains("tail_ok true")
            && c3.contains("center_ok true"),
        "{c3}"
    );
}
