//! Property tests of the module invariants.

use std::path::Path;

use antider_kit::algebra::BiRat;
use antider_kit::antideriv::{
    gram_matrix, make_null_family, plane_omega, Chart, ChartFunction, DiskQuadrature,
    NullFamilySpec,
};
use antider_kit::cover::{trace_exact, trace_numeric, CoverModel};
use antider_kit::exactkernel::split_coefficients;
use antider_kit::model::corpus_model;
use antider_kit::numeric::{cabs_f64, cf64, polar};
use antider_kit::plocal::{kernel_eval, kernel_eval_exact, AnchorSet, KernelParams, ProjPoint};
use antider_kit::runner::{run_experiment, ExperimentConfig};
use proptest::prelude::*;
use rug::{Complex, Float, Rational};

fn params(m: usize) -> KernelParams {
    KernelParams::new(m, AnchorSet::new(37, 2, 0.02, 128).unwrap(), 128).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coefficients_sum_to_one_and_are_symmetric(m in 0usize..80) {
        let c = split_coefficients(m);
        prop_assert_eq!(c.sum(), 1);
        prop_assert!((0..=m).all(|l| c.values[l] == c.values[m - l]));
        prop_assert!(c.scaled_integers().is_some());
    }

    #[test]
    fn kernel_is_one_on_the_diagonal(m in 1usize..64, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re.hypot(im) > 1e-3);
        let x = ProjPoint::finite(cf64(128, re, im));
        let v = kernel_eval(&params(m), &x, &x).unwrap();
        prop_assert!(cabs_f64(&(v - 1u32)) < 1e-30);
    }

    #[test]
    fn exact_kernel_matches_float(m in 1usize..20, a in 1i64..50, b in -50i64..50) {
        let z = Rational::from((a, 7));
        let zp = Rational::from((b, 11));
        let exact = kernel_eval_exact(m, &z, &zp).unwrap();
        let v = kernel_eval(
            &params(m),
            &ProjPoint::finite(Complex::with_val(128, &z)),
            &ProjPoint::finite(Complex::with_val(128, &zp)),
        )
        .unwrap();
        let d = Complex::with_val(128, &v - &exact);
        prop_assert!(cabs_f64(&d) <= 1e-25 * exact.to_f64().abs().max(1.0));
    }

    #[test]
    fn kernel_conjugate_symmetry_on_circle(m in 1usize..40, a in 0.0f64..std::f64::consts::TAU, b in 0.0f64..std::f64::consts::TAU) {
        let p = params(m);
        let on_circle = |t: f64| {
            ProjPoint::finite(polar(&Float::with_val(128, 1), &Float::with_val(128, t)))
        };
        let (x, y) = (on_circle(a), on_circle(b));
        let f = kernel_eval(&p, &x, &y).unwrap();
        let g = kernel_eval(&p, &y, &x).unwrap().conj();
        prop_assert!(cabs_f64(&(f - g)) < 1e-30);
    }

    #[test]
    fn random_null_families_are_null(seed in any::<u64>(), count in 2usize..5, degree in 1usize..3) {
        match make_null_family(&NullFamilySpec::Random { degree, count, seed }) {
            Ok(fam) => {
                prop_assert!(fam.null_identity_holds());
                let (a, b) = plane_omega(&fam);
                prop_assert!(!(a.is_zero() && b.is_zero()));
            }
            Err(antider_kit::Error::Degenerate(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn exact_and_numeric_traces_agree(k in 0usize..4, re in -0.9f64..0.9, im in -0.9f64..0.9) {
        let ids = ["canonical-d2", "canonical-d3", "cubic-mixed", "rational-tau"];
        let model = corpus_model(ids[k]).unwrap();
        let f = BiRat::from_poly(antider_kit::algebra::BiPoly::w().pow(3));
        let exact = trace_exact(&model, &f).unwrap();
        let a = cf64(128, re, im);
        if let Ok(num) = trace_numeric(&model, &f, &a, 128) {
            let ex = exact.eval_complex(&a);
            let d = Complex::with_val(128, &num - &ex);
            prop_assert!(cabs_f64(&d) < 1e-25 * cabs_f64(&ex).max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gram_matrix_is_hermitian_positive(k in 0usize..3) {
        let ids = ["canonical-d2", "skew-quadratic", "rational-family"];
        let model: CoverModel = corpus_model(ids[k]).unwrap();
        let chart = Chart::new(&model, 0, 128).unwrap();
        let es: Vec<ChartFunction> = model.family.pairs.iter().map(|p| ChartFunction::new(&p.e, 128)).collect();
        let quad = DiskQuadrature { radial: 12, angular: 12, radius: 0.2 };
        let g = gram_matrix(&es, &chart, &quad).unwrap();
        for i in 0..g.len() {
            prop_assert!(g[i][i].imag().to_f64().abs() < 1e-25 && g[i][i].real().to_f64() > 0.0);
            for j in 0..g.len() {
                let c = Complex::with_val(128, g[j][i].conj_ref());
                prop_assert!(cabs_f64(&(Complex::with_val(128, &g[i][j] - &c))) < 1e-25);
            }
        }
        if g.len() == 2 {
            let det = Complex::with_val(128, &g[0][0] * &g[1][1]) - Complex::with_val(128, &g[0][1] * &g[1][0]);
            prop_assert!(det.real().to_f64() > 0.0);
        }
    }

    #[test]
    fn runner_reports_are_deterministic(seed in 0u64..1000) {
        let src = format!("command = \"kernel\"\nn1 = 7\nr1 = 0.05\nm_list = [4, 8]\nsamples = 3\ntrials = 200\nlipschitz_m = [4]\nseed = {seed}\nprecision = 96\n");
        let cfg = ExperimentConfig::parse(&src).unwrap();
        let a = run_experiment(&cfg, Path::new(".")).report;
        let b = run_experiment(&cfg, Path::new(".")).report;
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert_eq!(&a.tables, &b.tables);
        prop_assert_eq!(a.config["seed"].as_u64(), Some(seed));
    }
}
