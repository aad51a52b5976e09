//! Runs the residual suite of G_x on every corpus family.

use antider_kit::antideriv::{residual_suite, ResidualSuiteOptions};
use antider_kit::model::corpus;

fn main() -> antider_kit::Result<()> {
    let opts = ResidualSuiteOptions::default();
    for model in corpus() {
        let r = residual_suite(&model, &opts)?;
        println!(
            "{:16} n1={} m={:3} rho2={:.3} a5={:.3} slope_defect={:.2e} limit_defect={:.2e} pass={}",
            r.model_id, r.n1, r.m, r.rho2_hat, r.a5_hat, r.slope.slope_defect, r.slope.limit_defect, r.pass
        );
    }
    Ok(())
}
