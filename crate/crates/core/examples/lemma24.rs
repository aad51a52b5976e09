//! Scale and order sweep of the contour integral on the scaled base model.

use antider_kit::arithcheck::{lemma24_base, lemma24_experiment, Lemma24Options};

fn main() -> antider_kit::Result<()> {
    let r = lemma24_experiment(&lemma24_base(), &Lemma24Options::default())?;
    println!(
        "sum beta^2 = {}, |omega|^2 = {}",
        r.beta_sum_sq, r.omega_norm_sq
    );
    for c in r.scale_rows.iter().chain(&r.m_rows) {
        println!(
            "s = {:5} m = {:2}  err = {:.3e}  bound = {:.3e}  {}",
            c.s, c.m, c.err, c.bound, c.pass
        );
    }
    println!(
        "order in s {:.3} ({}), rate in m {:.3} ({}), a10 {:.4}, a11 {}",
        r.order_in_s, r.order_ok, r.rate_in_m, r.rate_ok, r.a10_hat, r.a11_hat
    );
    if let Some(q) = &r.quadrature {
        println!(
            "quadrature cross-check at s = {}, m = {}: {:.2e}",
            q.s, q.m, q.distance
        );
    }
    Ok(())
}
