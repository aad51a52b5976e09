//! Height bound from sweep-harvested inputs, and the binomial chain.

use antider_kit::arithcheck::{
    central_binomial_chain, height_bound, lemma24_base, lemma24_experiment, HeightInputs,
    Lemma24Options,
};

fn main() -> antider_kit::Result<()> {
    println!(
        "C(2m,m) < 4^m up to 1000: {}",
        central_binomial_chain(1000).is_none()
    );
    let sweep = lemma24_experiment(&lemma24_base(), &Lemma24Options::default())?;
    for h in HeightInputs::from_lemma24(&sweep, 0.5) {
        let r = height_bound(&h)?;
        println!(
            "log|xi1| = {:.4}  bound = {:.4}  margin = {:.4}  pivot {}  pass {}",
            h.log_norm_xi1, r.bound_value, r.margin, r.pivot_ok, r.pass
        );
    }
    Ok(())
}
