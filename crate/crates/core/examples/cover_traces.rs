//! Exact traces against fiber sums on the corpus covers.

use antider_kit::cover::{probe_function, trace_equivalence, trace_exact};
use antider_kit::model::corpus;

fn main() -> antider_kit::Result<()> {
    for model in corpus() {
        let f = probe_function(&model);
        println!("{}: Tr({f}) = {}", model.id, trace_exact(&model, &f)?);
        let a = trace_equivalence(&model, &f, 100, 1.0, 7, 256)?;
        println!(
            "  max rel err {:.3e} (tol {:.0e}) pass={}",
            a.max_rel_err, a.tol, a.pass
        );
    }
    Ok(())
}
