//! Exact residues and their quadrature counterparts on the corpus.

use antider_kit::arithcheck::{integrality_check, ContourSpec};
use antider_kit::model::corpus;

fn main() -> antider_kit::Result<()> {
    for model in corpus() {
        let spec = ContourSpec::for_model(&model, 128);
        let mut line = format!("{:16}", model.id);
        for m in 0..=4 {
            let r = integrality_check(&model, m, &spec)?;
            match (&r.exact, r.distance) {
                (Some(e), Some(d)) => line += &format!(" {e}({d:.0e})"),
                _ => line += &format!(" refused[{:.3}]", r.numeric.0),
            }
        }
        println!("{line}");
    }
    Ok(())
}
