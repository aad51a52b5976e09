//! Off-diagonal decay and near-diagonal Lipschitz checks of the kernel.
//!
//! `cargo run --release --example kernel_scan -- 37 0.001`

use antider_kit::plocal::{
    center_check, neardiag_lipschitz_check, offdiag_decay_scan, AnchorSet, KernelParams,
};

fn main() -> antider_kit::Result<()> {
    let mut args = std::env::args().skip(1);
    let n1: u32 = args.next().map_or(37, |s| s.parse().expect("n1"));
    let r1: f64 = args.next().map_or(0.02, |s| s.parse().expect("r1"));
    let anchors = AnchorSet::new(n1, 2, r1, 256)?;
    for w in anchors.warnings() {
        println!("warning: {w}");
    }
    let scan = offdiag_decay_scan(&anchors, &[8, 16, 32, 64], 8, 1)?;
    for row in &scan.per_m {
        println!(
            "m = {:2}  sup = {:.6}  sup^(1/m) = {:.6}",
            row.m, row.sup, row.sup_pow_inv_m
        );
    }
    println!(
        "rho1_hat = {:.6}, {} samples at or above 1",
        scan.rho1_hat,
        scan.violations.len()
    );
    let c = center_check(&anchors);
    println!(
        "m = 1 anchor centres: {} (error {:.2e})",
        &c.value[..22],
        c.abs_error
    );
    for m in [8, 32] {
        let l = neardiag_lipschitz_check(&KernelParams::new(m, anchors.clone(), 256)?, 2000, 3);
        println!(
            "Lipschitz m = {m}: {} violations, max ratio {:.4}",
            l.violations.len(),
            l.max_ratio
        );
    }
    Ok(())
}
