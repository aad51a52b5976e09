//! Exact split coefficients b_{m,l} and their identities.

use antider_kit::exactkernel::split_coefficients;

fn main() {
    for m in [1, 2, 3, 4, 8] {
        let c = split_coefficients(m);
        let vals: Vec<String> = c.values.iter().map(|b| b.to_string()).collect();
        println!("m = {m}: [{}]", vals.join(", "));
        let scaled = c.scaled_integers().expect("C(2m,m)·b is integral");
        println!("  C(2m,m)·b = {scaled:?}, sum = {}", c.sum());
        let v = c.verdict();
        println!(
            "  symmetric {} | halving bound {} | upper-regime bound {}",
            v.symmetric, v.halving_bound, v.upper_regime_bound
        );
    }
}
