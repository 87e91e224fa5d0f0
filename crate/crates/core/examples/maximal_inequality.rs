// The truncated maximal function on ℤ and its weak (1,1) constants.

use convpow::maximal::{self, LatticeSequence};
use convpow::{zoo, LatticeMeasure};

fn main() -> convpow::Result<()> {
    let lambdas = maximal::lambda_grid(maximal::DEFAULT_LAMBDA_MIN, maximal::DEFAULT_LAMBDA_POINTS)?;
    let delta0 = LatticeSequence::delta(0);

    let lazy = zoo::lazy_walk();
    let m = maximal::maximal_function(&lazy, &delta0, 64)?;
    println!("lazy walk: Mφ(0) = {}, Mφ(±1) = {}, Mφ(5) = {:.5}", m.get(0), m.get(1), m.get(5));
    let curve = maximal::weak_type_curve(&m, 1.0, &[0.6, 0.4])?;
    println!("λ = 0.6, 0.4: counts {:?}, constants {:?}", curve.counts, curve.constants);

    let cases = [
        ("lazy walk", lazy),
        ("½δ₀ + ½δ₁", LatticeMeasure::from_atoms(&[(0, 0.5), (1, 0.5)])?),
    ];
    for (name, mu) in &cases {
        let (_, _, test) = maximal::doubling_test(mu, &delta0, 256, &lambdas)?;
        println!(
            "{name:>10}: headline {:.4} at n ≤ 256, {:.4} at n ≤ 512, growth {:.1}%",
            test.headline,
            test.doubled_headline,
            100.0 * test.growth
        );
    }
    Ok(())
}
