// Measures on ℤ: construction, convolution powers, moments and the
// coset test for strict aperiodicity.

use convpow::{zoo, LatticeMeasure, PowerMethod};

fn main() -> convpow::Result<()> {
    let lazy = zoo::lazy_walk();
    let square = lazy.convolve(&lazy);
    println!("lazy walk squared: offset {}, weights {:?}", square.offset(), square.weights());

    let direct = lazy.power(12, PowerMethod::Direct)?;
    let fast = lazy.power(12, PowerMethod::Fast)?;
    let gap = direct
        .support_range()
        .map(|k| (direct.weight(k) - fast.weight(k)).abs())
        .fold(0.0, f64::max);
    println!("μ^12 direct vs fast: sup gap {gap:.2e}, μ^12(0) = {:.6}", fast.weight(0));

    let skewed = LatticeMeasure::from_atoms(&[(-1, 0.2), (0, 0.3), (2, 0.5)])?;
    let tenfold = skewed.power(10, PowerMethod::Fast)?;
    println!(
        "E[μ] = {:.3}, E[μ^10] = {:.3}, m_2(μ) = {:.3}",
        skewed.expectation(),
        tenfold.expectation(),
        skewed.moment(2.0)?.value
    );

    for (name, mu) in [
        ("lazy walk", lazy.clone()),
        ("δ₀", LatticeMeasure::dirac(0)),
        ("½δ₀ + ½δ₂", LatticeMeasure::from_atoms(&[(0, 0.5), (2, 0.5)])?),
        ("½δ₁ + ½δ₃", LatticeMeasure::from_atoms(&[(1, 0.5), (3, 0.5)])?),
        ("½δ₀ + ½δ₁", LatticeMeasure::from_atoms(&[(0, 0.5), (1, 0.5)])?),
    ] {
        println!("{name:>12}: strictly aperiodic = {}", mu.is_strictly_aperiodic());
    }
    Ok(())
}
