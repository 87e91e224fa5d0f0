// Kernel tables and the empirical constants of the decay and difference
// bounds, compared across two n-ranges.

use convpow::kernel::{self, BoundFit};
use convpow::report;
use convpow::zoo;

fn show(name: &str, half: &BoundFit, full: &BoundFit) {
    println!(
        "{name:>20}: C = {:.6} (n ≤ 32) → {:.6} (n ≤ 64), change {:.2}%, worst (n, x, y) = {:?}",
        half.fitted_constant,
        full.fitted_constant,
        100.0 * half.relative_change(full),
        full.worst_tuple
    );
}

fn main() -> convpow::Result<()> {
    let mu = zoo::lazy_walk();
    let table = kernel::kernel_table(&mu, "lazy_walk", &kernel::default_n_values(&mu, 64), -128..=128)?;
    let half = table.restrict_n(32);
    println!("μ^64(0) = {:.8}, row masses within {:.1e} of 1", table.value(64, 0).unwrap(), {
        table.row_mass.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max)
    });

    show("pointwise", &kernel::pointwise_bound_fit(&half, 1.0)?, &kernel::pointwise_bound_fit(&table, 1.0)?);
    let small = kernel::small_n_regime_check(&table, 1.0)?;
    println!("{:>20}: σ = {}, C = {:.6}", "small n", small.sigma, small.fit.fitted_constant);
    show(
        "difference, large n",
        &kernel::smoothness_large_n_fit(&half, 1.0)?,
        &kernel::smoothness_large_n_fit(&table, 1.0)?,
    );
    show(
        "difference, Hölder",
        &kernel::smoothness_holder_fit(&half, 0.5)?,
        &kernel::smoothness_holder_fit(&table, 0.5)?,
    );

    let calderon = kernel::calderon_kernel_lemma_check(&report::calderon_t_values(), &report::calderon_pairs(128))?;
    println!("{:>20}: C = {:.4} over {} samples", "Calderón kernel", calderon.fitted_constant, calderon.sample_count);
    Ok(())
}
