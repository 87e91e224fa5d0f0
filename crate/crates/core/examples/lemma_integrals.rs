// Majorant constant and the two integrals that stay bounded in n.

use convpow::spectral::{self, GridOptions, PhiEvaluator, SpectralProfile};
use convpow::zoo;

fn main() -> convpow::Result<()> {
    let closed = spectral::lemma_integrals(|_| 1.0, 1.0, 0.5, &[4])?;
    println!("φ ≡ 1, k = 1, δ = ½: J1(4) = {:.10} (1 − (3/4)^4 = {})", closed.j1[0], 1.0 - 0.75f64.powi(4));

    let mu = zoo::power_mixture(3.0, zoo::DEFAULT_SPECTRAL_K)?.measure;
    let profile = SpectralProfile::compute(&mu, GridOptions::default())?;
    let majorant = spectral::majorant_fit(&profile, 0.25)?;
    let evaluator = PhiEvaluator::new(&mu);
    let integrals = spectral::lemma_integrals(|t| evaluator.phi(t), majorant.k_star, 0.25, &[10, 100, 1_000, 10_000])?;
    for (i, n) in integrals.n_values.iter().enumerate() {
        println!("n = {n:>5}: J1 = {:.4}, J2 = {:?}", integrals.j1[i], integrals.j2[i]);
    }
    Ok(())
}
