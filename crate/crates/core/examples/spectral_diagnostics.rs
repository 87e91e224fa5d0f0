// Characteristic-function diagnostics: angular ratio, Gaussian majorant,
// the function φ and its properties near the origin.

use convpow::spectral::{self, GridOptions, SpectralProfile};
use convpow::{zoo, LatticeMeasure};

fn main() -> convpow::Result<()> {
    let cases = [
        ("uniform{-1,0,1}", zoo::uniform(-1, 1)?),
        ("½δ₀ + ½δ₁", LatticeMeasure::from_atoms(&[(0, 0.5), (1, 0.5)])?),
        ("lazy walk", zoo::lazy_walk()),
        ("power law β=3", zoo::power_law(3.0, zoo::DEFAULT_SPECTRAL_K)?.measure),
    ];
    for (name, mu) in &cases {
        let profile = SpectralProfile::compute(mu, GridOptions::default())?;
        let ratio = spectral::angular_ratio_sup(&profile)?;
        let petrov = spectral::petrov_constant(&profile)?;
        println!(
            "{name:>16}: angular ratio {:.6} (unbounded: {}), Petrov constant {:.6}",
            ratio.value, ratio.unbounded, petrov.value
        );
    }

    let mixture = zoo::power_mixture(3.0, zoo::DEFAULT_SPECTRAL_K)?.measure;
    let profile = SpectralProfile::compute(&mixture, GridOptions::default())?;
    let majorant = spectral::majorant_fit(&profile, 0.25)?;
    println!(
        "mixture: k* = {:.4} at t = {:.3e}, side condition holds: {}",
        majorant.k_star, majorant.argmin_t, majorant.side_condition_holds
    );
    let phi = spectral::phi_property_report(&profile, spectral::DEFAULT_PHI_WINDOW)?;
    println!(
        "mixture: φ symmetric {}, sup|f″|/φ = {:.3} (c₁ = {:?}), sup|tφ′|/φ = {:.3}, tφ windows {:?}",
        phi.symmetric, phi.f2_ratio, phi.c1, phi.log_derivative_ratio, phi.t_phi_windows
    );

    let grid = spectral::grid_aperiodicity(&zoo::lazy_walk(), 0.01, 1e-6)?;
    println!("lazy walk: max |θ| on |t| ≥ 0.01 is {:.6}", grid.max_modulus);
    Ok(())
}
