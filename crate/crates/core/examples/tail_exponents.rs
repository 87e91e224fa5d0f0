// Tail growth of the truncated second moment against the Hölder exponent
// of θ′ for power laws; for 2 < β < 3 the two exponents sum to about 1.

use convpow::spectral::{GridOptions, SpectralProfile};
use convpow::tail::{self, LipschitzOptions};
use convpow::zoo;

fn main() -> convpow::Result<()> {
    for beta in [2.25, 2.5, 2.75, 3.0] {
        let built = zoo::power_law(beta, 1_000_000)?;
        let radius = built.truncation.map(|t| t.radius);
        let curve = tail::partial_second_moment_curve(&built.measure, &tail::default_n_values(radius), radius)?;
        let growth = tail::growth_exponent(&curve)?;
        let profile = SpectralProfile::compute(&built.measure, GridOptions::default())?;
        let lipschitz = tail::lipschitz_exponent_estimate(&profile, LipschitzOptions::default())?;
        let holder = lipschitz.exponent.unwrap_or(f64::INFINITY);
        println!(
            "β = {beta}: growth exponent {:.3}, Hölder exponent {holder:.3}, sum {:.3}",
            growth.exponent,
            growth.exponent + holder
        );
    }
    Ok(())
}
