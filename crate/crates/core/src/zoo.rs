//! Constructors for the measure families used throughout the crate, plus
//! the JSON `MeasureSpec` that names them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::LatticeMeasure;
use crate::summation;

/// Truncation radius used for spectral work when a spec leaves `K` unset.
pub const DEFAULT_SPECTRAL_K: u64 = 100_000;
/// Truncation radius used for kernel tables when a spec leaves `K` unset.
pub const DEFAULT_KERNEL_K: u64 = 1_000;

/// Provenance of a truncated infinite-support law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Atoms with `|k| > radius` were dropped.
    pub radius: u64,
    /// Mass of the dropped atoms under the untruncated law, before
    /// renormalization.
    pub tail_deficit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltMeasure {
    pub measure: LatticeMeasure,
    pub truncation: Option<Truncation>,
}

/// `s_K/|k|^β` for `0 < |k| ≤ K`, renormalized.
pub fn power_law(beta: f64, k_max: u64) -> Result<BuiltMeasure> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::arg("beta", format!("power law needs beta > 1, got {beta}")));
    }
    if k_max < 10 {
        return Err(Error::arg("K", format!("power law truncation must be ≥ 10, got {k_max}")));
    }
    let half: Vec<f64> = (1..=k_max).map(|k| (k as f64).powf(-beta)).collect();
    let partial = summation::sum(half.iter().copied());
    let tail = power_tail(beta, k_max);
    let scale = 0.5 / partial;
    let measure = symmetric_from_half(half.into_iter().map(|w| w * scale).collect(), 1)?;
    Ok(BuiltMeasure {
        measure,
        truncation: Some(Truncation {
            radius: k_max,
            tail_deficit: tail / (partial + tail),
        }),
    })
}

/// Normalizing constant `s = 1/Σ_{k≠0}|k|^{−β}` of the untruncated power law.
pub fn power_law_constant(beta: f64) -> f64 {
    let k = 1_000u64;
    let partial = summation::sum((1..=k).map(|j| (j as f64).powf(-beta)));
    0.5 / (partial + power_tail(beta, k))
}

/// Euler–Maclaurin estimate of `Σ_{k>K} k^{−β}`.
fn power_tail(beta: f64, k_max: u64) -> f64 {
    let k = k_max as f64;
    k.powf(1.0 - beta) / (beta - 1.0) - 0.5 * k.powf(-beta) + beta / 12.0 * k.powf(-beta - 1.0)
}

/// `c_K/(|k| log²|k|)` for `2 ≤ |k| ≤ K`, renormalized.
pub fn log_squared(k_max: u64) -> Result<BuiltMeasure> {
    if k_max < 3 {
        return Err(Error::arg("K", format!("log-squared truncation must be ≥ 3, got {k_max}")));
    }
    let half: Vec<f64> = (2..=k_max)
        .map(|k| {
            let x = k as f64;
            1.0 / (x * x.ln().powi(2))
        })
        .collect();
    let partial = summation::sum(half.iter().copied());
    let scale = 0.5 / partial;
    let measure = symmetric_from_half(half.into_iter().map(|w| w * scale).collect(), 2)?;
    // Σ_{k>K} 1/(k ln²k) ≈ 1/ln K.
    let tail = 1.0 / (k_max as f64).ln();
    Ok(BuiltMeasure {
        measure,
        truncation: Some(Truncation {
            radius: k_max,
            tail_deficit: tail / (partial + tail),
        }),
    })
}

/// Builds `μ(±k) = half[k − first]`, mirrored bit-exactly.
fn symmetric_from_half(half: Vec<f64>, first: u64) -> Result<LatticeMeasure> {
    let k_max = first + half.len() as u64 - 1;
    let mut weights = Vec::with_capacity(2 * k_max as usize + 1);
    weights.extend(half.iter().rev().copied());
    weights.extend(std::iter::repeat(0.0).take(2 * first as usize - 1));
    weights.extend(half.iter().copied());
    LatticeMeasure::new(-(k_max as i64), weights, 0.0)
}

/// `¼δ₋₁ + ½δ₀ + ¼δ₁`.
pub fn lazy_walk() -> LatticeMeasure {
    LatticeMeasure::new(-1, vec![0.25, 0.5, 0.25], 0.0).expect("valid weights")
}

/// Uniform measure on the integers `lo..=hi`.
pub fn uniform(lo: i64, hi: i64) -> Result<LatticeMeasure> {
    if hi < lo {
        return Err(Error::arg("hi", "empty range"));
    }
    let n = (hi - lo + 1) as usize;
    LatticeMeasure::new(lo, vec![1.0 / n as f64; n], 0.0)
}

/// `a₁η + (1 − a₁)ν`.
pub fn mixture(a1: f64, eta: &LatticeMeasure, nu: &LatticeMeasure) -> Result<LatticeMeasure> {
    if !(a1 > 0.0 && a1 <= 1.0) {
        return Err(Error::arg("a1", format!("mixture weight must lie in (0, 1], got {a1}")));
    }
    if a1 == 1.0 {
        return Ok(eta.clone());
    }
    eta.convex_combination(a1, nu)
}

/// The heavy-tailed mixture used as the running example: half a truncated
/// power law with exponent `beta`, half the lazy walk.
pub fn power_mixture(beta: f64, k_max: u64) -> Result<BuiltMeasure> {
    let eta = power_law(beta, k_max)?;
    Ok(BuiltMeasure {
        measure: mixture(0.5, &eta.measure, &lazy_walk())?,
        truncation: eta.truncation,
    })
}

/// JSON-serializable measure description: `{kind, params{...}, K}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Family {
    PowerLaw(PowerLawParams),
    Mixture(MixtureParams),
    LazyWalk(NoParams),
    Atoms(AtomsParams),
    LogSquared(NoParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawParams {
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    pub a1: f64,
    pub eta: Box<MeasureSpec>,
    pub nu: Box<MeasureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsParams {
    pub offset: i64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

impl MeasureSpec {
    pub fn new(family: Family, truncation: Option<u64>) -> Self {
        Self { family, truncation }
    }

    pub fn power_law(beta: f64, k_max: u64) -> Self {
        Self::new(Family::PowerLaw(PowerLawParams { beta }), Some(k_max))
    }

    pub fn lazy_walk() -> Self {
        Self::new(Family::LazyWalk(NoParams {}), None)
    }

    pub fn log_squared(k_max: u64) -> Self {
        Self::new(Family::LogSquared(NoParams {}), Some(k_max))
    }

    pub fn atoms(offset: i64, weights: Vec<f64>) -> Self {
        Self::new(Family::Atoms(AtomsParams { offset, weights }), None)
    }

    pub fn mixture(a1: f64, eta: MeasureSpec, nu: MeasureSpec) -> Self {
        Self::new(
            Family::Mixture(MixtureParams {
                a1,
                eta: Box::new(eta),
                nu: Box::new(nu),
            }),
            None,
        )
    }

    pub fn kind(&self) -> &'static str {
        match self.family {
            Family::PowerLaw(_) => "power_law",
            Family::Mixture(_) => "mixture",
            Family::LazyWalk(_) => "lazy_walk",
            Family::Atoms(_) => "atoms",
            Family::LogSquared(_) => "log_squared",
        }
    }

    /// Builds the measure; `default_k` applies to truncated families whose
    /// spec omits `K`. A `K` on a mixture is inherited by its components.
    pub fn build(&self, default_k: u64) -> Result<BuiltMeasure> {
        let k_max = self.truncation.unwrap_or(default_k);
        match &self.family {
            Family::PowerLaw(p) => power_law(p.beta, k_max),
            Family::LogSquared(_) => log_squared(k_max),
            Family::LazyWalk(_) => Ok(BuiltMeasure {
                measure: lazy_walk(),
                truncation: None,
            }),
            Family::Atoms(p) => Ok(BuiltMeasure {
                measure: LatticeMeasure::new(p.offset, p.weights.clone(), 0.0)?,
                truncation: None,
            }),
            Family::Mixture(p) => {
                let eta = p.eta.build(k_max)?;
                let nu = p.nu.build(k_max)?;
                let truncation = match (eta.truncation, nu.truncation) {
                    (Some(a), Some(b)) => Some(Truncation {
                        radius: a.radius.max(b.radius),
                        tail_deficit: p.a1 * a.tail_deficit + (1.0 - p.a1) * b.tail_deficit,
                    }),
                    (Some(a), None) => Some(Truncation {
                        tail_deficit: p.a1 * a.tail_deficit,
                        ..a
                    }),
                    (None, Some(b)) => Some(Truncation {
                        tail_deficit: (1.0 - p.a1) * b.tail_deficit,
                        ..b
                    }),
                    (None, None) => None,
                };
                Ok(BuiltMeasure {
                    measure: mixture(p.a1, &eta.measure, &nu.measure)?,
                    truncation,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_constant_approaches_zeta() {
        // 1/(2ζ(3)) with ζ(3) = 1.2020569031595942.
        let expected = 0.5 / 1.202_056_903_159_594_2;
        assert!((power_law_constant(3.0) - expected).abs() < 1e-12);
        let built = power_law(3.0, 100_000).unwrap();
        let s_k = built.measure.weight(1);
        assert!((s_k - 0.415_953).abs() < 1e-6);
        assert!(built.truncation.unwrap().tail_deficit < 1e-10);
    }

    #[test]
    fn power_law_is_symmetric_and_centered() {
        for beta in [2.25, 2.5, 3.0, 4.0] {
            let m = power_law(beta, 1000).unwrap().measure;
            assert!(m.is_symmetric());
            assert_eq!(m.weight(0), 0.0);
            assert!(m.expectation().abs() < 1e-15);
        }
    }

    #[test]
    fn power_law_rejects_bad_parameters() {
        assert!(power_law(1.0, 100).is_err());
        assert!(power_law(0.5, 100).is_err());
        assert!(power_law(3.0, 5).is_err());
    }

    #[test]
    fn second_moment_diverges_for_beta_two_and_a_half() {
        // m₂ = 2 s_K Σ_{k≤K} k^{-1/2} ≈ 4 s √K.
        let m_small = power_law(2.5, 10_000).unwrap().measure.moment(2.0).unwrap().value;
        let m_large = power_law(2.5, 40_000).unwrap().measure.moment(2.0).unwrap().value;
        let oracle = |k: u64| {
            let s = 0.5 / summation::sum((1..=k).map(|j| (j as f64).powf(-2.5)));
            2.0 * s * summation::sum((1..=k).map(|j| (j as f64).powf(-0.5)))
        };
        assert!((m_small - oracle(10_000)).abs() < 1e-9 * m_small);
        assert!((m_large - oracle(40_000)).abs() < 1e-9 * m_large);
        // quadrupling K roughly doubles m₂
        assert!(m_large / m_small > 1.9 && m_large / m_small < 2.05);
    }

    #[test]
    fn mixture_examples() {
        let eta = power_law(3.0, 100).unwrap().measure;
        let nu = lazy_walk();
        assert_eq!(mixture(1.0, &eta, &nu).unwrap(), eta);
        let mu = mixture(0.5, &eta, &nu).unwrap();
        assert!(mu.expectation().abs() < 1e-15);
        assert!(mixture(0.0, &eta, &nu).is_err());
        assert!(mixture(1.5, &eta, &nu).is_err());
    }

    #[test]
    fn lazy_walk_basics() {
        let m = lazy_walk();
        assert_eq!(m.moment(2.0).unwrap().value, 0.5);
        assert!(m.is_strictly_aperiodic());
    }

    #[test]
    fn log_squared_properties() {
        let m = log_squared(1000).unwrap().measure;
        assert!(m.is_symmetric());
        assert_eq!(m.expectation(), 0.0);
        for k in 2..1000 {
            assert!(m.weight(k) >= m.weight(k + 1));
        }
        assert_eq!(m.weight(1), 0.0);
        let small = m.moment(0.5).unwrap().value;
        let large = log_squared(10_000).unwrap().measure.moment(0.5).unwrap().value;
        assert!(large > small);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = MeasureSpec::mixture(
            0.5,
            MeasureSpec::power_law(3.0, 1000),
            MeasureSpec::lazy_walk(),
        );
        let text = serde_json::to_string(&spec).unwrap();
        let back: MeasureSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let parsed: MeasureSpec =
            serde_json::from_str(r#"{"kind":"power_law","params":{"beta":2.5},"K":1000}"#).unwrap();
        assert_eq!(parsed, MeasureSpec::power_law(2.5, 1000));

        let lazy: MeasureSpec = serde_json::from_str(r#"{"kind":"lazy_walk","params":{}}"#).unwrap();
        assert_eq!(lazy, MeasureSpec::lazy_walk());
    }

    #[test]
    fn spec_rejects_unknown_kind_and_fields() {
        let err = serde_json::from_str::<MeasureSpec>(r#"{"kind":"cauchy","params":{}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("cauchy"), "{err}");
        let err = serde_json::from_str::<MeasureSpec>(
            r#"{"kind":"power_law","params":{"betta":3.0}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("betta"), "{err}");
    }
}
