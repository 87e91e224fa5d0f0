//! Probability measures on ℤ with finite stored support.
//!
//! A [`LatticeMeasure`] stores a contiguous weight window starting at
//! `offset` together with the mass that was cut away when an
//! infinite-support law was truncated.

use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::{self, NeumaierSum};

/// Allowed deviation of `sum(weights) + tail_mass` from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Largest negative round-off mass the transform product may clamp away.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct LatticeMeasure {
    offset: i64,
    weights: Vec<f64>,
    tail_mass: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    offset: i64,
    weights: Vec<f64>,
    #[serde(default)]
    tail_mass: f64,
}

impl TryFrom<RawMeasure> for LatticeMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        LatticeMeasure::new(raw.offset, raw.weights, raw.tail_mass)
    }
}

/// Result of [`LatticeMeasure::moment`]. When the measure carries truncated
/// tail mass, `value` only bounds the true moment from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub lower_bound_only: bool,
}

/// How [`LatticeMeasure::power`] multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMethod {
    /// `n − 1` direct convolutions with `μ`.
    Direct,
    /// Binary exponentiation with FFT-based products.
    Fast,
}

impl LatticeMeasure {
    /// Builds a measure, validating weights and trimming zero edges.
    pub fn new(offset: i64, weights: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidMeasure(format!(
                "weight at index {i} is {w}; weights must be finite and nonnegative"
            )));
        }
        if !tail_mass.is_finite() || tail_mass < 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "tail_mass {tail_mass} must be finite and nonnegative"
            )));
        }
        let total = summation::sum(weights.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total} differs from 1 by more than {NORMALIZATION_TOLERANCE:e}"
            )));
        }
        Self::from_parts_unchecked(offset, weights, tail_mass)
    }

    /// Trims zero edges without re-checking normalization.
    pub(crate) fn from_parts_unchecked(
        offset: i64,
        mut weights: Vec<f64>,
        tail_mass: f64,
    ) -> Result<Self> {
        let first = weights.iter().position(|&w| w > 0.0).ok_or_else(|| {
            Error::InvalidMeasure("measure has no positive weight".to_string())
        })?;
        let last = weights.iter().rposition(|&w| w > 0.0).unwrap();
        weights.truncate(last + 1);
        weights.drain(..first);
        Ok(Self {
            offset: offset + first as i64,
            weights,
            tail_mass,
        })
    }

    /// The unit mass `δ_k`.
    pub fn dirac(k: i64) -> Self {
        Self {
            offset: k,
            weights: vec![1.0],
            tail_mass: 0.0,
        }
    }

    /// Measure from `(point, weight)` pairs; repeated points accumulate.
    pub fn from_atoms(atoms: &[(i64, f64)]) -> Result<Self> {
        let lo = atoms
            .iter()
            .map(|a| a.0)
            .min()
            .ok_or_else(|| Error::InvalidMeasure("no atoms given".to_string()))?;
        let hi = atoms.iter().map(|a| a.0).max().unwrap();
        let mut weights = vec![0.0; (hi - lo + 1) as usize];
        for &(k, w) in atoms {
            weights[(k - lo) as usize] += w;
        }
        Self::new(lo, weights, 0.0)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `μ(k)`, zero outside the stored window.
    pub fn weight(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i >= self.weights.len() as i64 {
            0.0
        } else {
            self.weights[i as usize]
        }
    }

    pub fn support_range(&self) -> RangeInclusive<i64> {
        self.offset..=self.offset + self.weights.len() as i64 - 1
    }

    /// `max |k|` over the stored window.
    pub fn support_radius(&self) -> i64 {
        let r = self.support_range();
        r.start().abs().max(r.end().abs())
    }

    /// Number of stored weights (the window length, not the atom count).
    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn is_single_atom(&self) -> bool {
        self.weights.len() == 1
    }

    /// `(k, μ(k))` over the stored window in ascending `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.offset + i as i64, w))
    }

    pub fn stored_mass(&self) -> f64 {
        summation::sum(self.weights.iter().copied())
    }

    /// `μ(k) ↦ μ(−k)`.
    pub fn reflect(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.reverse();
        Self {
            offset: -(self.offset + self.weights.len() as i64 - 1),
            weights,
            tail_mass: self.tail_mass,
        }
    }

    /// Bit-exact symmetry `μ(k) = μ(−k)`.
    pub fn is_symmetric(&self) -> bool {
        let r = self.support_range();
        *r.start() == -*r.end() && self.weights.iter().eq(self.weights.iter().rev())
    }

    /// `E(μ) = Σ k μ(k)`.
    pub fn expectation(&self) -> f64 {
        summation::sum(self.iter().map(|(k, w)| k as f64 * w))
    }

    /// Absolute moment `m_p = Σ |k|^p μ(k)` over the stored window.
    pub fn moment(&self, p: f64) -> Result<Moment> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::arg("p", format!("moment order must be positive, got {p}")));
        }
        let value = summation::sum(self.iter().map(|(k, w)| (k.abs() as f64).powf(p) * w));
        Ok(Moment {
            value,
            lower_bound_only: self.tail_mass > 0.0,
        })
    }

    /// True iff the support is not contained in a proper coset `a + dℤ`,
    /// i.e. the gcd of support differences is 1. A single atom returns
    /// false.
    pub fn is_strictly_aperiodic(&self) -> bool {
        let mut points = self.iter().filter(|(_, w)| *w > 0.0).map(|(k, _)| k);
        let Some(first) = points.next() else {
            return false;
        };
        let mut g = 0u64;
        for k in points {
            g = gcd(g, (k - first).unsigned_abs());
            if g == 1 {
                return true;
            }
        }
        g == 1
    }

    /// `μ ∗ ν` by the direct double sum.
    pub fn convolve(&self, other: &Self) -> Self {
        let weights = direct_product(&self.weights, &other.weights);
        self.product_result(other, weights)
    }

    /// `μ ∗ ν` through an FFT product with round-off clamping.
    pub fn convolve_fft(&self, other: &Self) -> Result<Self> {
        let target = self.stored_mass() * other.stored_mass();
        let weights = clamp_renormalize(fft_product(&self.weights, &other.weights), target)?;
        Ok(self.product_result(other, weights))
    }

    /// Direct product for narrow factors, FFT product otherwise.
    pub(crate) fn convolve_auto(&self, other: &Self) -> Result<Self> {
        if self.width().min(other.width()) <= DIRECT_WIDTH_LIMIT {
            Ok(self.convolve(other))
        } else {
            self.convolve_fft(other)
        }
    }

    fn product_result(&self, other: &Self, weights: Vec<f64>) -> Self {
        let offset = self.offset + other.offset;
        let mass = summation::sum(weights.iter().copied());
        let tail_mass = (1.0 - mass).max(0.0);
        Self::from_parts_unchecked(offset, weights, tail_mass)
            .unwrap_or_else(|_| Self::dirac(offset))
    }

    /// `μⁿ`, the n-fold convolution power.
    pub fn power(&self, n: u64, method: PowerMethod) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("n", "convolution power requires n ≥ 1"));
        }
        match method {
            PowerMethod::Direct => {
                let mut acc = self.clone();
                for _ in 1..n {
                    acc = acc.convolve(self);
                }
                Ok(acc)
            }
            PowerMethod::Fast => self.power_by_squaring(n, |a, b| a.convolve_fft(b)),
        }
    }

    /// Binary exponentiation choosing the product per step.
    pub(crate) fn power_auto(&self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("n", "convolution power requires n ≥ 1"));
        }
        self.power_by_squaring(n, |a, b| a.convolve_auto(b))
    }

    fn power_by_squaring<F>(&self, mut n: u64, mul: F) -> Result<Self>
    where
        F: Fn(&Self, &Self) -> Result<Self>,
    {
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        loop {
            if n & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => mul(&r, &base)?,
                });
            }
            n >>= 1;
            if n == 0 {
                break;
            }
            base = mul(&base, &base)?;
        }
        Ok(result.expect("n ≥ 1"))
    }

    /// Convex combination `a·μ + (1 − a)·ν` on the union window.
    pub(crate) fn convex_combination(&self, a: f64, other: &Self) -> Result<Self> {
        let lo = self.offset.min(other.offset);
        let hi = (*self.support_range().end()).max(*other.support_range().end());
        let weights = (lo..=hi)
            .map(|k| a * self.weight(k) + (1.0 - a) * other.weight(k))
            .collect();
        let tail = a * self.tail_mass + (1.0 - a) * other.tail_mass;
        Self::new(lo, weights, tail)
    }
}

/// Narrow factors are multiplied directly; the double sum is exact up to
/// compensated rounding and cheaper than an FFT at this size.
pub(crate) const DIRECT_WIDTH_LIMIT: usize = 64;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn direct_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    (0..len)
        .map(|i| {
            let lo = i.saturating_sub(b.len() - 1);
            let hi = i.min(a.len() - 1);
            let mut acc = NeumaierSum::new();
            for j in lo..=hi {
                acc.add(a[j] * b[i - j]);
            }
            acc.value()
        })
        .collect()
}

/// Linear convolution of two real sequences through a zero-padded complex
/// FFT. The padded length is the next power of two at or above
/// `a.len() + b.len() − 1`.
pub(crate) fn fft_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let pad = |x: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (slot, &v) in buf.iter_mut().zip(x) {
            slot.re = v;
        }
        buf
    };
    let mut fa = pad(a);
    forward.process(&mut fa);
    if std::ptr::eq(a, b) {
        for z in fa.iter_mut() {
            *z = *z * *z;
        }
    } else {
        let mut fb = pad(b);
        forward.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= *y;
        }
    }
    inverse.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..len].iter().map(|z| z.re * scale).collect()
}

/// Clamps negative round-off to zero and rescales to `target` mass.
pub(crate) fn clamp_renormalize(mut weights: Vec<f64>, target: f64) -> Result<Vec<f64>> {
    for w in weights.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    let mass = summation::sum(weights.iter().copied());
    let deficit = target - mass;
    if deficit.abs() > CLAMP_TOLERANCE {
        return Err(Error::PrecisionExhausted {
            deficit,
            limit: CLAMP_TOLERANCE,
        });
    }
    if mass > 0.0 {
        let scale = target / mass;
        for w in weights.iter_mut() {
            *w *= scale;
        }
    }
    Ok(weights)
}

/// Shared handle used by profiles and tables that keep their source measure.
pub type SharedMeasure = Arc<LatticeMeasure>;

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy() -> LatticeMeasure {
        LatticeMeasure::new(-1, vec![0.25, 0.5, 0.25], 0.0).unwrap()
    }

    fn two_point() -> LatticeMeasure {
        LatticeMeasure::from_atoms(&[(-1, 0.5), (1, 0.5)]).unwrap()
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(LatticeMeasure::new(0, vec![0.5, -0.1, 0.6], 0.0).is_err());
        assert!(LatticeMeasure::new(0, vec![0.5, 0.4], 0.0).is_err());
        assert!(LatticeMeasure::new(0, vec![0.0, 0.0], 1.0).is_err());
        assert!(LatticeMeasure::new(0, vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn trims_zero_edges() {
        let m = LatticeMeasure::new(-3, vec![0.0, 0.0, 0.5, 0.5, 0.0], 0.0).unwrap();
        assert_eq!(m.offset(), -1);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(LatticeMeasure::dirac(0).expectation(), 0.0);
        assert_eq!(two_point().expectation(), 0.0);
        let m = LatticeMeasure::new(0, vec![0.5, 0.5], 0.0).unwrap();
        assert_eq!(m.expectation(), 0.5);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(two_point().moment(2.0).unwrap().value, 1.0);
        assert_eq!(LatticeMeasure::dirac(3).moment(1.0).unwrap().value, 3.0);
        assert!(two_point().moment(0.0).is_err());
        assert!(two_point().moment(-1.0).is_err());
        let truncated = LatticeMeasure::new(0, vec![0.5, 0.5 - 1e-13], 1e-13).unwrap();
        assert!(truncated.moment(1.0).unwrap().lower_bound_only);
    }

    #[test]
    fn convolve_examples() {
        let sq = two_point().convolve(&two_point());
        assert_eq!(sq.offset(), -2);
        assert_eq!(sq.weights(), &[0.25, 0.0, 0.5, 0.0, 0.25]);

        let shifted = LatticeMeasure::dirac(4).convolve(&LatticeMeasure::dirac(-7));
        assert_eq!(shifted, LatticeMeasure::dirac(-3));

        let lazy2 = lazy().convolve(&lazy());
        assert_eq!(lazy2.weight(0), 6.0 / 16.0);
    }

    #[test]
    fn power_examples() {
        for method in [PowerMethod::Direct, PowerMethod::Fast] {
            let p = LatticeMeasure::dirac(1).power(5, method).unwrap();
            assert_eq!(p.support_range(), 5..=5);
            assert!((p.weight(5) - 1.0).abs() < 1e-15);

            let coin = LatticeMeasure::new(0, vec![0.5, 0.5], 0.0).unwrap();
            let c3 = coin.power(3, method).unwrap();
            assert!((c3.weight(1) - 3.0 / 8.0).abs() < 1e-15);
        }
        assert!(lazy().power(0, PowerMethod::Direct).is_err());
    }

    #[test]
    fn strict_aperiodicity_examples() {
        let consecutive = LatticeMeasure::new(0, vec![0.5, 0.5], 0.0).unwrap();
        assert!(consecutive.is_strictly_aperiodic());
        assert!(!two_point().is_strictly_aperiodic());
        let even = LatticeMeasure::from_atoms(&[(-2, 0.3), (0, 0.4), (2, 0.3)]).unwrap();
        assert!(!even.is_strictly_aperiodic());
        assert!(!LatticeMeasure::dirac(5).is_strictly_aperiodic());
        assert!(lazy().is_strictly_aperiodic());
        let mixed = LatticeMeasure::from_atoms(&[(2, 0.3), (6, 0.3), (9, 0.4)]).unwrap();
        assert!(mixed.is_strictly_aperiodic());
    }

    #[test]
    fn clamp_rejects_large_deficit() {
        let err = clamp_renormalize(vec![0.5, -1e-6, 0.5], 1.0 - 1e-6).unwrap_err();
        assert!(matches!(err, Error::PrecisionExhausted { .. }));
        let ok = clamp_renormalize(vec![0.5, -1e-15, 0.5], 1.0).unwrap();
        assert_eq!(ok[1], 0.0);
    }

    #[test]
    fn reflect_and_symmetry() {
        let m = LatticeMeasure::new(2, vec![0.2, 0.8], 0.0).unwrap();
        let r = m.reflect();
        assert_eq!(r.support_range(), -3..=-2);
        assert_eq!(r.weight(-3), 0.8);
        assert!(lazy().is_symmetric());
        assert!(!m.is_symmetric());
    }

    #[test]
    fn json_shape() {
        let m = lazy();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"offset":-1,"weights":[0.25,0.5,0.25],"tail_mass":0.0}"#);
        let back: LatticeMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::from_str::<LatticeMeasure>(r#"{"offset":0,"weights":[0.7]}"#);
        assert!(bad.is_err());
    }
}
