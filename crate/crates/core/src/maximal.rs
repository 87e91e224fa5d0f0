//! The convolution action on summable sequences over ℤ, its truncated
//! maximal function and empirical weak (1,1) constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{direct_product, fft_product, LatticeMeasure, DIRECT_WIDTH_LIMIT};
use crate::summation;

/// Default lower end of the λ grid.
pub const DEFAULT_LAMBDA_MIN: f64 = 1e-4;
/// Default number of λ grid points.
pub const DEFAULT_LAMBDA_POINTS: usize = 40;
/// Largest relative growth of the headline constant accepted under doubling.
pub const DOUBLING_THRESHOLD: f64 = 0.25;

/// A finitely supported real sequence on ℤ: `values[i]` sits at `offset + i`.
///
/// Reads the same JSON shape as a measure; `tail_mass` is accepted for
/// compatibility and must be zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct LatticeSequence {
    offset: i64,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    offset: i64,
    weights: Vec<f64>,
    #[serde(default)]
    tail_mass: f64,
}

impl TryFrom<RawSequence> for LatticeSequence {
    type Error = Error;

    fn try_from(raw: RawSequence) -> Result<Self> {
        if raw.tail_mass != 0.0 {
            return Err(Error::arg("tail_mass", "a test sequence carries no tail mass"));
        }
        LatticeSequence::new(raw.offset, raw.weights)
    }
}

impl LatticeSequence {
    pub fn new(offset: i64, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::arg("weights", "empty"));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::arg("weights", format!("entry {i} is not finite")));
        }
        Ok(Self { offset, weights })
    }

    /// The indicator of `{k}`.
    pub fn delta(k: i64) -> Self {
        Self {
            offset: k,
            weights: vec![1.0],
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, k: i64) -> f64 {
        usize::try_from(k - self.offset)
            .ok()
            .and_then(|i| self.weights.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.offset + i as i64, w))
    }

    /// `‖φ‖₁ = Σ|φ(k)|`.
    pub fn l1_norm(&self) -> f64 {
        summation::sum(self.weights.iter().map(|w| w.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            offset: self.offset,
            weights: self.weights.iter().map(|w| c * w).collect(),
        }
    }
}

/// `μ ∗ φ` for a measure and a sequence.
fn act(power: &LatticeMeasure, phi: &LatticeSequence) -> LatticeSequence {
    let weights = if power.width().min(phi.weights.len()) <= DIRECT_WIDTH_LIMIT {
        direct_product(power.weights(), &phi.weights)
    } else {
        fft_product(power.weights(), &phi.weights)
    };
    LatticeSequence {
        offset: power.offset() + phi.offset,
        weights,
    }
}

/// `μⁿ ∗ φ`.
pub fn convolution_action(mu: &LatticeMeasure, phi: &LatticeSequence, n: u64) -> Result<LatticeSequence> {
    if n == 0 {
        return Ok(phi.clone());
    }
    Ok(act(&mu.power_auto(n)?, phi))
}

/// `Mφ(k) = max_{1≤n≤n_max} |(μⁿ ∗ φ)(k)|` on the full reachable window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalFunction {
    pub n_max: u64,
    pub offset: i64,
    pub values: Vec<f64>,
}

impl MaximalFunction {
    pub fn get(&self, k: i64) -> f64 {
        usize::try_from(k - self.offset)
            .ok()
            .and_then(|i| self.values.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Computes `Mφ` with powers built incrementally, `μⁿ = μⁿ⁻¹ ∗ μ`.
pub fn maximal_function(mu: &LatticeMeasure, phi: &LatticeSequence, n_max: u64) -> Result<MaximalFunction> {
    if n_max == 0 {
        return Err(Error::arg("n_max", "must be at least 1"));
    }
    let (start, end) = (*mu.support_range().start(), *mu.support_range().end());
    let reach = n_max as i64;
    let offset = phi.offset + start.min(reach * start);
    let hi = phi.offset + phi.weights.len() as i64 - 1 + end.max(reach * end);
    let mut values = vec![0.0f64; (hi - offset + 1) as usize];
    let mut power = mu.clone();
    for n in 1..=n_max {
        if n > 1 {
            power = power.convolve_auto(mu)?;
        }
        let action = act(&power, phi);
        let start = (action.offset - offset) as usize;
        for (slot, &v) in values[start..].iter_mut().zip(&action.weights) {
            *slot = slot.max(v.abs());
        }
    }
    Ok(MaximalFunction { n_max, offset, values })
}

/// `count(λ) = |{k : Mφ(k) > λ}|` and `constant(λ) = λ·count(λ)/‖φ‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetCurve {
    pub n_max: u64,
    pub phi_norm: f64,
    /// Descending.
    pub lambda_values: Vec<f64>,
    pub counts: Vec<u64>,
    pub constants: Vec<f64>,
}

impl LevelSetCurve {
    /// `max_λ constant(λ)`.
    pub fn headline(&self) -> f64 {
        self.constants.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `lambda, count, constant`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["lambda", "count", "constant"])?;
        for ((l, c), k) in self.lambda_values.iter().zip(&self.counts).zip(&self.constants) {
            out.write_record(&[l.to_string(), c.to_string(), k.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `points` logarithmically spaced values from 1 down to `lambda_min`.
pub fn lambda_grid(lambda_min: f64, points: usize) -> Result<Vec<f64>> {
    if !(lambda_min > 0.0 && lambda_min < 1.0) {
        return Err(Error::arg("lambda_min", format!("must lie in (0, 1), got {lambda_min}")));
    }
    if points < 2 {
        return Err(Error::arg("points", "need at least two grid points"));
    }
    let log_min = lambda_min.ln();
    let mut grid: Vec<f64> = (0..points)
        .map(|i| (log_min * i as f64 / (points - 1) as f64).exp())
        .collect();
    grid[0] = 1.0;
    grid[points - 1] = lambda_min;
    Ok(grid)
}

pub fn weak_type_curve(m_phi: &MaximalFunction, phi_norm: f64, lambda_values: &[f64]) -> Result<LevelSetCurve> {
    if !(phi_norm > 0.0 && phi_norm.is_finite()) {
        return Err(Error::Refused("the test sequence has zero norm".to_string()));
    }
    if let Some(l) = lambda_values.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::arg("lambda_values", format!("{l} is not a positive real")));
    }
    let mut lambdas = lambda_values.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.dedup();
    let mut sorted = m_phi.values.clone();
    sorted.sort_by(f64::total_cmp);
    let counts: Vec<u64> = lambdas
        .iter()
        .map(|&l| (sorted.len() - sorted.partition_point(|&v| v <= l)) as u64)
        .collect();
    let constants = lambdas
        .iter()
        .zip(&counts)
        .map(|(&l, &c)| l * c as f64 / phi_norm)
        .collect();
    Ok(LevelSetCurve {
        n_max: m_phi.n_max,
        phi_norm,
        lambda_values: lambdas,
        counts,
        constants,
    })
}

/// Headline constants at `n_max` and `2·n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingTest {
    pub n_max: u64,
    pub headline: f64,
    pub doubled_headline: f64,
    /// `(doubled − headline)/headline`.
    pub growth: f64,
    pub within_threshold: bool,
}

pub fn doubling_test(
    mu: &LatticeMeasure,
    phi: &LatticeSequence,
    n_max: u64,
    lambda_values: &[f64],
) -> Result<(LevelSetCurve, LevelSetCurve, DoublingTest)> {
    let norm = phi.l1_norm();
    let base = weak_type_curve(&maximal_function(mu, phi, n_max)?, norm, lambda_values)?;
    let doubled = weak_type_curve(&maximal_function(mu, phi, 2 * n_max)?, norm, lambda_values)?;
    let (h, d) = (base.headline(), doubled.headline());
    let growth = if h > 0.0 {
        (d - h) / h
    } else if d > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let test = DoublingTest {
        n_max,
        headline: h,
        doubled_headline: d,
        growth,
        within_threshold: growth < DOUBLING_THRESHOLD,
    };
    Ok((base, doubled, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn translation_example() {
        let m = maximal_function(&LatticeMeasure::dirac(1), &LatticeSequence::delta(0), 3).unwrap();
        for k in -2..=6 {
            let expected = if (1..=3).contains(&k) { 1.0 } else { 0.0 };
            assert_eq!(m.get(k), expected, "k={k}");
        }
    }

    #[test]
    fn negative_translation() {
        let m = maximal_function(&LatticeMeasure::dirac(-1), &LatticeSequence::new(2, vec![1.0, 3.0]).unwrap(), 3).unwrap();
        assert_eq!(m.offset, -1);
        assert_eq!((m.get(-1), m.get(0), m.get(1), m.get(2)), (1.0, 3.0, 3.0, 3.0));
    }

    #[test]
    fn lazy_walk_enumeration() {
        let m = maximal_function(&zoo::lazy_walk(), &LatticeSequence::delta(0), 64).unwrap();
        assert_eq!(m.get(0), 0.5);
        // μ(±1) = 1/4 and μ²(±1) = 4/16
        assert_eq!(m.get(1), 0.25);
        assert_eq!(m.get(-1), 0.25);
        assert!(m.get(2) < 0.25);

        let grid = [0.6, 0.4];
        let curve = weak_type_curve(&m, 1.0, &grid).unwrap();
        assert_eq!(curve.counts, vec![0, 1]);
        assert_eq!(curve.constants, vec![0.0, 0.4]);
    }

    #[test]
    fn homogeneity() {
        let mu = zoo::uniform(-1, 2).unwrap();
        let phi = LatticeSequence::new(-2, vec![1.0, -0.5, 0.25]).unwrap();
        let m1 = maximal_function(&mu, &phi, 10).unwrap();
        let m2 = maximal_function(&mu, &phi.scale(2.0), 10).unwrap();
        for (a, b) in m1.values.iter().zip(&m2.values) {
            assert!((2.0 * a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn sup_dominates_each_power() {
        let mu = zoo::power_law(2.5, 40).unwrap().measure;
        let phi = LatticeSequence::new(3, vec![0.5, -1.0, 2.0]).unwrap();
        let m = maximal_function(&mu, &phi, 12).unwrap();
        for n in [1, 5, 12] {
            let a = convolution_action(&mu, &phi, n).unwrap();
            for (k, v) in a.iter() {
                assert!(m.get(k) + 1e-14 >= v.abs(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn lambda_grid_shape() {
        let g = lambda_grid(1e-4, 40).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!((g[0], g[39]), (1.0, 1e-4));
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        assert!(lambda_grid(0.0, 40).is_err());
    }

    #[test]
    fn zero_sequence_is_refused() {
        let phi = LatticeSequence::new(0, vec![0.0, 0.0]).unwrap();
        let m = maximal_function(&zoo::lazy_walk(), &phi, 4).unwrap();
        assert!(matches!(weak_type_curve(&m, phi.l1_norm(), &[0.5]), Err(Error::Refused(_))));
    }

    #[test]
    fn json_shape() {
        let phi: LatticeSequence = serde_json::from_str(r#"{"offset": -1, "weights": [2.0, -3.0]}"#).unwrap();
        assert_eq!(phi.get(0), -3.0);
        assert_eq!(phi.l1_norm(), 5.0);
        assert!(serde_json::from_str::<LatticeSequence>(r#"{"offset": 0, "weights": [1.0], "x": 1}"#).is_err());
        assert!(serde_json::from_str::<LatticeSequence>(r#"{"offset": 0, "weights": []}"#).is_err());
    }
}
