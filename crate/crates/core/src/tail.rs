//! Tail growth of the truncated second moment and the matching smoothness
//! exponent of `θ′`.
//!
//! A growth rate `S(n) = Σ_{|k|≤n} k²μ(k) = O(n^{1−α})` on the weight side
//! pairs with `θ′ ∈ Lip(α)` on the transform side, so the two estimators
//! here should sum to roughly 1 for power laws `|k|^{−(2+σ)}`. The pairing
//! is a heuristic for positive weights, not a theorem about them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::LatticeMeasure;
use crate::spectral::SpectralProfile;
use crate::summation::NeumaierSum;

/// Largest `n` used for curves of untruncated finite-support measures.
pub const FINITE_SUPPORT_N_MAX: u64 = 1 << 20;

/// `S(n)` sampled at ascending `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub n_values: Vec<u64>,
    pub s_values: Vec<f64>,
    /// Truncation radius of the source law, if it was truncated.
    pub truncation_radius: Option<u64>,
}

/// Least-squares growth exponent of a [`GrowthCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    /// Curve indices `[start, end)` used by the fit.
    pub fit_window: (usize, usize),
    /// Max deviation of the log-log points from the fitted line.
    pub residual: f64,
    /// The curve is flat at the top of the window (bounded `S`).
    pub saturated: bool,
}

/// `1, 2, 4, …` up to `max`.
pub fn dyadic_n_values(max: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| n.checked_mul(2))
        .take_while(|&n| n <= max)
        .collect()
}

/// Default sample points: dyadic up to the truncation radius, or up to
/// [`FINITE_SUPPORT_N_MAX`] for a genuinely finite measure.
pub fn default_n_values(truncation_radius: Option<u64>) -> Vec<u64> {
    dyadic_n_values(truncation_radius.unwrap_or(FINITE_SUPPORT_N_MAX))
}

/// `S(n) = Σ_{|k|≤n} k²μ(k)` by a running compensated prefix sum.
///
/// For truncated laws, `n` beyond the truncation radius is refused: the
/// curve would be flat there for reasons unrelated to the law.
pub fn partial_second_moment_curve(
    mu: &LatticeMeasure,
    n_values: &[u64],
    truncation_radius: Option<u64>,
) -> Result<GrowthCurve> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("n_values", "must be nonempty and strictly ascending"));
    }
    let n_max = *n_values.last().unwrap();
    if let Some(radius) = truncation_radius {
        if n_max > radius {
            return Err(Error::arg(
                "n_values",
                format!("n = {n_max} exceeds the truncation radius {radius}"),
            ));
        }
    }
    let stop = n_max.min(mu.support_radius().max(0) as u64);
    let mut s_values = Vec::with_capacity(n_values.len());
    let mut acc = NeumaierSum::new();
    let mut running = 0.0f64;
    let mut m = 0u64;
    for &n in n_values {
        while m < n.min(stop) {
            m += 1;
            let k = m as i64;
            let mass = mu.weight(k) + mu.weight(-k);
            if mass > 0.0 {
                acc.add((m as f64) * (m as f64) * mass);
            }
        }
        // nonnegative summands: keep the rounded prefix sums monotone
        running = running.max(acc.value());
        s_values.push(running);
    }
    Ok(GrowthCurve {
        n_values: n_values.to_vec(),
        s_values,
        truncation_radius,
    })
}

/// Growth exponent `e` with `S(n) ≈ c·n^e`.
///
/// The fit uses the dyadic log-derivative `(S(nᵢ) − S(nᵢ₋₁)) / ln(nᵢ/nᵢ₋₁)`
/// against the geometric midpoint; it scales like `n^e` for power growth
/// and is flat for logarithmic growth, where a log-log fit of `S` itself
/// would carry a slowly vanishing positive bias. The window drops the
/// first decade of `n` and, for truncated laws, everything within 10× of
/// the truncation radius.
pub fn growth_exponent(curve: &GrowthCurve) -> Result<GrowthFit> {
    let n = &curve.n_values;
    let lo = n[0].max(1).saturating_mul(10);
    let hi = curve.truncation_radius.map_or(u64::MAX, |r| r / 10);
    let start = n.iter().position(|&v| v >= lo).unwrap_or(n.len());
    let end = n.iter().rposition(|&v| v <= hi).map_or(0, |i| i + 1);
    if end <= start || end - start < 8 || (n[end - 1] as f64) < 100.0 * n[start] as f64 {
        return Err(Error::Refused(format!(
            "fit window needs ≥ 8 points spanning ≥ 2 decades; got {} points in [{lo}, {hi}]",
            end.saturating_sub(start)
        )));
    }
    let s = &curve.s_values;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut last_increment = 0.0;
    for i in start + 1..end {
        let increment = s[i] - s[i - 1];
        last_increment = increment;
        if increment > 0.0 {
            let (a, b) = (n[i - 1] as f64, n[i] as f64);
            xs.push(0.5 * (a.ln() + b.ln()));
            ys.push((increment / (b / a).ln()).ln());
        }
    }
    if last_increment <= 0.0 || xs.len() < 2 {
        return Ok(GrowthFit {
            exponent: 0.0,
            fit_window: (start, end),
            residual: 0.0,
            saturated: true,
        });
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(GrowthFit {
        exponent: slope,
        fit_window: (start, end),
        residual,
        saturated: false,
    })
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzOptions {
    /// Smallest step is `2^min_step_log2` grid spacings.
    pub min_step_log2: u32,
    /// Largest step is `2^max_step_log2` grid spacings.
    pub max_step_log2: u32,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        Self {
            min_step_log2: 1,
            max_step_log2: 9,
        }
    }
}

/// Hölder exponent of `θ′` from `M(h) = max_t |θ′(t + h) − θ′(t)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Fitted slope of `log M(h)` against `log h`; `None` stands for `+∞`
    /// (`θ′` constant, as for a single atom).
    pub exponent: Option<f64>,
    pub steps: Vec<f64>,
    pub moduli: Vec<f64>,
    pub residual: f64,
}

/// Fits the modulus of continuity of `θ′` over dyadic steps on the
/// profile grid (periodic in `t`).
pub fn lipschitz_exponent_estimate(
    profile: &SpectralProfile,
    options: LipschitzOptions,
) -> Result<LipschitzEstimate> {
    let n = profile.size();
    let d1 = profile.d1_full();
    let js: Vec<u32> = (options.min_step_log2..=options.max_step_log2)
        .filter(|&j| (1usize << j) < n / 2)
        .collect();
    if js.len() < 4 {
        return Err(Error::Refused(format!(
            "need ≥ 4 dyadic steps below half the grid, got {}",
            js.len()
        )));
    }
    let h0 = profile.spacing();
    let mut steps = Vec::with_capacity(js.len());
    let mut moduli = Vec::with_capacity(js.len());
    for &j in &js {
        let shift = 1usize << j;
        let m = (0..n)
            .map(|p| (d1[(p + shift) % n] - d1[p]).norm())
            .fold(0.0, f64::max);
        steps.push(h0 * shift as f64);
        moduli.push(m);
    }
    let scale = moduli.iter().copied().fold(0.0, f64::max);
    // differences at round-off level carry no smoothness information
    let floor = 1e-13 * d1.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    if scale <= floor {
        return Ok(LipschitzEstimate {
            exponent: None,
            steps,
            moduli,
            residual: 0.0,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(&moduli)
        .filter(|(_, m)| **m > floor)
        .map(|(h, m)| (h.ln(), m.ln()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::Refused("fewer than 4 steps above round-off".to_string()));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(LipschitzEstimate {
        exponent: Some(slope),
        steps,
        moduli,
        residual,
    })
}

impl GrowthCurve {
    /// CSV with columns `n, S(n)`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["n", "s"])?;
        for (n, s) in self.n_values.iter().zip(&self.s_values) {
            out.write_record(&[n.to_string(), s.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}
