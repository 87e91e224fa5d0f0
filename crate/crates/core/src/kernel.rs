//! Kernel tables `μⁿ(x)` and empirical constants for the decay and
//! smoothness bounds on them.
//!
//! Every bound is checked in the form `|quantity| ≤ C · bound`, and the
//! fitted `C` is the largest ratio over the tested tuples. Stability of
//! `C` when the table grows is the numerical stand-in for "C does not
//! depend on n".

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::LatticeMeasure;

/// Relative change under table extension accepted as "independent of n".
pub const STABILITY_THRESHOLD: f64 = 0.10;

/// Row-mass tolerance for kernel tables.
pub const ROW_MASS_TOLERANCE: f64 = 1e-9;

/// `μⁿ(x)` for `n ∈ n_values` and `x` in a contiguous window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub source: String,
    pub n_values: Vec<u64>,
    pub x_min: i64,
    pub x_max: i64,
    /// `values[i][x − x_min] = μ^{n_values[i]}(x)`.
    pub values: Vec<Vec<f64>>,
    /// Total stored mass of each `μⁿ` over its full support.
    pub row_mass: Vec<f64>,
}

impl KernelTable {
    pub fn x_values(&self) -> RangeInclusive<i64> {
        self.x_min..=self.x_max
    }

    /// `μⁿ(x)` for the `row`-th n; zero outside the window.
    #[inline]
    pub fn get(&self, row: usize, x: i64) -> Option<f64> {
        if x < self.x_min || x > self.x_max {
            None
        } else {
            Some(self.values[row][(x - self.x_min) as usize])
        }
    }

    pub fn value(&self, n: u64, x: i64) -> Option<f64> {
        let row = self.n_values.binary_search(&n).ok()?;
        self.get(row, x)
    }

    /// Keeps the rows with `n ≤ n_max`.
    pub fn restrict_n(&self, n_max: u64) -> Self {
        let rows = self.n_values.partition_point(|&n| n <= n_max);
        Self {
            source: self.source.clone(),
            n_values: self.n_values[..rows].to_vec(),
            x_min: self.x_min,
            x_max: self.x_max,
            values: self.values[..rows].to_vec(),
            row_mass: self.row_mass[..rows].to_vec(),
        }
    }

    /// CSV with columns `n, x, value`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["n", "x", "value"])?;
        for (row, &n) in self.n_values.iter().enumerate() {
            for x in self.x_values() {
                let v = self.get(row, x).unwrap();
                out.write_record(&[n.to_string(), x.to_string(), v.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Builds the table incrementally: `μ^{nᵢ} = μ^{nᵢ₋₁} ∗ μ^{nᵢ − nᵢ₋₁}`.
pub fn kernel_table(
    mu: &LatticeMeasure,
    source: impl Into<String>,
    n_values: &[u64],
    x_values: RangeInclusive<i64>,
) -> Result<KernelTable> {
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("n_values", "must be nonempty, positive and strictly ascending"));
    }
    if x_values.is_empty() {
        return Err(Error::arg("x_values", "empty range"));
    }
    let (x_min, x_max) = (*x_values.start(), *x_values.end());
    let mut values = Vec::with_capacity(n_values.len());
    let mut row_mass = Vec::with_capacity(n_values.len());
    let mut current: Option<(u64, LatticeMeasure)> = None;
    let mut last_step: Option<(u64, LatticeMeasure)> = None;
    for &n in n_values {
        let next = match current.take() {
            None => mu.power_auto(n)?,
            Some((prev_n, prev)) => {
                let step = n - prev_n;
                let step_power = match &last_step {
                    Some((s, p)) if *s == step => p.clone(),
                    _ if step == prev_n => prev.clone(),
                    _ => mu.power_auto(step)?,
                };
                let next = prev.convolve_auto(&step_power)?;
                last_step = Some((step, step_power));
                next
            }
        };
        values.push(x_values.clone().map(|x| next.weight(x)).collect());
        row_mass.push(next.stored_mass());
        current = Some((n, next));
    }
    Ok(KernelTable {
        source: source.into(),
        n_values: n_values.to_vec(),
        x_min,
        x_max,
        values,
        row_mass,
    })
}

/// All `n ≤ n_max` for narrow measures, otherwise `1, 2, 3, 4, 6, 8, 12, …`.
pub fn default_n_values(mu: &LatticeMeasure, n_max: u64) -> Vec<u64> {
    if mu.width() <= 64 {
        return (1..=n_max).collect();
    }
    let mut out = Vec::new();
    let mut p = 1u64;
    while p <= n_max {
        out.push(p);
        if p >= 2 && p + p / 2 <= n_max {
            out.push(p + p / 2);
        }
        p *= 2;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// An empirical constant for one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub regime: String,
    /// Smallest `C` making the inequality hold on every tested tuple.
    pub fitted_constant: f64,
    /// `(n, x, y)` attaining the max; `y = 0` for bounds without `y`.
    pub worst_tuple: Option<(u64, i64, i64)>,
    pub sample_count: usize,
}

impl BoundFit {
    /// `|b − a| / a`, the relative change from `self` to `extended`.
    pub fn relative_change(&self, extended: &BoundFit) -> f64 {
        if self.fitted_constant == 0.0 {
            if extended.fitted_constant == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (extended.fitted_constant - self.fitted_constant).abs() / self.fitted_constant
        }
    }
}

#[derive(Clone, Copy)]
struct RowMax {
    value: f64,
    tuple: Option<(u64, i64, i64)>,
    count: usize,
}

impl RowMax {
    fn new() -> Self {
        Self {
            value: 0.0,
            tuple: None,
            count: 0,
        }
    }

    #[inline]
    fn offer(&mut self, ratio: f64, tuple: (u64, i64, i64)) {
        self.count += 1;
        if self.tuple.is_none() || ratio > self.value {
            self.value = ratio;
            self.tuple = Some(tuple);
        }
    }
}

/// Runs `per_row` over all rows in parallel and merges in row order; the
/// first tuple attaining the max (lexicographic `(n, x, y)`) is kept.
fn fit_rows<F>(table: &KernelTable, regime: String, per_row: F) -> Result<BoundFit>
where
    F: Fn(usize, u64) -> RowMax + Sync,
{
    let rows: Vec<RowMax> = table
        .n_values
        .par_iter()
        .enumerate()
        .map(|(row, &n)| per_row(row, n))
        .collect();
    let mut best = RowMax::new();
    for r in rows {
        best.count += r.count;
        if let Some(t) = r.tuple {
            if best.tuple.is_none() || r.value > best.value {
                best.value = r.value;
                best.tuple = Some(t);
            }
        }
    }
    if best.count == 0 {
        return Err(Error::EmptyRegime(regime));
    }
    Ok(BoundFit {
        regime,
        fitted_constant: best.value,
        worst_tuple: best.tuple,
        sample_count: best.count,
    })
}

/// `|μⁿ(x)| ≤ C (√n/|x|^{1+δ} + n²/x²)` for `x ≠ 0`.
pub fn pointwise_bound_fit(table: &KernelTable, delta: f64) -> Result<BoundFit> {
    check_exponent("delta", delta)?;
    let regime = format!("x != 0; |mu^n(x)| <= C (sqrt(n)/|x|^(1+{delta}) + n^2/x^2)");
    fit_rows(table, regime, |row, n| {
        let mut best = RowMax::new();
        let nf = n as f64;
        for x in table.x_values().filter(|&x| x != 0) {
            let ax = x.unsigned_abs() as f64;
            let bound = nf.sqrt() / ax.powf(1.0 + delta) + nf * nf / (ax * ax);
            best.offer(table.get(row, x).unwrap().abs() / bound, (n, x, 0));
        }
        best
    })
}

/// `σ = min{15δ/16, 3/4}`.
pub fn small_n_sigma(delta: f64) -> f64 {
    (15.0 * delta / 16.0).min(0.75)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallNFit {
    pub sigma: f64,
    pub fit: BoundFit,
}

/// `|μⁿ(x)| ≤ C/|x|^{1+σ}` in the regime `n ≤ |x|^{δ/8}`.
pub fn small_n_regime_check(table: &KernelTable, delta: f64) -> Result<SmallNFit> {
    check_exponent("delta", delta)?;
    let sigma = small_n_sigma(delta);
    let regime = format!("n <= |x|^({delta}/8), x != 0; |mu^n(x)| <= C/|x|^(1+{sigma})");
    let fit = fit_rows(table, regime, |row, n| {
        let mut best = RowMax::new();
        for x in table.x_values().filter(|&x| x != 0) {
            let ax = x.unsigned_abs() as f64;
            if (n as f64) <= ax.powf(delta / 8.0) {
                best.offer(table.get(row, x).unwrap().abs() * ax.powf(1.0 + sigma), (n, x, 0));
            }
        }
        best
    })?;
    Ok(SmallNFit { sigma, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessFit {
    /// `|μⁿ(x+y) − μⁿ(x)| ≤ C|y|/x²` for `n ≥ |x|^{δ/8}`, `2|y| ≤ |x|`.
    pub large_n: BoundFit,
    /// `|μⁿ(x+y) − μⁿ(x)| ≤ C|y|^α/|x|^{1+α}` for all `n`, `2|y| ≤ |x|`.
    pub holder: BoundFit,
}

/// Fits both difference bounds. `y = 0` is skipped (the difference is 0),
/// as are pairs with `x + y` outside the table window.
pub fn smoothness_difference_fit(table: &KernelTable, delta: f64, alpha: f64) -> Result<SmoothnessFit> {
    Ok(SmoothnessFit {
        large_n: smoothness_large_n_fit(table, delta)?,
        holder: smoothness_holder_fit(table, alpha)?,
    })
}

/// `|μⁿ(x+y) − μⁿ(x)| ≤ C|y|/x²` for `n ≥ |x|^{δ/8}`, `0 < 2|y| ≤ |x|`.
pub fn smoothness_large_n_fit(table: &KernelTable, delta: f64) -> Result<BoundFit> {
    check_exponent("delta", delta)?;
    fit_rows(
        table,
        format!("n >= |x|^({delta}/8), 0 < 2|y| <= |x|; |mu^n(x+y) - mu^n(x)| <= C |y|/x^2"),
        |row, n| {
            let mut best = RowMax::new();
            for_each_pair(table, row, |x, y, diff| {
                let ax = x.unsigned_abs() as f64;
                if (n as f64) >= ax.powf(delta / 8.0) {
                    best.offer(diff * ax * ax / y.unsigned_abs() as f64, (n, x, y));
                }
            });
            best
        },
    )
}

/// `|μⁿ(x+y) − μⁿ(x)| ≤ C|y|^α/|x|^{1+α}` for all `n`, `0 < 2|y| ≤ |x|`.
pub fn smoothness_holder_fit(table: &KernelTable, alpha: f64) -> Result<BoundFit> {
    check_exponent("alpha", alpha)?;
    fit_rows(
        table,
        format!("0 < 2|y| <= |x|; |mu^n(x+y) - mu^n(x)| <= C |y|^{alpha}/|x|^(1+{alpha})"),
        |row, n| {
            let mut best = RowMax::new();
            for_each_pair(table, row, |x, y, diff| {
                let ax = x.unsigned_abs() as f64;
                let ay = y.unsigned_abs() as f64;
                best.offer(diff * ax.powf(1.0 + alpha) / ay.powf(alpha), (n, x, y));
            });
            best
        },
    )
}

/// Calls `f(x, y, |μⁿ(x+y) − μⁿ(x)|)` for `x ≠ 0`, `0 < 2|y| ≤ |x|` in
/// ascending `(x, y)`.
fn for_each_pair<F: FnMut(i64, i64, f64)>(table: &KernelTable, row: usize, mut f: F) {
    let values = &table.values[row];
    for x in table.x_values().filter(|&x| x != 0) {
        let vx = values[(x - table.x_min) as usize];
        let half = x.abs() / 2;
        let lo = (-half).max(table.x_min - x);
        let hi = half.min(table.x_max - x);
        for y in lo..=hi {
            if y != 0 {
                f(x, y, (values[(x + y - table.x_min) as usize] - vx).abs());
            }
        }
    }
}

fn check_exponent(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::arg(name, format!("exponent must lie in (0, 1], got {v}")))
    }
}

/// `(e(zt) − 1)/z²` with `e(u) = e^{2πiu}`, written as
/// `2i sin(πzt) e^{iπzt}/z²` to avoid cancellation at small `zt`.
pub fn calderon_kernel(z: i64, t: f64) -> Complex64 {
    let u = (z as f64 * t).rem_euclid(2.0);
    let half = std::f64::consts::PI * u;
    let (s, c) = half.sin_cos();
    Complex64::new(0.0, 2.0 * s) * Complex64::new(c, s) / (z as f64 * z as f64)
}

/// `|K(x+y, t) − K(x, t)| ≤ C |t||y|/x²` for `0 < 2|y| < |x|`.
pub fn calderon_kernel_lemma_check(t_values: &[f64], xy_pairs: &[(i64, i64)]) -> Result<BoundFit> {
    if let Some(&(x, y)) = xy_pairs.iter().find(|(x, y)| !(0 < 2 * y.abs() && 2 * y.abs() < x.abs())) {
        return Err(Error::arg("xy_pairs", format!("({x}, {y}) violates 0 < 2|y| < |x|")));
    }
    if xy_pairs.is_empty() || t_values.is_empty() {
        return Err(Error::EmptyRegime("no (t, x, y) samples".to_string()));
    }
    let regime = "0 < 2|y| < |x|; |K(x+y,t) - K(x,t)| <= C |t||y|/x^2".to_string();
    let per_pair: Vec<RowMax> = xy_pairs
        .par_iter()
        .map(|&(x, y)| {
            let mut best = RowMax::new();
            let ax = x.unsigned_abs() as f64;
            let ay = y.unsigned_abs() as f64;
            for &t in t_values {
                let ratio = if t == 0.0 {
                    0.0
                } else {
                    (calderon_kernel(x + y, t) - calderon_kernel(x, t)).norm() / (t.abs() * ay / (ax * ax))
                };
                best.offer(ratio, (0, x, y));
            }
            best
        })
        .collect();
    let mut best = RowMax::new();
    for r in per_pair {
        best.count += r.count;
        if best.tuple.is_none() || r.value > best.value {
            best.value = r.value;
            best.tuple = r.tuple;
        }
    }
    Ok(BoundFit {
        regime,
        fitted_constant: best.value,
        worst_tuple: best.tuple,
        sample_count: best.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn lazy_table(n_max: u64, x_max: i64) -> KernelTable {
        kernel_table(&zoo::lazy_walk(), "lazy_walk", &(1..=n_max).collect::<Vec<_>>(), -x_max..=x_max).unwrap()
    }

    /// `C(2n, n+x)/4ⁿ` as a running product.
    fn lazy_binomial(n: u64, x: i64) -> f64 {
        if x.unsigned_abs() > n {
            return 0.0;
        }
        let k = (n as i64 + x) as u64;
        let m = 2 * n;
        let k = k.min(m - k);
        let mut v = 1.0f64;
        for i in 0..k {
            v *= (m - i) as f64 / (k - i) as f64 / 4.0;
        }
        v * 0.25f64.powi((n - k) as i32)
    }

    #[test]
    fn table_examples() {
        let t = lazy_table(8, 10);
        assert_eq!(t.value(2, 0), Some(6.0 / 16.0));
        assert_eq!(t.value(3, 5), Some(0.0));
        assert_eq!(t.value(3, -4), Some(0.0));
        let shift = kernel_table(&LatticeMeasure::dirac(1), "delta1", &[1, 3, 7], 0..=10).unwrap();
        assert_eq!(shift.value(7, 7), Some(1.0));
        for m in &t.row_mass {
            assert!((m - 1.0).abs() < ROW_MASS_TOLERANCE);
        }
    }

    #[test]
    fn table_matches_binomials() {
        let t = kernel_table(&zoo::lazy_walk(), "lazy", &[1, 2, 5, 64], -70..=70).unwrap();
        for &n in &t.n_values {
            for x in -70..=70 {
                let exact = lazy_binomial(n, x);
                assert!((t.value(n, x).unwrap() - exact).abs() < 1e-14, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn geometric_rows_match_direct_powers() {
        let mu = zoo::power_law(3.0, 100).unwrap().measure;
        let ns = default_n_values(&mu, 16);
        assert_eq!(ns, vec![1, 2, 3, 4, 6, 8, 12, 16]);
        let t = kernel_table(&mu, "pl", &ns, -50..=50).unwrap();
        let direct = mu.power(6, crate::PowerMethod::Direct).unwrap();
        for x in -50..=50 {
            assert!((t.value(6, x).unwrap() - direct.weight(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(small_n_sigma(1.0), 0.75);
        assert!((small_n_sigma(0.4) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn pointwise_fit_is_finite_and_consistent() {
        let t = lazy_table(32, 64);
        let fit = pointwise_bound_fit(&t, 1.0).unwrap();
        assert!(fit.fitted_constant.is_finite() && fit.fitted_constant > 0.0);
        let (n, x, _) = fit.worst_tuple.unwrap();
        let nf = n as f64;
        let ax = x.abs() as f64;
        let ratio = t.value(n, x).unwrap() / (nf.sqrt() / ax.powi(2) + nf * nf / (ax * ax));
        assert_eq!(ratio, fit.fitted_constant);
    }

    #[test]
    fn small_n_regime_can_be_empty() {
        let t = lazy_table(4, 3);
        assert!(small_n_regime_check(&t, 1.0).is_ok());
        let t = kernel_table(&zoo::lazy_walk(), "lazy", &[2, 3], -5..=5).unwrap();
        assert!(matches!(small_n_regime_check(&t, 1.0), Err(Error::EmptyRegime(_))));
    }

    #[test]
    fn smoothness_fit_matches_binomial_difference() {
        let t = lazy_table(64, 40);
        let fit = smoothness_difference_fit(&t, 1.0, 1.0).unwrap();
        let exact = (lazy_binomial(64, 17) - lazy_binomial(64, 16)).abs() * 256.0;
        assert!(exact.is_finite() && exact > 0.0);
        assert!(fit.large_n.fitted_constant >= exact - 1e-15);
        let table_diff = (t.value(64, 17).unwrap() - t.value(64, 16).unwrap()).abs() * 256.0;
        assert!((table_diff - exact).abs() < 1e-12);
    }

    #[test]
    fn smoothness_fit_reflection_invariant() {
        let t = lazy_table(24, 30);
        let fit = smoothness_difference_fit(&t, 1.0, 1.0).unwrap();
        let mut mirrored = t.clone();
        for row in mirrored.values.iter_mut() {
            row.reverse();
        }
        let fit_m = smoothness_difference_fit(&mirrored, 1.0, 1.0).unwrap();
        assert_eq!(fit.large_n.fitted_constant, fit_m.large_n.fitted_constant);
        assert_eq!(fit.holder.fitted_constant, fit_m.holder.fitted_constant);
    }

    #[test]
    fn exponents_are_validated() {
        let t = lazy_table(4, 4);
        assert!(pointwise_bound_fit(&t, 0.0).is_err());
        assert!(smoothness_difference_fit(&t, 1.0, 1.5).is_err());
    }

    #[test]
    fn calderon_examples() {
        let k = calderon_kernel(100, 0.0);
        assert_eq!(k, Complex64::new(0.0, 0.0));

        let fit = calderon_kernel_lemma_check(&[0.0, 0.01], &[(100, 1)]).unwrap();
        // dense-sample oracle around t = 0.01 with the naive formula
        let naive = |z: i64, t: f64| {
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * z as f64 * t);
            (e - 1.0) / (z * z) as f64
        };
        let ratio = |t: f64| (naive(101, t) - naive(100, t)).norm() / (t.abs() / 1e4);
        assert!((ratio(0.01) - fit.fitted_constant).abs() < 1e-8 * ratio(0.01));
        let dense = (1..=2000)
            .map(|j| 0.005 + j as f64 * 1e-5)
            .map(ratio)
            .fold(0.0, f64::max);
        let dense_fit = calderon_kernel_lemma_check(
            &(1..=2000).map(|j| 0.005 + j as f64 * 1e-5).collect::<Vec<_>>(),
            &[(100, 1)],
        )
        .unwrap();
        assert!((dense - dense_fit.fitted_constant).abs() < 1e-8 * dense);

        let plus = calderon_kernel_lemma_check(&[0.01], &[(100, 1)]).unwrap();
        let minus = calderon_kernel_lemma_check(&[0.01], &[(100, -1)]).unwrap();
        let expect_minus = (naive(99, 0.01) - naive(100, 0.01)).norm() / (0.01 / 1e4);
        assert!((minus.fitted_constant - expect_minus).abs() < 1e-8 * expect_minus);
        assert!(plus.fitted_constant > 0.0);

        assert!(calderon_kernel_lemma_check(&[0.1], &[(4, 2)]).is_err());
    }
}
