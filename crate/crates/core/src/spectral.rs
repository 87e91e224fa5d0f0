//! Transform-side diagnostics.
//!
//! `θ(t) = Σ μ(k) e^{2πikt}` with real part `f` and imaginary part `g`.
//! A [`SpectralProfile`] samples `θ`, `θ′`, `θ″` and `φ(t) = |f′(t)/t|` on
//! the uniform grid `t = j/N`, `j = −N/2, …, N/2 − 1`. The samples are
//! exact DFTs of the weights folded modulo `N` (`e^{2πikj/N}` only depends
//! on `k mod N`), so supports much wider than the grid cost `O(K + N log N)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{LatticeMeasure, SharedMeasure};
use crate::quadrature::{self, QuadratureOptions};
use crate::summation::{ComplexSum, NeumaierSum};

const TWO_PI: f64 = 2.0 * PI;

/// Points with `|θ| ≥ 1 − MODULUS_MARGIN` are left out of ratio diagnostics.
pub const MODULUS_MARGIN: f64 = 1e-10;
/// Growth factor per 4× refinement that flags a diverging ratio.
pub const DIVERGENCE_FACTOR: f64 = 2.0;

/// `e^{2πikt}` with the phase reduced modulo 1 before scaling by 2π.
#[inline]
fn phase(k: i64, t: f64) -> Complex64 {
    let x = (k as f64 * t).rem_euclid(1.0);
    let (s, c) = (TWO_PI * x).sin_cos();
    Complex64::new(c, s)
}

/// `θ(t)` by compensated termwise summation.
pub fn transform_at(mu: &LatticeMeasure, t: f64) -> Complex64 {
    let mut acc = ComplexSum::new();
    for (k, w) in mu.iter() {
        if w != 0.0 {
            acc.add(phase(k, t) * w);
        }
    }
    acc.value()
}

/// `θ⁽ᵒʳᵈᵉʳ⁾(t) = Σ (2πik)^order μ(k) e^{2πikt}` for `order ∈ {1, 2}`.
///
/// For a truncated law this differentiates the truncated transform.
pub fn derivative_at(mu: &LatticeMeasure, t: f64, order: u32) -> Result<Complex64> {
    if !(1..=2).contains(&order) {
        return Err(Error::arg("order", format!("derivative order must be 1 or 2, got {order}")));
    }
    let mut acc = ComplexSum::new();
    for (k, w) in mu.iter() {
        if w != 0.0 {
            let factor = Complex64::new(0.0, TWO_PI * k as f64).powu(order);
            acc.add(factor * phase(k, t) * w);
        }
    }
    Ok(acc.value())
}

/// `1 − |θ(t)|` without the cancellation of `1 − |θ|` near `t = 0`:
/// `1 − f = tail + Σ μ(k)·2sin²(πkt)` and `1 − |θ|² = (1 − f)(1 + f) − g²`.
pub fn one_minus_modulus_at(mu: &LatticeMeasure, t: f64) -> f64 {
    let mut one_minus_f = NeumaierSum::new();
    let mut g = NeumaierSum::new();
    one_minus_f.add(mu.tail_mass());
    for (k, w) in mu.iter() {
        if w != 0.0 {
            let x = (k as f64 * t).rem_euclid(1.0);
            let s = (PI * x).sin();
            one_minus_f.add(2.0 * w * s * s);
            g.add(w * (TWO_PI * x).sin());
        }
    }
    let a = one_minus_f.value();
    let g = g.value();
    let f = 1.0 - a;
    let one_minus_sq = a * (1.0 + f) - g * g;
    let modulus = (f * f + g * g).sqrt();
    one_minus_sq / (1.0 + modulus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Number of grid points `N` on `[−½, ½)`.
    pub size: usize,
    /// Grid points with `|t|` at or below this radius are excluded.
    pub puncture_radius: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            size: 1 << 16,
            puncture_radius: 1e-6,
        }
    }
}

impl GridOptions {
    pub fn with_size(size: usize) -> Self {
        Self {
            size,
            ..Self::default()
        }
    }
}

/// One sample of a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub t: f64,
    pub theta: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub phi: f64,
}

impl GridPoint {
    pub fn f(&self) -> f64 {
        self.theta.re
    }

    pub fn g(&self) -> f64 {
        self.theta.im
    }

    pub fn modulus(&self) -> f64 {
        self.theta.norm()
    }
}

/// Samples of `θ`, `θ′`, `θ″` and `φ` on a uniform grid.
///
/// Arrays cover the full grid, origin included; accessors skip the
/// punctured neighbourhood of 0.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    measure: SharedMeasure,
    options: GridOptions,
    theta: Vec<Complex64>,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    phi: Vec<f64>,
    phi_is_constant: bool,
}

impl SpectralProfile {
    pub fn compute(mu: &LatticeMeasure, options: GridOptions) -> Result<Self> {
        Self::compute_shared(Arc::new(mu.clone()), options)
    }

    pub fn compute_shared(measure: SharedMeasure, options: GridOptions) -> Result<Self> {
        let n = options.size;
        if n < 8 || n % 2 != 0 {
            return Err(Error::arg("grid_size", format!("grid size must be even and ≥ 8, got {n}")));
        }
        if !(options.puncture_radius >= 0.0) {
            return Err(Error::arg("puncture_radius", "must be nonnegative"));
        }
        let mut folded = [
            vec![NeumaierSum::new(); n],
            vec![NeumaierSum::new(); n],
            vec![NeumaierSum::new(); n],
        ];
        for (k, w) in measure.iter() {
            if w == 0.0 {
                continue;
            }
            let r = k.rem_euclid(n as i64) as usize;
            let kf = k as f64;
            folded[0][r].add(w);
            folded[1][r].add(kf * w);
            folded[2][r].add(kf * kf * w);
        }
        let mut planner = FftPlanner::<f64>::new();
        let inverse = planner.plan_fft_inverse(n);
        let mut transforms = folded.map(|bucket| {
            let mut buf: Vec<Complex64> = bucket
                .iter()
                .map(|acc| Complex64::new(acc.value(), 0.0))
                .collect();
            inverse.process(&mut buf);
            // FFT index j holds t = j/N; reorder so position p holds (p − N/2)/N.
            buf.rotate_right(n / 2);
            buf
        });
        let i2pi = Complex64::new(0.0, TWO_PI);
        for z in transforms[1].iter_mut() {
            *z *= i2pi;
        }
        for z in transforms[2].iter_mut() {
            *z *= -TWO_PI * TWO_PI;
        }
        if measure.is_symmetric() {
            // θ, θ′ and θ″ are real for a mirror-symmetric measure
            for z in transforms.iter_mut().flatten() {
                z.im = 0.0;
            }
        }
        let [theta, d1, d2] = transforms;
        let phi = (0..n)
            .map(|p| {
                let t = grid_t(p, n);
                if t == 0.0 {
                    f64::NAN
                } else {
                    (d1[p].re / t).abs()
                }
            })
            .collect();
        Ok(Self {
            measure,
            options,
            theta,
            d1,
            d2,
            phi,
            phi_is_constant: false,
        })
    }

    /// Replaces `φ` by a constant majorant, e.g. `sup |θ″|` when `θ″` is
    /// bounded.
    pub fn with_constant_phi(mut self, value: f64) -> Self {
        self.phi.iter_mut().for_each(|p| *p = value);
        self.phi_is_constant = true;
        self
    }

    pub fn measure(&self) -> &LatticeMeasure {
        &self.measure
    }

    pub fn options(&self) -> GridOptions {
        self.options
    }

    pub fn size(&self) -> usize {
        self.options.size
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.options.size as f64
    }

    pub fn phi_is_constant(&self) -> bool {
        self.phi_is_constant
    }

    pub fn t_at(&self, index: usize) -> f64 {
        grid_t(index, self.options.size)
    }

    fn is_active(&self, index: usize) -> bool {
        self.t_at(index).abs() > self.options.puncture_radius
    }

    /// The sample at a full-grid index, punctured or not.
    pub fn point(&self, index: usize) -> GridPoint {
        GridPoint {
            index,
            t: self.t_at(index),
            theta: self.theta[index],
            d1: self.d1[index],
            d2: self.d2[index],
            phi: self.phi[index],
        }
    }

    /// Non-punctured samples in ascending `t`.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        (0..self.options.size)
            .filter(move |&p| self.is_active(p))
            .map(move |p| self.point(p))
    }

    /// Sorted non-punctured `t` values.
    pub fn grid(&self) -> Vec<f64> {
        self.points().map(|p| p.t).collect()
    }

    /// `θ′` on the full grid, origin included, in ascending `t`.
    pub fn d1_full(&self) -> &[Complex64] {
        &self.d1
    }

    /// `max |θ(t) − conj θ(−t)|` over pairs present on the grid.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.options.size;
        (1..n)
            .map(|p| {
                let q = n - p;
                (self.theta[p] - self.theta[q].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |θ|` over the grid points with `|t| ≥ t_min`.
    pub fn max_modulus_away_from_origin(&self, t_min: f64) -> f64 {
        self.points()
            .filter(|p| p.t.abs() >= t_min)
            .map(|p| p.modulus())
            .fold(0.0, f64::max)
    }

    /// `sup |θ″|` over `|t| ≤ delta`, origin included.
    pub fn sup_abs_d2(&self, delta: f64) -> f64 {
        (0..self.options.size)
            .filter(|&p| self.t_at(p).abs() <= delta)
            .map(|p| self.d2[p].norm())
            .fold(0.0, f64::max)
    }

    /// Writes the profile as CSV with columns
    /// `t, Re θ, Im θ, |θ|, Re θ′, Im θ′, Re θ″, Im θ″, φ`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "t", "re_theta", "im_theta", "abs_theta", "re_d1", "im_d1", "re_d2", "im_d2", "phi",
        ])?;
        for p in self.points() {
            out.write_record(&[
                p.t.to_string(),
                p.theta.re.to_string(),
                p.theta.im.to_string(),
                p.modulus().to_string(),
                p.d1.re.to_string(),
                p.d1.im.to_string(),
                p.d2.re.to_string(),
                p.d2.im.to_string(),
                p.phi.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn grid_t(index: usize, n: usize) -> f64 {
    (index as f64 - (n / 2) as f64) / n as f64
}

/// Three evaluations at `s`, `s/4`, `s/16`, each the max over `±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub anchor: f64,
    pub values: [f64; 3],
}

impl Refinement {
    fn evaluate<F: Fn(f64) -> f64>(anchor: f64, ratio: F) -> Self {
        let mut values = [0.0; 3];
        for (j, v) in values.iter_mut().enumerate() {
            let s = anchor / 4f64.powi(j as i32);
            *v = ratio(s).max(ratio(-s));
        }
        Self { anchor, values }
    }

    /// Each refinement multiplied the ratio by at least [`DIVERGENCE_FACTOR`].
    pub fn diverges(&self) -> bool {
        let [a, b, c] = self.values;
        a > 0.0 && b >= DIVERGENCE_FACTOR * a && c >= DIVERGENCE_FACTOR * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularRatio {
    /// Grid supremum of `|θ − 1| / (1 − |θ|)`.
    pub value: f64,
    pub argmax_t: f64,
    /// Ratio keeps at least doubling under two 4× refinements toward 0.
    pub unbounded: bool,
    pub refinement: Option<Refinement>,
}

/// Supremum of `|θ(t) − 1| / (1 − |θ(t)|)` over the punctured grid, with a
/// divergence test near the origin.
pub fn angular_ratio_sup(profile: &SpectralProfile) -> Result<AngularRatio> {
    let mut best: Option<(f64, f64)> = None;
    for p in profile.points() {
        let modulus = p.modulus();
        if modulus >= 1.0 - MODULUS_MARGIN {
            continue;
        }
        let ratio = (p.theta - 1.0).norm() / (1.0 - modulus);
        if best.is_none_or(|(b, _)| ratio > b) {
            best = Some((ratio, p.t));
        }
    }
    let (value, argmax_t) = best.ok_or_else(|| {
        Error::Refused(format!(
            "|θ(t)| ≥ 1 − {MODULUS_MARGIN:e} at every grid point; the measure is not strictly aperiodic"
        ))
    })?;

    let mu = profile.measure();
    let refinement = refinement_anchor(profile).map(|anchor| {
        Refinement::evaluate(anchor, |t| {
            let gap = one_minus_modulus_at(mu, t);
            if gap <= 0.0 {
                return f64::INFINITY;
            }
            (transform_at(mu, t) - 1.0).norm() / gap
        })
    });
    Ok(AngularRatio {
        value,
        argmax_t,
        unbounded: refinement.is_some_and(|r| r.diverges()),
        refinement,
    })
}

/// Smallest positive grid `t` with `1 − |θ(t)| ≥ 1e−6`; sixteen-fold
/// refinement below it keeps the gap above the exclusion margin.
fn refinement_anchor(profile: &SpectralProfile) -> Option<f64> {
    profile
        .points()
        .filter(|p| p.t > 0.0)
        .find(|p| 1.0 - p.modulus() >= 1e-6)
        .map(|p| p.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetrovConstant {
    /// `C* = min −ln|θ(t)| / t²`, so `|θ(t)| ≤ e^{−C* t²}` on the grid.
    pub value: f64,
    pub argmin_t: f64,
}

/// Largest `C` with `|θ(t)| ≤ e^{−Ct²}` at every grid point.
pub fn petrov_constant(profile: &SpectralProfile) -> Result<PetrovConstant> {
    let mut best = (f64::INFINITY, f64::NAN);
    for p in profile.points() {
        let sq = p.theta.norm_sqr();
        let c = if sq == 0.0 {
            f64::INFINITY
        } else {
            -0.5 * (sq - 1.0).ln_1p() / (p.t * p.t)
        };
        if c < best.0 {
            best = (c, p.t);
        }
    }
    if !(best.0 > 0.0) {
        return Err(Error::Hypothesis(format!(
            "Gaussian majorant constant {} ≤ 0 at t = {}: |θ| reaches 1 away from the origin, \
             contradicting strict aperiodicity",
            best.0, best.1
        )));
    }
    Ok(PetrovConstant {
        value: best.0,
        argmin_t: best.1,
    })
}

/// Grid check of the strict-aperiodicity criterion `|θ(t)| < 1` for `t ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAperiodicity {
    pub grid_size: usize,
    pub t_min: f64,
    pub max_modulus: f64,
    pub strictly_aperiodic: bool,
}

/// Evaluates `max_{|t| ≥ t_min} |θ(t)| < 1 − margin` on a grid fine enough
/// that a peak `|θ| = 1` at any rational point is resolved to within the
/// margin for supports of width up to a few hundred.
pub fn grid_aperiodicity(mu: &LatticeMeasure, t_min: f64, margin: f64) -> Result<GridAperiodicity> {
    let span = mu.width().max(1);
    let size = (4096 * span).next_power_of_two().clamp(1 << 16, 1 << 20);
    let profile = SpectralProfile::compute(mu, GridOptions::with_size(size))?;
    let max_modulus = profile.max_modulus_away_from_origin(t_min);
    Ok(GridAperiodicity {
        grid_size: size,
        t_min,
        max_modulus,
        strictly_aperiodic: max_modulus < 1.0 - margin,
    })
}

/// Empirical check of the properties of `φ` near the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPropertyReport {
    pub window: f64,
    /// `max |φ(t) − φ(−t)| / max(φ(t), φ(−t))`.
    pub symmetry_defect: f64,
    pub symmetric: bool,
    /// `sup |f″|/φ`.
    pub f2_ratio: f64,
    /// Smallest admissible `c₁ ∈ (1, 2)` with `c₁φ ≥ |f″|`; absent when
    /// `f2_ratio ≥ 2`.
    pub c1: Option<f64>,
    /// `sup |θ″|/φ`.
    pub c2: f64,
    /// `sup |θ′/t|/φ`.
    pub c3: f64,
    /// `sup |t φ′(t)| / φ(t)` with `φ′` by centred differences.
    pub log_derivative_ratio: f64,
    pub log_derivative_holds: bool,
    /// `max |tφ(t)|` over `|t| ≤ window/2^j`, `j = 0..3`.
    pub t_phi_windows: [f64; 4],
    pub t_phi_decreasing: bool,
    /// The monotonicity of `f″` near 0 admits two readings ("non-decreasing"
    /// versus "non-increasing as |t| → 0"); only their computable
    /// consequences are checked here.
    pub note: String,
}

/// Default half-width of the window around 0 for [`phi_property_report`].
pub const DEFAULT_PHI_WINDOW: f64 = 1.0 / 16.0;

/// Tolerance on `|tφ′| ≤ φ`.
pub const LOG_DERIVATIVE_SLACK: f64 = 1e-6;
/// Tolerance on `φ(t) = φ(−t)`.
pub const PHI_SYMMETRY_TOLERANCE: f64 = 1e-10;

pub fn phi_property_report(profile: &SpectralProfile, window: f64) -> Result<PhiPropertyReport> {
    if !(window > 0.0) {
        return Err(Error::arg("window", "must be positive"));
    }
    let n = profile.size();
    let in_window = |p: usize| {
        let t = profile.t_at(p);
        profile.is_active(p) && t.abs() <= window
    };
    let mut symmetry_defect: f64 = 0.0;
    let mut f2_ratio: f64 = 0.0;
    let mut c2: f64 = 0.0;
    let mut c3: f64 = 0.0;
    let mut log_derivative_ratio: f64 = 0.0;
    let mut t_phi = [0.0f64; 4];
    let h = profile.spacing();
    for p in (0..n).filter(|&p| in_window(p)) {
        let pt = profile.point(p);
        let phi = pt.phi;
        let mirror = n - p;
        if mirror < n {
            let other = profile.phi[mirror];
            let scale = phi.max(other);
            if scale > 0.0 {
                symmetry_defect = symmetry_defect.max((phi - other).abs() / scale);
            }
        }
        if phi > 0.0 {
            f2_ratio = f2_ratio.max(pt.d2.re.abs() / phi);
            c2 = c2.max(pt.d2.norm() / phi);
            c3 = c3.max((pt.d1 / pt.t).norm() / phi);
            if p > 0 && p + 1 < n && in_window(p - 1) && in_window(p + 1) {
                let derivative = (profile.phi[p + 1] - profile.phi[p - 1]) / (2.0 * h);
                log_derivative_ratio = log_derivative_ratio.max((pt.t * derivative).abs() / phi);
            }
        }
        for (j, slot) in t_phi.iter_mut().enumerate() {
            if pt.t.abs() <= window / 2f64.powi(j as i32) {
                *slot = slot.max((pt.t * phi).abs());
            }
        }
    }
    Ok(PhiPropertyReport {
        window,
        symmetry_defect,
        symmetric: symmetry_defect <= PHI_SYMMETRY_TOLERANCE,
        f2_ratio,
        c1: (f2_ratio < 2.0).then(|| f2_ratio.max(1.0).next_up()),
        c2,
        c3,
        log_derivative_ratio,
        log_derivative_holds: log_derivative_ratio <= 1.0 + LOG_DERIVATIVE_SLACK,
        t_phi_windows: t_phi,
        t_phi_decreasing: t_phi.windows(2).all(|w| w[1] < w[0]),
        note: "f″ = p + O(1) with p monotone on each side of 0 is not recoverable from \
               samples; the report checks the consequences for φ"
            .to_string(),
    })
}

/// Ratios `|g′/f′|` and `|g″/f″|` comparing imaginary and real parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRatioReport {
    pub first_derivative: f64,
    pub second_derivative: f64,
    /// `|g′/f′|` at `s, s/4, s/16` by direct evaluation.
    pub refinement: Option<Refinement>,
    pub diverging_near_zero: bool,
}

/// Denominators at or below this are skipped.
pub const COMPONENT_DENOMINATOR_FLOOR: f64 = 1e-12;

pub fn component_ratio_report(profile: &SpectralProfile) -> ComponentRatioReport {
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for p in profile.points() {
        if p.d1.re.abs() > COMPONENT_DENOMINATOR_FLOOR {
            first = first.max((p.d1.im / p.d1.re).abs());
        }
        if p.d2.re.abs() > COMPONENT_DENOMINATOR_FLOOR {
            second = second.max((p.d2.im / p.d2.re).abs());
        }
    }
    let mu = profile.measure();
    let refinement = if mu.is_symmetric() {
        None
    } else {
        refinement_anchor(profile).map(|anchor| {
            Refinement::evaluate(anchor, |t| {
                let d = derivative_at(mu, t, 1).expect("order 1");
                if d.re.abs() > COMPONENT_DENOMINATOR_FLOOR {
                    (d.im / d.re).abs()
                } else {
                    0.0
                }
            })
        })
    };
    ComponentRatioReport {
        first_derivative: first,
        second_derivative: second,
        diverging_near_zero: refinement.is_some_and(|r| r.diverges()),
        refinement,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantFit {
    pub delta: f64,
    /// `k* = min (1 − |θ|)/(t²φ)` over `0 < |t| ≤ delta`.
    pub k_star: f64,
    pub argmin_t: f64,
    /// `0 ≤ 1 − k* t² φ(t) ≤ 1` at every point of the window.
    pub side_condition_holds: bool,
}

/// Fits the largest `k` with `|θ(t)| ≤ 1 − k t² φ(t)` on `0 < |t| ≤ delta`.
pub fn majorant_fit(profile: &SpectralProfile, delta: f64) -> Result<MajorantFit> {
    if !(delta > 0.0) {
        return Err(Error::arg("delta", "must be positive"));
    }
    let window: Vec<GridPoint> = profile.points().filter(|p| p.t.abs() <= delta).collect();
    if window.is_empty() {
        return Err(Error::EmptyRegime(format!("no grid points with 0 < |t| ≤ {delta}")));
    }
    if let Some(p) = window.iter().find(|p| !(p.phi > 0.0)) {
        return Err(Error::Refused(format!("φ({}) = {} is not positive", p.t, p.phi)));
    }
    let mut best = (f64::INFINITY, f64::NAN);
    for p in &window {
        let k = (1.0 - p.modulus()) / (p.t * p.t * p.phi);
        if k < best.0 {
            best = (k, p.t);
        }
    }
    let (k_star, argmin_t) = best;
    if !(k_star > 0.0) {
        return Err(Error::Hypothesis(format!(
            "majorant constant k* = {k_star} ≤ 0 at t = {argmin_t}"
        )));
    }
    let side_condition_holds = window.iter().all(|p| {
        let v = 1.0 - k_star * p.t * p.t * p.phi;
        (0.0..=1.0).contains(&v)
    });
    Ok(MajorantFit {
        delta,
        k_star,
        argmin_t,
        side_condition_holds,
    })
}

/// `φ(t) = |f′(t)/t|` evaluated anywhere, for quadrature.
///
/// `f′(t) = −2π Σ_{k>0} k (μ(k) + μ(−k)) sin(2πkt)`. For `2πK|t| ≤ ½`,
/// with `K` the support radius, the odd Taylor series in the scaled moments
/// `Σ aₖ (k/K)^{2j+1}` is used. Otherwise the sines come from rotation
/// recurrences reseeded with an exact `sin_cos` every
/// [`PhiEvaluator::RESEED`] terms, four chunks at a time.
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    /// `k (μ(k) + μ(−k))` for `k = 1, 2, …`.
    coefficients: Vec<f64>,
    /// `Σ aₖ (k/K)^{2j+1}` for `j < TAYLOR_TERMS`.
    scaled_moments: Vec<f64>,
}

impl PhiEvaluator {
    const RESEED: usize = 256;
    const LANES: usize = 4;
    const TAYLOR_TERMS: usize = 12;
    const TAYLOR_LIMIT: f64 = 0.5;

    pub fn new(mu: &LatticeMeasure) -> Self {
        let radius = mu.support_radius().max(0) as usize;
        let coefficients: Vec<f64> = (1..=radius as i64)
            .map(|k| k as f64 * (mu.weight(k) + mu.weight(-k)))
            .collect();
        let scale = radius.max(1) as f64;
        let scaled_moments = (0..Self::TAYLOR_TERMS)
            .map(|j| {
                let p = 2 * j as i32 + 1;
                crate::summation::sum(
                    coefficients
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * ((i + 1) as f64 / scale).powi(p)),
                )
            })
            .collect();
        Self {
            coefficients,
            scaled_moments,
        }
    }

    /// `f′(t)`.
    pub fn f_prime(&self, t: f64) -> f64 {
        let x = TWO_PI * self.coefficients.len() as f64 * t;
        if x.abs() <= Self::TAYLOR_LIMIT {
            return -TWO_PI * self.taylor(x);
        }
        let (step_s, step_c) = (TWO_PI * t.rem_euclid(1.0)).sin_cos();
        let chunks: Vec<&[f64]> = self.coefficients.chunks(Self::RESEED).collect();
        let mut total = NeumaierSum::new();
        for (group_index, group) in chunks.chunks(Self::LANES).enumerate() {
            let first = group_index * Self::LANES;
            if group.len() == Self::LANES && group.iter().all(|c| c.len() == Self::RESEED) {
                let mut s = [0.0; Self::LANES];
                let mut c = [0.0; Self::LANES];
                for lane in 0..Self::LANES {
                    let seed = phase(((first + lane) * Self::RESEED + 1) as i64, t);
                    (s[lane], c[lane]) = (seed.im, seed.re);
                }
                let mut partial = [0.0; Self::LANES];
                for i in 0..Self::RESEED {
                    for lane in 0..Self::LANES {
                        partial[lane] += group[lane][i] * s[lane];
                        (s[lane], c[lane]) = (
                            s[lane] * step_c + c[lane] * step_s,
                            c[lane] * step_c - s[lane] * step_s,
                        );
                    }
                }
                partial.iter().for_each(|&p| total.add(p));
            } else {
                for (offset, chunk) in group.iter().enumerate() {
                    let seed = phase(((first + offset) * Self::RESEED + 1) as i64, t);
                    let (mut s, mut c) = (seed.im, seed.re);
                    let mut partial = 0.0;
                    for &a in chunk.iter() {
                        partial += a * s;
                        (s, c) = (s * step_c + c * step_s, c * step_c - s * step_s);
                    }
                    total.add(partial);
                }
            }
        }
        -TWO_PI * total.value()
    }

    /// `Σ_j (−1)^j x^{2j+1}/(2j+1)! · mⱼ`.
    fn taylor(&self, x: f64) -> f64 {
        let mut term = x;
        let mut acc = 0.0;
        for (j, m) in self.scaled_moments.iter().enumerate() {
            acc += term * m;
            let a = (2 * j + 2) as f64;
            term *= -x * x / (a * (a + 1.0));
        }
        acc
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.f_prime(t) / t).abs()
    }
}

/// `J1(n)` and `J2(n)` for each requested `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaIntegrals {
    pub k: f64,
    pub delta: f64,
    pub n_values: Vec<u64>,
    /// `n ∫_{−δ}^{δ} (1 − kt²φ)^{n−1} |t| φ dt`.
    pub j1: Vec<f64>,
    /// `n² ∫_{−δ}^{δ} (1 − kt²φ)^{n−2} |t|³ φ² dt`; `None` for `n = 1`.
    pub j2: Vec<Option<f64>>,
    pub max_j1: f64,
    pub max_j2: f64,
}

/// Evaluates `J1(n)`, `J2(n)` by adaptive quadrature for an even `φ`.
///
/// The integral over `(−δ, δ)` is twice the integral over `(0, δ)`, split
/// geometrically toward the origin. Fails if `0 ≤ 1 − kt²φ(t) ≤ 1` breaks
/// at any evaluation point.
pub fn lemma_integrals<F>(phi: F, k: f64, delta: f64, n_values: &[u64]) -> Result<LemmaIntegrals>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(k > 0.0) || !(delta > 0.0) {
        return Err(Error::arg("k", "k and delta must be positive"));
    }
    if n_values.is_empty() || n_values.windows(2).any(|w| w[1] <= w[0]) || n_values[0] == 0 {
        return Err(Error::arg("n_values", "must be nonempty, positive and strictly ascending"));
    }
    // coarse pre-check of the side condition
    for j in 1..=1024 {
        let t = delta * j as f64 / 1024.0;
        check_side(1.0 - k * t * t * phi(t), t)?;
    }
    let opts = QuadratureOptions::default();
    let points = quadrature::geometric_breakpoints(delta, 48);

    use rayon::prelude::*;
    let results: Vec<Result<(f64, Option<f64>)>> = n_values
        .par_iter()
        .map(|&n| {
            let nf = n as f64;
            let violation = std::sync::Mutex::new(None);
            let j1 = quadrature::integrate_pieces(
                |t| {
                    if t == 0.0 {
                        return 0.0;
                    }
                    let ph = phi(t);
                    let base = 1.0 - k * t * t * ph;
                    if let Err(e) = check_side(base, t) {
                        violation.lock().unwrap().get_or_insert(e);
                        return 0.0;
                    }
                    base.max(0.0).powf(nf - 1.0) * t * ph
                },
                &points,
                opts,
            );
            let j2 = (n >= 2).then(|| {
                quadrature::integrate_pieces(
                    |t| {
                        if t == 0.0 {
                            return 0.0;
                        }
                        let ph = phi(t);
                        let base = 1.0 - k * t * t * ph;
                        if let Err(e) = check_side(base, t) {
                            violation.lock().unwrap().get_or_insert(e);
                            return 0.0;
                        }
                        base.max(0.0).powf(nf - 2.0) * t * t * t * ph * ph
                    },
                    &points,
                    opts,
                )
            });
            if let Some(e) = violation.into_inner().unwrap() {
                return Err(e);
            }
            Ok((2.0 * nf * j1.value, j2.map(|e| 2.0 * nf * nf * e.value)))
        })
        .collect();
    let mut j1 = Vec::with_capacity(n_values.len());
    let mut j2 = Vec::with_capacity(n_values.len());
    for r in results {
        let (a, b) = r?;
        j1.push(a);
        j2.push(b);
    }
    Ok(LemmaIntegrals {
        k,
        delta,
        n_values: n_values.to_vec(),
        max_j1: j1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_j2: j2.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max),
        j1,
        j2,
    })
}

fn check_side(base: f64, t: f64) -> Result<()> {
    if !(-1e-12..=1.0 + 1e-12).contains(&base) {
        return Err(Error::Refused(format!(
            "side condition 0 ≤ 1 − kt²φ(t) ≤ 1 fails at t = {t} (value {base})"
        )));
    }
    Ok(())
}
