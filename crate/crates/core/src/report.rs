//! JSON diagnostics reports and CSV side files for the three pipelines:
//! spectral/tail analysis, kernel bound verification and the maximal
//! inequality.
//!
//! The `run_*` functions do no IO; [`Run::write`] persists a report and its
//! side files. Wall-clock timings live in a separate map that
//! [`DiagnosticsReport::deterministic_json`] leaves out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, BoundFit, SmallNFit, STABILITY_THRESHOLD};
use crate::maximal::{self, DoublingTest, LatticeSequence};
use crate::spectral::{self, GridOptions, SpectralProfile};
use crate::tail;
use crate::zoo::{self, MeasureSpec, Truncation};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Half-width of the window for the majorant fit and the lemma integrals.
pub const MAJORANT_DELTA: f64 = 0.25;
/// `n` at which the lemma integrals are evaluated.
pub const LEMMA_N_VALUES: [u64; 4] = [10, 100, 1_000, 10_000];
pub const DEFAULT_KERNEL_N_MAX: u64 = 256;
pub const DEFAULT_X_MAX: i64 = 512;
pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_MAXIMAL_N_MAX: u64 = 256;

/// Outcome of one diagnostic: a value or an explained refusal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Section<T> {
    Ok(T),
    /// The diagnostic does not apply to this input.
    Refused(String),
    /// The measure violates a hypothesis the diagnostic tests.
    HypothesisFailure(String),
    /// No tested tuples fall in the regime.
    EmptyRegime(String),
    /// The computation lost too much precision to report a value.
    NumericalFailure(String),
}

impl<T> Section<T> {
    /// Input errors propagate; everything else becomes a section.
    fn from_result(r: Result<T>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Section::Ok(v)),
            Err(e @ (Error::InvalidArgument { .. } | Error::InvalidMeasure(_))) => Err(e),
            Err(Error::Refused(m)) => Ok(Section::Refused(m)),
            Err(Error::Hypothesis(m)) => Ok(Section::HypothesisFailure(m)),
            Err(Error::EmptyRegime(m)) => Ok(Section::EmptyRegime(m)),
            Err(e @ Error::PrecisionExhausted { .. }) => Ok(Section::NumericalFailure(e.to_string())),
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(v) => Some(v),
            _ => None,
        }
    }

    fn failure(&self) -> Option<&str> {
        match self {
            Section::HypothesisFailure(m) | Section::NumericalFailure(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSection {
    pub strict_aperiodicity: bool,
    pub grid_aperiodicity: Section<spectral::GridAperiodicity>,
    pub angular_ratio: Section<spectral::AngularRatio>,
    pub component_ratios: spectral::ComponentRatioReport,
    pub petrov_constant: Section<spectral::PetrovConstant>,
    pub growth_exponent: Section<tail::GrowthFit>,
    pub lipschitz_exponent: Section<tail::LipschitzEstimate>,
    pub majorant: Section<spectral::MajorantFit>,
    pub phi_properties: Section<spectral::PhiPropertyReport>,
    pub lemma_integrals: Section<spectral::LemmaIntegrals>,
}

/// A fit on the full table together with the fit on the first half of the
/// n-range. The comparison is absent when the half range has no samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableFit {
    pub fit: BoundFit,
    pub half_range_constant: Option<f64>,
    pub relative_change: Option<f64>,
    pub stable: Option<bool>,
}

impl StableFit {
    fn new(fit: BoundFit, half: Option<&BoundFit>) -> Self {
        let relative_change = half.map(|h| h.relative_change(&fit));
        Self {
            half_range_constant: half.map(|h| h.fitted_constant),
            stable: relative_change.map(|c| c < STABILITY_THRESHOLD),
            relative_change,
            fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSection {
    pub n_values: Vec<u64>,
    pub max_row_mass_defect: f64,
    pub sigma: f64,
    pub pointwise: Section<StableFit>,
    pub small_n: Section<StableFit>,
    pub smoothness_large_n: Section<StableFit>,
    pub smoothness_holder: Section<StableFit>,
    pub calderon_kernel: Section<BoundFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalSection {
    pub phi: LatticeSequence,
    pub phi_norm: f64,
    pub max_m_phi: f64,
    pub headline_constant: f64,
    pub doubling: DoublingTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub tool_version: String,
    pub command: String,
    pub spec: MeasureSpec,
    pub truncation: Option<Truncation>,
    pub parameters: Parameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maximal: Option<MaximalSection>,
    /// Hypothesis failures, unstable fits and failed doubling tests.
    pub findings: Vec<String>,
    pub side_files: Vec<String>,
    /// Seconds per section; excluded from determinism comparisons.
    pub timings: BTreeMap<String, f64>,
}

/// Keys whose value may legitimately be `null`.
const NULLABLE: [&str; 9] = [
    "truncation",
    "c1",
    "refinement",
    "worst_tuple",
    "j2",
    "exponent",
    "half_range_constant",
    "relative_change",
    "stable",
];

impl DiagnosticsReport {
    fn new(command: &str, spec: &MeasureSpec, truncation: Option<Truncation>, parameters: Parameters) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            spec: spec.clone(),
            truncation,
            parameters,
            spectral: None,
            kernel: None,
            maximal: None,
            findings: Vec::new(),
            side_files: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// 0 when there are no findings, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.findings.is_empty() {
            0
        } else {
            1
        }
    }

    /// Every numeric field must be finite. A non-finite float serializes as
    /// `null`, so any `null` outside the optional fields is rejected.
    pub fn validate(&self) -> Result<()> {
        let value = serde_json::to_value(self).map_err(|e| Error::Refused(e.to_string()))?;
        check_nulls(&value, "report")
    }

    /// Pretty JSON with the timings cleared.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timings.clear();
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_nulls(value: &serde_json::Value, key: &str) -> Result<()> {
    match value {
        serde_json::Value::Null if !NULLABLE.contains(&key) => {
            Err(Error::Refused(format!("field `{key}` is not a finite number")))
        }
        serde_json::Value::Array(items) => items.iter().try_for_each(|v| check_nulls(v, key)),
        serde_json::Value::Object(map) => map.iter().try_for_each(|(k, v)| check_nulls(v, k)),
        _ => Ok(()),
    }
}

/// A report plus CSV side files, keyed by suffix.
#[derive(Debug, Clone)]
pub struct Run {
    pub report: DiagnosticsReport,
    pub side_files: Vec<(String, Vec<u8>)>,
}

impl Run {
    fn new(report: DiagnosticsReport) -> Self {
        Self {
            report,
            side_files: Vec::new(),
        }
    }

    fn attach(&mut self, suffix: &str, bytes: Vec<u8>) {
        self.report.side_files.push(suffix.to_string());
        self.side_files.push((suffix.to_string(), bytes));
    }

    /// Writes the report to `out` and each side file next to it as
    /// `<stem>.<suffix>`. Returns the side-file paths.
    pub fn write(&self, out: &Path) -> std::io::Result<Vec<PathBuf>> {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(out, self.report.to_json() + "\n")?;
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mut paths = Vec::new();
        for (suffix, bytes) in &self.side_files {
            let path = out.with_file_name(format!("{stem}.{suffix}"));
            std::fs::write(&path, bytes)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn csv_bytes<F>(write: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf).expect("writing CSV to memory");
    buf
}

struct Stopwatch<'a> {
    timings: &'a mut BTreeMap<String, f64>,
    start: Instant,
}

impl<'a> Stopwatch<'a> {
    fn new(timings: &'a mut BTreeMap<String, f64>) -> Self {
        Self {
            timings,
            start: Instant::now(),
        }
    }

    fn lap(&mut self, name: &str) {
        self.timings.insert(name.to_string(), self.start.elapsed().as_secs_f64());
        self.start = Instant::now();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub grid_size: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            grid_size: GridOptions::default().size,
        }
    }
}

/// Spectral, tail and majorant diagnostics for one measure.
pub fn run_analyze(spec: &MeasureSpec, options: AnalyzeOptions) -> Result<Run> {
    let built = spec.build(zoo::DEFAULT_SPECTRAL_K)?;
    let mu = &built.measure;
    let radius = built.truncation.map(|t| t.radius);
    let parameters = Parameters {
        grid_size: Some(options.grid_size),
        ..Parameters::default()
    };
    let mut report = DiagnosticsReport::new("analyze", spec, built.truncation, parameters);
    let mut timings = BTreeMap::new();
    let mut clock = Stopwatch::new(&mut timings);

    let profile = SpectralProfile::compute(mu, GridOptions::with_size(options.grid_size))?;
    clock.lap("spectral_profile");
    let strict_aperiodicity = mu.is_strictly_aperiodic();
    let grid_aperiodicity = Section::from_result(spectral::grid_aperiodicity(mu, 0.01, 1e-6))?;
    let angular_ratio = Section::from_result(spectral::angular_ratio_sup(&profile))?;
    let component_ratios = spectral::component_ratio_report(&profile);
    let petrov_constant = Section::from_result(spectral::petrov_constant(&profile))?;
    clock.lap("transform_diagnostics");

    let growth = tail::partial_second_moment_curve(mu, &tail::default_n_values(radius), radius)?;
    let growth_exponent = Section::from_result(tail::growth_exponent(&growth))?;
    let lipschitz_exponent =
        Section::from_result(tail::lipschitz_exponent_estimate(&profile, tail::LipschitzOptions::default()))?;
    clock.lap("tail_exponents");

    let majorant = Section::from_result(spectral::majorant_fit(&profile, MAJORANT_DELTA))?;
    let phi_properties = Section::from_result(spectral::phi_property_report(&profile, spectral::DEFAULT_PHI_WINDOW))?;
    let lemma_integrals = match majorant.ok() {
        Some(fit) => {
            let evaluator = spectral::PhiEvaluator::new(mu);
            Section::from_result(spectral::lemma_integrals(
                |t| evaluator.phi(t),
                fit.k_star,
                MAJORANT_DELTA,
                &LEMMA_N_VALUES,
            ))?
        }
        None => Section::Refused("no majorant constant was fitted".to_string()),
    };
    clock.lap("majorant_and_lemma_integrals");

    let section = SpectralSection {
        strict_aperiodicity,
        grid_aperiodicity,
        angular_ratio,
        component_ratios,
        petrov_constant,
        growth_exponent,
        lipschitz_exponent,
        majorant,
        phi_properties,
        lemma_integrals,
    };
    let named: [(&str, Option<&str>); 8] = [
        ("grid_aperiodicity", section.grid_aperiodicity.failure()),
        ("angular_ratio", section.angular_ratio.failure()),
        ("petrov_constant", section.petrov_constant.failure()),
        ("growth_exponent", section.growth_exponent.failure()),
        ("lipschitz_exponent", section.lipschitz_exponent.failure()),
        ("majorant", section.majorant.failure()),
        ("phi_properties", section.phi_properties.failure()),
        ("lemma_integrals", section.lemma_integrals.failure()),
    ];
    for (name, failure) in named {
        if let Some(m) = failure {
            report.findings.push(format!("{name}: {m}"));
        }
    }
    if let Some(fit) = section.majorant.ok().filter(|f| !f.side_condition_holds) {
        report
            .findings
            .push(format!("majorant: 1 − k*t²φ leaves [0, 1] on |t| ≤ {}", fit.delta));
    }
    report.spectral = Some(section);

    let mut run = Run::new(report);
    run.attach("spectral.csv", csv_bytes(|w| profile.write_csv(w)));
    run.attach("growth.csv", csv_bytes(|w| growth.write_csv(w)));
    run.report.timings = timings;
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyBoundsOptions {
    pub n_max: u64,
    pub x_max: i64,
    pub delta: f64,
    pub alpha: f64,
}

impl Default for VerifyBoundsOptions {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_KERNEL_N_MAX,
            x_max: DEFAULT_X_MAX,
            delta: DEFAULT_DELTA,
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// `(x, y)` pairs with `0 < 2|y| < |x| ≤ x_max` for the Calderón kernel
/// check: dyadic `x` of both signs, `y` at `±1`, `±|x|/4` and just below
/// `|x|/2`.
pub fn calderon_pairs(x_max: i64) -> Vec<(i64, i64)> {
    let mut pairs = Vec::new();
    let mut x = 3i64;
    while x <= x_max {
        let half = (x - 1) / 2;
        let mut ys = vec![1, (x / 4).max(1), half];
        ys.sort_unstable();
        ys.dedup();
        for sign_x in [-1, 1] {
            for &y in &ys {
                for sign_y in [-1, 1] {
                    pairs.push((sign_x * x, sign_y * y));
                }
            }
        }
        x = 2 * x + 1;
    }
    pairs
}

/// `t = j/128` for `j = −64..=64`.
pub fn calderon_t_values() -> Vec<f64> {
    (-64..=64).map(|j| j as f64 / 128.0).collect()
}

/// Kernel tables and the empirical constants of the decay and smoothness
/// bounds, each also fitted on the first half of the n-range.
pub fn run_verify_bounds(spec: &MeasureSpec, options: VerifyBoundsOptions) -> Result<Run> {
    if options.n_max == 0 {
        return Err(Error::arg("n_max", "must be at least 1"));
    }
    if options.x_max < 1 {
        return Err(Error::arg("x_max", "must be at least 1"));
    }
    let built = spec.build(zoo::DEFAULT_KERNEL_K)?;
    let mu = &built.measure;
    let parameters = Parameters {
        n_max: Some(options.n_max),
        x_max: Some(options.x_max),
        delta: Some(options.delta),
        alpha: Some(options.alpha),
        ..Parameters::default()
    };
    let mut report = DiagnosticsReport::new("verify-bounds", spec, built.truncation, parameters);
    let mut timings = BTreeMap::new();
    let mut clock = Stopwatch::new(&mut timings);

    let n_values = kernel::default_n_values(mu, options.n_max);
    let table = kernel::kernel_table(mu, spec.kind(), &n_values, -options.x_max..=options.x_max)?;
    let half = table.restrict_n((options.n_max / 2).max(1));
    let max_row_mass_defect = table
        .row_mass
        .iter()
        .zip(&table.n_values)
        .map(|(m, &n)| (m - (1.0 - mu.tail_mass()).powi(n.min(i32::MAX as u64) as i32)).abs())
        .fold(0.0, f64::max);
    clock.lap("kernel_table");

    let stable = |full: Result<BoundFit>, half: Result<BoundFit>| -> Result<Section<StableFit>> {
        Section::from_result(full.map(|f| StableFit::new(f, half.as_ref().ok())))
    };
    let pointwise = stable(
        kernel::pointwise_bound_fit(&table, options.delta),
        kernel::pointwise_bound_fit(&half, options.delta),
    )?;
    let small = |t| kernel::small_n_regime_check(t, options.delta).map(|s: SmallNFit| s.fit);
    let small_n = stable(small(&table), small(&half))?;
    clock.lap("pointwise_fits");

    let smoothness_large_n = stable(
        kernel::smoothness_large_n_fit(&table, options.delta),
        kernel::smoothness_large_n_fit(&half, options.delta),
    )?;
    let smoothness_holder = stable(
        kernel::smoothness_holder_fit(&table, options.alpha),
        kernel::smoothness_holder_fit(&half, options.alpha),
    )?;
    clock.lap("smoothness_fits");

    let calderon_kernel = Section::from_result(kernel::calderon_kernel_lemma_check(
        &calderon_t_values(),
        &calderon_pairs(options.x_max),
    ))?;
    clock.lap("calderon_kernel");

    if max_row_mass_defect > kernel::ROW_MASS_TOLERANCE {
        report
            .findings
            .push(format!("kernel table: row mass defect {max_row_mass_defect:e}"));
    }
    for (name, section) in [
        ("pointwise", &pointwise),
        ("small_n", &small_n),
        ("smoothness_large_n", &smoothness_large_n),
        ("smoothness_holder", &smoothness_holder),
    ] {
        if let Some(m) = section.failure() {
            report.findings.push(format!("{name}: {m}"));
        }
        if let Some(change) = section.ok().filter(|s| s.stable == Some(false)).and_then(|s| s.relative_change) {
            report.findings.push(format!(
                "{name}: constant changed by {:.1}% when the n-range doubled",
                100.0 * change
            ));
        }
    }
    report.kernel = Some(KernelSection {
        n_values,
        max_row_mass_defect,
        sigma: kernel::small_n_sigma(options.delta),
        pointwise,
        small_n,
        smoothness_large_n,
        smoothness_holder,
        calderon_kernel,
    });

    let mut run = Run::new(report);
    run.attach("kernel.csv", csv_bytes(|w| table.write_csv(w)));
    run.report.timings = timings;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalOptions {
    pub n_max: u64,
    pub lambda_min: f64,
    pub phi: LatticeSequence,
}

impl Default for MaximalOptions {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_MAXIMAL_N_MAX,
            lambda_min: maximal::DEFAULT_LAMBDA_MIN,
            phi: LatticeSequence::delta(0),
        }
    }
}

/// Level-set curve of the truncated maximal function and the doubling
/// test `n_max → 2·n_max`.
pub fn run_maximal(spec: &MeasureSpec, options: &MaximalOptions) -> Result<Run> {
    let built = spec.build(zoo::DEFAULT_KERNEL_K)?;
    let mu = &built.measure;
    let parameters = Parameters {
        n_max: Some(options.n_max),
        lambda_min: Some(options.lambda_min),
        ..Parameters::default()
    };
    let mut report = DiagnosticsReport::new("maximal", spec, built.truncation, parameters);
    let mut timings = BTreeMap::new();
    let mut clock = Stopwatch::new(&mut timings);

    let phi_norm = options.phi.l1_norm();
    if !(phi_norm > 0.0) {
        return Err(Error::arg("phi", "the test sequence has zero norm"));
    }
    let lambdas = maximal::lambda_grid(options.lambda_min, maximal::DEFAULT_LAMBDA_POINTS)?;
    let m_phi = maximal::maximal_function(mu, &options.phi, options.n_max)?;
    let curve = maximal::weak_type_curve(&m_phi, phi_norm, &lambdas)?;
    clock.lap("maximal_function");
    let doubled_m = maximal::maximal_function(mu, &options.phi, 2 * options.n_max)?;
    let doubled = maximal::weak_type_curve(&doubled_m, phi_norm, &lambdas)?;
    clock.lap("doubling");

    let (h, d) = (curve.headline(), doubled.headline());
    let growth = if h > 0.0 { (d - h) / h } else { 0.0 };
    let doubling = DoublingTest {
        n_max: options.n_max,
        headline: h,
        doubled_headline: d,
        growth,
        within_threshold: growth < maximal::DOUBLING_THRESHOLD,
    };
    if !doubling.within_threshold {
        report.findings.push(format!(
            "maximal: headline constant grew by {:.1}% when n_max doubled",
            100.0 * growth
        ));
    }
    report.maximal = Some(MaximalSection {
        phi: options.phi.clone(),
        phi_norm,
        max_m_phi: m_phi.max(),
        headline_constant: h,
        doubling,
    });

    let mut run = Run::new(report);
    run.attach("levels.csv", csv_bytes(|w| curve.write_csv(w)));
    run.report.timings = timings;
    Ok(run)
}
