// One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

use std::time::{Duration, Instant};

use convpow::kernel;
use convpow::maximal::{self, LatticeSequence};
use convpow::report::{self, AnalyzeOptions, MaximalOptions, VerifyBoundsOptions};
use convpow::spectral::{self, GridOptions, PhiEvaluator, SpectralProfile};
use convpow::tail::{self, LipschitzOptions};
use convpow::zoo::{self, MeasureSpec};
use convpow::{LatticeMeasure, PowerMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sup_gap(a: &LatticeMeasure, b: &LatticeMeasure) -> f64 {
    let lo = a.offset().min(b.offset());
    let hi = (*a.support_range().end()).max(*b.support_range().end());
    (lo..=hi).map(|k| (a.weight(k) - b.weight(k)).abs()).fold(0.0, f64::max)
}

/// Normalized random weights on `offset + step·j`, `j < atoms`.
fn random_measure(rng: &mut ChaCha8Rng, atoms: usize, step: i64) -> LatticeMeasure {
    let offset = rng.gen_range(-10i64..=10);
    let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let pairs: Vec<(i64, f64)> = raw
        .iter()
        .enumerate()
        .map(|(j, w)| (offset + step * j as i64, w / total))
        .collect();
    LatticeMeasure::from_atoms(&pairs).expect("valid random measure")
}

fn criterion1_measures() -> Vec<LatticeMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..20)
        .map(|_| {
            let atoms = rng.gen_range(1..=25);
            random_measure(&mut rng, atoms, 1)
        })
        .collect()
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for mu in criterion1_measures() {
        for n in 1..=10 {
            let fast = mu.power(n, PowerMethod::Fast).map_err(|e| e.to_string())?;
            let direct = mu.power(n, PowerMethod::Direct).map_err(|e| e.to_string())?;
            worst = worst.max(sup_gap(&fast, &direct));
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-10 && elapsed < Duration::from_secs(10),
        format!("sup gap {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn binomial(m: u64, k: u64) -> u128 {
    let k = k.min(m - k);
    (0..k).fold(1u128, |acc, i| acc * (m - i) as u128 / (i + 1) as u128)
}

fn criterion2() -> Outcome {
    let lazy = zoo::lazy_walk();
    let table = kernel::kernel_table(&lazy, "lazy_walk", &(1..=12).collect::<Vec<_>>(), -13..=13).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for n in 1..=12u64 {
        let power = lazy.power(n, PowerMethod::Fast).map_err(|e| e.to_string())?;
        for x in -13i64..=13 {
            let exact = if x.unsigned_abs() > n {
                0.0
            } else {
                binomial(2 * n, (n as i64 + x) as u64) as f64 / 4f64.powi(n as i32)
            };
            worst = worst.max((power.weight(x) - exact).abs());
            worst = worst.max((table.value(n, x).unwrap() - exact).abs());
        }
    }
    check(worst < 1e-12, format!("max deviation {worst:.2e}"))
}

fn zoo_measures() -> Vec<(String, LatticeMeasure)> {
    let k = zoo::DEFAULT_KERNEL_K;
    let atoms = |pairs: &[(i64, f64)]| LatticeMeasure::from_atoms(pairs).unwrap();
    vec![
        ("power_law(2.5)".into(), zoo::power_law(2.5, k).unwrap().measure),
        ("power_law(3)".into(), zoo::power_law(3.0, k).unwrap().measure),
        ("log_squared".into(), zoo::log_squared(k).unwrap().measure),
        ("mixture(3)".into(), zoo::power_mixture(3.0, k).unwrap().measure),
        ("lazy_walk".into(), zoo::lazy_walk()),
        ("uniform{-1,0,1}".into(), zoo::uniform(-1, 1).unwrap()),
        ("delta_0".into(), LatticeMeasure::dirac(0)),
        ("delta_0+delta_1".into(), atoms(&[(0, 0.5), (1, 0.5)])),
        ("delta_0+delta_2".into(), atoms(&[(0, 0.5), (2, 0.5)])),
        ("delta_1+delta_4".into(), atoms(&[(1, 0.5), (4, 0.5)])),
    ]
}

fn criterion3_measures() -> Vec<(String, LatticeMeasure)> {
    let mut all = zoo_measures();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..50 {
        let step = [1, 1, 2, 3][i % 4];
        let atoms = rng.gen_range(1..=25);
        all.push((format!("random #{i} (step {step})"), random_measure(&mut rng, atoms, step)));
    }
    all
}

fn criterion3() -> Outcome {
    let measures = criterion3_measures();
    let mut mismatches = Vec::new();
    let mut aperiodic = 0;
    for (name, mu) in &measures {
        let gcd = mu.is_strictly_aperiodic();
        let grid = spectral::grid_aperiodicity(mu, 0.01, 1e-6).map_err(|e| e.to_string())?;
        aperiodic += gcd as usize;
        if gcd != grid.strictly_aperiodic {
            mismatches.push(name.clone());
        }
    }
    check(
        mismatches.is_empty(),
        format!(
            "{} measures, {aperiodic} strictly aperiodic, mismatches {mismatches:?}",
            measures.len()
        ),
    )
}

fn criterion4() -> Outcome {
    let mut smallest = f64::INFINITY;
    let mut tested = 0;
    for (name, mu) in zoo_measures().iter().filter(|(_, m)| m.is_strictly_aperiodic()) {
        let profile = SpectralProfile::compute(mu, GridOptions::default()).map_err(|e| e.to_string())?;
        let c = spectral::petrov_constant(&profile).map_err(|e| format!("{name}: {e}"))?;
        smallest = smallest.min(c.value);
        tested += 1;
    }
    let lazy = SpectralProfile::compute(&zoo::lazy_walk(), GridOptions::default()).map_err(|e| e.to_string())?;
    let lazy_c = spectral::petrov_constant(&lazy).map_err(|e| e.to_string())?.value;
    let pi2 = std::f64::consts::PI.powi(2);
    check(
        smallest > 0.0 && (lazy_c - pi2).abs() < 1e-3,
        format!("{tested} measures, min constant {smallest:.4}, lazy walk {lazy_c:.6} vs π² {pi2:.6}"),
    )
}

fn exponents(beta: f64) -> Result<(f64, Option<f64>), String> {
    let built = zoo::power_law(beta, 1_000_000).map_err(|e| e.to_string())?;
    let radius = built.truncation.map(|t| t.radius);
    let curve = tail::partial_second_moment_curve(&built.measure, &tail::default_n_values(radius), radius)
        .map_err(|e| e.to_string())?;
    let growth = tail::growth_exponent(&curve).map_err(|e| e.to_string())?.exponent;
    let profile = SpectralProfile::compute(&built.measure, GridOptions::default()).map_err(|e| e.to_string())?;
    let lipschitz = tail::lipschitz_exponent_estimate(&profile, LipschitzOptions::default())
        .map_err(|e| e.to_string())?
        .exponent;
    Ok((growth, lipschitz))
}

fn criterion5() -> Outcome {
    let start = Instant::now();
    let (g25, l25) = exponents(2.5)?;
    let (g3, _) = exponents(3.0)?;
    let elapsed = start.elapsed();
    let l25v = l25.unwrap_or(f64::INFINITY);
    check(
        (g25 - 0.5).abs() <= 0.05 && (l25v - 0.5).abs() <= 0.1 && g3 <= 0.05 && elapsed < Duration::from_secs(60),
        format!(
            "β=2.5 growth {g25:.4} Hölder {l25v:.4}; β=3 growth {g3:.4}; {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion6() -> Outcome {
    let closed = spectral::lemma_integrals(|_| 1.0, 1.0, 0.5, &[4]).map_err(|e| e.to_string())?;
    let j1_4 = closed.j1[0];
    let mu = zoo::power_mixture(3.0, zoo::DEFAULT_SPECTRAL_K).map_err(|e| e.to_string())?.measure;
    let profile = SpectralProfile::compute(&mu, GridOptions::default()).map_err(|e| e.to_string())?;
    let fit = spectral::majorant_fit(&profile, report::MAJORANT_DELTA).map_err(|e| e.to_string())?;
    let evaluator = PhiEvaluator::new(&mu);
    let li = spectral::lemma_integrals(|t| evaluator.phi(t), fit.k_star, report::MAJORANT_DELTA, &report::LEMMA_N_VALUES)
        .map_err(|e| e.to_string())?;
    let at_100 = li.n_values.iter().position(|&n| n == 100).unwrap();
    let j1_100 = li.j1[at_100];
    let j2_100 = li.j2[at_100].unwrap();
    check(
        (j1_4 - 0.68359375).abs() <= 1e-8 && li.max_j1 <= 2.0 * j1_100 && li.max_j2 <= 2.0 * j2_100,
        format!(
            "J1(4) = {j1_4:.10}; k* = {:.4}; max J1 {:.4} vs J1(100) {j1_100:.4}; max J2 {:.4} vs J2(100) {j2_100:.4}",
            fit.k_star, li.max_j1, li.max_j2
        ),
    )
}

fn criterion7() -> Outcome {
    let start = Instant::now();
    let lazy = zoo::lazy_walk();
    let table = kernel::kernel_table(&lazy, "lazy_walk", &(1..=512).collect::<Vec<_>>(), -512..=512)
        .map_err(|e| e.to_string())?;
    let half = kernel::smoothness_large_n_fit(&table.restrict_n(256), 1.0).map_err(|e| e.to_string())?;
    let full = kernel::smoothness_large_n_fit(&table, 1.0).map_err(|e| e.to_string())?;
    let change = half.relative_change(&full);
    let elapsed = start.elapsed();
    check(
        change < kernel::STABILITY_THRESHOLD && elapsed < Duration::from_secs(300),
        format!(
            "C = {:.6} (n ≤ 256) vs {:.6} (n ≤ 512), change {:.2}%, worst {:?}, {:.1} s",
            half.fitted_constant,
            full.fitted_constant,
            100.0 * change,
            full.worst_tuple,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion8() -> Outcome {
    let lazy = zoo::lazy_walk();
    let delta0 = LatticeSequence::delta(0);
    let lambdas = maximal::lambda_grid(1e-4, maximal::DEFAULT_LAMBDA_POINTS).map_err(|e| e.to_string())?;
    let (base, _, test) = maximal::doubling_test(&lazy, &delta0, 256, &lambdas).map_err(|e| e.to_string())?;
    let m = maximal::maximal_function(&lazy, &delta0, 256).map_err(|e| e.to_string())?;
    let at = maximal::weak_type_curve(&m, 1.0, &[0.4]).map_err(|e| e.to_string())?;
    check(
        base.headline() <= 1.0 && test.growth < maximal::DOUBLING_THRESHOLD && m.get(0) == 0.5 && at.constants[0] == 0.4,
        format!(
            "headline {:.4} → {:.4} ({:.1}%), Mφ(0) = {}, C(0.4) = {}",
            test.headline,
            test.doubled_headline,
            100.0 * test.growth,
            m.get(0),
            at.constants[0]
        ),
    )
}

fn criterion9() -> Outcome {
    let uniform = SpectralProfile::compute(&zoo::uniform(-1, 1).unwrap(), GridOptions::default()).map_err(|e| e.to_string())?;
    let u = spectral::angular_ratio_sup(&uniform).map_err(|e| e.to_string())?;
    let two = LatticeMeasure::from_atoms(&[(0, 0.5), (1, 0.5)]).unwrap();
    let two = SpectralProfile::compute(&two, GridOptions::default()).map_err(|e| e.to_string())?;
    let b = spectral::angular_ratio_sup(&two).map_err(|e| e.to_string())?;
    check(
        (u.value - 2.0).abs() <= 1e-6 && !u.unbounded && b.unbounded,
        format!(
            "uniform sup {:.9}; ½δ₀+½δ₁ unbounded = {} (refinement {:?})",
            u.value,
            b.unbounded,
            b.refinement.map(|r| r.values)
        ),
    )
}

/// Serialized outputs of the criteria 1–9 computations.
fn determinism_fingerprint() -> Result<Vec<String>, String> {
    let e = |err: convpow::Error| err.to_string();
    let json = |v: &dyn erased::Json| v.to_json();
    let mut out = Vec::new();
    for mu in criterion1_measures() {
        out.push(json(&mu.power(10, PowerMethod::Fast).map_err(e)?));
    }
    for (_, mu) in criterion3_measures() {
        out.push(json(&spectral::grid_aperiodicity(&mu, 0.01, 1e-6).map_err(e)?));
    }
    for beta in [2.5, 3.0] {
        out.push(json(&exponents(beta)?));
    }
    let mixture = MeasureSpec::mixture(0.5, MeasureSpec::power_law(3.0, 100_000), MeasureSpec::lazy_walk());
    for spec in [
        mixture,
        MeasureSpec::lazy_walk(),
        MeasureSpec::atoms(0, vec![0.5, 0.5]),
        MeasureSpec::atoms(-1, vec![1.0 / 3.0; 3]),
    ] {
        out.push(report::run_analyze(&spec, AnalyzeOptions::default()).map_err(e)?.report.deterministic_json());
    }
    let bounds = VerifyBoundsOptions {
        n_max: 512,
        x_max: 512,
        ..VerifyBoundsOptions::default()
    };
    out.push(report::run_verify_bounds(&MeasureSpec::lazy_walk(), bounds).map_err(e)?.report.deterministic_json());
    out.push(
        report::run_maximal(&MeasureSpec::lazy_walk(), &MaximalOptions::default())
            .map_err(e)?
            .report
            .deterministic_json(),
    );
    Ok(out)
}

mod erased {
    pub trait Json {
        fn to_json(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_json(&self) -> String {
            serde_json::to_string(self).expect("serializes")
        }
    }
}

fn criterion10() -> Outcome {
    let mut runs = Vec::new();
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        runs.push((threads, pool.install(determinism_fingerprint)?));
    }
    let reference = &runs[0].1;
    let differing: Vec<usize> = runs.iter().filter(|(_, r)| r != reference).map(|(t, _)| *t).collect();
    check(
        differing.is_empty(),
        format!("{} outputs compared across 1, 4, 8 threads; differing thread counts {differing:?}", reference.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("convolution oracle equivalence", criterion1),
        ("lazy walk binomial closed form", criterion2),
        ("coset test agrees with the grid criterion", criterion3),
        ("Gaussian majorant constant positive", criterion4),
        ("tail and Hölder exponent duality", criterion5),
        ("bounded lemma integrals", criterion6),
        ("difference bound constant stable under doubling", criterion7),
        ("weak (1,1) constant stable under doubling", criterion8),
        ("angular ratio contrast", criterion9),
        ("determinism across thread counts", criterion10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failures += outcome.is_err() as usize;
        println!("criterion {:>2} {status}: {name} [{detail}] ({secs:.1} s)", i + 1);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
