// The three report pipelines, written to a scratch directory the way the
// `convpow` binary writes them.

use convpow::report::{self, AnalyzeOptions, MaximalOptions, VerifyBoundsOptions};
use convpow::zoo::MeasureSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("convpow-report-{}", std::process::id()));
    let spec = MeasureSpec::lazy_walk();

    let analyze = report::run_analyze(&spec, AnalyzeOptions { grid_size: 1 << 12 })?;
    let bounds = report::run_verify_bounds(
        &spec,
        VerifyBoundsOptions {
            n_max: 32,
            x_max: 64,
            ..VerifyBoundsOptions::default()
        },
    )?;
    let maximal = report::run_maximal(
        &spec,
        &MaximalOptions {
            n_max: 64,
            ..MaximalOptions::default()
        },
    )?;
    for (name, run) in [("analyze", &analyze), ("bounds", &bounds), ("maximal", &maximal)] {
        run.report.validate()?;
        let out = dir.join(format!("{name}.json"));
        let side = run.write(&out)?;
        println!(
            "{name}: exit code {}, {} side files, findings {:?}",
            run.report.exit_code(),
            side.len(),
            run.report.findings
        );
    }
    let headline = maximal.report.maximal.as_ref().map(|m| m.headline_constant);
    println!("weak-type headline constant: {headline:?}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
