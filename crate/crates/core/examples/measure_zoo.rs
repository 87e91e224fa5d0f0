// The measure families as JSON specs: build each one and show its
// truncation record.

use convpow::zoo::{self, MeasureSpec};

fn main() -> convpow::Result<()> {
    let specs = [
        MeasureSpec::power_law(3.0, 10_000),
        MeasureSpec::power_law(2.5, 10_000),
        MeasureSpec::log_squared(10_000),
        MeasureSpec::lazy_walk(),
        MeasureSpec::atoms(-1, vec![0.25, 0.25, 0.5]),
        MeasureSpec::mixture(0.5, MeasureSpec::power_law(3.0, 10_000), MeasureSpec::lazy_walk()),
    ];
    for spec in &specs {
        let json = serde_json::to_string(spec).expect("spec serializes");
        let back: MeasureSpec = serde_json::from_str(&json).expect("spec parses");
        assert_eq!(&back, spec);
        let built = spec.build(zoo::DEFAULT_KERNEL_K)?;
        let mu = &built.measure;
        println!("{json}");
        println!(
            "    width {}, symmetric {}, μ(1) = {:.6}, truncation {:?}",
            mu.width(),
            mu.is_symmetric(),
            mu.weight(1),
            built.truncation
        );
    }

    let rejected = serde_json::from_str::<MeasureSpec>(r#"{"kind": "cauchy", "params": {}}"#);
    println!("unknown kind rejected: {}", rejected.is_err());
    Ok(())
}
