//! Running a catalog experiment from code and writing its report.

use scl::experiments::{list_experiments, run, ExperimentConfig};

fn main() -> scl::Result<()> {
    for e in list_experiments() {
        println!("{:<18} [{}] {}", e.name, e.module, e.section);
    }
    let config = ExperimentConfig {
        paths: Some(2_000),
        ..ExperimentConfig::named("bridge-law")
    }
    .with_param("a", 0.5);
    let report = run(&config)?;
    println!("{}", report.to_csv()?);
    let dir = std::env::temp_dir().join("scl-example");
    let (json, _) = report.write(&dir)?;
    println!(
        "all passed: {}; report at {}",
        report.passed(),
        json.display()
    );
    Ok(())
}
