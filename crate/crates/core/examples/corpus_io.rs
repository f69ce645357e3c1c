//! Write a generated corpus to disk, load it back, and filter it.
//!
//! `cargo run --example corpus_io -- /tmp/corpus`
use std::path::PathBuf;

use embedflow::corpus::{filter_occurrences, load_dataset, validate_dataset, Filter};
use embedflow::synthetic::{generate, SyntheticConfig};

fn main() -> anyhow::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("embedflow-corpus"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    let synthetic = generate(&SyntheticConfig::default())?;
    let manifest = synthetic.dataset.save(&dir, "synthetic")?;
    println!("wrote {}", manifest.display());

    let errors = validate_dataset(&manifest);
    println!("violations: {}", errors.len());

    let dataset = load_dataset(&manifest)?;
    assert_eq!(dataset, synthetic.dataset);
    println!(
        "{}: {} layers x {} points x {} dims",
        dataset.name,
        dataset.n_layers(),
        dataset.n_points(),
        dataset.embeddings.dim()
    );
    for expr in [r#"token == "cell""#, r#"POS == "NOUN""#, r#"POS == "NOUN" || SYNCAT == "AP""#, r#"POS ^= "V""#] {
        let filter: Filter = expr.parse()?;
        println!("{filter} -> {} points", filter_occurrences(&dataset, &filter)?.len());
    }
    Ok(())
}
