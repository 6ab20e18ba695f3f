//! `crouter gen-data` — synthetic dataset generation.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crouter_core::dataset::{synthesize_dataset, GeneratorSpec};

use crate::context::{prepare_out_dir, read_input, user_error, CliResult, Manifest};

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Generator spec: a JSON file path or a bundled name
    /// ("standard", "language-specialists")
    #[arg(long, default_value = "standard")]
    pub spec: String,
    /// Override the spec's record count
    #[arg(long)]
    pub records: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for header.json, records.jsonl, planted.json
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite a non-empty output directory
    #[arg(long)]
    pub force: bool,
}

fn resolve_spec(name: &str, records: Option<usize>) -> CliResult<GeneratorSpec> {
    let mut spec = match name {
        "standard" => GeneratorSpec::standard(records.unwrap_or(5_000)),
        "language-specialists" => GeneratorSpec::language_specialists(records.unwrap_or(2_000)),
        path => {
            let text = read_input(std::path::Path::new(path))?;
            serde_json::from_str(&text)
                .map_err(|e| user_error(format!("generator spec '{path}': {e}")))?
        }
    };
    if let Some(n) = records {
        spec.n_records = n;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run(args: GenDataArgs) -> CliResult {
    let spec = resolve_spec(&args.spec, args.records)?;
    prepare_out_dir(&args.out, args.force)?;

    let synth = synthesize_dataset(&spec, args.seed)?;
    synth.dataset.save(&args.out)?;

    let mut truth_json = serde_json::to_string_pretty(&synth.truth)?;
    truth_json.push('\n');
    fs::write(args.out.join("planted.json"), truth_json)?;
    let mut spec_json = serde_json::to_string_pretty(&spec)?;
    spec_json.push('\n');
    fs::write(args.out.join("spec.json"), spec_json)?;

    Manifest::new("gen-data", args.seed)
        .arg("--spec", &args.spec)
        .arg("--records", spec.n_records)
        .hash_config(&spec)?
        .output("header.json")
        .output("records.jsonl")
        .output("planted.json")
        .output("spec.json")
        .write(&args.out)?;

    println!(
        "wrote {} records ({} models, {} concepts) to {}",
        synth.dataset.len(),
        synth.dataset.catalog.len(),
        synth.dataset.schema.width(),
        args.out.display()
    );
    Ok(())
}
