//! `crouter report` — frontier, share, and significance files from sweep
//! results.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crouter_core::evaluation::{
    mann_whitney_u, pareto_frontier, t_test_two_tailed, write_frontier_csv, write_share_csv,
};
use crouter_core::training::SweepSummary;

use crate::context::{prepare_out_dir, read_input, user_error, CliResult, Manifest};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `crouter sweep` (must contain runs.json)
    #[arg(long)]
    pub sweep: PathBuf,
    /// Second sweep directory to compare accuracies against, per lambda
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

fn load_summary(dir: &std::path::Path) -> CliResult<SweepSummary> {
    let path = dir.join("runs.json");
    let text = read_input(&path)?;
    serde_json::from_str(&text).map_err(|e| user_error(format!("{}: {e}", path.display())))
}

pub fn run(args: ReportArgs) -> CliResult {
    let summary = load_summary(&args.sweep)?;
    prepare_out_dir(&args.out, args.force)?;

    let policy = summary.policy.to_string();
    let points = summary.frontier_points();
    write_frontier_csv(&args.out.join("aggregate.csv"), &policy, &points)?;
    let frontier = pareto_frontier(&points);
    write_frontier_csv(&args.out.join("frontier.csv"), &policy, &frontier)?;

    // Model indices are meaningless without the catalog, so shares are
    // reported by index here; the sweep directory carries named shares.
    let share_rows: Vec<(f64, usize, String, f64, f64)> = summary
        .share_rows()
        .into_iter()
        .map(|(lambda, seeds, model, mean, std)| {
            (lambda, seeds, format!("model_{model}"), mean, std)
        })
        .collect();
    write_share_csv(&args.out.join("shares.csv"), &policy, &share_rows)?;

    let mut outputs = vec![
        "aggregate.csv".to_string(),
        "frontier.csv".to_string(),
        "shares.csv".to_string(),
    ];

    if let Some(other_dir) = &args.compare {
        let other = load_summary(other_dir)?;
        let mut lines = vec!["lambda,welch_t,welch_p,mwu_u,mwu_p,n_a,n_b".to_string()];
        for &lambda in &summary.grid.lambdas {
            let a = summary.accuracy_samples(lambda);
            let b = other.accuracy_samples(lambda);
            if a.len() < 2 || b.len() < 2 {
                continue;
            }
            let welch = match t_test_two_tailed(&a, &b) {
                Ok(result) => result,
                Err(_) => continue, // degenerate variance at this lambda
            };
            let mwu = mann_whitney_u(&a, &b)?;
            lines.push(format!(
                "{lambda},{},{},{},{},{},{}",
                welch.statistic, welch.p_value, mwu.statistic, mwu.p_value, welch.n_a, welch.n_b
            ));
        }
        fs::write(args.out.join("significance.csv"), lines.join("\n") + "\n")?;
        outputs.push("significance.csv".to_string());
    }

    let mut manifest = Manifest::new("report", summary.split_seed)
        .arg("--sweep", args.sweep.display())
        .input(args.sweep.join("runs.json").display())
        .hash_config(&summary.grid)?;
    if let Some(compare) = &args.compare {
        manifest = manifest
            .arg("--compare", compare.display())
            .input(compare.join("runs.json").display());
    }
    for name in &outputs {
        manifest = manifest.output(name);
    }
    manifest.write(&args.out)?;

    println!(
        "{policy}: {} aggregate points, {} on the frontier",
        points.len(),
        frontier.len()
    );
    Ok(())
}
