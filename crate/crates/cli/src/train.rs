use std::time::Instant;

use owlscreen::Solution;

use crate::args::{Switch, TrainArgs};
use crate::output::{
    write_json, write_solution_bin, write_solution_csv, write_trace, RunSummary, Shape, SUMMARY_SCHEMA_VERSION,
};
use crate::problem::{load, solve, Loaded};

pub fn run(args: &TrainArgs) -> anyhow::Result<RunSummary> {
    let loaded = load(&args.problem)?;
    let start = Instant::now();
    let mut sol = solve(&args.problem, &loaded, args.screen)?;
    let wall = start.elapsed().as_secs_f64();

    let d = loaded.dataset.data.n_features();
    let nonzero = sol.nonzero_rows();
    sol.trace.backfill_screening_rate(d - nonzero.len());

    std::fs::create_dir_all(&args.out)?;
    write_solution_bin(&args.out.join("solution.bin"), &sol.coefficients)?;
    write_solution_csv(&args.out.join("solution.csv"), &sol.coefficients)?;
    write_trace(&args.out.join("trace.csv"), &sol.trace)?;
    let summary = summarize(args, &loaded, &sol, nonzero, wall)?;
    summary.validate()?;
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn summarize(
    args: &TrainArgs,
    loaded: &Loaded,
    sol: &Solution,
    nonzero_rows: Vec<usize>,
    wall: f64,
) -> anyhow::Result<RunSummary> {
    let data = &loaded.dataset.data;
    let mut config = serde_json::to_value(&args.problem)?;
    config["screen"] = serde_json::to_value(args.screen)?;
    config["out"] = serde_json::to_value(&args.out)?;
    let w = loaded.weights.as_slice();
    Ok(RunSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        config,
        dataset: Shape {
            n: data.n_samples(),
            d: data.n_features(),
            q: data.n_tasks(),
        },
        class_labels: loaded.dataset.classes.clone(),
        model: format!("{:?}", args.problem.model).to_lowercase(),
        solver: format!("{:?}", args.problem.solver).to_lowercase(),
        screening: args.screen == Switch::On,
        wall_time_seconds: wall,
        iterations: sol.iterations,
        converged: sol.converged,
        final_gap: sol.final_gap,
        objective: sol.objective,
        final_active_count: sol.final_active.len(),
        screened_count: sol.screened().len(),
        final_screening_rate: sol.trace.rows.last().and_then(|r| r.screening_rate).unwrap_or(1.0),
        nonzero_rows,
        screening_rate_curve: "trace.csv".into(),
        lambda_max: w.first().copied().unwrap_or(0.0),
        lambda_min: w.last().copied().unwrap_or(0.0),
    })
}
