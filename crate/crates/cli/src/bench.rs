use std::fmt::Write as _;
use std::time::Instant;

use anyhow::bail;
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, Switch};
use crate::output::{write_json, Shape};
use crate::problem::{load, solve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trials {
    pub wall_times_s: Vec<f64>,
    pub mean_s: f64,
    pub min_s: f64,
    /// Sample standard deviation; absent for a single trial.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_s: Option<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub final_gap: f64,
    pub converged: bool,
}

impl Trials {
    fn new(times: Vec<f64>, iterations: usize, objective: f64, final_gap: f64, converged: bool) -> Trials {
        let r = times.len() as f64;
        let mean = times.iter().sum::<f64>() / r;
        let std = (times.len() > 1)
            .then(|| (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt());
        Trials {
            mean_s: mean,
            min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
            std_s: std,
            wall_times_s: times,
            iterations,
            objective,
            final_gap,
            converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: Shape,
    pub solver: String,
    pub model: String,
    pub repeats: usize,
    pub screen_off: Trials,
    pub screen_on: Trials,
    /// Mean unscreened time over mean screened time.
    pub speedup_ratio: f64,
    pub objective_difference: f64,
    pub same_nonzero_rows: bool,
    /// Screened features over the features that are zero in the unscreened
    /// solution.
    pub final_screening_rate: f64,
}

pub fn run(args: &BenchArgs) -> anyhow::Result<BenchReport> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let loaded = load(&args.problem)?;
    let data = &loaded.dataset.data;
    let (mut off_times, mut on_times) = (Vec::new(), Vec::new());
    let (mut off, mut on) = (None, None);
    for _ in 0..args.repeats {
        for (switch, times, keep) in [
            (Switch::Off, &mut off_times, &mut off),
            (Switch::On, &mut on_times, &mut on),
        ] {
            let start = Instant::now();
            let sol = solve(&args.problem, &loaded, switch)?;
            times.push(start.elapsed().as_secs_f64());
            *keep = Some(sol);
        }
    }
    let (off, on) = (off.unwrap(), on.unwrap());
    let off_nonzero = off.nonzero_rows();
    let inactive = data.n_features() - off_nonzero.len();
    let screened = on.screened().len();
    let rate = if inactive == 0 {
        1.0
    } else {
        (screened as f64 / inactive as f64).min(1.0)
    };
    let screen_off = Trials::new(off_times, off.iterations, off.objective, off.final_gap, off.converged);
    let screen_on = Trials::new(on_times, on.iterations, on.objective, on.final_gap, on.converged);
    let report = BenchReport {
        dataset: Shape {
            n: data.n_samples(),
            d: data.n_features(),
            q: data.n_tasks(),
        },
        solver: format!("{:?}", args.problem.solver).to_lowercase(),
        model: format!("{:?}", args.problem.model).to_lowercase(),
        repeats: args.repeats,
        speedup_ratio: screen_off.mean_s / screen_on.mean_s,
        objective_difference: (on.objective - off.objective).abs(),
        same_nonzero_rows: on.nonzero_rows() == off_nonzero,
        final_screening_rate: rate,
        screen_off,
        screen_on,
    };
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("bench.json"), &report)?;
    Ok(report)
}

pub fn table(r: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} on n={} d={} q={}, {} trial(s)",
        r.solver, r.model, r.dataset.n, r.dataset.d, r.dataset.q, r.repeats
    );
    let _ = writeln!(
        s,
        "{:<10} {:>10} {:>10} {:>10} {:>8} {:>16}",
        "screening", "mean [s]", "min [s]", "std [s]", "iters", "objective"
    );
    for (name, t) in [("off", &r.screen_off), ("on", &r.screen_on)] {
        let std = t.std_s.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<10} {:>10.4} {:>10.4} {:>10} {:>8} {:>16.10}",
            name, t.mean_s, t.min_s, std, t.iterations, t.objective
        );
    }
    let _ = writeln!(s, "speedup ratio        {:.3}", r.speedup_ratio);
    let _ = writeln!(s, "screening rate       {:.3}", r.final_screening_rate);
    let _ = writeln!(s, "objective difference {:.3e}", r.objective_difference);
    let _ = writeln!(s, "same nonzero rows    {}", r.same_nonzero_rows);
    s
}
