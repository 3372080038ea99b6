use std::path::Path;

use owlscreen::data::{read_csv, read_libsvm};
use owlscreen::{
    oscar_weights, solve_apgd, solve_spgd, synth_correlated, ApgdConfig, Dataset, ScreeningConfig, Solution,
    SpgdConfig, Warmup, WeightVector,
};

use crate::args::{DataFormat, ProblemArgs, SolverKind, Switch};

pub struct Loaded {
    pub dataset: Dataset,
    pub weights: WeightVector,
}

pub fn load(args: &ProblemArgs) -> anyhow::Result<Loaded> {
    let kind = args.model.loss();
    let dataset = match (&args.data, &args.synth) {
        (Some(path), _) => match args.format.unwrap_or_else(|| infer_format(path)) {
            DataFormat::Libsvm => read_libsvm(path, kind)?,
            DataFormat::Csv => read_csv(path, kind, args.targets, args.header, args.standardize == Switch::On)?,
        },
        (None, Some(synth)) => {
            let mut spec = synth.0.clone();
            spec.seed = args.seed;
            synth_correlated(&spec, kind)?.dataset
        }
        (None, None) => anyhow::bail!("either --data or --synth is required"),
    };
    let weights = oscar_weights(dataset.data.n_features(), &args.weights.0, Some(&dataset.data))?;
    Ok(Loaded { dataset, weights })
}

fn infer_format(path: &Path) -> DataFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
        _ => DataFormat::Libsvm,
    }
}

pub fn screening(args: &ProblemArgs, screen: Switch) -> ScreeningConfig {
    ScreeningConfig {
        enabled: screen == Switch::On,
        warmup: Warmup::FirstOf {
            iterations: args.warmup,
            primal_fraction: args.warmup_fraction,
        },
        every: args.screen_every,
        dual_scaling: true,
    }
}

pub fn solve(args: &ProblemArgs, loaded: &Loaded, screen: Switch) -> owlscreen::Result<Solution> {
    let data = &loaded.dataset.data;
    let screening = screening(args, screen);
    match args.solver {
        SolverKind::Apgd => solve_apgd(
            data,
            &loaded.weights,
            &ApgdConfig {
                max_iterations: args.max_iter,
                gap_tolerance: args.tol,
                screening,
                step_size: args.step,
            },
        ),
        SolverKind::Spgd => solve_spgd(
            data,
            &loaded.weights,
            &SpgdConfig {
                batch_size: args.batch.min(data.n_samples()),
                inner_iterations: args.inner,
                step_size: args.step,
                max_outer: args.max_iter,
                gap_tolerance: args.tol,
                seed: args.seed,
                screening,
            },
        ),
    }
}
