use rayon::prelude::*;

use popcd::rng::tags;
use popcd::{
    AisBase, AisConfig, BinaryVector, EstimatorConfig, EvalMethod, ExactOracle, ModesConfig, RbmParams, RngStream,
    TrainLogRow,
};

use crate::config::{load_config, BiasVarianceSpec, Experiment, TrainSpec};
use crate::error::CliError;
use crate::output::{self, OutputDir, Table1Row};
use crate::{AisArgs, BaseArg, DataArgs, DataKind, ExactArgs, GenDataArgs, ModelArgs, RunArgs, TrainArgs};

fn apply_run_flags(experiment: &mut Experiment, args: &RunArgs) -> Result<(), CliError> {
    if let Some(out) = &args.out {
        experiment.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        experiment.seed = seed;
    }
    if let Some(trials) = args.trials {
        experiment.trials = trials;
    }
    if experiment.trials == 0 {
        return Err(CliError::Validation("experiment.trials must be at least 1".into()));
    }
    Ok(())
}

fn load_warm_start(experiment: &Experiment) -> Result<Option<RbmParams>, CliError> {
    experiment
        .warm_start
        .as_ref()
        .map(|p| popcd::load_model(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display()))))
        .transpose()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

/// Runs `f` inside an output directory, leaving the `INCOMPLETE` marker
/// with the error message if it fails.
fn with_output<T>(dir: OutputDir, f: impl FnOnce(&OutputDir) -> Result<T, CliError>) -> Result<T, CliError> {
    match f(&dir) {
        Ok(v) => {
            dir.finish()?;
            Ok(v)
        }
        Err(e) => {
            dir.fail(&e);
            Err(e)
        }
    }
}

pub fn train(args: &TrainArgs) -> Result<String, CliError> {
    let mut spec: TrainSpec = load_config(&args.run.config, &args.run.overrides)?;
    apply_run_flags(&mut spec.experiment, &args.run)?;
    if args.timing {
        spec.train.record_timing = true;
    }
    let data = spec.dataset.load()?;
    let m = data.first().map_or(0, BinaryVector::len);
    spec.train.validate(data.len(), m)?;
    let warm = load_warm_start(&spec.experiment)?;
    if let Some(w) = &warm {
        if w.num_visible() != m || w.num_hidden() != spec.train.num_hidden {
            return Err(CliError::Validation(format!(
                "warm start has shape {}x{}, expected {m}x{}",
                w.num_visible(),
                w.num_hidden(),
                spec.train.num_hidden
            )));
        }
    }
    let trials = spec.experiment.trials;
    let dir = OutputDir::create(&spec.experiment.output_dir, "train")?;

    let logs = with_output(dir, |dir| {
        let results: Vec<_> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut cfg = spec.train.clone();
                cfg.seed = spec.experiment.seed.wrapping_add(i as u64);
                popcd::train_from(&data, &cfg, warm.clone())
            })
            .collect();
        let mut logs: Vec<Vec<TrainLogRow>> = Vec::with_capacity(trials);
        for (i, result) in results.into_iter().enumerate() {
            let (params, log) = result.map_err(|e| CliError::Runtime(format!("trial {i}: {e}")))?;
            dir.write(&format!("trial_{i:03}.csv"), &output::train_csv(&log)?)?;
            dir.write(&format!("trial_{i:03}.model"), popcd::io::write_model(&params).as_bytes())?;
            logs.push(log);
        }
        dir.write("aggregate.csv", &output::train_csv(&output::aggregate(&logs))?)?;
        Ok(logs)
    })?;

    let agg = output::aggregate(&logs);
    let last = agg.iter().rev().find_map(|r| r.neg_log_likelihood);
    Ok(format!(
        "train: {trials} trial(s) of {}-{} on {} ({} samples, {m} visible, {} hidden), {} iterations; final mean NLL/sample {}; wrote {}",
        spec.train.algorithm.name(),
        spec.train.k,
        spec.dataset.name(),
        data.len(),
        spec.train.num_hidden,
        spec.train.iterations,
        fmt_opt(last),
        spec.experiment.output_dir.display()
    ))
}

pub fn bias_variance(args: &RunArgs) -> Result<String, CliError> {
    let mut spec: BiasVarianceSpec = load_config(&args.config, &args.overrides)?;
    apply_run_flags(&mut spec.experiment, args)?;
    let data = spec.dataset.load()?;
    let m = data.first().map_or(0, BinaryVector::len);
    let bench = &spec.bench;
    if bench.estimators.is_empty() || bench.ks.is_empty() {
        return Err(CliError::Validation("bench.estimators and bench.ks must be non-empty".into()));
    }
    for alg in &bench.estimators {
        if alg.weighting().is_none() {
            return Err(CliError::Validation(format!("{} is not a k-step estimator", alg.name())));
        }
    }
    if bench.ks.contains(&0) {
        return Err(CliError::Validation("bench.ks entries must be at least 1".into()));
    }
    if bench.batch_size == 0 || data.len() % bench.batch_size != 0 {
        return Err(CliError::Validation(format!(
            "bench.batch_size {} must divide the dataset size {}",
            bench.batch_size,
            data.len()
        )));
    }
    if bench.num_estimates < 2 {
        return Err(CliError::Validation("bench.num_estimates must be at least 2".into()));
    }
    let seed = spec.experiment.seed;
    let reference_params = match &spec.reference.model {
        Some(path) => {
            let p = popcd::load_model(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            if p.num_visible() != m {
                return Err(CliError::Validation(format!("reference model has {} visible units, data has {m}", p.num_visible())));
            }
            Some(p)
        }
        None => None,
    };
    let train_cfg = {
        let r = &spec.reference;
        let mut cfg = popcd::reference_train_config(r.num_hidden, r.batch_size.unwrap_or(bench.batch_size), r.iterations, seed);
        cfg.learning_rate = r.learning_rate;
        cfg
    };
    if reference_params.is_none() {
        train_cfg.validate(data.len(), m)?;
    }
    let problem = bench.problem.clone().unwrap_or_else(|| spec.dataset.name());
    let dir = OutputDir::create(&spec.experiment.output_dir, "bias-variance")?;

    let (reports, label, hidden) = with_output(dir, |dir| {
        let params = match reference_params {
            Some(p) => p,
            None => popcd::prepare_reference_model(&data, &train_cfg).map_err(CliError::runtime)?,
        };
        dir.write("reference.model", popcd::io::write_model(&params).as_bytes())?;
        let root = RngStream::new(seed);
        let (truth, label) = popcd::reference_gradient(&params, &data, &spec.ground_truth, &root).map_err(CliError::runtime)?;
        let mut reports = Vec::new();
        for &k in &bench.ks {
            for &algorithm in &bench.estimators {
                let cfg = EstimatorConfig {
                    algorithm,
                    k,
                    batch_size: bench.batch_size,
                };
                // estimators share random streams for a given k
                let rng = root.child(tags::BENCH).child(k as u64);
                let r = popcd::measure_bias_variance(&params, &data, &cfg, bench.num_estimates, &truth, &label, &rng)
                    .map_err(CliError::runtime)?;
                reports.push(r);
            }
        }
        let rows: Vec<Table1Row<'_>> = reports
            .iter()
            .map(|report| Table1Row {
                problem: &problem,
                hidden: params.num_hidden(),
                report,
            })
            .collect();
        dir.write("table1.csv", &output::table1_csv(&rows)?)?;
        Ok((reports, label, params.num_hidden()))
    })?;

    let cells: Vec<String> = reports
        .iter()
        .map(|r| format!("{}-{} bias {:.3e} var {:.3e}", r.estimator, r.k, r.bias_per_param, r.variance_per_param))
        .collect();
    Ok(format!(
        "bias-variance: {problem} ({hidden} hidden, {} estimates, truth {label}): {}; wrote {}",
        bench.num_estimates,
        cells.join("; "),
        spec.experiment.output_dir.display()
    ))
}

fn load_data(args: &DataArgs) -> Result<Option<Vec<BinaryVector>>, CliError> {
    if let Some(side) = args.bars_stripes {
        return Ok(Some(popcd::generate_bars_and_stripes(side)?.into_samples()));
    }
    match &args.data {
        Some(path) => popcd::load_binary_matrix(path, args.format.into())
            .map(|b| Some(b.into_samples()))
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
        None => Ok(None),
    }
}

fn load_params(args: &ModelArgs, data: Option<&[BinaryVector]>) -> Result<RbmParams, CliError> {
    let params = match (&args.model, args.zeros) {
        (Some(path), _) => popcd::load_model(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        (None, Some(hidden)) => {
            let visible = match (args.visible, data.and_then(|d| d.first())) {
                (Some(m), _) => m,
                (None, Some(v)) => v.len(),
                (None, None) => return Err(CliError::Validation("--zeros needs --visible or a dataset".into())),
            };
            RbmParams::zeros(visible, hidden)?
        }
        (None, None) => return Err(CliError::Validation("one of --model or --zeros is required".into())),
    };
    if let Some(v) = data.and_then(|d| d.first()) {
        if v.len() != params.num_visible() {
            return Err(CliError::Validation(format!(
                "model has {} visible units, data has {}",
                params.num_visible(),
                v.len()
            )));
        }
    }
    Ok(params)
}

fn mean_log_unnormalized(params: &RbmParams, data: &[BinaryVector]) -> Result<f64, CliError> {
    let mut total = 0.0;
    for v in data {
        total += params.log_unnormalized_marginal_visible(v)?;
    }
    Ok(total / data.len() as f64)
}

pub fn ais_eval(args: &AisArgs) -> Result<String, CliError> {
    let data = load_data(&args.data)?;
    let params = load_params(&args.model, data.as_deref())?;
    let mut cfg = if args.full_scale {
        AisConfig::full_scale()
    } else {
        AisConfig::new(args.particles, args.intermediate)
    };
    cfg.base = match args.base {
        BaseArg::Biases => AisBase::Biases,
        BaseArg::Uniform => AisBase::Uniform,
    };
    cfg.betas()?;
    let oracle = ExactOracle::default();
    if args.compare_exact && !oracle.can_enumerate(&params) {
        return Err(CliError::Validation(format!(
            "--compare-exact: a {}x{} model is too large to enumerate",
            params.num_visible(),
            params.num_hidden()
        )));
    }
    let est = popcd::ais_log_partition(&params, &cfg, &RngStream::new(args.seed)).map_err(CliError::runtime)?;
    let mut line = format!(
        "log_z {} std_error {} particles {} intermediate {}",
        est.log_z, est.std_error, cfg.num_particles, cfg.num_intermediate
    );
    if let Some(d) = &data {
        let nll = est.log_z - mean_log_unnormalized(&params, d)?;
        line += &format!(" neg_log_likelihood_per_sample {nll}");
    }
    if args.compare_exact {
        let exact = oracle.log_partition(&params)?;
        line += &format!(" log_z_exact {exact} abs_error {}", (est.log_z - exact).abs());
    }
    Ok(line)
}

pub fn exact_eval(args: &ExactArgs) -> Result<String, CliError> {
    let data = load_data(&args.data)?.ok_or_else(|| CliError::Validation("exact-eval needs --data or --bars-stripes".into()))?;
    let params = load_params(&args.model, Some(&data))?;
    let log_z = ExactOracle::default().log_partition(&params)?;
    let nll = popcd::negative_log_likelihood(&params, &data, EvalMethod::Exact, &AisConfig::default(), &RngStream::new(0))?
        .expect("exact evaluation yields a value");
    Ok(format!("neg_log_likelihood_per_sample {nll} log_z {log_z} samples {}", data.len()))
}

fn write_file_or_stdout(path: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(CliError::runtime)
        }
    }
}

pub fn gen_data(args: &GenDataArgs) -> Result<String, CliError> {
    let (data, modes) = match args.kind {
        DataKind::BarsStripes => {
            if args.modes_out.is_some() {
                return Err(CliError::Validation("--modes-out applies to artificial-modes only".into()));
            }
            (popcd::generate_bars_and_stripes(args.side)?, None)
        }
        DataKind::ArtificialModes => {
            let cfg = ModesConfig {
                dimension: args.dimension,
                num_modes: args.num_modes,
                flip_prob: args.flip_prob,
                dataset_size: args.size,
                seed: args.seed,
            };
            let (data, modes) = popcd::generate_artificial_modes(&cfg)?;
            (data, Some(modes))
        }
    };
    write_file_or_stdout(args.out.as_deref(), &popcd::data::write_lines01(data.samples()))?;
    if let (Some(path), Some(modes)) = (&args.modes_out, &modes) {
        write_file_or_stdout(Some(path), &popcd::data::write_lines01(modes.samples()))?;
    }
    Ok(match &args.out {
        Some(p) => format!("gen-data: wrote {} samples of dimension {} to {}", data.len(), data.dim(), p.display()),
        None => String::new(),
    })
}
