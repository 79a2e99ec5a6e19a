//! Command-line interface: calibrate, predict, evaluate, plot, synth.
//!
//! Exit codes: 0 success, 2 input/validation failure, 3 empty or degenerate
//! data, 4 internal math failure. `CREDAL_THREADS` caps worker parallelism
//! (default: all cores).

use clap::{Parser, Subcommand, ValueEnum};
use credal::dataset::{fmt_f64, sha256_hex, write_atomic, CalibrationArtifact, Dataset};
use credal::prediction::DEFAULT_K_CAP;
use credal::{
    calibrate, conformity_scores, decompose, default_resolution, ihds_algorithm1, prps,
    render_ternary, run_experiment, CredalError, CredalRegion, ExperimentConfig, GridRow,
    MetricsReport, ProbabilityVector,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "credal",
    version,
    about = "Conformal credal regions, label prediction sets, and uncertainty decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate a conformal threshold on a plausibility-annotated dataset.
    Calibrate {
        /// JSON-lines dataset with plausibility vectors.
        #[arg(long)]
        input: PathBuf,
        /// Miscoverage level in [0, 1); 0 yields the vacuous threshold.
        #[arg(long)]
        alpha: f64,
        /// Where to write the calibration artifact.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict label sets, envelopes, and uncertainty for each test point.
    Predict {
        /// Calibration artifact from `calibrate`.
        #[arg(long)]
        artifact: PathBuf,
        /// JSON-lines dataset of test points.
        #[arg(long)]
        input: PathBuf,
        /// Prediction-set significance level in [0, 1).
        #[arg(long)]
        delta: f64,
        /// Lattice resolution for the PRPS baseline (default: by class count).
        #[arg(long)]
        resolution: Option<usize>,
        /// Output JSON-lines path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the seeded coverage / inefficiency experiment protocol.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated miscoverage budgets, e.g. 0.05,0.1,0.15.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        /// half: alpha = delta = epsilon/2. grid: sweep alpha over the
        /// interior grid and derive delta from the budget.
        #[arg(long, value_enum, default_value_t = AlphaPolicy::Half)]
        alpha_policy: AlphaPolicy,
        /// Number of random seeds (0..N).
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Output directory for metrics files.
        #[arg(long)]
        out: PathBuf,
        /// Lattice resolution for the PRPS baseline.
        #[arg(long)]
        resolution: Option<usize>,
        /// Calibration share of each split.
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        /// Alpha-grid steps per epsilon (grid policy).
        #[arg(long, default_value_t = 10)]
        grid_steps: usize,
        /// Guardrail on subset enumeration.
        #[arg(long, default_value_t = DEFAULT_K_CAP)]
        k_cap: usize,
    },
    /// Render one test point's credal region as a ternary SVG (3 classes).
    Plot {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Row id to plot.
        #[arg(long)]
        point_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic ambiguous-ground-truth dataset.
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model-perturbation temperature (1 = model equals plausibility).
        #[arg(long, default_value_t = 1.5)]
        temperature: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlphaPolicy {
    Half,
    Grid,
}

fn exit_code_for(error: &CredalError) -> u8 {
    match error {
        CredalError::EmptyCalibration | CredalError::EmptyRegion { .. } => 3,
        CredalError::SureLossViolation { .. } | CredalError::PointFailure { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    if let Ok(value) = std::env::var("CREDAL_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => {
                eprintln!("credal: ignoring invalid CREDAL_THREADS={value:?}");
            }
        }
    }

    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("credal: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

fn run(cli: Cli) -> credal::Result<()> {
    match cli.command {
        Command::Calibrate { input, alpha, out } => cmd_calibrate(&input, alpha, &out),
        Command::Predict {
            artifact,
            input,
            delta,
            resolution,
            out,
        } => cmd_predict(&artifact, &input, delta, resolution, &out),
        Command::Evaluate {
            input,
            epsilons,
            alpha_policy,
            seeds,
            out,
            resolution,
            split,
            grid_steps,
            k_cap,
        } => cmd_evaluate(
            &input,
            &epsilons,
            alpha_policy,
            seeds,
            &out,
            resolution,
            split,
            grid_steps,
            k_cap,
        ),
        Command::Plot {
            artifact,
            input,
            point_id,
            out,
        } => cmd_plot(&artifact, &input, &point_id, &out),
        Command::Synth {
            n,
            k,
            seed,
            temperature,
            out,
        } => cmd_synth(n, k, seed, temperature, &out),
    }
}

fn invalid(reason: String) -> CredalError {
    CredalError::InvalidParameter { reason }
}

fn cmd_calibrate(input: &Path, alpha: f64, out: &Path) -> credal::Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("--alpha must be in [0, 1), got {alpha}")));
    }
    let bytes = std::fs::read(input)?;
    let dataset = Dataset::parse(&String::from_utf8_lossy(&bytes))?;
    let records = dataset.to_calibration_records()?;
    let threshold = calibrate(&records, alpha)?;
    let artifact = CalibrationArtifact::new(
        &threshold,
        &dataset.label_space,
        "model-confidence",
        sha256_hex(&bytes),
    );
    artifact.save(out)?;

    let tau_text = if threshold.tau().is_finite() {
        fmt_f64(threshold.tau())
    } else {
        "null".to_string()
    };
    println!(
        "{{\"n\":{},\"tau\":{},\"k_index\":{}}}",
        threshold.n_calibration(),
        tau_text,
        threshold.quantile_index()
    );
    Ok(())
}

fn label_array(set: &credal::LabelSet) -> String {
    let mut out = String::from("[");
    for (i, label) in set.labels().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{label}");
    }
    out.push(']');
    out
}

fn float_array(values: &[f64]) -> String {
    let mut out = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
    out
}

fn cmd_predict(
    artifact_path: &Path,
    input: &Path,
    delta: f64,
    resolution: Option<usize>,
    out: &Path,
) -> credal::Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid(format!("--delta must be in [0, 1), got {delta}")));
    }
    let (artifact, warnings) = CalibrationArtifact::load(artifact_path)?;
    for warning in &warnings {
        eprintln!("credal: warning: {warning}");
    }
    let dataset = Dataset::read(input)?;
    if dataset.k() != artifact.k {
        return Err(CredalError::DimensionMismatch {
            expected: artifact.k,
            got: dataset.k(),
        });
    }
    let k = artifact.k;
    let resolution = resolution.unwrap_or_else(|| default_resolution(k));
    if resolution == 0 {
        return Err(invalid("--resolution must be positive".to_string()));
    }
    let tau = artifact.tau_value();
    let label_space = artifact.label_space()?;

    let tau_text = match artifact.tau {
        Some(t) => fmt_f64(t),
        None => "null".to_string(),
    };
    let mut output = format!(
        "{{\"schema\":\"credal-predictions-v1\",\"k\":{k},\"alpha\":{},\"delta\":{},\"tau\":{tau_text},\"resolution\":{resolution}}}\n",
        fmt_f64(artifact.alpha),
        fmt_f64(delta),
    );

    let rows: Vec<String> = dataset
        .rows
        .par_iter()
        .map(|row| -> credal::Result<String> {
            let scores = conformity_scores(&row.model_probs);
            let uniform = ProbabilityVector::uniform(k);
            let region = match CredalRegion::new(scores, tau, label_space.clone()) {
                Ok(region) => region,
                Err(CredalError::EmptyRegion { .. }) => {
                    return Ok(format!(
                        "{{\"id\":{},\"empty_region\":true,\"ihds\":[],\"prps\":[],\"one_hot_in_region\":false,\"uniform_in_region\":false}}",
                        serde_json::to_string(&row.id).expect("string"),
                    ));
                }
                Err(e) => return Err(e.for_point(&row.id)),
            };
            let envelope = region.envelope();
            let ihds =
                ihds_algorithm1(&envelope, delta, DEFAULT_K_CAP).map_err(|e| e.for_point(&row.id))?;
            let baseline =
                prps(&region, delta, resolution).map_err(|e| e.for_point(&row.id))?;
            let report = decompose(&region).map_err(|e| e.for_point(&row.id))?;
            let one_hot = (0..k).any(|label| region.scores().get(label) >= tau);
            let uniform_in = region.contains(&uniform).map_err(|e| e.for_point(&row.id))?;

            Ok(format!(
                "{{\"id\":{},\"empty_region\":false,\"envelope_lower\":{},\"envelope_upper\":{},\"ihds\":{},\"ihds_lower_probability\":{},\"prps\":{},\"tu\":{},\"au\":{},\"eu\":{},\"one_hot_in_region\":{},\"uniform_in_region\":{}}}",
                serde_json::to_string(&row.id).expect("string"),
                float_array(envelope.lower()),
                float_array(envelope.upper()),
                label_array(&ihds.set),
                fmt_f64(ihds.lower_probability),
                label_array(&baseline.set),
                fmt_f64(report.upper_entropy),
                fmt_f64(report.lower_entropy),
                fmt_f64(report.epistemic),
                one_hot,
                uniform_in,
            ))
        })
        .collect::<credal::Result<Vec<_>>>()?;

    for row in rows {
        output.push_str(&row);
        output.push('\n');
    }
    write_atomic(out, output.as_bytes())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    input: &Path,
    epsilons: &[f64],
    alpha_policy: AlphaPolicy,
    seeds: u64,
    out_dir: &Path,
    resolution: Option<usize>,
    split: f64,
    grid_steps: usize,
    k_cap: usize,
) -> credal::Result<()> {
    if epsilons.is_empty() {
        return Err(invalid("--epsilons needs at least one value".to_string()));
    }
    for &epsilon in epsilons {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("epsilon must be in (0, 1), got {epsilon}")));
        }
    }
    if seeds == 0 {
        return Err(invalid("--seeds must be at least 1".to_string()));
    }
    let dataset = Dataset::read(input)?;
    let records = dataset.to_calibration_records()?;
    if records.len() < 2 {
        return Err(CredalError::EmptyCalibration);
    }
    std::fs::create_dir_all(out_dir)?;
    let k = dataset.k();

    let make_config = |epsilon: f64| -> credal::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::half_half(epsilon, k)?;
        config.seeds = (0..seeds).collect();
        config.split_fraction = split;
        if let Some(r) = resolution {
            config.resolution = r;
        }
        config.k_cap = k_cap;
        config.validate()?;
        Ok(config)
    };

    match alpha_policy {
        AlphaPolicy::Half => {
            let mut reports = Vec::new();
            for &epsilon in epsilons {
                let config = make_config(epsilon)?;
                reports.push(run_experiment(&config, &records)?);
            }
            write_metrics_csv(&out_dir.join("metrics.csv"), &reports)?;
            write_metrics_json(&out_dir.join("metrics.json"), &reports)?;
            write_timings_json(&out_dir.join("timings.json"), &reports)?;
            print_summary(&reports);
        }
        AlphaPolicy::Grid => {
            let template = make_config(epsilons[0])?;
            let rows = credal::alpha_delta_grid(&records, epsilons, grid_steps, &template)?;
            write_grid_csv(&out_dir.join("grid.csv"), &rows)?;
            print_grid_summary(&rows);
        }
    }
    Ok(())
}

fn write_metrics_csv(path: &Path, reports: &[MetricsReport]) -> credal::Result<()> {
    let mut csv = String::from(
        "epsilon,alpha,delta,seed,method,distribution_coverage,label_coverage,avg_inefficiency,empty_regions\n",
    );
    for report in reports {
        for seed_metrics in &report.per_seed {
            for (method, coverage, inefficiency) in [
                (
                    "ihds",
                    seed_metrics.ihds_label_coverage,
                    seed_metrics.ihds_inefficiency,
                ),
                (
                    "prps",
                    seed_metrics.prps_label_coverage,
                    seed_metrics.prps_inefficiency,
                ),
            ] {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{method},{},{},{},{}",
                    fmt_f64(report.epsilon),
                    fmt_f64(report.alpha),
                    fmt_f64(report.delta),
                    seed_metrics.seed,
                    fmt_f64(seed_metrics.distribution_coverage),
                    fmt_f64(coverage),
                    fmt_f64(inefficiency),
                    seed_metrics.empty_regions,
                );
            }
        }
    }
    write_atomic(path, csv.as_bytes())
}

fn write_metrics_json(path: &Path, reports: &[MetricsReport]) -> credal::Result<()> {
    let mut values = Vec::new();
    for report in reports {
        let mut value = serde_json::to_value(report).expect("report serializes");
        // wall-clock fields live in timings.json; everything here is
        // deterministic
        if let Some(map) = value.as_object_mut() {
            map.remove("runtime_per_point_ms");
            if let Some(seeds) = map.get_mut("per_seed").and_then(|v| v.as_array_mut()) {
                for seed in seeds {
                    if let Some(seed_map) = seed.as_object_mut() {
                        seed_map.remove("median_point_ms");
                    }
                }
            }
        }
        values.push(value);
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Array(values))
        .expect("values serialize");
    write_atomic(path, format!("{text}\n").as_bytes())
}

fn write_timings_json(path: &Path, reports: &[MetricsReport]) -> credal::Result<()> {
    let mut entries = Vec::new();
    for report in reports {
        entries.push(serde_json::json!({
            "epsilon": report.epsilon,
            "runtime_per_point_ms": report.runtime_per_point_ms,
            "per_seed_median_ms": report
                .per_seed
                .iter()
                .map(|s| s.median_point_ms)
                .collect::<Vec<_>>(),
        }));
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Array(entries))
        .expect("timings serialize");
    write_atomic(path, format!("{text}\n").as_bytes())
}

fn write_grid_csv(path: &Path, rows: &[GridRow]) -> credal::Result<()> {
    let mut csv = String::from("epsilon,alpha,delta,method,avg_inefficiency\n");
    for row in rows {
        for (method, inefficiency) in [
            ("ihds", row.ihds_inefficiency),
            ("prps", row.prps_inefficiency),
        ] {
            let _ = writeln!(
                csv,
                "{},{},{},{method},{}",
                fmt_f64(row.epsilon),
                fmt_f64(row.alpha),
                fmt_f64(row.delta),
                fmt_f64(inefficiency),
            );
        }
    }
    write_atomic(path, csv.as_bytes())
}

fn print_summary(reports: &[MetricsReport]) {
    println!(
        "{:>8} {:>8} {:>8} {:>10} {:>12} {:>11} {:>11} {:>9}",
        "epsilon", "alpha", "delta", "dist_cov", "label_cov", "ineff_ihds", "ineff_prps", "type2_ok"
    );
    for report in reports {
        let type2_ok = report
            .type2_estimates
            .values()
            .all(|&estimate| estimate <= report.type2_bound + 1e-12);
        println!(
            "{:>8.3} {:>8.4} {:>8.4} {:>10.4} {:>12.4} {:>11.4} {:>11.4} {:>9}",
            report.epsilon,
            report.alpha,
            report.delta,
            report.distribution_coverage.mean,
            report.ihds.label_coverage.mean,
            report.ihds.avg_inefficiency.mean,
            report.prps.avg_inefficiency.mean,
            type2_ok,
        );
    }
}

fn print_grid_summary(rows: &[GridRow]) {
    println!(
        "{:>8} {:>8} {:>8} {:>11} {:>11}",
        "epsilon", "alpha", "delta", "ineff_ihds", "ineff_prps"
    );
    for row in rows {
        println!(
            "{:>8.3} {:>8.4} {:>8.4} {:>11.4} {:>11.4}",
            row.epsilon, row.alpha, row.delta, row.ihds_inefficiency, row.prps_inefficiency,
        );
    }
}

fn cmd_plot(artifact_path: &Path, input: &Path, point_id: &str, out: &Path) -> credal::Result<()> {
    let (artifact, warnings) = CalibrationArtifact::load(artifact_path)?;
    for warning in &warnings {
        eprintln!("credal: warning: {warning}");
    }
    let dataset = Dataset::read(input)?;
    if dataset.k() != artifact.k {
        return Err(CredalError::DimensionMismatch {
            expected: artifact.k,
            got: dataset.k(),
        });
    }
    let row = dataset
        .rows
        .iter()
        .find(|row| row.id == point_id)
        .ok_or_else(|| invalid(format!("no row with id {point_id:?} in {input:?}")))?;

    let region = CredalRegion::new(
        conformity_scores(&row.model_probs),
        artifact.tau_value(),
        artifact.label_space()?,
    )?;
    let svg = render_ternary(&region, row.plausibility.as_ref())?;
    write_atomic(out, svg.as_bytes())
}

fn cmd_synth(n: usize, k: usize, seed: u64, temperature: f64, out: &Path) -> credal::Result<()> {
    let mut spec = credal::GeneratorSpec::default_for(k)?;
    spec.temperature = temperature;
    let data = credal::generate_synthetic(&spec, n, seed)?;
    let dataset = Dataset::from_records(credal::LabelSpace::new(k)?, &data.records)?;
    dataset.write(out)?;
    println!(
        "{{\"n\":{},\"k\":{},\"seed\":{},\"path\":{}}}",
        n,
        k,
        seed,
        serde_json::to_string(&out.display().to_string()).expect("string"),
    );
    Ok(())
}
