//! Command-line workflow around the sensor-linearization library: train a
//! compensator, score linearity, sweep expansion widths, and run the
//! quantized 18-bit pipeline against the double-precision reference.
//!
//! Exit codes: 0 success, 2 file parse error, 3 numeric/invalid input,
//! 4 training did not converge (artifacts are still written), 5 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lvdt_flann::error::Error;
use lvdt_flann::io::{self, SweepRow, TrainingMeta};
use lvdt_flann::metrics::{self, DEFAULT_TOLERANCE_MM};
use lvdt_flann::model::ExpansionSpec;
use lvdt_flann::pipeline::{build_lookup, pipeline_infer, PipelineConfig};
use lvdt_flann::training::{
    train_lms, TrainingConfig, DEFAULT_ETA, DEFAULT_MAX_EPOCHS, DEFAULT_MSE_THRESHOLD,
};

/// Tolerances reported in the sweep's sensitivity table, millimetres.
const SWEEP_TOLERANCES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

const EXIT_PARSE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_NON_CONVERGENCE: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "lvdt-flann",
    version,
    about = "Sensor linearization: functional-link compensator training and 18-bit pipeline emulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a compensator on a calibration dataset
    Train(TrainArgs),
    /// Score linearity of a trained model, or of the raw sensor when no model is given
    Evaluate(EvaluateArgs),
    /// Train one model per expansion width and tabulate linearity
    Sweep(SweepArgs),
    /// Run every dataset voltage through the quantized 18-bit pipeline and
    /// compare against the double-precision reference
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct TrainingFlags {
    /// Learning rate in (0, 1]
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// Epoch budget
    #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
    max_epochs: usize,
    /// Stop once an epoch's summed squared error falls below this
    #[arg(long, default_value_t = DEFAULT_MSE_THRESHOLD)]
    threshold: f64,
    /// Present samples in a freshly shuffled order each epoch
    #[arg(long)]
    shuffle: bool,
    /// RNG seed used by --shuffle
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainingFlags {
    fn to_config(&self) -> TrainingConfig {
        TrainingConfig {
            eta: self.eta,
            max_epochs: self.max_epochs,
            mse_threshold: self.threshold,
            shuffle: self.shuffle,
            rng_seed: self.seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Calibration dataset CSV (header: displacement_mm,voltage_v)
    #[arg(long)]
    dataset: PathBuf,
    /// Harmonic count K; the expansion width is P = 2K + 1
    #[arg(long)]
    harmonics: usize,
    #[command(flatten)]
    training: TrainingFlags,
    /// Where to write the trained model (JSON)
    #[arg(long)]
    out_model: PathBuf,
    /// Optional convergence report (epoch,mse)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Trained model to evaluate; omit to score the raw sensor against its
    /// fitted straight-line response
    #[arg(long)]
    model: Option<PathBuf>,
    /// Linearity tolerance in millimetres
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_MM)]
    tolerance: f64,
    /// Optional evaluation report (per-point residuals)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated harmonic counts, e.g. 5,12,25,30
    #[arg(long, value_delimiter = ',', required = true)]
    harmonics_list: Vec<usize>,
    #[command(flatten)]
    training: TrainingFlags,
    /// Linearity tolerance for the main table, millimetres
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_MM)]
    tolerance: f64,
    /// Optional sweep report (width table + tolerance sensitivity)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Trained full-width model (51 expansions)
    #[arg(long)]
    model: PathBuf,
    /// Where to write the golden trace (every intermediate bit pattern)
    #[arg(long)]
    out_trace: PathBuf,
    /// Optional comparison report (reference vs pipeline per point)
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::DatasetParse { .. } | Error::ModelParse(_) => EXIT_PARSE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, Error> {
    let dataset = io::load_dataset(&args.dataset)?;
    let spec = ExpansionSpec::new(args.harmonics)?;
    let config = args.training.to_config();
    let (model, trace) = train_lms(&dataset, &spec, &config)?;
    let final_mse = trace.mse_per_epoch.last().copied().unwrap_or(f64::NAN);

    let meta = TrainingMeta::from_trace(&config, &trace);
    io::save_model(&args.out_model, &model, Some(&meta))?;
    if let Some(report) = &args.report {
        io::write_text(report, &io::render_convergence_report(&config, &trace))?;
    }

    println!("width: {}", spec.width());
    println!("epochs_run: {}", trace.epochs_run);
    println!("final_mse: {final_mse}");
    println!("converged: {}", trace.converged);
    println!("model: {}", args.out_model.display());
    if trace.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "training did not reach the MSE threshold within {} epochs",
            config.max_epochs
        );
        Ok(ExitCode::from(EXIT_NON_CONVERGENCE))
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<ExitCode, Error> {
    let dataset = io::load_dataset(&args.dataset)?;
    let (label, pairs) = match &args.model {
        Some(path) => {
            let (model, _) = io::load_model(path)?;
            ("model", model.forward_batch(&dataset)?)
        }
        None => {
            let (intercept, slope) = metrics::fit_ideal_line(dataset.samples());
            let pairs = dataset
                .iter()
                .map(|s| (s.displacement_mm(), intercept + slope * s.voltage_v()))
                .collect();
            ("raw sensor", pairs)
        }
    };
    let report = metrics::linearity(&pairs, args.tolerance)?;
    if let Some(path) = &args.report {
        io::write_text(path, &io::render_evaluation_report(&report, &pairs))?;
    }
    println!("mode: {label}");
    println!("tolerance_mm: {}", report.tolerance_mm);
    println!(
        "linear_points: {}/{}",
        report.linear_points, report.total_points
    );
    println!("percent_linear: {:.2}", report.percent_linear);
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let dataset = io::load_dataset(&args.dataset)?;
    if !args.tolerance.is_finite() || args.tolerance <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance must be a positive finite number, got {}",
            args.tolerance
        )));
    }
    let config = args.training.to_config();
    config.validate()?;

    // independent deterministic runs; train the widths concurrently and
    // collect in list order
    type OneResult = Result<(SweepRow, Vec<f64>), Error>;
    let results: Vec<OneResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = args
            .harmonics_list
            .iter()
            .map(|&k| {
                let dataset = &dataset;
                let config = &config;
                scope.spawn(move || -> OneResult {
                    let spec = ExpansionSpec::new(k)?;
                    let (model, trace) = train_lms(dataset, &spec, config)?;
                    let pairs = model.forward_batch(dataset)?;
                    let main = metrics::linearity(&pairs, args.tolerance)?;
                    let mut sensitivity = Vec::with_capacity(SWEEP_TOLERANCES.len());
                    for tol in SWEEP_TOLERANCES {
                        sensitivity.push(metrics::linearity(&pairs, tol)?.percent_linear);
                    }
                    Ok((
                        SweepRow {
                            harmonics: k,
                            width: spec.width(),
                            percent_linear: main.percent_linear,
                            epochs_run: trace.epochs_run,
                            converged: trace.converged,
                            final_mse: trace.mse_per_epoch.last().copied().unwrap_or(f64::NAN),
                        },
                        sensitivity,
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    let mut per_width_sensitivity = Vec::new();
    for r in results {
        let (row, sens) = r?;
        rows.push(row);
        per_width_sensitivity.push(sens);
    }
    let sensitivity: Vec<(f64, Vec<f64>)> = SWEEP_TOLERANCES
        .iter()
        .enumerate()
        .map(|(i, tol)| (*tol, per_width_sensitivity.iter().map(|s| s[i]).collect()))
        .collect();

    if let Some(path) = &args.report {
        io::write_text(
            path,
            &io::render_sweep_report(&config, args.tolerance, &rows, &sensitivity),
        )?;
    }
    println!("width,percent_linear,epochs_run,converged");
    for r in &rows {
        println!(
            "{},{:.2},{},{}",
            r.width, r.percent_linear, r.epochs_run, r.converged
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<ExitCode, Error> {
    let dataset = io::load_dataset(&args.dataset)?;
    let (model, _) = io::load_model(&args.model)?;
    let config = PipelineConfig::from_model(&model)?;
    let lut = build_lookup(&dataset)?;

    let mut reference = Vec::with_capacity(dataset.len());
    let mut candidate = Vec::with_capacity(dataset.len());
    let mut records = Vec::with_capacity(dataset.len());
    for s in dataset.iter() {
        let (out_mm, trace) = pipeline_infer(s.voltage_v(), &config, &lut)?;
        reference.push((s.displacement_mm(), model.forward(s.voltage_v())?));
        candidate.push((s.displacement_mm(), out_mm));
        records.push((s.voltage_v(), trace));
    }
    let curve = metrics::error_curve(&reference, &candidate)?;

    io::write_text(&args.out_trace, &io::render_trace_records(&records))?;
    if let Some(path) = &args.report {
        io::write_text(
            path,
            &io::render_pipeline_report(&curve, &reference, &candidate),
        )?;
    }
    println!("points: {}", curve.points.len());
    println!("max_abs_error_mm: {}", curve.max_abs_error);
    println!("max_abs_interior_error_mm: {}", curve.max_abs_interior_error);
    println!("trace: {}", args.out_trace.display());
    Ok(ExitCode::SUCCESS)
}
