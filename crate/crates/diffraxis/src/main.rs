use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use diffraxis::export::{to_json, write_csv, write_plot_data};
use diffraxis::{ingest, run_pipeline_timed, AppError, HklAssignment, InputFormat, PipelineConfig};
use diffraxis_core::crystallography::{LatticeConfig, CU_K_ALPHA1, IN2O3_A0};

/// Decompose an x-ray diffractogram into baseline, Pearson VII peaks and noise.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Two-column input file (angle in degrees 2θ, counts).
    #[arg(long, short)]
    input: PathBuf,
    /// Column separator of the input.
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    format: InputFormat,
    /// Multiscale threshold multiplier.
    #[arg(long, default_value_t = 2.5)]
    tau: f64,
    /// Coverage level of the peak acceptance critical values.
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Estimate heteroscedastic ground noise by segmentation.
    #[arg(long)]
    hetero: bool,
    /// Tube shrink factor for local squeezing.
    #[arg(long, default_value_t = 0.9)]
    q_squeeze: f64,
    /// Weight multiplier for adaptive spline refits.
    #[arg(long, default_value_t = 2.0)]
    q_weights: f64,
    /// Largest kernel count tried per segment.
    #[arg(long, default_value_t = 4)]
    max_kernels: usize,
    /// Random starts per kernel count.
    #[arg(long, default_value_t = 200)]
    restarts: usize,
    /// Accepted solutions to keep per segment.
    #[arg(long, default_value_t = 3)]
    solutions: usize,
    /// Seed for random restarts of the kernel fits.
    #[arg(long, env = "DIFFRAXIS_SEED", default_value_t = 0)]
    seed: u64,
    /// Seed for the simulated acceptance critical values.
    #[arg(long, default_value_t = 0)]
    cl_seed: u64,
    /// Simulation replicates for the critical values.
    #[arg(long, default_value_t = 1000)]
    cl_replicates: usize,
    /// Wavelength in nm.
    #[arg(long, default_value_t = CU_K_ALPHA1)]
    wavelength: f64,
    /// Ideal cubic lattice constant in nm.
    #[arg(long, default_value_t = IN2O3_A0)]
    a0: f64,
    /// Reflection assignment `h,k,l@angle`; repeatable.
    #[arg(long, value_parser = parse_hkl)]
    hkl: Vec<HklAssignment>,
    /// JSON report (standard output when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Tab-separated plot series.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// One row per fitted component.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print stage timings to standard error.
    #[arg(long, short)]
    verbose: bool,
}

fn parse_hkl(s: &str) -> Result<HklAssignment, String> {
    s.parse().map_err(|e: AppError| e.to_string())
}

impl Cli {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            tau: self.tau,
            alpha: self.alpha,
            hetero: self.hetero,
            q_squeeze: self.q_squeeze,
            q_weights: self.q_weights,
            max_kernels: self.max_kernels,
            restarts: self.restarts,
            solutions: self.solutions,
            seed: self.seed,
            cl_seed: self.cl_seed,
            cl_replicates: self.cl_replicates,
            lattice: LatticeConfig {
                wavelength: self.wavelength,
                a0: self.a0,
            },
            hkl: self.hkl.clone(),
            ..PipelineConfig::default()
        }
    }
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let d = ingest(&cli.input, cli.format)?;
    let (result, timings) = run_pipeline_timed(&d, &cli.config())?;
    if cli.verbose {
        eprintln!(
            "n = {}, {} peak intervals; denoise {:?}, spline {:?}, intervals {:?}, baseline {:?}, peak fit {:?}",
            d.len(),
            result.peaks.len(),
            timings.denoise,
            timings.spline,
            timings.intervals,
            timings.baseline,
            timings.peak_fit
        );
    }
    let json = to_json(&result)?;
    match &cli.out {
        Some(path) => std::fs::write(path, json).map_err(|e| AppError::Io {
            path: path.clone(),
            source: e,
        })?,
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| AppError::Io {
                path: "<stdout>".into(),
                source: e,
            })?,
    }
    if let Some(path) = &cli.csv {
        write_csv(&result, path)?;
    }
    if let Some(path) = &cli.plot_data {
        write_plot_data(&result, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
