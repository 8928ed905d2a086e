//! Command-line experiment runner: `run`, `compare` and `plot`.

mod config;
mod output;

pub use config::{parse_diagnostics, ConfigOverrides, ExperimentConfig};
pub use output::{
    compare_traces, read_plot_data, summary, write_diagnostics, write_plot_data, Comparison,
    RateDelta, COMPARE_HEADER, DIAGNOSTICS_HEADER, MARK_RATIO_FROM_LEVEL, PLOT_HEADER,
};

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::adaptivity::{adaptive_loop, AdaptiveRun, AdaptiveTrace, RateWindow};
use crate::error::{Error, Result};
use crate::mesh::{build_initial_mesh, uniform_refine, write_mesh};
use crate::problem::{check_assumptions, problem_by_key};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidParameter(_)
        | Error::UnsupportedDegree(_)
        | Error::Parse { .. }
        | Error::NoExactSolution => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "afvm",
    version,
    about = "Adaptive vertex-centered finite volume experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one adaptive or uniform experiment.
    Run(RunArgs),
    /// Merge two traces by level and compare their rates.
    Compare(CompareArgs),
    /// Write `N eta osc err` columns of a trace.
    Plot(PlotArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// smooth, lshape or convection.
    #[arg(long)]
    pub problem: Option<String>,
    /// adaptive or uniform.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long = "theta-prime")]
    pub theta_prime: Option<f64>,
    #[arg(long = "max-elements")]
    pub max_elements: Option<usize>,
    #[arg(long = "max-iters")]
    pub max_iterations: Option<usize>,
    #[arg(long = "quad-degree")]
    pub quad_degree: Option<usize>,
    /// gauss or midpoint.
    #[arg(long = "flux-rule")]
    pub flux_rule: Option<String>,
    #[arg(long = "initial-subdivisions")]
    pub initial_subdivisions: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// orthogonality, defect_identity, quasi_orthogonality, fem_comparison, all or none; repeatable.
    #[arg(long = "diag")]
    pub diag: Vec<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Leave wall_time_s empty so that traces are byte-reproducible.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// Also write the final mesh and solution.
    #[arg(long = "write-mesh")]
    pub write_mesh: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// auto, fraction:F, decades:D or last:K.
    #[arg(long, default_value = "auto")]
    pub window: String,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub trace: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Result<ConfigOverrides> {
        Ok(ConfigOverrides {
            problem: self.problem.clone(),
            mode: self.mode.as_deref().map(str::parse).transpose()?,
            theta: self.theta,
            theta_prime: self.theta_prime,
            max_elements: self.max_elements,
            max_iterations: self.max_iterations,
            quad_degree: self.quad_degree,
            flux_rule: self.flux_rule.as_deref().map(str::parse).transpose()?,
            initial_subdivisions: self.initial_subdivisions,
            out: self.out.clone(),
            diagnostics: if self.diag.is_empty() {
                None
            } else {
                Some(parse_diagnostics(&self.diag)?)
            },
            threads: self.threads,
            timing: self.no_timing.then_some(false),
            write_mesh: self.write_mesh.then_some(true),
        })
    }

    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            config = ConfigOverrides::from_reader(BufReader::new(File::open(path)?))?.apply(config);
        }
        let config = self.overrides()?.apply(config);
        config.validate()?;
        Ok(config)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// What a finished `run` produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub run: AdaptiveRun,
    pub summary: serde_json::Value,
}

/// Runs the experiment and writes `config.txt`, `trace.csv`,
/// `diagnostics.csv` and `summary.json` into `config.out` (plus `mesh.txt`
/// and `solution.txt` on request). Outputs are written even when the loop
/// ends with a solver failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let problem = problem_by_key(&config.problem)?;
    let loop_config = config.loop_config()?;
    fs::create_dir_all(&config.out)?;
    fs::write(config.out.join("config.txt"), config.to_key_values())?;

    let mut sample_mesh = build_initial_mesh(problem.domain, config.initial_subdivisions)?;
    for _ in 0..2 {
        sample_mesh = uniform_refine(&sample_mesh)?.mesh;
    }
    let assumptions = check_assumptions(&problem, &sample_mesh, 7);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let run = pool.install(|| adaptive_loop(&problem, &loop_config))?;
    let seconds = config.timing.then(|| start.elapsed().as_secs_f64());

    let mut out = create(&config.out.join("trace.csv"))?;
    run.trace.write_csv(&mut out)?;
    out.flush()?;
    let mut out = create(&config.out.join("diagnostics.csv"))?;
    write_diagnostics(&run, &mut out)?;
    out.flush()?;
    let summary = summary(config, &run, &assumptions, &loop_config.quadrature, seconds);
    let mut out = create(&config.out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut out, &summary).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    if config.write_mesh {
        if let Some(u) = &run.final_solution {
            let mut out = create(&config.out.join("mesh.txt"))?;
            write_mesh(&u.mesh, &mut out)?;
            out.flush()?;
            let mut out = create(&config.out.join("solution.txt"))?;
            u.write(&mut out)?;
            out.flush()?;
        }
    }
    Ok(RunOutcome { run, summary })
}

fn read_trace(path: &Path) -> Result<AdaptiveTrace> {
    AdaptiveTrace::read_csv(BufReader::new(File::open(path)?))
}

fn with_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut out = create(p)?;
            write(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = run_experiment(&config)?;
            let s = &outcome.summary;
            println!(
                "{} {}: {} levels, final N = {}, eta = {}, rates {}",
                config.problem,
                config.mode,
                s["levels"],
                s["final"]["n_elements"],
                s["final"]["eta"],
                s["rates"]
            );
            println!("outputs in {}", config.out.display());
            match &outcome.run.failure {
                Some(e) => {
                    eprintln!("error: {e}");
                    Ok(exit_code(e))
                }
                None => Ok(EXIT_OK),
            }
        }
        Command::Compare(args) => {
            let window: RateWindow = args.window.parse()?;
            let a = read_trace(&args.a)?;
            let b = read_trace(&args.b)?;
            let comparison = compare_traces(&a, &b, window);
            with_output(args.out.as_deref(), |out| comparison.write(out))?;
            Ok(EXIT_OK)
        }
        Command::Plot(args) => {
            let trace = read_trace(&args.trace)?;
            with_output(args.out.as_deref(), |out| write_plot_data(&trace, out))?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
