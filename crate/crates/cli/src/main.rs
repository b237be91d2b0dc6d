//! `casgen`: run cross-validation experiments, train and inspect models.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use casgen_core::harness::{emit_mask_log, load_dataset, DataFormat, DataSource, ReportFormat};
use casgen_core::{emit_report, load_model, run_experiment, save_model, Error, ExperimentConfig, MethodSpec};
use clap::{Args, Parser, Subcommand};

const PAPER_CONFIG: &str = include_str!("../../../paper.config");

#[derive(Parser)]
#[command(name = "casgen", version, about = "Cascade generalization ensembles on tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the packaged thirteen-method protocol on a Cleveland data file.
    ReproducePaper {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Train one method on a whole data set and save the model as JSON.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Method name, e.g. Bg-C-C4.5.
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretty-print a saved model.
    InspectModel { path: PathBuf },
}

#[derive(Args)]
struct OutputArgs {
    /// Report file; stdout when absent. Provenance goes to `<out>.provenance`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "markdown"])]
    format: String,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of cross-validation runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    jobs: Option<usize>,
}

enum Failure {
    Core(Error),
    Output(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Output(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Experiment { source, .. } => exit_code(source),
        e if e.is_config_error() => 1,
        e if e.is_data_error() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Output(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            experiment(cfg, &output)
        }
        Command::ReproducePaper { data, output } => {
            let mut cfg = ExperimentConfig::from_toml_str(PAPER_CONFIG, Path::new("."))?;
            cfg.data = DataSource {
                path: data,
                format: DataFormat::Cleveland,
                schema: None,
            };
            experiment(cfg, &output)
        }
        Command::Train {
            config,
            method,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let spec = MethodSpec::parse(&method, &cfg.hyperparameters())?;
            let data = load_dataset(&cfg.data)?;
            let model = spec.train(&data.table, seed)?;
            let mut w = BufWriter::new(File::create(&out)?);
            save_model(&model, Some(&method), &mut w)?;
            w.flush()?;
            eprintln!("saved {method} trained on {} rows to {}", data.table.n_rows(), out.display());
            Ok(())
        }
        Command::InspectModel { path } => {
            let file = File::open(&path).map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
            let (model, method) = load_model(BufReader::new(file))?;
            let mut out = io::stdout().lock();
            if let Some(m) = method {
                writeln!(out, "method: {m}")?;
            }
            write!(out, "{model}")?;
            Ok(())
        }
    }
}

fn experiment(mut cfg: ExperimentConfig, output: &OutputArgs) -> Result<(), Failure> {
    if let Some(seed) = output.seed {
        cfg.protocol.seed = seed;
    }
    if let Some(runs) = output.runs {
        cfg.protocol.runs = runs;
    }
    cfg.validate()?;
    let format: ReportFormat = output.format.parse()?;

    let report = match output.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?
            .install(|| run_experiment(&cfg))?,
        None => run_experiment(&cfg)?,
    };
    let body = emit_report(&report, format)?;
    let provenance = report.provenance.render();
    match &output.out {
        Some(path) => {
            std::fs::write(path, &body)?;
            std::fs::write(sidecar(path, "provenance"), &provenance)?;
            if cfg.report.log_masks {
                std::fs::write(sidecar(path, "masks.tsv"), emit_mask_log(&report))?;
            }
            eprintln!("wrote {}", path.display());
        }
        None => {
            eprint!("{provenance}");
            if cfg.report.log_masks {
                eprint!("{}", emit_mask_log(&report));
            }
            io::stdout().lock().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}
