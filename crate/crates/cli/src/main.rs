use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rlmix_cli::commands;
use rlmix_cli::config::ExperimentConfig;
use rlmix_cli::error::CliError;
use rlmix_cli::figures;
use rlmix_cli::output::Sink;

/// Spectra, exceptional points and mixing times of dissipative lattices.
#[derive(Parser)]
#[command(name = "rlmix", version)]
struct Cli {
    /// Output directory (overrides the config and RLMIX_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    plot: bool,
    /// Worker threads (overrides run.parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set lattice.v=2.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues over the sweep; with a v sweep also the exceptional points.
    Spectrum(ConfigArgs),
    /// Mixing regime, stationary distribution and mixing time.
    Mix(ConfigArgs),
    /// Mixing time against lattice size with segment fits.
    Scaling(ConfigArgs),
    /// Exceptional and diabolic points along a v sweep.
    EpScan(ConfigArgs),
    /// Initial state orthogonal to chosen slow modes.
    Recipe(ConfigArgs),
    /// Print the validated config with overrides applied.
    Config(ConfigArgs),
    /// Run a canned reproduction job.
    Reproduce {
        /// Job name or alias; `all` runs every job.
        #[arg(required_unless_present = "list")]
        job: Option<String>,
        /// List the available jobs.
        #[arg(long)]
        list: bool,
    },
}

fn load(args: &ConfigArgs, cli: &Cli) -> Result<(ExperimentConfig, Sink), CliError> {
    let mut cfg = ExperimentConfig::load(&args.config, &args.set)?;
    if cli.threads.is_some() {
        cfg.run.parallelism = cli.threads;
    }
    let dir = Sink::resolve_dir(cli.out.as_deref(), cfg.output.dir.as_deref());
    let sink = Sink::new(dir, cfg.output.prefix.clone(), cli.plot || cfg.output.plot);
    Ok((cfg, sink))
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1".into()));
    }
    let with_config = |args: &ConfigArgs, f: fn(&ExperimentConfig, &mut Sink) -> Result<Vec<String>, CliError>| {
        let (cfg, mut sink) = load(args, cli)?;
        f(&cfg, &mut sink)
    };
    match &cli.command {
        Command::Spectrum(a) => with_config(a, commands::spectrum),
        Command::Mix(a) => with_config(a, commands::mix),
        Command::Scaling(a) => with_config(a, commands::scaling),
        Command::EpScan(a) => with_config(a, commands::ep_scan_cmd),
        Command::Recipe(a) => with_config(a, commands::recipe),
        Command::Config(a) => Ok(vec![load(a, cli)?.0.to_json()]),
        Command::Reproduce { list: true, .. } => {
            Ok(figures::JOBS.iter().map(|(name, alias)| format!("{name} ({alias})")).collect())
        }
        Command::Reproduce { job, .. } => {
            let job = job.as_deref().unwrap_or_default();
            let base = Sink::new(Sink::resolve_dir(cli.out.as_deref(), None), String::new(), cli.plot);
            let ids: Vec<&str> = if job == "all" { figures::JOBS.iter().map(|(n, _)| *n).collect() } else { vec![job] };
            let mut lines = Vec::new();
            for id in ids {
                let (summary, _) = figures::reproduce(id, &base, cli.threads)?;
                lines.push(format!("[{}]", figures::resolve(id).unwrap_or(id)));
                lines.extend(summary);
            }
            Ok(lines)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::config(first.to_string()).line());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.kind.exit_code())
        }
    }
}
