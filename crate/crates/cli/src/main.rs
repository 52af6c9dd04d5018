use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use aquafel_cli::{commands, CliError, ConfigFile, Settings, EXIT_USAGE};

/// Multi-vehicle lake monitoring simulator.
#[derive(Debug, Parser)]
#[command(name = "aquafel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one mission and write every artifact.
    Run(Common),
    /// Compare planners over a seed range.
    Compare(Common),
    /// Sweep exploration/exploitation splits across fleet sizes.
    Sweep(Common),
    /// Compare federated and centralized learning.
    Fedcmp(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (`key = value` lines under `[section]` headers).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output root directory.
    #[arg(short, long, env = "AQUAFEL_OUT")]
    out: Option<PathBuf>,
    /// Experiment directory name; defaults to `<subcommand>-<unix seconds>`.
    #[arg(short, long)]
    experiment: Option<String>,
    /// Override any configuration key, e.g. `--set gp.nugget=1e-8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    planner: Option<String>,
    #[arg(long)]
    vehicles: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `a..b` or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma separated planner names.
    #[arg(long)]
    planners: Option<String>,
    /// Comma separated `explore/exploit` kilometer pairs.
    #[arg(long)]
    splits: Option<String>,
    /// Comma separated fleet sizes.
    #[arg(long)]
    fleet: Option<String>,
    #[arg(long)]
    learning_mode: Option<String>,
    /// Map file; defaults to the bundled lake.
    #[arg(long)]
    map: Option<String>,
    /// Also write per-mission directories for multi-mission commands.
    #[arg(long)]
    save_missions: bool,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let flags = [
            ("mission.planner", &self.planner),
            ("mission.vehicles", &self.vehicles),
            ("mission.seed", &self.seed),
            ("mission.learning_mode", &self.learning_mode),
            ("experiment.seeds", &self.seeds),
            ("experiment.planners", &self.planners),
            ("experiment.splits", &self.splits),
            ("experiment.fleet", &self.fleet),
            ("experiment.name", &self.experiment),
            ("map.path", &self.map),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                file.set(key, v);
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            file.set(k.trim(), v.trim());
        }
        if self.save_missions {
            file.set("experiment.save_missions", "true");
        }
        let mut settings = Settings::from_config(&file)?;
        if let Some(out) = &self.out {
            settings.out_dir = out.clone();
        }
        Ok(settings)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Run(c) => ("run", c),
        Command::Compare(c) => ("compare", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Fedcmp(c) => ("fedcmp", c),
    };
    let settings = common.settings()?;
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let root = commands::experiment_root(&settings, name, now);
    let table = match cli.command {
        Command::Run(_) => {
            let dir = commands::run(&settings, &root)?;
            println!("wrote {}", dir.display());
            return Ok(());
        }
        Command::Compare(_) => commands::compare(&settings, &root)?,
        Command::Sweep(_) => commands::sweep(&settings, &root)?,
        Command::Fedcmp(_) => commands::fedcmp(&settings, &root)?,
    };
    print!("{}", commands::render_table(&table));
    println!("wrote {}", root.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
