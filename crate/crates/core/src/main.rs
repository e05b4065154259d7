use clap::{Parser, Subcommand};
use lrlab::scenarios::{list_scenarios, Config, Status};
use lrlab::LabError;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const CONFIG_ERROR: u8 = 64;
const DEFAULT_OUT: &str = "lrlab-out";

#[derive(Parser)]
#[command(name = "lrlab", version, about = "Run Lieb-Robinson and ground-state verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads for parallel kernels.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (overrides LRLAB_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available scenarios with their defaults.
    List,
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<Config, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    Config::parse(&text)
}

fn out_dir(flag: Option<PathBuf>, cfg: &Config) -> PathBuf {
    flag.or_else(|| std::env::var_os("LRLAB_OUT").filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run(cfg: &Config, out: &Path) -> Result<Status, LabError> {
    std::fs::create_dir_all(out)?;
    let hash = cfg.hash();
    let mut overall = Status::Pass;
    let mut entries = Vec::new();
    for (i, sc) in cfg.scenario.iter().enumerate() {
        let outcome = sc.run(cfg.seed, &hash)?;
        let dir = out.join(format!("{:02}-{}", i + 1, outcome.kind));
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("summary.json"), outcome.summary_json())?;
        for (name, body) in &outcome.files {
            std::fs::write(dir.join(name), body)?;
        }
        println!("{:<20} {:?}", outcome.kind, outcome.status);
        overall = overall.max(outcome.status);
        entries.push(json!({
            "scenario": outcome.kind,
            "directory": dir.file_name().map(|d| d.to_string_lossy().into_owned()),
            "status": outcome.status,
        }));
    }
    let run = json!({ "config_hash": hash, "seed": cfg.seed, "status": overall, "scenarios": entries });
    std::fs::write(out.join("run.json"), serde_json::to_string_pretty(&run)?)?;
    Ok(overall)
}

fn fail(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        LabError::Config(_) => ExitCode::from(CONFIG_ERROR),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {} scenario(s), config hash {}", cfg.scenario.len(), cfg.hash());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run { config, jobs, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(n) = jobs {
                if n == 0 {
                    return fail(&LabError::Config("--jobs must be at least 1".into()));
                }
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            let out = out_dir(out, &cfg);
            match run(&cfg, &out) {
                Ok(status) => ExitCode::from(status.exit_code() as u8),
                Err(e) => fail(&e),
            }
        }
    }
}
