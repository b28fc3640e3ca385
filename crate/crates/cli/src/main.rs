mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relightkit::Error;

#[derive(Parser, Debug)]
#[command(name = "relightkit", version, about = "Depth-guided single-shot flash relighting")]
struct Cli {
    /// TOML pipeline configuration; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the dataset and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Single worker thread for bit-reproducible output.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the synthetic dataset.
    Gen {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the three networks, checkpointing after each epoch.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Relight a flash image under a direction or an environment map.
    Relight(RelightArgs),
    /// Cast-shadow mask and light-frame points for one direction.
    Shadow {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        light: String,
        /// Also write the ShadowNet prediction.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Predict albedo, normal and roughness maps.
    Decompose {
        #[arg(long)]
        flash: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write the test-split error report.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, conflicts_with = "oracle")]
        models: Option<PathBuf>,
        /// Use ground-truth maps and shadows instead of networks.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RelightArgs {
    #[arg(long)]
    flash: PathBuf,
    #[arg(long)]
    depth: PathBuf,
    /// Light travel direction `x,y,z` in camera space.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "env", required_unless_present = "env")]
    light: Option<String>,
    /// Raw-float environment map over the visible hemisphere.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, conflicts_with = "oracle")]
    models: Option<PathBuf>,
    /// Ground-truth maps from `--maps` (default: the flash image's folder).
    #[arg(long)]
    oracle: bool,
    #[arg(long, requires = "oracle")]
    maps: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_io() {
        2
    } else {
        1
    }
}
