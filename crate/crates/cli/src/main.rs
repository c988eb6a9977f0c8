use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use flagpong_cli::{apply_overrides, output_dir, run, write_artifacts, Command, Overrides, SceneConfig};

/// Normal forms, tree distances, limit sets and ping-pong certificates for
/// amalgams and HNN extensions of matrix groups.
///
/// Exit status: 0 certified or PASS, 2 falsified or FAIL, 3 inconclusive,
/// 1 usage or configuration error.
#[derive(Parser, Debug)]
#[command(name = "flagpong", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scene configuration (JSON, schema 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides FLAGPONG_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Certificate depth L; sample word length for limit-set.
    #[arg(long)]
    depth: Option<usize>,
    /// Skip CSV artifacts.
    #[arg(long)]
    json_only: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut config = match SceneConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        depth: cli.depth,
        json_only: cli.json_only,
    };
    apply_overrides(&mut config, cli.command, &overrides);
    let dir = output_dir(cli.out.as_deref(), &config);
    let result = match run(cli.command, &config, overrides.json_only) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_artifacts(&dir, &result.artifacts) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("{}", result.summary);
    for a in &result.artifacts {
        println!("  wrote {}", dir.join(&a.name).display());
    }
    ExitCode::from(result.outcome.exit_code() as u8)
}
