//! `meshrdh`: hide data in encrypted triangular meshes and get both back.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meshrdh_core::Strategy;

#[derive(Debug, Parser)]
#[command(name = "meshrdh", version, about)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Cmd,
}

/// Settings shared by every subcommand. Commands that read a container take
/// precision and strategy from it and ignore `--p` and `--strategy`.
#[derive(Debug, Args, Clone)]
pub struct Options {
    /// Decimal digits kept by quantization, 1 to 33.
    #[arg(long = "p", global = true, default_value_t = 5,
          value_parser = clap::value_parser!(u32).range(1..=33))]
    pub precision: u32,
    /// Vertex division: `topology` or `parity_only`.
    #[arg(long, global = true, default_value_t = Strategy::Topology)]
    pub strategy: Strategy,
    /// Model key, 64 hex characters.
    #[arg(long, global = true, env = "MRDH_KM", hide_env_values = true)]
    pub km: Option<String>,
    /// Data key, 64 hex characters.
    #[arg(long, global = true, env = "MRDH_KA", hide_env_values = true)]
    pub ka: Option<String>,
    /// Nonce as 24 hex characters, or `auto` for a fresh random one.
    #[arg(long, global = true, default_value = "auto")]
    pub nonce: String,
    /// Scale the mesh into (-1, 1) by a power of two before quantizing. The
    /// factor is stored in the container and undone on recovery.
    #[arg(long, global = true)]
    pub normalize: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Report division and capacity figures for a mesh.
    Prepare {
        mesh: PathBuf,
        /// Also write the report as a one-row CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Quantize, divide and encrypt a mesh into a container without payload.
    Encrypt {
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a payload file into a container, or into a mesh (which is
    /// encrypted first and needs `--km`).
    Embed {
        input: PathBuf,
        payload: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the payload with the data key alone.
    Extract {
        container: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restore the mesh with the model key alone. The output format follows
    /// the extension (`.off` or `.obj`).
    Recover {
        container: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract and recover with both keys.
    Both {
        container: PathBuf,
        #[arg(long)]
        payload_out: PathBuf,
        #[arg(long)]
        mesh_out: PathBuf,
    },
    /// Recover a container and compare it with the original mesh.
    Evaluate {
        original: PathBuf,
        container: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run every mesh in a directory through both strategies with a full
    /// payload and write one CSV row per mesh and strategy.
    Bench {
        corpus: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let opts = &cli.opts;
    let result = match cli.command {
        Cmd::Prepare { mesh, csv } => commands::prepare(opts, &mesh, csv.as_deref()),
        Cmd::Encrypt { mesh, out } => commands::encrypt(opts, &mesh, &out),
        Cmd::Embed {
            input,
            payload,
            out,
        } => commands::embed(opts, &input, &payload, &out),
        Cmd::Extract { container, out } => commands::extract(opts, &container, &out),
        Cmd::Recover { container, out } => commands::recover(opts, &container, &out),
        Cmd::Both {
            container,
            payload_out,
            mesh_out,
        } => commands::both(opts, &container, &payload_out, &mesh_out),
        Cmd::Evaluate {
            original,
            container,
            csv,
        } => commands::evaluate(opts, &original, &container, csv.as_deref()),
        Cmd::Bench { corpus, csv } => bench::run(opts, &corpus, csv.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
