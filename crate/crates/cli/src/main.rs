//! Command-line front end for paperfold.

mod commands;
mod file;
mod report;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use commands::{ScarArgs, EXIT_FAIL, EXIT_PARSE};
use file::{parse_text, Loaded};
use report::Bundle;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Parser, Debug)]
#[command(name = "paperfold", version, about = "Folding schemes, scars and collar moduli")]
struct Cli {
    /// What to print on stdout when --out is absent.
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,
    /// Write report.json, tables and figures into this directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recorded in the report; no command draws random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a scheme is well formed and full.
    Validate { file: PathBuf },
    /// Decide the topology of the quotient.
    Classify { file: PathBuf },
    /// Build the scar graph and evaluate ball profiles.
    Scar {
        file: PathBuf,
        /// Query point, `t` or `component:t`. Repeatable.
        #[arg(long)]
        at: Vec<String>,
        /// Radius. Repeatable; defaults to L/8 halved repeatedly.
        #[arg(long = "r")]
        radii: Vec<String>,
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Run the divergence test at every singular vertex.
    Criterion { file: PathBuf },
    /// Polygon constants and the global modulus of continuity.
    Modulus {
        file: PathBuf,
        #[arg(long, default_value_t = 12)]
        grid: usize,
    },
    /// Build the horseshoe polygon of order n and check its bounds.
    Horseshoe {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Hausdorff convergence of the horseshoe polygons.
    Converge {
        #[arg(long, default_value_t = 32)]
        max_n: usize,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

fn load(path: &PathBuf) -> Result<Loaded, Bundle> {
    let text = fs::read_to_string(path).map_err(|e| {
        let mut b = Bundle::new(json!({ "ok": false, "error": format!("{}: {e}", path.display()) }));
        b.exit = EXIT_PARSE;
        b
    })?;
    parse_text(&text).map_err(|e| {
        let mut b = Bundle::new(json!({
            "ok": false,
            "error": { "kind": "parse", "line": e.line, "column": e.column, "message": e.to_string() },
        }));
        b.exit = EXIT_PARSE;
        b
    })
}

fn run(cli: &Cli) -> Bundle {
    match &cli.command {
        Command::Validate { file } => load(file).map_or_else(|b| b, |l| commands::validate(&l.scheme)),
        Command::Classify { file } => load(file).map_or_else(|b| b, |l| commands::classify(&l.scheme)),
        Command::Scar { file, at, radii, grid } => load(file)
            .map_or_else(|b| b, |l| commands::scar(&l.scheme, &ScarArgs { at, radii, grid: *grid })),
        Command::Criterion { file } => load(file).map_or_else(|b| b, |l| commands::criterion(&l.scheme)),
        Command::Modulus { file, grid } => {
            load(file).map_or_else(|b| b, |l| commands::modulus(&l.scheme, l.file.collar_height.as_deref(), *grid))
        }
        Command::Horseshoe { n, grid } => commands::horseshoe(*n, *grid),
        Command::Converge { max_n, eps } => commands::converge(*max_n, *eps),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut bundle = run(&cli);
    if let Some(obj) = bundle.json.as_object_mut() {
        obj.insert("seed".into(), json!(cli.seed));
    }
    if bundle.exit != 0 {
        if let Some(e) = bundle.json.get("error") {
            eprintln!("paperfold: {e}");
        }
    }
    match &cli.out {
        Some(dir) => match bundle.write_to(dir) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
            }
            Err(e) => {
                eprintln!("paperfold: {}: {e}", dir.display());
                return ExitCode::from(EXIT_FAIL as u8);
            }
        },
        None => match cli.format {
            Format::Json => print!("{}", bundle.json_text()),
            Format::Csv => match bundle.tables.first() {
                Some(t) => print!("{}", t.to_csv()),
                None => eprintln!("paperfold: this command has no table"),
            },
            Format::Svg => match bundle.figures.first() {
                Some((_, s)) => print!("{s}"),
                None => eprintln!("paperfold: this command has no figure"),
            },
        },
    }
    ExitCode::from(bundle.exit as u8)
}
