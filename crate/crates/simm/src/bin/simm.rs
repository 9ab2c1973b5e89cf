//! Command-line eigensolver: locate all eigenvalues of a sparse pencil
//! inside a rectangle of the complex plane.
//!
//! Exit codes: 0 on success, 2 when warnings are present (for example
//! unresolvable finest squares), 1 on errors (load failures, shift-cap
//! aborts), 64 on usage errors.

use clap::error::ErrorKind;
use clap::Parser;
use simm::manifest::{records_to_csv, tree_to_text, InputEcho, RunManifest};
use simm::mmio::load_matrix_market;
use simm::search::{sim_m, Region, SearchConfig};
use simm::sparse::MatrixPencil;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "simm",
    version,
    about = "Multilevel spectral-indicator eigensolver for sparse pencils",
    long_about = "Finds all eigenvalues of the generalized problem A x = lambda B x inside a \
                  rectangular region of the complex plane, to a requested precision. Matrices \
                  are Matrix Market files; omitting --b solves the standard problem (B = I)."
)]
struct Args {
    /// Matrix A (Matrix Market file)
    #[arg(long = "a", value_name = "PATH")]
    a: PathBuf,

    /// Matrix B (Matrix Market file); identity when omitted
    #[arg(long = "b", value_name = "PATH")]
    b: Option<PathBuf>,

    /// Search rectangle: RE_MIN RE_MAX IM_MIN IM_MAX
    #[arg(
        long,
        required = true,
        num_args = 4,
        allow_negative_numbers = true,
        value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"]
    )]
    region: Vec<f64>,

    /// Target precision (side of the finest squares)
    #[arg(long, default_value_t = 1e-6)]
    h0: f64,

    /// Residual tolerance for resolvability
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,

    /// Indicator threshold
    #[arg(long, default_value_t = 0.05)]
    delta0: f64,

    /// Krylov dimension per shift
    #[arg(long, default_value_t = 50)]
    m: usize,

    /// Quadrature count (each square is probed at 2*n0 points)
    #[arg(long, default_value_t = 8)]
    n0: usize,

    /// Coarse pre-division count along the longer region axis
    #[arg(long, default_value_t = 4)]
    coarse: usize,

    /// Cap on the number of shifts
    #[arg(long = "max-shifts", default_value_t = 256)]
    max_shifts: usize,

    /// RNG seed (identical seeds give byte-identical manifests)
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Probe vectors for multiplicity estimation (0 = off)
    #[arg(long = "multiplicity", value_name = "K", default_value_t = 0)]
    multiplicity: usize,

    /// Worker threads for indicator evaluation (0 = serial deterministic)
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Write the JSON manifest here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also write records as CSV (re,im,box_size,multiplicity)
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,

    /// Also dump every visited square (level,center_re,center_im,side,status)
    #[arg(long = "dump-tree", value_name = "PATH")]
    dump_tree: Option<PathBuf>,
}

fn run(args: Args) -> Result<u8, String> {
    let a = load_matrix_market::<f64>(&args.a).map_err(|e| e.to_string())?;
    let b = match &args.b {
        Some(path) => Some(load_matrix_market::<f64>(path).map_err(|e| e.to_string())?),
        None => None,
    };
    let pencil = MatrixPencil::new(a, b).map_err(|e| e.to_string())?;

    let region = Region::new(
        args.region[0],
        args.region[1],
        args.region[2],
        args.region[3],
    );
    let mut config = SearchConfig::new(region);
    config.h0 = args.h0;
    config.eps = args.eps;
    config.delta0 = args.delta0;
    config.m = args.m;
    config.n0 = args.n0;
    config.coarse_grid = args.coarse;
    config.max_shifts = args.max_shifts;
    config.rng_seed = args.seed;
    config.multiplicity_k = args.multiplicity;
    config.threads = args.threads;

    let outcome = sim_m(&pencil, &config).map_err(|e| e.to_string())?;

    let manifest = RunManifest::new(
        InputEcho {
            a: args.a.display().to_string(),
            b: args.b.as_ref().map(|p| p.display().to_string()),
        },
        &config,
        &outcome,
    );
    let json = manifest.to_json();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => print!("{json}"),
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, records_to_csv(&outcome.records))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.dump_tree {
        std::fs::write(path, tree_to_text(&outcome.tree))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }

    eprintln!(
        "simm: {} eigenvalue record(s), {} shift(s), {} level(s), {:.3}s",
        outcome.records.len(),
        outcome.stats.num_shifts,
        outcome.stats.levels,
        outcome.stats.wall_time_secs
    );
    for w in &outcome.warnings {
        eprintln!("simm: warning: {w}");
    }

    if outcome.aborted.is_some() {
        return Ok(1);
    }
    let has_warnings =
        !outcome.warnings.is_empty() || outcome.records.iter().any(|r| r.warning.is_some());
    Ok(if has_warnings { 2 } else { 0 })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("simm: error: {msg}");
            ExitCode::from(1)
        }
    }
}
