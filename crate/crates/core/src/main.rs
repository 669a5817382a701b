use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use proxinorm::approx::{build_report, lemma10_feasibility, sample_direction, verify_7_1};
use proxinorm::demo::run_demo;
use proxinorm::descent::{minimizing_sequence, verify_chain};
use proxinorm::gateaux::{d_minus_read_norm, d_plus_read_norm};
use proxinorm::{ApproxLinearityReport, Chain, Config, Error, Result, SparseRationalVec, SparseVec, Subspace};

/// Certified computations with a non-proximinal renorming of c₀.
#[derive(Parser, Debug)]
#[command(name = "proxinorm", version)]
struct Cli {
    /// Config file (defaults to ./proxinorm.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump the table prefix as JSON lines.
    Construct {
        #[arg(long)]
        k_max: usize,
    },
    /// Enclose the norm of a vector.
    Norm {
        #[arg(long)]
        vec: PathBuf,
        #[arg(long)]
        bits: Option<u64>,
    },
    /// Enclose a one-sided directional derivative.
    Deriv {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        u: PathBuf,
        /// Left derivative instead of right.
        #[arg(long)]
        minus: bool,
        #[arg(long)]
        bits: Option<u64>,
    },
    /// Approximate-linearity report with randomized trials.
    Approxlin {
        #[arg(long)]
        x: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        z: Vec<PathBuf>,
        #[arg(long)]
        prefix: usize,
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide whether the span of the given functionals tracks γ.
    Feasible {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        phi: Vec<PathBuf>,
        /// Use only the first N indices of the A₀ prefix.
        #[arg(long)]
        prefix_size: Option<usize>,
    },
    /// Certified minimizing sequence in the coset x0 + H.
    Descend {
        #[arg(long, num_args = 1.., required = true)]
        phi: Vec<PathBuf>,
        #[arg(long)]
        x0: PathBuf,
        #[arg(long)]
        steps: usize,
    },
    /// Re-check a certificate chain.
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Sign-pattern walkthrough in codimension N.
    Demo {
        #[arg(long)]
        n: Option<usize>,
    },
}

fn read_json(path: &Path, field: &str) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::parse(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(field, e.to_string()))
}

fn read_vec(path: &Path, field: &str) -> Result<SparseRationalVec> {
    SparseVec::from_json_value(&read_json(path, field)?, field)
}

fn read_vecs(paths: &[PathBuf], field: &str) -> Result<Vec<SparseRationalVec>> {
    paths
        .iter()
        .enumerate()
        .map(|(n, p)| read_vec(p, &format!("{field}[{n}]")))
        .collect()
}

#[derive(Serialize)]
struct Row<'a> {
    k: usize,
    u: &'a SparseRationalVec,
    a: u64,
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let s = serde_json::to_string(value).map_err(|e| Error::parse("output", e.to_string()))?;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{s}") {
        // a closed pipe just means the reader has seen enough
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = Config::load(cli.config.as_deref())?;
    let table = config.table();
    match cli.command {
        Command::Construct { k_max } => {
            table.with_prefix(k_max, |entries| {
                for e in entries {
                    emit(&Row { k: e.k, u: &e.u, a: e.a })?;
                }
                Ok::<_, Error>(())
            })??;
        }
        Command::Norm { vec, bits } => {
            let x = read_vec(&vec, "vec")?;
            emit(&proxinorm::read_norm(&table, &x, bits.unwrap_or(config.precision_bits))?)?;
        }
        Command::Deriv { x, u, minus, bits } => {
            let x = read_vec(&x, "x")?;
            let u = read_vec(&u, "u")?;
            let bits = bits.unwrap_or(config.precision_bits);
            let d = if minus {
                d_minus_read_norm(&table, &x, &u, bits)?
            } else {
                d_plus_read_norm(&table, &x, &u, bits)?
            };
            emit(&d)?;
        }
        Command::Approxlin {
            x,
            z,
            prefix,
            trials,
            seed,
        } => {
            let x = read_vec(&x, "x")?;
            let z = read_vecs(&z, "z")?;
            let mut report = build_report(&table, &x, &z, prefix)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..trials {
                let v = sample_direction(&mut rng, &report.a0_prefix, 6, 3);
                let trial = verify_7_1(&table, &x, &report, &v, config.precision_bits)?;
                report.trials.push(trial);
            }
            emit(&report)?;
            if report.trials.iter().any(|t| !t.pass) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Feasible {
            report,
            phi,
            prefix_size,
        } => {
            let report: ApproxLinearityReport =
                serde_json::from_value(read_json(&report, "report")?).map_err(|e| Error::parse("report", e.to_string()))?;
            let phis = read_vecs(&phi, "phi")?;
            let prefix: BTreeSet<usize> = report
                .a0_prefix
                .iter()
                .copied()
                .take(prefix_size.unwrap_or(usize::MAX))
                .collect();
            let f = lemma10_feasibility(&report, &phis, &prefix, config.elimination_budget)?;
            emit(&json!({
                "prefix": prefix,
                "satisfiable": f.satisfiable,
                "witness": f.witness,
            }))?;
        }
        Command::Descend { phi, x0, steps } => {
            let h = Subspace::new(read_vecs(&phi, "phi")?)?;
            let x0 = read_vec(&x0, "x0")?;
            let chain = minimizing_sequence(&table, &h, &x0, steps, &config.search_params())?;
            emit(&chain)?;
            if chain.certificates.len() < steps {
                eprintln!(
                    "stopped after {} of {steps} steps: {}",
                    chain.certificates.len(),
                    chain.stop_reason.as_deref().unwrap_or("unknown")
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Verify { cert } => {
            let chain: Chain =
                serde_json::from_value(read_json(&cert, "cert")?).map_err(|e| Error::parse("cert", e.to_string()))?;
            verify_chain(&table, &chain)?;
            emit(&json!({ "valid": true, "certificates": chain.certificates.len() }))?;
        }
        Command::Demo { n } => {
            emit(&run_demo(&table, &config.demo_params(n))?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_budget() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
