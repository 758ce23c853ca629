//! `star-order-lab`: generalized inverses and one-sided star orders from the
//! command line.
//!
//! Exit codes: 0 success / relation holds, 1 relation fails or no inverse
//! exists, 2 bad input, 3 internal invariant violated.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use star_order_core::blocks::Side;
use star_order_core::inverses::{moore_penrose, sample_class, ClassSpec};
use star_order_core::json::{
    matrix_from_str, matrix_to_string, matrix_to_value, DecompositionJson, InclusionJson,
    WitnessJson,
};
use star_order_core::lab::{configured_cap, FiniteRingUniverse};
use star_order_core::orders::{
    decide, inclusion_13, inclusion_14, simultaneous_decomposition, witness, InclusionMode,
    OrderRelation, Route,
};
use star_order_core::verify::{self, Suite, VerifyConfig};
use star_order_core::{Error, Mat, RingSpec};

#[derive(Parser)]
#[command(
    name = "star-order-lab",
    version,
    about = "Exact generalized inverses and star orders on matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Characterization,
    Feasibility,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Randomized,
    Critical,
    Theorem,
    Exhaustive,
}

#[derive(Subcommand)]
enum Command {
    /// Moore-Penrose inverse, or "none".
    Mp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled members of a Penrose class such as 13 or {1,2,3}.
    Class {
        #[arg(long)]
        spec: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide an order relation between two matrices.
    Order {
        #[arg(long, value_parser = parse_relation)]
        rel: OrderRelation,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = RouteArg::Both)]
        route: RouteArg,
        /// Print a certified witness {g, p, q} when the relation holds.
        #[arg(long)]
        witness: bool,
        /// Also write the witness JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified witness JSON for a relation that holds.
    Witness {
        #[arg(long, value_parser = parse_relation)]
        rel: OrderRelation,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Simultaneous decomposition of a below b.
    Decompose {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long, value_enum, default_value_t = SideArg::Left)]
        side: SideArg,
    },
    /// Decide b{1,3} ⊆ a{1,3} (or b{1,4} ⊆ a{1,4} with --dual).
    Inclusion {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Critical)]
        mode: ModeArg,
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Hasse diagram (DOT) of a relation on M_n(Z_p).
    Hasse {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_relation)]
        rel: OrderRelation,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the full order table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the seeded invariant suites.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
        /// Comma-separated: q (for Q(i)) or a prime.
        #[arg(long, value_delimiter = ',', value_parser = parse_ring)]
        rings: Option<Vec<RingSpec>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_suite)]
        suites: Option<Vec<Suite>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_relation(s: &str) -> Result<OrderRelation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ring(s: &str) -> Result<RingSpec, String> {
    match s {
        "q" | "Q" | "qi" | "Q(i)" | "gaussian" => Ok(RingSpec::GaussianRational),
        _ => {
            let p = s
                .trim_start_matches("Z_")
                .parse()
                .map_err(|_| format!("unknown ring {s:?}"))?;
            RingSpec::prime_field(p).map_err(|e| e.to_string())
        }
    }
}

/// Outcome of a command that ran to completion.
enum Done {
    Ok,
    Negative,
}

enum Failure {
    Input(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(_) => Failure::Invariant(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<Done, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<Mat, Failure> {
    matrix_from_str(&read_text(path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(Done::Ok) => ExitCode::from(0),
        Ok(Done::Negative) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command, out: &mut impl Write) -> Outcome {
    match cmd {
        Command::Mp { input, out: path } => {
            let a = read_matrix(&input)?;
            match moore_penrose(&a)? {
                None => {
                    writeln!(out, "none")?;
                    Ok(Done::Negative)
                }
                Some(x) => {
                    let text = matrix_to_string(&x);
                    if let Some(p) = path {
                        write_out(&p, &text)?;
                    }
                    writeln!(out, "{text}")?;
                    Ok(Done::Ok)
                }
            }
        }
        Command::Class {
            spec,
            input,
            sample,
            seed,
        } => {
            let spec: ClassSpec = spec.parse()?;
            let a = read_matrix(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut members = Vec::new();
            for _ in 0..sample {
                match sample_class(&a, spec, &mut rng, 4)? {
                    Some(x) => members.push(matrix_to_value(&x)),
                    None => {
                        writeln!(out, "none")?;
                        return Ok(Done::Negative);
                    }
                }
            }
            writeln!(out, "{}", pretty(&members))?;
            Ok(Done::Ok)
        }
        Command::Order {
            rel,
            a,
            b,
            route,
            witness: want_witness,
            out: path,
        } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            let routes: &[Route] = match route {
                RouteArg::Characterization => &[Route::Characterization],
                RouteArg::Feasibility => &[Route::Feasibility],
                RouteArg::Both => &[Route::Characterization, Route::Feasibility],
            };
            let mut verdicts = Vec::new();
            for &r in routes {
                let v = decide(rel, &a, &b, r)?;
                match &v.failure {
                    None => writeln!(out, "{rel} ({r}): holds")?,
                    Some(f) => writeln!(out, "{rel} ({r}): fails, {f}")?,
                }
                verdicts.push(v);
            }
            let holds = verdicts[0].holds;
            if verdicts.iter().any(|v| v.holds != holds) {
                let in_domain = star_order_core::orders::has_class(&a, rel.existence_class());
                if in_domain {
                    return Err(Failure::Invariant(format!(
                        "routes disagree on {rel}\na = {a}\nb = {b}"
                    )));
                }
                writeln!(
                    out,
                    "note: a is outside the existence set of {rel}; routes may differ there"
                )?;
            }
            if holds && (want_witness || path.is_some()) {
                let w = witness(rel, &a, &b)?;
                let text = pretty(&WitnessJson::new(rel, &w, &a, &b));
                if let Some(p) = path {
                    write_out(&p, &text)?;
                }
                if want_witness {
                    writeln!(out, "{text}")?;
                }
            }
            Ok(if holds { Done::Ok } else { Done::Negative })
        }
        Command::Witness { rel, a, b } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            let v = decide(rel, &a, &b, Route::Characterization)?;
            if let Some(f) = v.failure {
                writeln!(out, "none ({f})")?;
                return Ok(Done::Negative);
            }
            let w = witness(rel, &a, &b)?;
            writeln!(out, "{}", pretty(&WitnessJson::new(rel, &w, &a, &b)))?;
            Ok(Done::Ok)
        }
        Command::Decompose { a, b, h, side } => {
            let (a, b, h) = (read_matrix(&a)?, read_matrix(&b)?, read_matrix(&h)?);
            let (side, rel) = match side {
                SideArg::Left => (Side::Left, OrderRelation::LeftStar),
                SideArg::Right => (Side::Right, OrderRelation::RightStar),
            };
            if a.shape() == b.shape() {
                let v = decide(rel, &a, &b, Route::Characterization)?;
                if let Some(f) = v.failure {
                    writeln!(out, "none ({rel} fails: {f})")?;
                    return Ok(Done::Negative);
                }
            }
            let d = simultaneous_decomposition(&a, &b, &h, side)?;
            writeln!(out, "{}", pretty(&DecompositionJson::new(&d, &a, &b)))?;
            Ok(Done::Ok)
        }
        Command::Inclusion {
            a,
            b,
            mode,
            dual,
            samples,
            seed,
        } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            let mode = match mode {
                ModeArg::Randomized => InclusionMode::Randomized { samples, seed },
                ModeArg::Critical => InclusionMode::Critical,
                ModeArg::Theorem => InclusionMode::Theorem,
                ModeArg::Exhaustive => InclusionMode::Exhaustive {
                    cap: configured_cap(),
                },
            };
            let v = if dual {
                inclusion_14(&a, &b, mode)?
            } else {
                inclusion_13(&a, &b, mode)?
            };
            writeln!(out, "{}", pretty(&InclusionJson::from(&v)))?;
            Ok(if v.included { Done::Ok } else { Done::Negative })
        }
        Command::Hasse {
            p,
            n,
            rel,
            out: path,
            csv,
        } => {
            let u = FiniteRingUniverse::new(p, n)?;
            let table = u.order_table(rel);
            let report = table.axioms();
            if !report.passes() {
                let mut msg = report.to_string();
                let mut involved: Vec<usize> = report.reflexivity.into_iter().collect();
                involved.extend(report.antisymmetry.iter().flat_map(|&(x, y)| [x, y]));
                involved.extend(report.transitivity.iter().flat_map(|&(x, y, z)| [x, y, z]));
                for i in involved {
                    msg.push_str(&format!("\n  {i} = {}", u.element(i)));
                }
                return Err(Failure::Invariant(msg));
            }
            let dot = u.hasse(rel)?;
            if let Some(c) = csv {
                write_out(&c, &table.csv())?;
            }
            match path {
                Some(p) => write_out(&p, &dot)?,
                None => write!(out, "{dot}")?,
            }
            Ok(Done::Ok)
        }
        Command::Verify {
            seed,
            trials,
            max_dim,
            rings,
            suites,
            out: path,
        } => {
            let defaults = VerifyConfig::default();
            let config = VerifyConfig {
                seed,
                trials,
                max_dim,
                rings: rings.unwrap_or(defaults.rings),
                suites: suites.unwrap_or(defaults.suites),
            };
            let transcript = verify::run(&config)?;
            let text = verify::render(&transcript);
            if let Some(p) = path {
                write_out(&p, &text)?;
            }
            write!(out, "{text}")?;
            if transcript.all_pass() {
                Ok(Done::Ok)
            } else {
                Err(Failure::Invariant(
                    "verification found counterexamples (see transcript)".into(),
                ))
            }
        }
    }
}
