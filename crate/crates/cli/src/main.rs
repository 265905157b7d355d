use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use maxpersist::format::{parse_instance, parse_labeling, parse_mapping, write_instance, write_mapping};
use maxpersist::harness::{
    bench, brute_force_minimize, generate, min_energy, oracle_certify, write_bench_csv, BenchConfig, Family, GenSpec,
};
use maxpersist::lp::{build_schlesinger_lp, relative_interior_optimum, LinearProgram};
use maxpersist::mapping::{default_eps, verification_lp, verify_improving, verify_improving_bruteforce};
use maxpersist::methods::{resolve_y, reverify, run_method, WindowConfig};
use maxpersist::persistency::l1_program;
use maxpersist::window::write_trace_csv;
use maxpersist::{Backend, EnergyInstance, Error, Method, MethodConfig, Mode, Solver, Tolerances, YChoice};

/// Certified partial optimality for pairwise energies.
#[derive(Parser, Debug)]
#[command(name = "maxpersist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random grid instance.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        /// Output file; standard output if absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve the LP relaxation and, within the cap, the exact problem.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        /// Labelings to enumerate at most; larger instances use dynamic programming.
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
        /// Write the relaxation in LP text format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Run a persistency method and write its certificate.
    Persist {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Certificate JSON output; standard output if absent.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Mapping output in `map s i p` lines.
        #[arg(long)]
        mapping_out: Option<PathBuf>,
        /// Remaining labels per node after each window scan, as CSV.
        #[arg(long)]
        window_trace: Option<PathBuf>,
        /// Write the method's main program in LP text format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Also check the certificate against exact minimization.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
    /// Run methods over a range of seeds and write a CSV table.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Number of consecutive seeds, starting at `--seed`.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Comma-separated method tags.
        #[arg(long, default_value = "dee1,l1,dee2+l1", value_delimiter = ',', value_parser = parse_method)]
        methods: Vec<Method>,
        /// Keep only instances with an integrality gap above 0.5.
        #[arg(long)]
        gap_filter: bool,
        /// Fill the wall_ms column.
        #[arg(long)]
        timing: bool,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check that a mapping is improving.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        /// Mapping file in `map s i p` lines.
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Weak)]
        mode: ModeArg,
        /// Strict margin; defaults to 1e-4 times the largest cost magnitude.
        #[arg(long)]
        eps: Option<f64>,
        /// Also enumerate labelings when there are at most this many.
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid shape `HxW`.
    #[arg(long, default_value = "6x6", value_parser = parse_shape)]
    grid: (usize, usize),
    #[arg(long, default_value_t = 3)]
    labels: usize,
    #[arg(long, default_value_t = 4, value_parser = parse_conn)]
    conn: u8,
    #[arg(long, value_enum, default_value_t = FamilyArg::Potts)]
    family: FamilyArg,
    /// One Potts strength per edge instead of per edge and label.
    #[arg(long)]
    potts_per_edge: bool,
}

impl GenArgs {
    fn spec(&self) -> GenSpec {
        GenSpec {
            seed: self.seed,
            height: self.grid.0,
            width: self.grid.1,
            labels: self.labels,
            connectivity: self.conn,
            family: match self.family {
                FamilyArg::Potts => Family::Potts,
                FamilyArg::Full => Family::Full,
            },
            potts_per_edge: self.potts_per_edge,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Instance file; a generated instance is used if absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

impl InputArgs {
    fn load(&self) -> Result<(EnergyInstance, Option<(usize, usize)>), CliError> {
        match &self.instance {
            Some(path) => {
                let inst = parse_instance(&read(path)?)?;
                let (h, w) = self.gen.grid;
                Ok((inst.clone(), (h * w == inst.num_nodes()).then_some((h, w))))
            }
            None => Ok((generate(&self.gen.spec())?, Some(self.gen.grid))),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct MethodArgs {
    #[arg(long, value_parser = parse_method, default_value = "l1")]
    method: Method,
    /// Strict margin for eps-l1 and a2ou.
    #[arg(long)]
    eps: Option<f64>,
    /// Test labeling: `from-lp`, `uniform:<k>` or `file:<path>`.
    #[arg(long, default_value = "from-lp")]
    y: String,
    /// Window shape `SxS`.
    #[arg(long, default_value = "8x8", value_parser = parse_shape)]
    window: (usize, usize),
    #[arg(long, default_value_t = 4)]
    stride: usize,
    #[arg(long, default_value_t = 1)]
    scans: usize,
    /// Run DEE1 before each window scan.
    #[arg(long)]
    dee_first: bool,
    /// Solve windows with disjoint neighborhoods concurrently.
    #[arg(long)]
    parallel: bool,
    /// Largest window program, in variables and in rows.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// DEE1 eliminates only on strict inequality.
    #[arg(long)]
    dee_strict: bool,
    /// Let DEE2 pair exclusions restrict later label tests; the result may be refused.
    #[arg(long)]
    pair_feedback: bool,
}

impl MethodArgs {
    fn config(&self, grid: Option<(usize, usize)>) -> Result<MethodConfig, CliError> {
        let y = if self.y == "from-lp" {
            YChoice::FromLp
        } else if let Some(k) = self.y.strip_prefix("uniform:") {
            YChoice::Uniform(k.parse().map_err(|_| CliError::Usage(format!("bad label in --y {:?}", self.y)))?)
        } else if let Some(path) = self.y.strip_prefix("file:") {
            YChoice::Given(parse_labeling(&read(Path::new(path))?)?)
        } else {
            return Err(CliError::Usage(format!("--y must be from-lp, uniform:<k> or file:<path>, got {:?}", self.y)));
        };
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(CliError::Usage("--eps must be positive".into()));
            }
        }
        Ok(MethodConfig {
            y,
            eps: self.eps,
            window: WindowConfig {
                size: self.window,
                stride: self.stride,
                dee_first: self.dee_first,
                scans: self.scans,
                budget: self.budget,
                parallel: self.parallel,
            },
            grid,
            dee1_mode: if self.dee_strict { Mode::Strict } else { Mode::Weak },
            pair_feedback: self.pair_feedback,
        })
    }
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Auto)]
    backend: BackendArg,
    /// With `auto`, programs with at most this many (rows+1)*(columns+1) use the exact simplex.
    #[arg(long, global = true, default_value_t = 400)]
    rational_limit: usize,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_feas: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_lp: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_gap: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_supp: f64,
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_int: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_verify: f64,
}

impl SolverArgs {
    fn solver(&self) -> Solver {
        Solver {
            backend: match self.backend {
                BackendArg::Auto => Backend::Auto { rational_limit: self.rational_limit },
                BackendArg::Rational => Backend::Rational,
                BackendArg::Highs => Backend::Highs,
            },
            tol: Tolerances {
                feas: self.tol_feas,
                lp: self.tol_lp,
                gap: self.tol_gap,
                supp: self.tol_supp,
                int: self.tol_int,
                verify: self.tol_verify,
            },
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BackendArg {
    Auto,
    Rational,
    Highs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Potts,
    Full,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Weak,
    Strict,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_tag(s).ok_or_else(|| {
        let tags: Vec<&str> = Method::ALL.iter().map(|m| m.tag()).collect();
        format!("unknown method {s:?}; expected one of {}", tags.join(", "))
    })
}

fn parse_conn(s: &str) -> Result<u8, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("connectivity must be 4 or 8, got {s:?}")),
    }
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let a: usize = a.parse().map_err(|_| format!("bad size {a:?}"))?;
    let b: usize = b.parse().map_err(|_| format!("bad size {b:?}"))?;
    if a == 0 || b == 0 {
        return Err("sizes must be positive".into());
    }
    Ok((a, b))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    /// A check failed; the message explains which.
    Certification(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Certification(_) => 3,
            CliError::Lib(e) => match e {
                Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) => 1,
                Error::Solver(_) | Error::NonIntegral { .. } | Error::CapExceeded { .. } => 2,
                Error::Refused(_) | Error::Verification(_) => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Certification(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dump(path: &Path, lp: &LinearProgram) -> Result<(), CliError> {
    let mut buf = Vec::new();
    lp.write_lp_format(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct SolveSummary {
    lp_value: f64,
    minimum: Option<f64>,
    gap: Option<f64>,
    /// Labels in the support of a maximum-support optimum.
    support: Vec<Vec<usize>>,
    argmin: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize)]
struct VerifySummary {
    value: f64,
    improving: bool,
    mode: Mode,
    strict_margin: Option<f64>,
    bruteforce: Option<bool>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let solver = cli.solver.solver();
    match cli.command {
        Command::Gen { gen, out } => {
            let inst = generate(&gen.spec())?;
            emit(out.as_deref(), &write_instance(&inst))
        }
        Command::Solve { input, cap, dump_lp } => {
            let (inst, _) = input.load()?;
            let local = build_schlesinger_lp(&inst);
            if let Some(path) = dump_lp {
                dump(&path, &local.lp)?;
            }
            let facet = relative_interior_optimum(&local, &solver)?;
            let minimum = match min_energy(&inst, cap) {
                Ok(v) => Some(v),
                Err(Error::CapExceeded { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let argmin = (inst.state_count() <= cap as f64)
                .then(|| brute_force_minimize(&inst, cap))
                .transpose()?
                .map(|bf| bf.argmin.into_iter().map(|x| x.0).collect());
            let summary = SolveSummary {
                lp_value: facet.value,
                minimum,
                gap: minimum.map(|m| m - facet.value),
                support: (0..inst.num_nodes()).map(|s| facet.support_labels(s)).collect(),
                argmin,
            };
            emit(None, &to_json(&summary))
        }
        Command::Persist { input, method, cert, mapping_out, window_trace, dump_lp, oracle, cap } => {
            let (inst, grid) = input.load()?;
            let cfg = method.config(grid)?;
            let m = method.method;
            let run = run_method(&inst, m, &cfg, &solver)?;
            let c = &run.certificate;
            let check = reverify(&inst, c, &solver)?;
            if !check.improving {
                return Err(CliError::Certification(format!(
                    "{m} certificate failed re-verification: {:e}",
                    check.value
                )));
            }
            if oracle && !oracle_certify(&inst, c, cap)? {
                return Err(CliError::Certification(format!("{m} certificate contradicts exact minimization")));
            }
            if let Some(path) = dump_lp {
                let lp = match m {
                    Method::L1 | Method::EpsL1 | Method::AllToOneUnknown => {
                        let y = match &c.y {
                            Some(y) => maxpersist::Labeling(y.clone()),
                            None => resolve_y(&inst, &cfg.y, &solver)?,
                        };
                        let eps = match c.mode {
                            Mode::Weak => None,
                            Mode::Strict => Some(cfg.eps.unwrap_or_else(|| default_eps(&inst))),
                        };
                        l1_program(&inst, &y, eps, None)?.lp
                    }
                    _ => verification_lp(&inst, &c.mapping),
                };
                dump(&path, &lp)?;
            }
            if let Some(path) = mapping_out {
                fs::write(path, write_mapping(&c.mapping))?;
            }
            if let Some(path) = window_trace {
                let mut buf = Vec::new();
                write_trace_csv(&run.trace, &mut buf)?;
                fs::write(path, buf)?;
            }
            emit(cert.as_deref(), &to_json(c))?;
            eprintln!(
                "method={} mode={} eliminated={} completeness={:.4} verification={:e}",
                c.method,
                c.mode,
                c.num_eliminated(),
                c.completeness,
                check.value
            );
            Ok(())
        }
        Command::Bench { gen, method, seeds, methods, gap_filter, timing, cap, out } => {
            let template = gen.spec();
            template.validate()?;
            let cfg = BenchConfig {
                seeds: (gen.seed..gen.seed + seeds).collect(),
                methods,
                method_config: method.config(Some(gen.grid))?,
                gap_filter,
                cap,
                timing,
                template,
            };
            let rows = bench(&cfg, &solver)?;
            let mut buf = Vec::new();
            write_bench_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))?;
            if let Some(r) = rows.iter().find(|r| !r.certified) {
                return Err(CliError::Certification(format!("seed {} method {} was not certified", r.seed, r.method)));
            }
            Ok(())
        }
        Command::Verify { input, mapping, mode, eps, cap, dump_lp } => {
            let (inst, _) = input.load()?;
            let p = parse_mapping(&read(&mapping)?, &inst)?;
            if let Some(path) = dump_lp {
                dump(&path, &verification_lp(&inst, &p))?;
            }
            let mode = match mode {
                ModeArg::Weak => Mode::Weak,
                ModeArg::Strict => Mode::Strict,
            };
            let report = verify_improving(&inst, &p, mode, eps, &solver)?;
            let bruteforce = cap.map(|cap| verify_improving_bruteforce(&inst, &p, mode, cap)).transpose()?;
            emit(
                None,
                &to_json(&VerifySummary {
                    value: report.value,
                    improving: report.improving,
                    mode,
                    strict_margin: report.strict_margin,
                    bruteforce,
                }),
            )?;
            if report.improving {
                Ok(())
            } else {
                Err(CliError::Certification(format!("mapping is not {mode} improving: value {:e}", report.value)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
