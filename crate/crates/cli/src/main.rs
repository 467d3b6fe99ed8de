mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use choreo::constraints::{enumerate_admissible, validate_omega};
use choreo::io::{self, TrajectoryFile};
use choreo::optimizer::{self, SolveResult, SolveStatus, SolverConfig};
use choreo::symmetry::SymmetrySpec;
use choreo::verify::{certify, Thresholds};
use choreo::{ChoreoError, Exec, Omega};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::{json, Value};

use svg::Projection;

const FLAG_ERROR: u8 = 2;
const INFEASIBLE: u8 = 3;
const VERIFICATION_FAILED: u8 = 4;

/// Solver for symmetric double choreographies of 2n unit masses.
///
/// Log verbosity is read from CHOREO_LOG (error, warn, info, debug, trace).
#[derive(Parser, Debug)]
#[command(name = "choreo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimise the action for one sign word and certify the result.
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
        /// Sign word of z_0 at t = i/2, e.g. "+,-,+" or "+-+".
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
        /// Trajectory file to write; a CSV with the same stem is written next to it.
        #[arg(long, default_value = "run.traj")]
        out: PathBuf,
    },
    /// Minimise every admissible word for n and write a summary table.
    Sweep {
        #[command(flatten)]
        solver: SolverArgs,
        /// Keep only words starting with '+' (the others are mirror images).
        #[arg(long)]
        modulo_flip: bool,
        /// Concurrent solver jobs.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
        /// Output directory.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Re-certify a trajectory file.
    Verify {
        file: PathBuf,
    },
    /// Render a trajectory file as SVG.
    Plot {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Projection::Xy)]
        proj: Projection,
        /// Image path; defaults to the trajectory path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Half the number of bodies.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Arc intervals M on [0, n/4]; rounded up so that n divides 2M.
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u64).range(8..))]
    nodes: u64,
    /// Refine to this many full-loop samples (4M) after the first solve.
    #[arg(long)]
    samples: Option<usize>,
    /// Gradient tolerance (inf-norm over free coordinates).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Seed of the initial-guess perturbation.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Failure::flags(format!("--tol must be positive, got {}", self.tol)));
        }
        if let Some(s) = self.samples {
            if s < 4 * self.nodes as usize {
                return Err(Failure::flags(format!("--samples {s} is below 4 x --nodes = {}", 4 * self.nodes)));
            }
        }
        Ok(SolverConfig {
            intervals: self.nodes as usize,
            grad_tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
            exec: Exec::Serial,
            ..SolverConfig::default()
        })
    }
}

/// Error carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn flags(msg: String) -> Self {
        Self { code: FLAG_ERROR, error: anyhow::anyhow!(msg) }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<ChoreoError>() {
            Some(ChoreoError::InfeasibleOmega { .. }) => INFEASIBLE,
            Some(ChoreoError::OmegaLength { .. } | ChoreoError::OmegaAlphabet(_)) => FLAG_ERROR,
            _ => 1,
        };
        Self { code, error }
    }
}

impl From<ChoreoError> for Failure {
    fn from(e: ChoreoError) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHOREO_LOG", "warn")).init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Solve { solver, omega, out } => solve(&solver, &omega, &out),
        Command::Sweep { solver, modulo_flip, jobs, out } => sweep(&solver, modulo_flip, jobs as usize, &out),
        Command::Verify { file } => verify(&file),
        Command::Plot { file, proj, out } => plot(&file, proj, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn provenance(command: &str, config: &SolverConfig, samples: Option<usize>) -> BTreeMap<String, Value> {
    let mut map = BTreeMap::new();
    map.insert("command".into(), json!(command));
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if let Ok(Value::Object(fields)) = serde_json::to_value(config) {
        map.extend(fields.into_iter().map(|(k, v)| (format!("solver.{k}"), v)));
    }
    if let Ok(Value::Object(fields)) = serde_json::to_value(Thresholds::default()) {
        map.extend(fields.into_iter().map(|(k, v)| (format!("threshold.{k}"), v)));
    }
    map.insert("samples".into(), json!(samples));
    map
}

/// Runs the solver, refining when more samples were requested.
fn run_solver(omega: &Omega, config: &SolverConfig, samples: Option<usize>) -> anyhow::Result<SolveResult> {
    let mut r = optimizer::minimize(omega, config)?;
    if let Some(s) = samples {
        let m = SymmetrySpec::new(omega.n)?.compatible_intervals(s.div_ceil(4));
        if m > r.arc.intervals() {
            r = optimizer::refine(&r, m)?;
        }
    }
    Ok(r)
}

/// Writes trajectory and CSV; returns whether the certificate passed.
fn write_result(r: &SolveResult, path: &Path, provenance: BTreeMap<String, Value>) -> anyhow::Result<bool> {
    let cert = certify(&r.full_loop, &r.omega, &Thresholds::default())?;
    let mut file = TrajectoryFile::new(&r.omega, &r.full_loop);
    file.provenance = provenance;
    file.provenance.insert("status".into(), serde_json::to_value(r.status)?);
    file.provenance.insert("iterations".into(), json!(r.iterations));
    // continuum defect of the discrete solution, shrinks like h²
    file.provenance.insert("el_continuum_defect".into(), json!(choreo::action::el_residual_spectral(&r.full_loop)?));
    file.provenance.insert("escapes".into(), serde_json::to_value(&r.escapes)?);
    file.report = Some(r.report.clone());
    file.certificate = Some(cert.clone());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    file.save(path).with_context(|| format!("writing {}", path.display()))?;
    io::save_csv(&r.full_loop, &path.with_extension("csv"))?;
    Ok(cert.passed && r.status == SolveStatus::Converged)
}

fn parse_omega(n: usize, text: &str) -> Result<Omega, Failure> {
    let omega = Omega::parse(n, text).map_err(|e| Failure::flags(format!("--omega: {e}")))?;
    let v = validate_omega(&omega);
    if !v.admissible {
        return Err(ChoreoError::InfeasibleOmega { n, reason: v.reason.unwrap_or_default() }.into());
    }
    Ok(omega)
}

fn solve(args: &SolverArgs, omega: &str, out: &Path) -> Result<(), Failure> {
    let config = args.config()?;
    let omega = parse_omega(args.n as usize, omega)?;
    let r = run_solver(&omega, &config, args.samples)?;
    let ok = write_result(&r, out, provenance("solve", &config, args.samples))?;
    let file = TrajectoryFile::load(out).map_err(anyhow::Error::from)?;
    println!(
        "n = {} omega = ({}) {:?} after {} iterations: action {:.12}, |grad| {:.2e}, min distance {:.4}",
        omega.n, omega, r.status, r.iterations, r.report.action, r.report.gradient_inf_norm, r.report.min_distance
    );
    if let Some(c) = &file.certificate {
        println!("{c}");
    }
    println!("wrote {} and {}", out.display(), out.with_extension("csv").display());
    if ok {
        Ok(())
    } else {
        Err(Failure { code: VERIFICATION_FAILED, error: anyhow::anyhow!("solution is not converged or not certified") })
    }
}

fn sweep(args: &SolverArgs, modulo_flip: bool, jobs: usize, out: &Path) -> Result<(), Failure> {
    // words run concurrently on a pool of `jobs` threads
    let config = SolverConfig { exec: Exec::Parallel, ..args.config()? };
    let n = args.n as usize;
    if enumerate_admissible(n, modulo_flip)?.is_empty() {
        let probe = Omega::new(n, (0..Omega::len_for(n)).map(|i| if i == 0 { 1 } else { -1 }).collect())?;
        let reason = validate_omega(&probe).reason.unwrap_or_default();
        return Err(ChoreoError::InfeasibleOmega { n, reason }.into());
    }
    let results = optimizer::sweep(n, &config, modulo_flip, jobs)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut table = String::from("omega\taction\tmin_distance\tstatus\tcertified\n");
    let mut all_ok = true;
    for (word, r) in &results {
        let r = match r {
            Ok(r) => r.clone(),
            Err(e) => {
                all_ok = false;
                let _ = writeln!(table, "{word}\tNaN\tNaN\terror: {e}\tfalse");
                continue;
            }
        };
        let r = match args.samples {
            Some(s) => {
                let m = SymmetrySpec::new(n)?.compatible_intervals(s.div_ceil(4));
                if m > r.arc.intervals() { optimizer::refine(&r, m).map_err(anyhow::Error::from)? } else { r }
            }
            None => r,
        };
        let path = out.join(format!("omega_{word}.traj"));
        let ok = write_result(&r, &path, provenance("sweep", &config, args.samples))?;
        all_ok &= ok;
        info!("{word}: {:?}", r.status);
        let status = serde_json::to_value(r.status).map_err(anyhow::Error::from)?.as_str().unwrap_or_default().to_string();
        let _ = writeln!(table, "{word}\t{:.12}\t{:.6}\t{status}\t{ok}", r.report.action, r.report.min_distance);
    }
    std::fs::write(out.join("summary.tsv"), &table).context("writing summary")?;
    print!("{table}");
    if all_ok {
        Ok(())
    } else {
        Err(Failure { code: VERIFICATION_FAILED, error: anyhow::anyhow!("some words did not converge or certify") })
    }
}

fn verify(path: &Path) -> Result<(), Failure> {
    let file = TrajectoryFile::load(path).with_context(|| format!("reading {}", path.display()))?;
    let omega = file.omega()?;
    let lp = file.full_loop()?;
    let cert = certify(&lp, &omega, &Thresholds::default())?;
    println!("{cert}");
    if let Some(embedded) = &file.certificate {
        if embedded != &cert {
            return Err(Failure {
                code: VERIFICATION_FAILED,
                error: anyhow::anyhow!("certificate differs from the one embedded in {}", path.display()),
            });
        }
    }
    if cert.passed {
        Ok(())
    } else {
        Err(Failure { code: VERIFICATION_FAILED, error: anyhow::anyhow!("failed checks: {:?}", cert.failed()) })
    }
}

fn plot(path: &Path, proj: Projection, out: Option<PathBuf>) -> Result<(), Failure> {
    let file = TrajectoryFile::load(path).with_context(|| format!("reading {}", path.display()))?;
    let lp = file.full_loop()?;
    let title = format!("n = {}, omega = ({}), {:?} projection", file.n, file.omega, proj);
    let out = out.unwrap_or_else(|| path.with_extension("svg"));
    std::fs::write(&out, svg::render(&lp, proj, &title)).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}
