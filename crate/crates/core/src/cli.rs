//! Command line front end.
//!
//! Exit codes: 0 on success or a passing verification, 1 when verification
//! fails or the parameters are invalid, 2 on a usage error. Errors go to
//! standard error prefixed with `error: `.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::exec::Exec;
use crate::extrinsic::{sample_patch, PatchOptions, PatchSpec};
use crate::intrinsic::{check_admissible, integrate_intrinsic, InitialTriple, IntrinsicOptions};
use crate::profile::{find_window, integrate_profile, ModelParams, ProfileOptions};
use crate::scan::{scan_triples, scan_windows, Axis};
use crate::verify::{verify_patch, Level, VerifyOptions};
use crate::{io, Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "biconservative",
    version,
    about = "Biconservative surfaces with parallel normalized mean curvature in S^4"
)]
struct Cli {
    /// key=value file supplying defaults for flags; keys are long flag names
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the validity inequalities for an initial triple
    Admissible(TripleArgs),
    /// Integrate the curvature of the level curves of K and write CSV
    Intrinsic(IntrinsicArgs),
    /// Integrate the mean curvature profile f(u) and write CSV
    Profile(ProfileArgs),
    /// Sample a surface patch and write CSV plus a .meta sidecar
    Surface(SurfaceArgs),
    /// Verify a patch CSV and print the report
    Verify(VerifyArgs),
    /// Scan initial triples over a grid
    ScanTriples(ScanTriplesArgs),
    /// Scan the f-window over a (c, C) grid
    ScanWindows(ScanWindowsArgs),
    /// Export a patch as an OBJ mesh
    ExportObj(ExportObjArgs),
}

#[derive(Args, Debug)]
struct TripleArgs {
    /// kappa at u = 0
    #[arg(long, allow_negative_numbers = true)]
    kappa0: f64,
    /// kappa' at u = 0
    #[arg(long, allow_negative_numbers = true)]
    dkappa0: f64,
    /// kappa'' at u = 0
    #[arg(long, allow_negative_numbers = true)]
    ddkappa0: f64,
}

#[derive(Args, Debug)]
struct IntrinsicArgs {
    #[command(flatten)]
    triple: TripleArgs,
    /// Requested end of the run; negative integrates backward
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    u_max: f64,
    /// Smallest validity margin before the run stops
    #[arg(long, default_value_t = IntrinsicOptions::default().eps_valid)]
    eps_valid: f64,
    /// Number of evenly spaced output rows
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Constant c > 0
    #[arg(long = "c", conflicts_with = "c2")]
    c: Option<f64>,
    /// Constant C > 0
    #[arg(long = "C", conflicts_with = "big_c2")]
    big_c: Option<f64>,
    /// c squared, instead of --c
    #[arg(long)]
    c2: Option<f64>,
    /// C squared, instead of --C
    #[arg(long = "C2")]
    big_c2: Option<f64>,
    /// Use c^2 = sqrt(2), C^2 = (28/9) 2^(7/4) with f0 = 2^(-1/2)
    #[arg(long, conflicts_with_all = ["c", "big_c", "c2", "big_c2"])]
    reference: bool,
    /// Starting value of f; defaults to 2^(-1/2) with --reference and to
    /// the middle of the f-window otherwise
    #[arg(long)]
    f0: Option<f64>,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Requested end of the run
    #[arg(long, default_value_t = 0.2)]
    u_max: f64,
    /// Number of evenly spaced output rows
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Length of the patch in u
    #[arg(long, default_value_t = 0.05)]
    u_span: f64,
    /// Length of the patch in t, at most 2 pi
    #[arg(long, default_value_t = 0.05)]
    t_span: f64,
    /// Rows along u
    #[arg(long, default_value_t = 64)]
    n_u: usize,
    /// Columns along t
    #[arg(long, default_value_t = 64)]
    n_t: usize,
    /// Re-orthonormalize the Frenet frame after every u-interval of this length
    #[arg(long, value_name = "INTERVAL")]
    renormalize: Option<f64>,
    /// Patch CSV; metadata goes to <out>.meta
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Patch CSV written by `surface`, with its .meta sidecar
    #[arg(long)]
    patch: PathBuf,
    #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
    level: LevelArg,
    /// Finite-difference step in grid nodes
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Report file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate on one thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct ScanTriplesArgs {
    /// Axis as min:max:count or a comma list
    #[arg(long, allow_hyphen_values = true)]
    kappa0: String,
    #[arg(long, allow_hyphen_values = true)]
    dkappa0: String,
    #[arg(long, allow_hyphen_values = true)]
    ddkappa0: String,
    /// Cap on the detected u_max
    #[arg(long, default_value_t = crate::scan::DEFAULT_U_PROBE)]
    u_probe: f64,
    /// Evaluate on one thread
    #[arg(long)]
    sequential: bool,
    /// Output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanWindowsArgs {
    /// Axis for c as min:max:count or a comma list
    #[arg(long = "c")]
    c: String,
    /// Axis for C
    #[arg(long = "C")]
    big_c: String,
    /// Evaluate on one thread
    #[arg(long)]
    sequential: bool,
    /// Output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportObjArgs {
    /// Patch CSV written by `surface`, with its .meta sidecar
    #[arg(long)]
    patch: PathBuf,
    /// OBJ file
    #[arg(long)]
    out: PathBuf,
    /// Three 1-based coordinates to keep
    #[arg(long, default_value = "1,3,4")]
    proj: String,
    /// Join the last column to the first
    #[arg(long)]
    wrap_t: bool,
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

impl ParamArgs {
    fn resolve(&self) -> Result<(ModelParams, f64)> {
        let params = if self.reference {
            ModelParams::reference()
        } else {
            let c = self.c.or(self.c2.map(f64::sqrt));
            let big_c = self.big_c.or(self.big_c2.map(f64::sqrt));
            match (c, big_c) {
                (Some(c), Some(big_c)) => ModelParams::new(c, big_c)?,
                _ => return Err(Error::InvalidParams("give --c or --c2, and --C or --C2, or --reference".into())),
            }
        };
        let f0 = match self.f0 {
            Some(f0) => f0,
            None if self.reference => std::f64::consts::FRAC_1_SQRT_2,
            None => {
                let w = find_window(&params)?.ok_or_else(|| Error::InvalidParams("P has no positivity window".into()))?;
                0.5 * (w.f_lo + w.f_hi)
            }
        };
        Ok((params, f0))
    }
}

fn output(path: Option<&Path>, stdout: &mut dyn Write, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => write(stdout),
    }
}

fn triple(args: &TripleArgs) -> InitialTriple {
    InitialTriple::new(args.kappa0, args.dkappa0, args.ddkappa0)
}

/// Runs one parsed command; `Ok(false)` means a negative verdict.
fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Admissible(a) => {
            let adm = check_admissible(triple(&a));
            writeln!(stdout, "admissible={}", u8::from(adm.admissible))?;
            for (k, m) in adm.margins.as_array().iter().enumerate() {
                writeln!(stdout, "margin.{k}={}", io::num(*m))?;
            }
            writeln!(stdout, "ddkappa_lower={}", io::num(adm.ddkappa_bounds.0))?;
            writeln!(stdout, "ddkappa_upper={}", io::num(adm.ddkappa_bounds.1))?;
            Ok(adm.admissible)
        }
        Command::Intrinsic(a) => {
            let t = triple(&a.triple);
            if !check_admissible(t).admissible {
                return Err(Error::Inadmissible(format!("{t:?}")));
            }
            let opts = IntrinsicOptions {
                eps_valid: a.eps_valid,
                ..Default::default()
            };
            let sol = integrate_intrinsic(t, a.u_max, &opts)?;
            output(a.out.as_deref(), stdout, |w| io::write_intrinsic_csv(w, &sol.resample(a.samples)))?;
            Ok(true)
        }
        Command::Profile(a) => {
            let (params, f0) = a.params.resolve()?;
            let sol = integrate_profile(&params, f0, a.u_max, &ProfileOptions::default())?;
            output(a.out.as_deref(), stdout, |w| io::write_profile_csv(w, &sol.resample(a.samples)))?;
            Ok(true)
        }
        Command::Surface(a) => {
            let (params, f0) = a.params.resolve()?;
            let spec = PatchSpec::new(a.u_span, a.n_u, a.n_t).with_t_span(a.t_span);
            let mut opts = PatchOptions::default();
            opts.frenet.renormalize = a.renormalize;
            let patch = sample_patch(&params, f0, &spec, &opts)?;
            io::save_patch(&a.out, &patch)?;
            let d = patch.diagnostics;
            writeln!(stdout, "max_gram_drift={}", io::num(d.max_gram_drift))?;
            writeln!(stdout, "max_constraint={}", io::num(d.max_constraint))?;
            writeln!(stdout, "max_unit_residual={}", io::num(d.max_unit_residual))?;
            writeln!(stdout, "max_guu_error={}", io::num(d.max_guu_error))?;
            writeln!(stdout, "max_gut={}", io::num(d.max_gut))?;
            writeln!(stdout, "max_gtt_error={}", io::num(d.max_gtt_error))?;
            Ok(true)
        }
        Command::Verify(a) => {
            let patch = io::load_patch(&a.patch)?;
            let level = match a.level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let opts = VerifyOptions {
                stride: a.stride,
                exec: exec(a.sequential),
                ..VerifyOptions::new(level)
            };
            let report = verify_patch(&patch, &opts)?;
            output(a.out.as_deref(), stdout, |w| Ok(write!(w, "{report}")?))?;
            Ok(report.pass())
        }
        Command::ScanTriples(a) => {
            let cells = scan_triples(
                &a.kappa0.parse()?,
                &a.dkappa0.parse()?,
                &a.ddkappa0.parse()?,
                a.u_probe,
                exec(a.sequential),
            );
            output(a.out.as_deref(), stdout, |w| io::write_triples_csv(w, &cells))?;
            Ok(true)
        }
        Command::ScanWindows(a) => {
            let c: Axis = a.c.parse()?;
            let cells = scan_windows(&c, &a.big_c.parse()?, exec(a.sequential));
            output(a.out.as_deref(), stdout, |w| io::write_windows_csv(w, &cells))?;
            Ok(true)
        }
        Command::ExportObj(a) => {
            let proj = io::parse_projection(&a.proj)?;
            let patch = io::load_patch(&a.patch)?;
            output(Some(&a.out), stdout, |w| io::write_obj(w, &patch, proj, a.wrap_t))?;
            Ok(true)
        }
    }
}

/// Locates `--config` and the subcommand name without a full parse.
fn prescan(argv: &[String]) -> (Option<PathBuf>, Option<String>) {
    let mut config = None;
    let mut sub = None;
    let mut k = 1;
    while k < argv.len() {
        let a = &argv[k];
        if a == "--config" {
            config = argv.get(k + 1).map(PathBuf::from);
            k += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(a.clone());
        }
        k += 1;
    }
    (config, sub)
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("config line '{line}' is not key=value")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Appends config entries for flags of `sub` that the command line does not
/// already set. Keys that `sub` does not accept are ignored.
fn merge_config(argv: &[String], sub: &str, entries: &[(String, String)]) -> Vec<String> {
    let cmd = Cli::command();
    let Some(sc) = cmd.find_subcommand(sub) else {
        return argv.to_vec();
    };
    let given: BTreeSet<&str> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split_once('=').map_or(a, |(k, _)| k))
        .collect();
    let mut out = argv.to_vec();
    for (key, value) in entries {
        let Some(arg) = sc.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            continue;
        };
        if given.contains(key.as_str()) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("--{key}={value}"));
        } else if matches!(value.as_str(), "1" | "true" | "yes") {
            out.push(format!("--{key}"));
        }
    }
    out
}

/// Parses `argv` (including the program name) and runs it.
pub fn run_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (config, sub) = prescan(argv);
    let argv = match (config, sub) {
        (Some(path), Some(sub)) => match read_config(&path) {
            Ok(entries) => merge_config(argv, &sub, &entries),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return 2;
            }
        },
        _ => argv.to_vec(),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    2
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
