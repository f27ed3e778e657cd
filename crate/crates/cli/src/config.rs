use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kicked_top::io::Format;
use kicked_top::spectral::DEFAULT_EPS_TOL;
use kicked_top::topology::CdRoute;
use kicked_top::{KickParams, SpinSpace, Timeframe};
use serde::{Deserialize, Serialize};

pub const MAX_J: u32 = 1000;

/// Parses a real number with an optional π factor: `4.25pi`, `0.5*pi`,
/// `pi`, `-pi/2`, `3π`, or a plain decimal.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || format!("malformed number '{s}'");
    let value = if let Some(pos) = t.find("pi") {
        let (head, tail) = (&t[..pos], &t[pos + 2..]);
        let coeff = match head.trim_end_matches('*').trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let div = match tail.trim() {
            "" => 1.0,
            d => d
                .strip_prefix('/')
                .and_then(|x| x.trim().parse::<f64>().ok())
                .filter(|x| *x != 0.0)
                .ok_or_else(bad)?,
        };
        coeff * PI / div
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

fn parse_frame(s: &str) -> Result<Timeframe, String> {
    s.parse::<Timeframe>().map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "kicked-top", version, about = "Floquet spectra, winding numbers and probe dynamics of a spin-1/2 double kicked top")]
pub struct Cli {
    /// Worker threads for parallel scans (0 picks the number of cores).
    #[arg(long, env = "KICKED_TOP_THREADS", default_value_t = 0, global = true)]
    pub threads: usize,

    /// Re-run a configuration stored in a JSON sidecar (or a bare config object).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Quasienergies over a κ₁ grid at fixed κ₂.
    Spectrum(SpectrumArgs),
    /// Site-resolved probability of every Floquet eigenstate.
    Density(DensityArgs),
    /// Winding-number profiles over m.
    Winding(WindingArgs),
    /// Chiral-displacement time series for selected sites.
    Cd(CdArgs),
    /// Stroboscopic evolution of a Gaussian probe.
    Probe(ProbeArgs),
    /// Inverse participation ratio of Gaussian probes over their centres.
    Ipr(IprArgs),
    /// Mean-field gap-closing sites.
    Boundaries(BoundaryArgs),
    /// Structural invariant suite; exits with status 3 on any violation.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Density(_) => "density",
            Command::Winding(_) => "winding",
            Command::Cd(_) => "cd",
            Command::Probe(_) => "probe",
            Command::Ipr(_) => "ipr",
            Command::Boundaries(_) => "boundaries",
            Command::Verify(_) => "verify",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Spectrum(a) => &a.output,
            Command::Density(a) => &a.output,
            Command::Winding(a) => &a.output,
            Command::Cd(a) => &a.output,
            Command::Probe(a) => &a.output,
            Command::Ipr(a) => &a.output,
            Command::Boundaries(a) => &a.output,
            Command::Verify(a) => &a.output,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Kicks {
    /// Spin quantum number j (integer).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=MAX_J as i64))]
    pub j: u32,
    /// First kick strength; accepts literals such as `4.25pi`.
    #[arg(long, value_parser = parse_angle)]
    pub kappa1: f64,
    /// Second kick strength.
    #[arg(long, value_parser = parse_angle, default_value = "0.5pi")]
    pub kappa2: f64,
}

impl Kicks {
    pub fn space(&self) -> SpinSpace {
        SpinSpace::new(self.j).expect("validated")
    }

    pub fn params(&self) -> KickParams {
        KickParams::new(self.kappa1, self.kappa2).expect("validated")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputArgs {
    /// Output table path; defaults to `<command>.<format>` in the working directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutFormat,
    /// Also write a generic plotting script next to the table (non-normative).
    #[arg(long)]
    #[serde(default)]
    pub emit_plot_script: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrumArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=MAX_J as i64))]
    pub j: u32,
    #[arg(long, value_parser = parse_angle, default_value = "0.5pi")]
    pub kappa2: f64,
    #[arg(long, value_parser = parse_angle, default_value = "0")]
    pub kappa1_min: f64,
    #[arg(long, value_parser = parse_angle, default_value = "5pi")]
    pub kappa1_max: f64,
    #[arg(long, default_value_t = 256)]
    pub kappa1_steps: usize,
    #[arg(long, value_parser = parse_frame, default_value = "original")]
    pub frame: Timeframe,
    /// Half-width of the ε = 0 and ε = π windows used for the census.
    #[arg(long, default_value_t = DEFAULT_EPS_TOL)]
    pub eps_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DensityArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    #[arg(long, value_parser = parse_frame, default_value = "original")]
    pub frame: Timeframe,
    #[arg(long, default_value_t = DEFAULT_EPS_TOL)]
    pub eps_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MeanField,
    Quantum,
    Cd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Auto,
    Propagation,
    Spectral,
}

impl From<Route> for CdRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::Auto => CdRoute::Auto,
            Route::Propagation => CdRoute::Propagation,
            Route::Spectral => CdRoute::Spectral,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WindingArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    /// Estimators to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mean-field,quantum,cd")]
    pub method: Vec<Method>,
    /// Initial azimuthal samples for the mean-field winding (refined as needed).
    #[arg(long, default_value_t = kicked_top::meanfield::DEFAULT_N_PHI)]
    pub n_phi: usize,
    #[arg(long, default_value_t = kicked_top::meanfield::DEFAULT_SINGULAR_TOL)]
    pub singular_tol: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_TOL)]
    pub eps_tol: f64,
    /// Periods averaged by the chiral-displacement estimator.
    #[arg(long, short = 'n', default_value_t = 20)]
    pub periods: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub route: Route,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CdArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    /// Initial sites, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    pub m: Vec<i64>,
    #[arg(long, short = 'n', default_value_t = 20)]
    pub periods: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinArg {
    Up,
    Down,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    #[arg(long, value_parser = parse_frame, default_value = "original")]
    pub frame: Timeframe,
    /// Probe centre.
    #[arg(long, allow_hyphen_values = true)]
    pub m0: i64,
    #[arg(long, default_value_t = 10.0)]
    pub delta_m: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "up")]
    pub spin: SpinArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IprArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    #[arg(long, value_parser = parse_frame, default_value = "original")]
    pub frame: Timeframe,
    #[arg(long, default_value_t = 10.0)]
    pub delta_m: f64,
    /// Lowest probe centre (defaults to −j).
    #[arg(long, allow_hyphen_values = true)]
    pub m0_min: Option<i64>,
    /// Highest probe centre (defaults to j).
    #[arg(long, allow_hyphen_values = true)]
    pub m0_max: Option<i64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub kicks: Kicks,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// The fully resolved configuration recorded in every sidecar.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_kicks(k: &Kicks) -> Result<(), String> {
    check((1..=MAX_J).contains(&k.j), || format!("--j {} outside 1..={MAX_J}", k.j))?;
    KickParams::new(k.kappa1, k.kappa2)
        .map(|_| ())
        .map_err(|e| format!("--kappa1 {} --kappa2 {}: {e}", k.kappa1, k.kappa2))
}

fn check_eps_tol(t: f64) -> Result<(), String> {
    check(t > 0.0 && t < PI / 4.0, || format!("--eps-tol {t} must lie in (0, pi/4)"))
}

fn check_site(k: &Kicks, flag: &str, m: i64) -> Result<(), String> {
    let j = k.j as i64;
    check((-j..=j).contains(&m), || format!("{flag} {m} outside [-{j}, {j}]"))
}

impl RunConfig {
    /// Checks every precondition the library would reject, before any
    /// computation starts.
    pub fn validate(&self) -> Result<(), String> {
        match &self.command {
            Command::Spectrum(a) => {
                check((1..=MAX_J).contains(&a.j), || format!("--j {} outside 1..={MAX_J}", a.j))?;
                check(a.kappa2 >= 0.0, || format!("--kappa2 {} must be non-negative", a.kappa2))?;
                check(a.kappa1_min >= 0.0 && a.kappa1_min <= a.kappa1_max, || {
                    format!("--kappa1-min {} / --kappa1-max {} must satisfy 0 <= min <= max", a.kappa1_min, a.kappa1_max)
                })?;
                check(a.kappa1_steps >= 1, || "--kappa1-steps must be at least 1".into())?;
                check_eps_tol(a.eps_tol)
            }
            Command::Density(a) => {
                check_kicks(&a.kicks)?;
                check_eps_tol(a.eps_tol)
            }
            Command::Winding(a) => {
                check_kicks(&a.kicks)?;
                check_eps_tol(a.eps_tol)?;
                check(!a.method.is_empty(), || "--method needs at least one estimator".into())?;
                check(a.n_phi >= 8, || format!("--n-phi {} must be at least 8", a.n_phi))?;
                check(a.singular_tol > 0.0, || format!("--singular-tol {} must be positive", a.singular_tol))?;
                check(a.periods >= 1, || "--periods must be at least 1".into())
            }
            Command::Cd(a) => {
                check_kicks(&a.kicks)?;
                check(!a.m.is_empty(), || "--m needs at least one site".into())?;
                for &m in &a.m {
                    check_site(&a.kicks, "--m", m)?;
                }
                check(a.periods >= 1, || "--periods must be at least 1".into())
            }
            Command::Probe(a) => {
                check_kicks(&a.kicks)?;
                check_site(&a.kicks, "--m0", a.m0)?;
                check(a.delta_m > 0.0 && a.delta_m.is_finite(), || format!("--delta-m {} must be positive", a.delta_m))
            }
            Command::Ipr(a) => {
                check_kicks(&a.kicks)?;
                check(a.delta_m > 0.0 && a.delta_m.is_finite(), || format!("--delta-m {} must be positive", a.delta_m))?;
                let (lo, hi) = self.ipr_range().expect("ipr command");
                check_site(&a.kicks, "--m0-min", lo)?;
                check_site(&a.kicks, "--m0-max", hi)?;
                check(lo <= hi, || format!("--m0-min {lo} exceeds --m0-max {hi}"))
            }
            Command::Boundaries(a) => check_kicks(&a.kicks),
            Command::Verify(a) => check_kicks(&a.kicks),
        }
    }

    pub fn ipr_range(&self) -> Option<(i64, i64)> {
        match &self.command {
            Command::Ipr(a) => {
                let j = a.kicks.j as i64;
                Some((a.m0_min.unwrap_or(-j), a.m0_max.unwrap_or(j)))
            }
            _ => None,
        }
    }

    pub fn output_path(&self) -> PathBuf {
        let out = self.command.output();
        out.out.clone().unwrap_or_else(|| {
            PathBuf::from(format!("{}.{}", self.command.name(), Format::from(out.format).extension()))
        })
    }
}
