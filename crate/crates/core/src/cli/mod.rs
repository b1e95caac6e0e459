//! Command-line front end. Every run writes one JSON document with `meta`
//! (version, seed, wall time, the full parsed configuration), `inputs`
//! (SHA-256 digest of each file read) and `results`.

mod commands;
mod output;

use crate::error::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use output::to_json_string;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Serialize, Deserialize, Debug, Clone, PartialEq)]
#[command(name = "netecon", version, about = "Network econometrics toolkit")]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; affects wall time only.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the JSON document here instead of stdout.
    #[arg(long = "json", global = true, value_name = "PATH")]
    #[serde(skip)]
    pub json_out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Draw an exchangeable random graph.
    Simulate(SimulateArgs),
    /// Subgraph densities with their covariance and the transitivity index.
    Moments(MomentsArgs),
    /// Transitivity index and its standard error.
    Transitivity(TransitivityArgs),
    /// Composite-likelihood dyadic regression.
    DyadicFit(DyadicArgs),
    /// Average structural function from a proxy-variable regression.
    Asf(AsfArgs),
    /// Triad probit with correlated random effects.
    TriadProbit(TriadArgs),
    /// Strategic formation models configured by a JSON file.
    Strategic(StrategicArgs),
    /// Re-run the configuration recorded in an earlier JSON document.
    Rerun(RerunArgs),
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Er,
    Beta,
    Threshold,
    Graphon,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub n: usize,
    /// Edge probability for `er`.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Mean of the normal node effects for `beta`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mean: f64,
    /// Standard deviation of the node effects for `beta`.
    #[arg(long, default_value_t = 1.0)]
    pub sd: f64,
    /// Threshold for `threshold`.
    #[arg(long)]
    pub alpha_t: Option<f64>,
    /// Grid file for `graphon`: header `k rho_N`, then k rows of k values.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Edge list output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct MomentsArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Node count when isolated nodes are not listed.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "triangle,twostar")]
    pub patterns: String,
    /// `exact`, `subsample:M` or `none`.
    #[arg(long, default_value = "exact")]
    pub cov: String,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TransitivityArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "exact")]
    pub cov: String,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DyadicArgs {
    /// Node CSV with an `id` column.
    #[arg(long)]
    pub nodes: PathBuf,
    /// Outcome CSV with `i,j,y` rows.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Regressor recipe, one term per line.
    #[arg(long)]
    pub recipe: PathBuf,
    #[arg(long, default_value = "logit")]
    pub family: String,
    /// Comma-separated variance estimators.
    #[arg(long, default_value = "fg")]
    pub vcov: String,
    #[arg(long)]
    pub directed: bool,
    /// `scheme:B=999`, scheme one of weighted, multinomial, pigeonhole, menzel.
    #[arg(long)]
    pub bootstrap: Option<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct AsfArgs {
    #[arg(long)]
    pub nodes: PathBuf,
    /// Directed outcome CSV `i,j,y`.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Proxy-regression basis, e.g. `1; w; x; w*x; r.age`.
    #[arg(long)]
    pub recipe: PathBuf,
    #[arg(long, default_value = "w")]
    pub w_col: String,
    #[arg(long, default_value = "x")]
    pub x_col: String,
    /// Comma-separated ego proxy columns.
    #[arg(long, default_value = "")]
    pub r_cols: String,
    /// Comma-separated alter proxy columns.
    #[arg(long, default_value = "")]
    pub s_cols: String,
    #[arg(long, default_value = "logit")]
    pub family: String,
    #[arg(long, default_value = "fg")]
    pub vcov: String,
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    /// `ate` or `complementarity`, over binary treatments.
    #[arg(long)]
    pub contrast: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    pub kappa: f64,
    /// Pairs-of-dyads estimate of the proxy variance term.
    #[arg(long)]
    pub fg_proxy: bool,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TriadArgs {
    /// Directed edge list over the ids of the covariate file.
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub covariates: PathBuf,
    #[arg(long)]
    pub recipe: PathBuf,
    #[arg(long, default_value_t = crate::triad_probit::DEFAULT_DRAWS)]
    pub draws: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Estimate the index only, with independent errors.
    #[arg(long)]
    pub independent: bool,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StrategicAction {
    Equilibria,
    Smd,
    Leung,
    Mele,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct StrategicArgs {
    #[arg(value_enum)]
    pub action: StrategicAction,
    /// JSON parameter file; relative paths inside resolve against its folder.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RerunArgs {
    /// A JSON document written by an earlier run.
    #[arg(long)]
    pub from: PathBuf,
}

/// Files read during a run, with their digests.
#[derive(Default)]
pub(crate) struct Inputs {
    files: Vec<(String, String, String)>,
}

impl Inputs {
    pub(crate) fn read(&mut self, role: &str, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.files.push((role.into(), path.display().to_string(), digest));
        String::from_utf8(bytes).map_err(|_| Error::UndefinedInput(format!("{} is not UTF-8 text", path.display())))
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.files
                .iter()
                .map(|(role, path, sha)| json!({"role": role, "path": path, "sha256": sha}))
                .collect(),
        )
    }
}

fn execute(cli: &Cli, inputs: &mut Inputs) -> Result<Value> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, cli.seed, inputs),
        Command::Moments(a) => commands::moments(a, cli.seed, inputs),
        Command::Transitivity(a) => commands::transitivity(a, cli.seed, inputs),
        Command::DyadicFit(a) => commands::dyadic_fit(a, cli.seed, inputs),
        Command::Asf(a) => commands::asf(a, inputs),
        Command::TriadProbit(a) => commands::triad_probit(a, cli.seed, inputs),
        Command::Strategic(a) => commands::strategic(a, cli.seed, inputs),
        Command::Rerun(_) => unreachable!("resolved before execution"),
    }
}

/// Loads the configuration recorded under `meta.config`.
fn recorded_config(from: &Path, inputs: &mut Inputs) -> Result<Cli> {
    let text = inputs.read("rerun", from)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", from.display())))?;
    let config = doc
        .pointer("/meta/config")
        .cloned()
        .ok_or_else(|| Error::Config(format!("{} has no meta.config", from.display())))?;
    serde_json::from_value(config).map_err(|e| Error::Config(format!("recorded configuration: {e}")))
}

/// Runs one invocation and returns the JSON document.
pub fn run_to_value(cli: &Cli) -> Result<Value> {
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let resolved = match &cli.command {
        Command::Rerun(r) => {
            let mut c = recorded_config(&r.from, &mut inputs)?;
            c.json_out = cli.json_out.clone();
            inputs = Inputs::default();
            c
        }
        _ => cli.clone(),
    };
    if let Some(t) = resolved.threads {
        // The global pool can be set once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let results = execute(&resolved, &mut inputs)?;
    let config = serde_json::to_value(&resolved).expect("configuration serializes");
    Ok(json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "seed": resolved.seed,
            "wall_time_s": start.elapsed().as_secs_f64(),
            "config": config,
        },
        "inputs": inputs.to_json(),
        "results": results,
    }))
}

/// Parses and runs `argv` without touching stdout or files. Returns the
/// JSON text, or the exit code with a message.
pub fn run_capture<I, T>(argv: I) -> std::result::Result<String, (i32, String)>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| (EXIT_USER, e.to_string()))?;
    run_to_value(&cli)
        .map(|doc| to_json_string(&doc))
        .map_err(|e| (if e.is_user_error() { EXIT_USER } else { EXIT_NUMERIC }, e.to_string()))
}

/// Parses `argv`, runs, writes the document and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_to_value(&cli) {
        Ok(doc) => {
            let text = to_json_string(&doc);
            match &cli.json_out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return EXIT_USER;
                    }
                }
                None => println!("{text}"),
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                EXIT_USER
            } else {
                EXIT_NUMERIC
            }
        }
    }
}
