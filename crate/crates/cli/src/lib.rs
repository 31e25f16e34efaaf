//! Command-line front end for ergokit: catalog loading, the commands, their
//! artifacts, and the acceptance suite.

pub mod catalog;
pub mod commands;
pub mod output;
pub mod parse;
pub mod suite;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use catalog::Catalog;
use output::{Artifact, FileEntry, Manifest};

pub const EXIT_OK: i32 = 0;
/// Unexpected internal failure, such as a construction failing its own re-check.
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub enum Failure {
    Config(String),
    Unsupported(String),
    Certificate(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Unsupported(_) => EXIT_UNSUPPORTED,
            Failure::Certificate(_) => EXIT_CERTIFICATE,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Unsupported(m) | Failure::Certificate(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<ergokit::Error> for Failure {
    fn from(e: ergokit::Error) -> Self {
        use ergokit::Error as E;
        let msg = e.to_string();
        match e {
            E::Unsupported(_) | E::MissingInverse(_) => Failure::Unsupported(msg),
            E::Validation(_) => Failure::Internal(msg),
            E::DomainMismatch(_) | E::InvalidParameter(_) | E::BudgetExhausted(_) | E::Catalog(_) => Failure::Config(msg),
        }
    }
}

/// What a command produced. A failed certificate still carries its artifacts.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub results: Value,
    pub certificate_failure: Option<String>,
}

#[derive(Debug, Parser)]
#[command(name = "ergokit", version, about = "Finite-scale estimators and constructions for topological dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Catalog JSON; defaults to $ERGOKIT_CATALOG, then the built-in catalog.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "ergokit-out")]
    pub out: PathBuf,
    /// Worker thread cap (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true)]
    pub no_csv: bool,
    #[arg(long, global = true)]
    pub no_json: bool,
    #[arg(long, global = true)]
    pub no_svg: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Rotation set cloud and hull of a torus lift or embedded shift.
    Rotset(commands::RotsetArgs),
    /// Rotation number of a circle lift.
    Rotnum(commands::RotnumArgs),
    /// Accumulation set of Birkhoff averages along one orbit.
    Pointwise(commands::PointwiseArgs),
    /// Topological entropy from separated sets.
    Entropy(commands::GridArgs),
    /// Topological pressure of a potential.
    Pressure(commands::PressureArgs),
    /// Metric mean dimension.
    Mdim(commands::GridArgs),
    /// Katok entropy of a Bernoulli or Dirac measure.
    Katok(commands::KatokArgs),
    /// Chain-recurrent classes on a box grid.
    Chainrec(commands::ChainrecArgs),
    /// Glue orbit segments.
    Glue(commands::GlueArgs),
    /// Shadow random pseudo-orbits.
    Shadow(commands::ShadowArgs),
    /// Periodic net of a chain class.
    Net(commands::NetArgs),
    /// Approximate an invariant measure by a periodic one.
    Permeasure(commands::PermeasureArgs),
    /// Construct a point whose averages sweep a polyline.
    Wild(commands::WildArgs),
    /// Build the fractal family and check its alternation.
    Fractal(commands::FractalArgs),
    /// Entropy lower certificate of the fractal family (exit 4 on failure).
    Certify(commands::FractalArgs),
    /// Run the acceptance suite.
    Accept(commands::AcceptArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rotset(_) => "rotset",
            Command::Rotnum(_) => "rotnum",
            Command::Pointwise(_) => "pointwise",
            Command::Entropy(_) => "entropy",
            Command::Pressure(_) => "pressure",
            Command::Mdim(_) => "mdim",
            Command::Katok(_) => "katok",
            Command::Chainrec(_) => "chainrec",
            Command::Glue(_) => "glue",
            Command::Shadow(_) => "shadow",
            Command::Net(_) => "net",
            Command::Permeasure(_) => "permeasure",
            Command::Wild(_) => "wild",
            Command::Fractal(_) => "fractal",
            Command::Certify(_) => "certify",
            Command::Accept(_) => "accept",
        }
    }
}

fn keep(a: &Artifact, g: &Global) -> bool {
    let ext = a.name.rsplit('.').next().unwrap_or("");
    !((g.no_csv && ext == "csv") || (g.no_json && ext == "json") || (g.no_svg && ext == "svg"))
}

/// Run one command and return the artifacts to write (manifest last) and the
/// exit code. Nothing here touches the disk.
pub fn execute(cli: &Cli) -> (Vec<Artifact>, i32) {
    let params = serde_json::to_value(commands::params_of(&cli.command)).unwrap_or(Value::Null);
    let catalog = Catalog::load(cli.global.catalog.as_deref());
    let source = catalog.as_ref().map(|c| c.source.clone()).unwrap_or_else(|_| "unavailable".into());
    let mut manifest = Manifest::new(cli.command.name(), &source, params);
    let result = catalog
        .map_err(Failure::from)
        .and_then(|c| commands::dispatch(&cli.command, &c));
    let mut artifacts = Vec::new();
    match result {
        Ok(out) => {
            artifacts = out.artifacts.into_iter().filter(|a| keep(a, &cli.global)).collect();
            manifest.results = out.results;
            if let Some(reason) = out.certificate_failure {
                manifest.status = "certificate_failed";
                manifest.exit_code = EXIT_CERTIFICATE;
                manifest.failure = Some(reason);
            }
        }
        Err(f) => {
            manifest.status = "failed";
            manifest.exit_code = f.exit_code();
            manifest.failure = Some(f.message().to_string());
        }
    }
    manifest.files = artifacts
        .iter()
        .map(|a| FileEntry {
            name: a.name.clone(),
            bytes: a.bytes.len(),
        })
        .collect();
    let code = manifest.exit_code;
    artifacts.push(manifest.to_artifact());
    (artifacts, code)
}

/// Parse-free entry point used by the binary: sets the thread cap, runs the
/// command and writes every artifact plus the manifest.
pub fn run(cli: &Cli) -> i32 {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build();
    let (artifacts, code) = match pool {
        Ok(pool) => pool.install(|| execute(cli)),
        Err(e) => {
            let mut m = Manifest::new(cli.command.name(), "unavailable", Value::Null);
            m.status = "failed";
            m.exit_code = EXIT_CONFIG;
            m.failure = Some(format!("thread pool: {e}"));
            (vec![m.to_artifact()], EXIT_CONFIG)
        }
    };
    if let Err(e) = output::write_all(&cli.global.out, &artifacts) {
        eprintln!("ergokit: cannot write to {}: {e}", cli.global.out.display());
        return EXIT_CONFIG.max(code);
    }
    if code != EXIT_OK {
        let reason = artifacts
            .last()
            .and_then(|m| serde_json::from_slice::<Value>(&m.bytes).ok())
            .and_then(|v| v.get("failure").and_then(Value::as_str).map(String::from))
            .unwrap_or_default();
        eprintln!("ergokit {}: {reason}", cli.command.name());
    }
    code
}
