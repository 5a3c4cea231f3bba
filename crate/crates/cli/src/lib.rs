//! Command pipelines behind the `rankone` binary. Every command produces a
//! JSON report and an exit code; [`run`] never prints.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankone_core::formats::SpecFile;
use rankone_core::oracle::oracle_check;
use rankone_core::{
    biorthogonality_check, build_bipartite, build_network, cross_validate, decide, flow_from_ray, flow_to_operator,
    operator_to_flow, validate_system, BandSystem, DecideOptions, LarsonWogenRows, NetworkDump, Rational, RayWitness,
    SpecError, SystemFamily, Verdict, VerdictKind,
};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    BuildGraph,
    Decide,
    Witness,
    Roundtrip,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::BuildGraph => "build-graph",
            Command::Decide => "decide",
            Command::Witness => "witness",
            Command::Roundtrip => "roundtrip",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub spec_path: PathBuf,
    /// Profile depth for `decide`; witness depth and default truncation otherwise.
    pub depth: usize,
    pub threshold: f64,
    pub tolerance: f64,
    /// Report destination; stdout when absent.
    pub output_path: Option<PathBuf>,
    /// Where `decide` and `witness` write the ray of a NotDense verdict.
    pub witness_path: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: Command, spec_path: impl Into<PathBuf>) -> Self {
        Self {
            command,
            spec_path: spec_path.into(),
            depth: 10_000,
            threshold: 1_000.0,
            tolerance: 1e-10,
            output_path: None,
            witness_path: None,
            seed: 0,
        }
    }

    fn check(&self) -> Result<(), CliError> {
        if self.depth < 2 {
            return Err(CliError::InvalidConfig(format!("depth must be at least 2, got {}", self.depth)));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.threshold > 0.0) {
            return Err(CliError::InvalidConfig(format!("threshold must be positive, got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec does not parse: {0}")]
    SpecParse(serde_json::Error),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Domain(rankone_core::Error),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Json(e) => CliError::SpecParse(e),
            SpecError::UnsupportedFamily(f) => CliError::UnsupportedFamily(f),
        }
    }
}

impl From<rankone_core::Error> for CliError {
    fn from(e: rankone_core::Error) -> Self {
        CliError::Domain(e)
    }
}

pub const EXIT_DENSE: u8 = 0;
pub const EXIT_NOT_DENSE: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_SPEC_PARSE: u8 = 3;
pub const EXIT_UNSUPPORTED_FAMILY: u8 = 4;
pub const EXIT_IO: u8 = 5;
pub const EXIT_DOMAIN: u8 = 6;
pub const EXIT_CERTIFICATE: u8 = 7;
pub const EXIT_CONFIG: u8 = 8;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::SpecParse(_) => EXIT_SPEC_PARSE,
            CliError::UnsupportedFamily(_) => EXIT_UNSUPPORTED_FAMILY,
            CliError::Io { .. } => EXIT_IO,
            CliError::Domain(rankone_core::Error::CertificateFailure(_)) => EXIT_CERTIFICATE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::InvalidConfig(_) => EXIT_CONFIG,
        }
    }

    /// JSON error report.
    pub fn report(&self, command: Command) -> Value {
        let kind = match self {
            CliError::SpecParse(_) => "spec_parse".to_owned(),
            CliError::UnsupportedFamily(_) => "unsupported_family".to_owned(),
            CliError::Io { .. } => "io".to_owned(),
            CliError::Domain(e) => format!("{e:?}").split([' ', '(', '{']).next().unwrap_or_default().to_owned(),
            CliError::InvalidConfig(_) => "invalid_config".to_owned(),
        };
        json!({ "command": command.name(), "error": kind, "message": self.to_string() })
    }
}

/// Report and exit code of a finished command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: u8,
    pub report: Value,
    /// One line for stderr.
    pub summary: String,
}

pub fn verdict_exit_code(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::Dense => EXIT_DENSE,
        VerdictKind::NotDense => EXIT_NOT_DENSE,
        VerdictKind::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Runs one command. Writes `output_path` and `witness_path` when set.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    config.check()?;
    let text = read(&config.spec_path)?;
    let spec = SpecFile::parse(&text)?;
    let outcome = match config.command {
        Command::Validate => validate(config, &spec)?,
        Command::BuildGraph => build_graph(config, &spec)?,
        Command::Decide => decide_command(config, &spec, false)?,
        Command::Witness => decide_command(config, &spec, true)?,
        Command::Roundtrip => roundtrip(config, &spec)?,
        Command::Oracle => oracle(config, &spec)?,
    };
    if let Some(path) = &config.output_path {
        write_json(path, &outcome.report)?;
    }
    Ok(outcome)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text + "\n").map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn truncation(config: &RunConfig, spec: &SpecFile) -> Result<BandSystem<f64>, CliError> {
    spec.family()?;
    spec.system(config.depth)?
        .ok_or_else(|| CliError::UnsupportedFamily(format!("{} needs a system spec, not a graph", config.command.name())))
}

fn validate(config: &RunConfig, spec: &SpecFile) -> Result<Outcome, CliError> {
    let sys = truncation(config, spec)?;
    let report = validate_system(&sys);
    let defect = biorthogonality_check(&sys, &config.tolerance)?;
    let valid = report.is_valid() && defect.max_defect <= config.tolerance;
    Ok(Outcome {
        exit_code: if valid { 0 } else { EXIT_DOMAIN },
        report: json!({
            "command": "validate",
            "valid": valid,
            "n_max": sys.n_max(),
            "bandwidth": sys.bandwidth(),
            "violations": report.violations,
            "biorthogonality_defect": defect.max_defect,
        }),
        summary: format!("{} violations, biorthogonality defect {:e}", report.violations.len(), defect.max_defect),
    })
}

fn build_graph(config: &RunConfig, spec: &SpecFile) -> Result<Outcome, CliError> {
    let graph = match spec {
        SpecFile::Graph(g) => g.graph()?,
        _ => build_bipartite(&truncation(config, spec)?),
    };
    let net = build_network(graph)?;
    let dump = NetworkDump::new(&net);
    let summary = format!("{} vertices, {} edges", net.graph().vertex_count(), net.graph().edge_count());
    let mut report = serde_json::to_value(&dump).expect("dumps serialize");
    report["command"] = json!("build-graph");
    Ok(Outcome { exit_code: 0, report, summary })
}

fn options(config: &RunConfig, witness_depth: usize) -> DecideOptions {
    DecideOptions { depth: config.depth, threshold: config.threshold, witness_depth, ..DecideOptions::default() }
}

fn decide_command(config: &RunConfig, spec: &SpecFile, witness_only: bool) -> Result<Outcome, CliError> {
    let family = spec.family()?;
    let witness_depth = if witness_only { config.depth.min(200) } else { DecideOptions::default().witness_depth };
    let verdict = decide(&family, &options(config, witness_depth))?;
    if let (Some(path), Some(ray)) = (&config.witness_path, &verdict.ray) {
        write_json(path, ray)?;
    }
    let summary = summarize(&verdict);
    let exit_code = verdict_exit_code(verdict.kind);
    let report = if witness_only {
        let verified = match (&verdict.ray, &family) {
            (Some(ray), SystemFamily::Graph(g)) => Some(RayWitness::measure(g, ray.ray.clone(), ray.bound)?.verify(g).is_ok()),
            (Some(ray), _) => {
                let sys = truncation(&RunConfig { depth: ray.ray.iter().copied().max().unwrap_or(2), ..config.clone() }, spec)?;
                let g = build_bipartite(&sys);
                Some(RayWitness::measure(&g, ray.ray.clone(), ray.bound)?.verify(&g).is_ok())
            }
            (None, _) => None,
        };
        json!({ "command": "witness", "verdict": verdict.kind, "witness": verdict.ray, "verified": verified })
    } else {
        let mut report = serde_json::to_value(&verdict).expect("verdicts serialize");
        report["command"] = json!("decide");
        report
    };
    Ok(Outcome { exit_code, report, summary })
}

fn summarize(verdict: &Verdict) -> String {
    match (&verdict.kind, &verdict.ray) {
        (VerdictKind::NotDense, Some(ray)) => {
            format!("not dense: ray of {} vertices with length bound {}", ray.ray.len(), ray.bound)
        }
        (kind, _) => format!(
            "{}: profile reaches {} at depth {}",
            serde_json::to_value(kind).expect("kinds serialize").as_str().unwrap_or_default(),
            verdict.profile.last().copied().unwrap_or(0.0),
            verdict.depth
        ),
    }
}

fn roundtrip(config: &RunConfig, spec: &SpecFile) -> Result<Outcome, CliError> {
    let family = spec.family()?;
    let verdict = decide(&family, &options(config, config.depth))?;
    let report = match &family {
        SystemFamily::LarsonWogen(weights) => {
            cross_validate::<Rational, _>(&LarsonWogenRows::new(weights.clone())?, &verdict, config.tolerance)?
        }
        SystemFamily::Explicit(sys) => cross_validate::<f64, _>(sys, &verdict, config.tolerance)?,
        SystemFamily::Graph(_) => {
            return Err(CliError::UnsupportedFamily("roundtrip needs a system spec, not a graph".to_owned()))
        }
    };
    // the operator must map back onto the flow it came from
    let sys = truncation(&RunConfig { depth: report.n_max, ..config.clone() }, spec)?;
    let net = build_network(build_bipartite(&sys))?;
    let ray = &verdict.ray.as_ref().expect("cross-validated verdicts carry a ray").ray;
    let terminal = if sys.side_of(ray[0]) == rankone_core::Side::Left { net.source() } else { net.sink() };
    let full: Vec<_> = std::iter::once(terminal).chain(ray.iter().copied()).collect();
    let flow = flow_from_ray::<f64, _>(&net, &full)?;
    let identity = operator_to_flow(&net, &flow_to_operator(&net, &flow)?)? == flow;
    Ok(Outcome {
        exit_code: if identity { 0 } else { EXIT_CERTIFICATE },
        summary: format!("trace {}, defect {:e}, mass {}", report.trace, report.max_defect, report.mass),
        report: json!({
            "command": "roundtrip",
            "verdict": verdict.kind,
            "ray": ray,
            "n_max": report.n_max,
            "trace": report.trace,
            "max_defect": report.max_defect,
            "mass": report.mass,
            "l1_norm": report.l1_norm,
            "roundtrip_identity": identity,
            "operator": report.operator,
        }),
    })
}

fn oracle(config: &RunConfig, spec: &SpecFile) -> Result<Outcome, CliError> {
    let graph = match spec {
        SpecFile::Graph(g) => g.graph()?,
        _ => build_bipartite(&truncation(config, spec)?),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let report = oracle_check(&graph, &mut rng)?;
    let agrees = report.agrees();
    let mut value = serde_json::to_value(&report).expect("reports serialize");
    value["command"] = json!("oracle");
    value["agrees"] = json!(agrees);
    Ok(Outcome {
        exit_code: if agrees { 0 } else { EXIT_CERTIFICATE },
        report: value,
        summary: format!(
            "{} vertices; oracle {}",
            report.vertex_count,
            if agrees { "agrees" } else { "disagrees" }
        ),
    })
}
