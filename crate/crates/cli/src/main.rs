//! `skillprobe`: crawl voice skills, code their compliance, report rates.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use skillprobe::connector::{AdapterFactory, ConnectorFactory, SimFactory};
use skillprobe::corpus::{read_json, read_sessions, write_json, write_sessions, write_text};
use skillprobe::crawler::{run_crawl, CrawlManifest, ElicitationPlan};
use skillprobe::evaluator::{evaluate_corpus, MarkerLexicon, SkillEvaluation};
use skillprobe::ingestion::{load_roster, select_top, Roster, RosterFormat};
use skillprobe::pipeline::{oracle_mismatches, run_pipeline, write_outputs, PipelineOptions, MANIFEST_FILE};
use skillprobe::report::{build_report, emit_report, ReportFormat};
use skillprobe::simulator::serve::serve;
use skillprobe::simulator::{generate_profiles, GeneratorConfig, SimProfile};
use skillprobe::Error;

const CONFIG_ENV: &str = "SKILLPROBE_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "skillprobe", version, about = "Voice skill design-guideline compliance harness")]
struct Cli {
    /// Seed for profile generation; recorded in every manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skills crawled concurrently.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Listen window per exchange, in milliseconds.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Record sessions for every roster skill.
    Crawl(CrawlArgs),
    /// Code a session corpus into per-skill verdicts.
    Evaluate(EvaluateArgs),
    /// Aggregate verdicts into compliance rates.
    Report(ReportArgs),
    /// Generate simulated profiles, or serve them over the adapter protocol.
    Simulate(SimulateArgs),
    /// Generate or load profiles, then crawl, evaluate and report.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct CrawlArgs {
    #[arg(long)]
    roster: PathBuf,
    /// Elicitation plan JSON.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// `sim` (needs --profiles) or `adapter:COMMAND`.
    #[arg(long, default_value = "sim")]
    connector: String,
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Keep only the top K skills per category.
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the corpus path with a `.manifest.json` suffix.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    verdicts: PathBuf,
    #[arg(long)]
    roster: PathBuf,
    /// Crawl manifest whose exclusions leave the denominators.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Profiles JSON (an array of profiles).
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Answer adapter-protocol requests on standard input/output.
    #[arg(long)]
    serve: bool,
    /// Profile id used when an open request names no known skill.
    #[arg(long)]
    skill: Option<String>,
    /// Generate this many profiles instead of loading them.
    #[arg(long)]
    generate: Option<usize>,
    /// Where generated profiles are written.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long, conflicts_with = "generate")]
    profiles: Option<PathBuf>,
    #[arg(long)]
    generate: Option<usize>,
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Defaults read from the file named by `SKILLPROBE_CONFIG`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Defaults {
    seed: Option<u64>,
    parallelism: Option<usize>,
    timeout_ms: Option<u64>,
    plan: Option<ElicitationPlan>,
    lexicon: Option<PathBuf>,
    generate: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Connector(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Connector(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Connector(_) => Failure::Connector(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Settings {
    seed: u64,
    parallelism: usize,
    timeout_ms: Option<u64>,
    defaults: Defaults,
}

impl Settings {
    fn resolve(cli: &Cli) -> Result<Self, Failure> {
        let defaults: Defaults = match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => read_json(Path::new(&path))?,
            _ => Defaults::default(),
        };
        let parallelism = cli.parallelism.or(defaults.parallelism).unwrap_or(1);
        if parallelism == 0 {
            return Err(Failure::Usage("--parallelism must be at least 1".into()));
        }
        Ok(Settings {
            seed: cli.seed.or(defaults.seed).unwrap_or(0),
            parallelism,
            timeout_ms: cli.timeout_ms.or(defaults.timeout_ms),
            defaults,
        })
    }

    fn plan(&self, path: Option<&Path>) -> Result<ElicitationPlan, Failure> {
        let mut plan = match path {
            Some(p) => read_json(p)?,
            None => self.defaults.plan.clone().unwrap_or_default(),
        };
        if self.timeout_ms.is_some() {
            plan.response_timeout_ms = self.timeout_ms;
        }
        plan.validate()?;
        Ok(plan)
    }

    fn lexicon(&self, path: Option<&Path>) -> Result<MarkerLexicon, Failure> {
        match path.or(self.defaults.lexicon.as_deref()) {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(MarkerLexicon::from_json(&text)?)
            }
            None => Ok(MarkerLexicon::default()),
        }
    }
}

fn roster_format(path: &Path) -> Result<RosterFormat, Failure> {
    RosterFormat::from_path(path)
        .ok_or_else(|| Failure::Usage(format!("{}: roster must end in .csv or .json", path.display())))
}

fn load_profiles(path: &Path) -> Result<Vec<SimProfile>, Failure> {
    let profiles: Vec<SimProfile> = read_json(path)?;
    for p in &profiles {
        p.validate().map_err(|e| Failure::Input(format!("{}: profile {}: {e}", path.display(), p.skill.id)))?;
    }
    Ok(profiles)
}

fn crawl(settings: &Settings, args: &CrawlArgs) -> Outcome {
    let plan = settings.plan(args.plan.as_deref())?;
    let mut roster = load_roster(&args.roster, roster_format(&args.roster)?)?;
    if let Some(k) = args.top_k {
        roster = select_top(&roster, k)?;
    }
    let factory: Box<dyn ConnectorFactory> = if args.connector == "sim" {
        let path = args.profiles.as_deref().ok_or_else(|| Failure::Usage("--connector sim needs --profiles".into()))?;
        let factory = SimFactory::new(load_profiles(path)?)?;
        if let Some(missing) = roster.included().find(|s| factory.profile(&s.id).is_none()) {
            return Err(Failure::Input(format!("no simulated profile for roster skill {:?}", missing.id)));
        }
        Box::new(factory)
    } else if let Some(command) = args.connector.strip_prefix("adapter:") {
        if command.trim().is_empty() {
            return Err(Failure::Usage("adapter connector needs a command".into()));
        }
        Box::new(AdapterFactory::new(command))
    } else {
        return Err(Failure::Usage(format!("unknown connector {:?}; use sim or adapter:COMMAND", args.connector)));
    };

    let output = run_crawl(&roster, &plan, factory.as_ref(), settings.parallelism, Some(settings.seed))?;
    write_sessions(&args.out, &output.sessions)?;
    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    write_json(&manifest_path, &output.manifest)?;
    eprintln!(
        "crawled {} skills, {} sessions, {} excluded",
        output.manifest.skills.len(),
        output.sessions.len(),
        output.manifest.exclusions.len()
    );
    threshold(&output.manifest)
}

fn threshold(manifest: &CrawlManifest) -> Outcome {
    if manifest.failure_threshold_exceeded() {
        return Err(Failure::Connector(format!(
            "{} of {} skills failed every session (limit {})",
            manifest.failed_count(),
            manifest.skills.len(),
            manifest.plan.max_failed_fraction
        )));
    }
    Ok(())
}

fn evaluate(settings: &Settings, args: &EvaluateArgs) -> Outcome {
    let lexicon = settings.lexicon(args.lexicon.as_deref())?;
    let sessions = read_sessions(&args.corpus)?;
    let evaluations = evaluate_corpus(&sessions, &lexicon);
    write_json(&args.out, &evaluations)?;
    eprintln!("evaluated {} skills", evaluations.len());
    Ok(())
}

fn report(args: &ReportArgs) -> Outcome {
    let format: ReportFormat = args.format.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let evaluations: Vec<SkillEvaluation> = read_json(&args.verdicts)?;
    for e in &evaluations {
        e.check_invariants()?;
    }
    let roster: Roster = load_roster(&args.roster, roster_format(&args.roster)?)?;
    let excluded: BTreeSet<String> = match &args.manifest {
        Some(p) => read_json::<CrawlManifest>(p)?.exclusions.into_iter().map(|e| e.skill_id).collect(),
        None => BTreeSet::new(),
    };
    let report = build_report(&evaluations, &roster, &excluded)?;
    let text = emit_report(&report, format)?;
    match &args.out {
        Some(p) => write_text(p, &text)?,
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))?,
    }
    Ok(())
}

fn simulate(settings: &Settings, args: &SimulateArgs) -> Outcome {
    let profiles = match (&args.profiles, args.generate) {
        (Some(_), Some(_)) => return Err(Failure::Usage("use either --profiles or --generate".into())),
        (Some(p), None) => load_profiles(p)?,
        (None, Some(n)) => generate_profiles(&GeneratorConfig::new(n, settings.seed)),
        (None, None) => return Err(Failure::Usage("simulate needs --profiles or --generate".into())),
    };
    if let Some(out) = &args.out {
        write_json(out, &profiles)?;
    }
    if args.serve {
        if profiles.is_empty() {
            return Err(Failure::Input("no profiles to serve".into()));
        }
        let stdin = io::stdin();
        serve(&profiles, args.skill.as_deref(), stdin.lock(), io::stdout().lock())
            .map_err(|e| Failure::Connector(format!("serving: {e}")))?;
    } else if args.out.is_none() {
        let text = skillprobe::corpus::to_json(&profiles)?;
        io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))?;
    }
    Ok(())
}

fn pipeline(settings: &Settings, args: &PipelineArgs) -> Outcome {
    let profiles = match (&args.profiles, args.generate.or(settings.defaults.generate)) {
        (Some(p), _) => load_profiles(p)?,
        (None, Some(n)) => generate_profiles(&GeneratorConfig::new(n, settings.seed)),
        (None, None) => return Err(Failure::Usage("pipeline needs --profiles or --generate".into())),
    };
    if profiles.is_empty() {
        return Err(Failure::Input("no profiles to crawl".into()));
    }
    let options = PipelineOptions {
        plan: settings.plan(args.plan.as_deref())?,
        lexicon: settings.lexicon(args.lexicon.as_deref())?,
        parallelism: settings.parallelism,
        seed: Some(settings.seed),
    };
    let output = run_pipeline(&profiles, &options)?;
    write_json(&args.out.join("profiles.json"), &profiles)?;
    write_outputs(&output, &args.out)?;
    let mismatches = oracle_mismatches(&output.evaluations, &output.ground_truth);
    eprintln!(
        "{} skills, {} sessions, {} verdicts disagree with ground truth; outputs in {} (see {MANIFEST_FILE})",
        profiles.len(),
        output.crawl.sessions.len(),
        mismatches.len(),
        args.out.display()
    );
    threshold(&output.crawl.manifest)
}

fn run(cli: &Cli) -> Outcome {
    let settings = Settings::resolve(cli)?;
    match &cli.command {
        Command::Crawl(a) => crawl(&settings, a),
        Command::Evaluate(a) => evaluate(&settings, a),
        Command::Report(a) => report(a),
        Command::Simulate(a) => simulate(&settings, a),
        Command::Pipeline(a) => pipeline(&settings, a),
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Input(m) | Failure::Connector(m)) = &f;
            eprintln!("skillprobe: {m}");
            ExitCode::from(f.code())
        }
    }
}
