//! `sase`: run scenarios, answer one-shot adaptation requests and inspect knowledge bases.

mod documents;
mod metrics;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sase_core::domain::{AdaptationRequest, CaseSource, CaseStatus, KnowledgeBase};
use sase_core::engine::{CbrEngine, Objective};
use sase_core::runtime::{run_loop, RunOptions, Scenario, ScenarioError};

use documents::ResponseDocument;

#[derive(Parser, Debug)]
#[command(name = "sase", version, about = "Case-based self-adaptation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario through the adaptation loop and export per-tick metrics.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        ticks: u64,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Knowledge base to start from (empty when omitted).
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Where to write the final knowledge base.
        #[arg(long = "kb-out")]
        kb_out: Option<PathBuf>,
        #[arg(long)]
        metrics: PathBuf,
        /// Record measured adaptation times instead of zeros (makes output machine-dependent).
        #[arg(long = "wall-clock")]
        wall_clock: bool,
    },
    /// Answer one adaptation request, updating the knowledge base in place.
    Adapt {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a knowledge base.
    Kb {
        #[arg(long)]
        kb: PathBuf,
    },
    /// Check a scenario file and list every problem found.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

/// Exit code when everything ran but some response could not meet the utility threshold.
const THRESHOLD_UNMET: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            scenario,
            ticks,
            seed,
            kb,
            kb_out,
            metrics,
            wall_clock,
        } => cmd_run(
            &scenario,
            ticks,
            seed,
            kb.as_deref(),
            kb_out.as_deref(),
            &metrics,
            wall_clock,
        ),
        Command::Adapt {
            scenario,
            kb,
            request,
            out,
        } => cmd_adapt(&scenario, &kb, &request, &out),
        Command::Kb { kb } => cmd_kb(&kb),
        Command::Validate { scenario } => cmd_validate(&scenario),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("cannot load scenario {}", path.display()))
}

fn read_kb(path: &Path, scenario: Option<&Scenario>) -> Result<KnowledgeBase> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read knowledge base {}", path.display()))?;
    KnowledgeBase::from_json(&text, scenario.map(|s| &s.schema))
        .with_context(|| format!("knowledge base {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_run(
    scenario_path: &Path,
    ticks: u64,
    seed: Option<u64>,
    kb_path: Option<&Path>,
    kb_out: Option<&Path>,
    metrics_path: &Path,
    wall_clock: bool,
) -> Result<ExitCode> {
    let mut scenario = load_scenario(scenario_path)?;
    if let Some(seed) = seed {
        scenario.set_seed(seed);
    }
    let kb = match kb_path {
        Some(p) => read_kb(p, Some(&scenario))?,
        None => KnowledgeBase::new(&scenario.schema),
    };
    let (records, kb) = run_loop(&scenario, kb, RunOptions { ticks, wall_clock })?;

    let csv = metrics::to_csv(&records)?;
    write_file(metrics_path, &csv)?;
    if let Some(out) = kb_out {
        write_file(out, &kb.to_json())?;
    }

    let unmet: Vec<u64> = records
        .iter()
        .filter(|r| r.response.as_ref().is_some_and(|resp| !resp.threshold_met))
        .map(|r| r.tick)
        .collect();
    if unmet.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "warning: {} response(s) predicted utility at or below the threshold (first at tick {})",
            unmet.len(),
            unmet[0]
        );
        Ok(ExitCode::from(THRESHOLD_UNMET))
    }
}

fn cmd_adapt(
    scenario_path: &Path,
    kb_path: &Path,
    request_path: &Path,
    out_path: &Path,
) -> Result<ExitCode> {
    let scenario = load_scenario(scenario_path)?;
    let mut kb = if kb_path.exists() {
        read_kb(kb_path, Some(&scenario))?
    } else {
        KnowledgeBase::new(&scenario.schema)
    };
    let text = fs::read_to_string(request_path)
        .with_context(|| format!("cannot read request {}", request_path.display()))?;
    let request: AdaptationRequest = serde_json::from_str(&text)
        .with_context(|| format!("malformed request document {}", request_path.display()))?;

    let objective = Objective {
        schema: &scenario.schema,
        utility: &scenario.utility,
        metrics: &scenario,
        uncertainty: &scenario.uncertainty,
    };
    let engine = CbrEngine::new(scenario.engine.clone(), objective)?;
    let response = engine.adapt(&mut kb, &request)?;

    let doc = ResponseDocument::from(&response);
    write_file(out_path, &doc.to_json())?;
    write_file(kb_path, &kb.to_json())?;

    Ok(if response.threshold_met {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "warning: best response predicts utility {} which does not exceed the threshold {}",
            response.predicted_utility, scenario.utility.threshold
        );
        ExitCode::from(THRESHOLD_UNMET)
    })
}

fn cmd_kb(kb_path: &Path) -> Result<ExitCode> {
    let kb = read_kb(kb_path, None)?;
    let count_source = |s: CaseSource| kb.cases().filter(|c| c.source == s).count();
    let count_status = |s: CaseStatus| kb.cases().filter(|c| c.outcome.status == s).count();
    let mean_use = if kb.is_empty() {
        0.0
    } else {
        kb.cases().map(|c| c.use_count as f64).sum::<f64>() / kb.len() as f64
    };
    println!("schema_fingerprint: {}", kb.fingerprint());
    println!("size: {}", kb.len());
    println!(
        "source.constructed: {}",
        count_source(CaseSource::Constructed)
    );
    println!("source.seeded: {}", count_source(CaseSource::Seeded));
    println!("status.untested: {}", count_status(CaseStatus::Untested));
    println!("status.confirmed: {}", count_status(CaseStatus::Confirmed));
    println!("status.failed: {}", count_status(CaseStatus::Failed));
    println!("mean_use_count: {mean_use}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(scenario_path: &Path) -> Result<ExitCode> {
    match Scenario::load(scenario_path) {
        Ok(scenario) => {
            println!("{}: ok ({})", scenario_path.display(), scenario.name);
            Ok(ExitCode::SUCCESS)
        }
        Err(ScenarioError::Invalid(problems)) => {
            for p in &problems {
                println!("{}: {p}", scenario_path.display());
            }
            eprintln!("{} problem(s) found", problems.len());
            Ok(ExitCode::FAILURE)
        }
        Err(other) => bail!("cannot load scenario {}: {other}", scenario_path.display()),
    }
}
