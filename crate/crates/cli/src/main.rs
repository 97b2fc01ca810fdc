use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rulelab_cli::commands::{self, CliError};
use rulelab_cli::{simulate, SimulationPolicy, StoppingReason};
use rulelab_core::synthetic::{generate, SyntheticConfig};
use rulelab_session::{SessionError, SessionManager, SessionStore};

#[derive(Parser)]
#[command(
    name = "rulelab",
    version,
    about = "Rule-based image labeling from visual predicates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dataset JSON file.
    #[arg(long)]
    dataset: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Induction and active-learning config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reject unknown fields in the dataset file.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Induce rules from manual labels.
    Induce {
        #[command(flatten)]
        common: Common,
        /// Manual labels as a JSON array of {image_id, label} records.
        #[arg(long)]
        labels: PathBuf,
        /// Previous ruleset whose locked clauses and bans carry over.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Label the pool with a ruleset.
    Apply {
        #[command(flatten)]
        common: Common,
        /// Ruleset JSON file.
        #[arg(long)]
        rules: PathBuf,
        /// Manual labels, which take precedence over rules.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Holdout accuracy of a ruleset.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Ruleset JSON file.
        #[arg(long)]
        rules: PathBuf,
    },
    /// Images to label next.
    Suggest {
        #[command(flatten)]
        common: Common,
        /// Ruleset JSON file.
        #[arg(long)]
        rules: PathBuf,
        /// Manual labels to exclude from suggestions.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Overrides the clustering seed from --config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Object types ranked by importance.
    Importance {
        #[command(flatten)]
        common: Common,
    },
    /// Run a scripted labeling session against ground truth.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Ground-truth labels, in the same format as --labels.
        #[arg(long)]
        ground_truth: PathBuf,
        /// Seed for clustering and random ordering.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Manual labels added per iteration.
        #[arg(long, default_value_t = 6)]
        budget: usize,
        /// Label in seeded random order instead of following suggestions.
        #[arg(long)]
        random_order: bool,
        /// Wrong auto labels corrected per iteration.
        #[arg(long, default_value_t = 0)]
        correct: usize,
        /// Stop after this many iterations.
        #[arg(long, default_value_t = 10)]
        max_iterations: usize,
        /// Stop once holdout accuracy reaches this value.
        #[arg(long, default_value_t = 0.9)]
        target: f64,
        /// Zero the wall-clock column so reports compare byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// Write a synthetic dataset and its ground truth.
    Synth {
        /// Dataset output file.
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth output file.
        #[arg(long)]
        ground_truth: PathBuf,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of pool images.
        #[arg(long, default_value_t = 300)]
        pool_size: usize,
        /// Number of classes.
        #[arg(long, default_value_t = 3)]
        classes: usize,
        /// Per-predicate noise rate.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
    },
    /// Serve the HTTP API.
    Serve {
        /// Directory holding session snapshots and logs.
        #[arg(long, default_value = "sessions")]
        store: PathBuf,
        /// Address to listen on.
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn json_text<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn dataset(common: &Common) -> Result<rulelab_core::Dataset, CliError> {
    let (ds, warnings) = commands::load_dataset(&common.dataset, common.strict)?;
    for w in warnings {
        eprintln!("{}", serde_json::json!({ "warning": w }));
    }
    Ok(ds)
}

fn labels_or_empty(
    path: Option<&Path>,
) -> Result<std::collections::BTreeMap<String, String>, CliError> {
    path.map_or(Ok(Default::default()), commands::load_labels)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Induce {
            common,
            labels,
            rules,
        } => {
            let ds = dataset(&common)?;
            let cfg = commands::load_config(common.config.as_deref())?;
            let prev = rules.map(|p| commands::load_rules(&p, &ds)).transpose()?;
            let out = commands::induce(&ds, &commands::load_labels(&labels)?, prev, &cfg)?;
            for w in &out.warnings {
                eprintln!("{}", serde_json::json!({ "warning": w }));
            }
            commands::emit(&json_text(&out.ruleset), common.out.as_deref())?;
        }
        Command::Apply {
            common,
            rules,
            labels,
        } => {
            let ds = dataset(&common)?;
            let rs = commands::load_rules(&rules, &ds)?;
            let out = commands::apply(&ds, &rs, &labels_or_empty(labels.as_deref())?)?;
            commands::emit(&json_text(&out), common.out.as_deref())?;
        }
        Command::Eval { common, rules } => {
            let ds = dataset(&common)?;
            let rs = commands::load_rules(&rules, &ds)?;
            commands::emit(&json_text(&commands::eval(&ds, &rs)), common.out.as_deref())?;
        }
        Command::Suggest {
            common,
            rules,
            labels,
            seed,
        } => {
            let ds = dataset(&common)?;
            let mut cfg = commands::load_config(common.config.as_deref())?;
            if let Some(seed) = seed {
                cfg.active_learning.seed = seed;
            }
            let rs = commands::load_rules(&rules, &ds)?;
            let out = commands::suggest(&ds, &rs, &labels_or_empty(labels.as_deref())?, &cfg)?;
            commands::emit(&json_text(&out), common.out.as_deref())?;
        }
        Command::Importance { common } => {
            let ds = dataset(&common)?;
            commands::emit(
                &json_text(&commands::importance(&ds)),
                common.out.as_deref(),
            )?;
        }
        Command::Simulate {
            common,
            ground_truth,
            seed,
            budget,
            random_order,
            correct,
            max_iterations,
            target,
            no_timing,
        } => {
            let ds = dataset(&common)?;
            let mut cfg = commands::load_config(common.config.as_deref())?;
            if common.config.is_none() {
                cfg.active_learning.k = budget.max(1);
            }
            let truth = commands::load_labels(&ground_truth)?;
            let policy = SimulationPolicy {
                label_budget_per_iter: budget,
                follow_suggestions: !random_order,
                correct_misclassified: correct,
                max_iterations,
                target_accuracy: target,
                seed,
            };
            let mut report = simulate(ds, &truth, &policy, cfg)?;
            if no_timing {
                report = report.without_timing();
            }
            commands::emit(&report.to_json(), common.out.as_deref())?;
            if let StoppingReason::Failed { code, message } = &report.stopping_reason {
                eprintln!(
                    "{}",
                    serde_json::json!({ "code": code, "message": message, "detail": null })
                );
                return Ok(1);
            }
        }
        Command::Synth {
            out,
            ground_truth,
            seed,
            pool_size,
            classes,
            noise,
        } => {
            let cfg = SyntheticConfig {
                seed,
                pool_size,
                classes,
                noise,
                ..Default::default()
            };
            let task = generate(&cfg).map_err(SessionError::Validation)?;
            commands::emit(&task.dataset.to_json_string(), Some(&out))?;
            commands::emit(
                &json_text(&commands::labels_to_entries(&task.ground_truth)),
                Some(&ground_truth),
            )?;
        }
        Command::Serve { store, addr } => {
            let manager = SessionManager::with_store(SessionStore::open(store)?)?;
            let runtime =
                tokio::runtime::Runtime::new().map_err(|e| SessionError::Storage(e.to_string()))?;
            runtime
                .block_on(async move {
                    let listener = tokio::net::TcpListener::bind(addr).await?;
                    eprintln!(
                        "{}",
                        serde_json::json!({ "listening": listener.local_addr()?.to_string() })
                    );
                    rulelab_session::serve(listener, Arc::new(manager)).await
                })
                .map_err(|e| SessionError::Storage(e.to_string()))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
