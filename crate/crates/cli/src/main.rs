use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use socialcredit_cli::{default_store_dir, load_config, router};
use socialcredit_core::knowledge_base::{load_corpus, KnowledgeBase};
use socialcredit_core::service::{FileStore, ReviewAction, ReviewKind, Service, SystemClock};
use socialcredit_core::{parse_profile, synthesize_profile, Archetype, Band, DecisionMeta, Pipeline};

#[derive(Parser)]
#[command(name = "socialcredit", version, about = "Alternative-data credit decisioning")]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, env = "SOCIALCREDIT_CONFIG")]
    config: Option<PathBuf>,
    /// Application store directory.
    #[arg(long, global = true, env = "SOCIALCREDIT_STORE")]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a profile document and store the application.
    Score {
        profile: PathBuf,
        /// Evaluate without storing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Print the explanation for a stored application.
    Explain {
        application_id: String,
        #[arg(long)]
        json: bool,
    },
    /// Print a synthetic profile document.
    Simulate {
        #[arg(long)]
        archetype: Archetype,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
    /// Policy knowledge base tools.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Officer review queue.
    Queue {
        #[command(subcommand)]
        command: QueueCommand,
    },
    /// Rescore a stored application without some content items.
    Whatif {
        application_id: String,
        #[arg(long, num_args = 1..)]
        exclude: Vec<String>,
    },
    /// Recompute a stored decision and compare it with the original.
    Replay { application_id: String },
    /// Print audit events after a sequence number.
    Audit {
        #[arg(long, default_value_t = 0)]
        after: u64,
    },
}

#[derive(Subcommand)]
enum KbCommand {
    /// Index a corpus directory and optionally run a query against it.
    Index {
        corpus: PathBuf,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ActionArg {
    Approve,
    OverrideBand,
    RequestInfo,
}

#[derive(Subcommand)]
enum QueueCommand {
    /// List applications waiting for review.
    List,
    /// Record an officer action on an application in review.
    Resolve {
        application_id: String,
        #[arg(long, value_enum)]
        action: ActionArg,
        #[arg(long, default_value = "officer")]
        reviewer: String,
        /// New band for override-band.
        #[arg(long)]
        band: Option<Band>,
        #[arg(long, default_value = "")]
        note: String,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = load_config(cli.config.as_deref())?;
    let store_dir = cli.store.clone().unwrap_or_else(default_store_dir);
    let service = || -> Result<Service> {
        let pipeline = Pipeline::from_config(&config)?;
        let store = FileStore::open(&store_dir)
            .with_context(|| format!("opening store {}", store_dir.display()))?;
        Ok(Service::new(pipeline, Box::new(store), Box::new(SystemClock)))
    };

    match cli.command {
        Command::Score { profile, dry_run } => {
            let bytes = std::fs::read(&profile).with_context(|| format!("reading {}", profile.display()))?;
            if dry_run {
                let p = parse_profile(&bytes)?;
                if !p.consent.granted {
                    bail!("consent not granted; the profile was not scored");
                }
                let pipeline = Pipeline::from_config(&config)?;
                let meta = DecisionMeta {
                    decision_id: "dry-run".into(),
                    user_id: p.user_id.clone(),
                    timestamp: chrono::Utc::now(),
                };
                print_json(&pipeline.evaluate(&p, meta)?.decision)?;
            } else {
                print_json(&service()?.submit_application(&bytes)?)?;
            }
        }
        Command::Explain { application_id, json } => {
            let report = service()?.get_explanation(&application_id)?;
            if json {
                print_json(&report)?;
            } else {
                print!("{}", report.render_text());
            }
        }
        Command::Simulate { archetype, seed } => {
            println!("{}", socialcredit_core::emit_profile(&synthesize_profile(archetype, seed)));
        }
        Command::Serve { port, bind } => {
            let svc = Arc::new(service()?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((bind.as_str(), port)).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, router(svc)).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
        Command::Kb {
            command: KbCommand::Index { corpus, query, k },
        } => {
            let docs = load_corpus(&corpus)?;
            let kb = KnowledgeBase::build(docs, config.kb.dim)?;
            println!("indexed {} documents (dim {})", kb.index().len(), config.kb.dim);
            for d in kb.documents() {
                let tags: Vec<&str> = d.tags.iter().map(String::as_str).collect();
                println!("  {}  {}  [{}]", d.doc_id, d.title, tags.join(", "));
            }
            if let Some(q) = query {
                println!("query: {q}");
                for h in kb.retrieve(&q, k.unwrap_or(config.kb.k))? {
                    println!("  {:.4}  {}", h.score, h.doc_id);
                }
            }
        }
        Command::Queue { command } => match command {
            QueueCommand::List => print_json(&service()?.list_review_queue()?)?,
            QueueCommand::Resolve {
                application_id,
                action,
                reviewer,
                band,
                note,
            } => {
                let action = ReviewAction {
                    reviewer,
                    action: match action {
                        ActionArg::Approve => ReviewKind::Approve,
                        ActionArg::OverrideBand => ReviewKind::OverrideBand,
                        ActionArg::RequestInfo => ReviewKind::RequestInfo,
                    },
                    new_band: band,
                    note,
                    timestamp: None,
                };
                print_json(&service()?.resolve_review(&application_id, action)?)?;
            }
        },
        Command::Whatif { application_id, exclude } => {
            let exclude: BTreeSet<String> = exclude.into_iter().collect();
            print_json(&service()?.reassess_what_if(&application_id, &exclude)?)?;
        }
        Command::Replay { application_id } => {
            let report = service()?.replay(&application_id)?;
            print_json(&report)?;
            if !report.identical {
                bail!("replayed decision differs from the stored one");
            }
        }
        Command::Audit { after } => print_json(&service()?.audit_after(after)?)?,
    }
    Ok(())
}
