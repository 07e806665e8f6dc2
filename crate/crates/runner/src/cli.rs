//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use llmab_core::env::PoolSelection;
use llmab_gateway::{render_fixture, CachedClient, PromptFixture, TemplateId};

use crate::aggregate::{collect_records, summarize, write_summary_csv};
use crate::config::{AgentConfig, ExperimentConfig, GatewayModeConfig};
use crate::experiment::{run_experiment, Backend};
use crate::plot::{emit_plot_data, render_svg};
use crate::sweep::{expand, parse_param};

#[derive(Debug, Parser)]
#[command(name = "llmab", about = "Bandit experiments with language-model reward predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute an experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-run an experiment from a recorded gateway log, without network access.
    Replay {
        config: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Summarize the records in a results directory into summary.csv.
    Aggregate {
        dir: PathBuf,
        /// Where to write summary.csv (defaults to the results directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit per-method plot tables (and optionally an SVG) for a results directory.
    Plot {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Prompt template tooling.
    Prompts {
        #[command(subcommand)]
        command: PromptsCommand,
    },
    /// Run one config variant per parameter value.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`, e.g. `gamma=1,5,10`.
        #[arg(long)]
        param: String,
        /// Only write the variant configs, do not run them.
        #[arg(long)]
        dry_run: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Subcommand)]
enum PromptsCommand {
    /// Print a template filled from a JSON fixture.
    Render {
        template: String,
        #[arg(long)]
        fixture: PathBuf,
    },
}

#[derive(Debug, Args, Default)]
struct Overrides {
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Contextual loader: drop records with more words than this.
    #[arg(long)]
    max_words: Option<usize>,
    /// Contextual loader: drop records with more characters than this.
    #[arg(long)]
    max_chars: Option<usize>,
    /// Contextual loader: comma-separated label pool.
    #[arg(long)]
    pool: Option<String>,
    /// Let the dueling agent pick the same arm twice.
    #[arg(long)]
    allow_self_duel: bool,
    /// Skip the SVG after a run.
    #[arg(long)]
    no_plot: bool,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(o) = &self.output {
            config.output_dir = o.clone();
        }
        if let Some(r) = self.repetitions {
            config.repetitions = r;
        }
        if let Some(h) = self.horizon {
            config.horizon = h;
        }
        if let Some(c) = config.contextual.as_mut() {
            if self.max_words.is_some() {
                c.max_context_words = self.max_words;
            }
            if self.max_chars.is_some() {
                c.max_context_chars = self.max_chars;
            }
            if let Some(pool) = &self.pool {
                c.pool = PoolSelection::Labels(pool.split(',').map(|s| s.trim().to_string()).collect());
            }
        }
        if self.allow_self_duel {
            for a in &mut config.agents {
                if let AgentConfig::TsLlmDb { allow_self_duel, .. } = a {
                    *allow_self_duel = true;
                }
            }
        }
        config.validate()
    }
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(parsed.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, overrides } => {
            let mut c = ExperimentConfig::load(&config)?;
            overrides.apply(&mut c)?;
            execute(&c, None, !overrides.no_plot)
        }
        Command::Replay { config, log, overrides } => {
            let mut c = ExperimentConfig::load(&config)?;
            c.gateway.mode = GatewayModeConfig::Replay;
            c.gateway.log = Some(log.clone());
            if overrides.output.is_none() {
                let mut name = c.output_dir.clone().into_os_string();
                name.push("-replay");
                c.output_dir = PathBuf::from(name);
            }
            overrides.apply(&mut c)?;
            let gateway = c.uses_llm().then(|| CachedClient::replay(&log)).transpose()?.map(Arc::new);
            execute(&c, gateway, !overrides.no_plot)
        }
        Command::Aggregate { dir, out } => {
            let collected = collect_records(&dir)?;
            let summaries = summarize(&collected.records)?;
            let path = out.unwrap_or_else(|| dir.clone()).join("summary.csv");
            write_summary_csv(&path, &summaries)?;
            report(&summaries, collected.failed);
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Plot { dir, out, svg } => {
            let collected = collect_records(&dir)?;
            let summaries = summarize(&collected.records)?;
            let out = out.unwrap_or_else(|| dir.join("plots"));
            for p in emit_plot_data(&out, &summaries)? {
                println!("wrote {}", p.display());
            }
            if svg {
                let p = out.join("curves.svg");
                render_svg(&p, &summaries)?;
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Prompts { command: PromptsCommand::Render { template, fixture } } => {
            let id = TemplateId::from_str(&template).map_err(|e| anyhow::anyhow!("{e}"))?;
            let text = fs::read_to_string(&fixture).with_context(|| format!("reading {}", fixture.display()))?;
            let fixture: PromptFixture = serde_json::from_str(&text).context("parsing fixture")?;
            let prompt = render_fixture(id, &fixture)?;
            let mut out = std::io::stdout().lock();
            out.write_all(prompt.as_bytes())?;
            out.flush()?;
            Ok(())
        }
        Command::Sweep { config, param, dry_run, overrides } => {
            let (key, values) = parse_param(&param)?;
            let base = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let dir = config.parent().unwrap_or(Path::new("."));
            for (value, text) in expand(&base, &key, &values)? {
                let mut c = ExperimentConfig::from_toml_str(&text)?;
                c.resolve_paths(dir);
                overrides.apply(&mut c)?;
                let variant_dir = c.output_dir.join(format!("{key}-{value}"));
                crate::record::write_atomic(&variant_dir.join("config.toml"), text.as_bytes())?;
                println!("variant {key}={value}: {}", variant_dir.display());
                if !dry_run {
                    c.output_dir = variant_dir;
                    execute(&c, None, !overrides.no_plot)?;
                }
            }
            Ok(())
        }
    }
}

fn execute(config: &ExperimentConfig, gateway: Option<Arc<CachedClient>>, svg: bool) -> Result<()> {
    let backend = match gateway {
        Some(g) => Backend::llm(config, g)?,
        None => Backend::from_config(config)?,
    };
    let out = &config.output_dir;
    let outcome = run_experiment(config, &backend, out)?;
    let summaries = summarize(&outcome.records)?;
    emit_plot_data(&out.join("plots"), &summaries)?;
    if svg {
        render_svg(&out.join("plots").join("curves.svg"), &summaries)?;
    }
    println!(
        "{} records in {} ({} resumed, {} failed)",
        outcome.records.len(),
        out.display(),
        outcome.resumed,
        outcome.failed.len()
    );
    report(&summaries, outcome.failed.len());
    Ok(())
}

fn report(summaries: &[crate::aggregate::MethodSummary], failed: usize) {
    for s in summaries {
        let last = s.rows.last();
        println!(
            "{:<28} final mean {:>10.4} ± {:.4} (n={})",
            s.method,
            s.final_mean(),
            last.map_or(0.0, |r| r.stderr),
            last.map_or(0, |r| r.n)
        );
    }
    if failed > 0 {
        println!("{failed} failed repetition(s) excluded");
    }
}
