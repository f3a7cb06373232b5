use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use trackmate_core::llm::PromptTemplate;
use trackmate_core::llm::{chat_turn, music_feedback_graph, open_session, refine_report, ChatBackend, Persona};
use trackmate_core::report::{analyze_track, build_report, render_report, AnalysisBundle, MusicReport};
use trackmate_core::semantics::PluginClassifier;
use trackmate_core::{decode_audio, AnalysisConfig};
use trackmate_service::{backend_from_config, serve_on, AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "trackmate", version, about = "Music analysis reports and producer feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a WAV file and print its report.
    Analyze {
        path: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
        depth: u8,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// External genre/theme classifier command.
        #[arg(long, env = "TRACKMATE_PLUGIN_CMD")]
        plugin_cmd: Option<String>,
    },
    /// Analyze a track, score it and chat about it in the terminal.
    Chat {
        path: PathBuf,
        /// Scripted mock rules (JSON) instead of the configured backend.
        #[arg(long)]
        mock: Option<PathBuf>,
        /// Service config file (TOML); environment variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Drop the friendly-producer tone.
        #[arg(long)]
        no_persona: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        store_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mock: Option<PathBuf>,
    },
}

/// A one-line error and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_OTHER: u8 = 1;
const EXIT_DECODE: u8 = 2;
const EXIT_ANALYSIS: u8 = 3;
const EXIT_BACKEND: u8 = 4;

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Analyze { path, depth, format, output, plugin_cmd } => {
            analyze(&path, depth, format, output.as_deref(), plugin_cmd)
        }
        Command::Chat { path, mock, config, no_persona } => chat(&path, mock, config.as_deref(), no_persona),
        Command::Serve { port, host, store_dir, config, mock } => serve(port, host, store_dir, config.as_deref(), mock),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_bundle(path: &Path, plugin_cmd: Option<String>) -> Result<AnalysisBundle, Failure> {
    let bytes = std::fs::read(path).map_err(|e| fail(EXIT_DECODE, format!("{}: {e}", path.display())))?;
    let hint = path.extension().and_then(|e| e.to_str());
    let clip = decode_audio(&bytes, hint).map_err(|e| fail(EXIT_DECODE, format!("{}: {e}", path.display())))?;
    let config = AnalysisConfig {
        plugin: plugin_cmd.map(|command| PluginClassifier { command, timeout: Duration::from_secs(10) }),
        ..AnalysisConfig::default()
    };
    analyze_track(&clip, &config).map_err(|e| fail(EXIT_ANALYSIS, format!("{}: {e}", path.display())))
}

fn analyze(
    path: &Path,
    depth: u8,
    format: Format,
    output: Option<&Path>,
    plugin_cmd: Option<String>,
) -> Result<(), Failure> {
    let report = build_report(&load_bundle(path, plugin_cmd)?, depth);
    let mut text = match format {
        Format::Json => report.to_json(),
        Format::Text => render_report(&report),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| fail(EXIT_OTHER, format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| fail(EXIT_OTHER, e.to_string())),
    }
}

fn chat_backend(
    mock: Option<PathBuf>,
    config: Option<&Path>,
) -> Result<(Arc<dyn ChatBackend>, ServiceConfig), Failure> {
    let mut cfg = ServiceConfig::load(config).map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
    if mock.is_some() {
        cfg.mock_fixture = mock;
    }
    let (backend, _) = backend_from_config(&cfg).map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
    let backend = backend
        .ok_or_else(|| fail(EXIT_BACKEND, "no chat backend configured (set TRACKMATE_BACKEND_URL or pass --mock)"))?;
    Ok((backend, cfg))
}

fn refined_report(bundle: &AnalysisBundle, backend: &dyn ChatBackend) -> MusicReport {
    match refine_report(bundle, backend) {
        Ok(r) => {
            eprintln!("report depth {} chosen{}", r.depth, if r.defaulted { " (fallback)" } else { "" });
            r.report
        }
        Err(e) => {
            eprintln!("refinement failed ({e}); using depth 3");
            build_report(bundle, 3)
        }
    }
}

fn chat(path: &Path, mock: Option<PathBuf>, config: Option<&Path>, no_persona: bool) -> Result<(), Failure> {
    let (backend, cfg) = chat_backend(mock, config)?;
    let bundle = load_bundle(path, cfg.plugin_cmd.clone())?;
    let report = refined_report(&bundle, backend.as_ref());
    let persona = Persona { producer_tone: cfg.persona && !no_persona };
    let template = PromptTemplate { persona, ..PromptTemplate::default() };
    let graph = music_feedback_graph();
    let opened = open_session("terminal", report, &template, Some(&graph), backend.as_ref())
        .map_err(|e| fail(EXIT_BACKEND, e.to_string()))?;
    let mut session = opened.session;

    let mut out = io::stdout().lock();
    let w = |out: &mut io::StdoutLock, s: &str| writeln!(out, "{s}").map_err(|e| fail(EXIT_OTHER, e.to_string()));
    if let Some(scores) = &session.scores {
        w(&mut out, "SCORES")?;
        for c in scores.iter() {
            w(&mut out, &format!("  {}: {}/10  {}", c.category, c.score, c.justification))?;
        }
    }
    w(&mut out, &format!("\n{}\n", opened.opening))?;
    w(&mut out, "(type a question, /quit to leave)")?;
    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
        let text = line.trim();
        if text == "/quit" || text == "/exit" {
            break;
        }
        if text.is_empty() {
            continue;
        }
        match chat_turn(&mut session, text, backend.as_ref()) {
            Ok(reply) => w(&mut out, &format!("\n{reply}\n"))?,
            Err(e) => eprintln!("backend error: {e} (message not kept; try again)"),
        }
    }
    Ok(())
}

fn serve(
    port: Option<u16>,
    host: Option<String>,
    store_dir: Option<PathBuf>,
    config: Option<&Path>,
    mock: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = ServiceConfig::load(config).map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
    if let Some(p) = port {
        cfg.port = p;
    }
    if let Some(h) = host {
        cfg.host = h;
    }
    if let Some(d) = store_dir {
        cfg.store_dir = d;
    }
    if mock.is_some() {
        cfg.mock_fixture = mock;
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
    rt.block_on(async move {
        let addr = format!("{}:{}", cfg.host, cfg.port);
        let state = AppState::new(cfg).map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
        let listener =
            tokio::net::TcpListener::bind(&addr).await.map_err(|e| fail(EXIT_OTHER, format!("{addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
        println!("listening on http://{local}");
        io::stdout().flush().ok();
        serve_on(listener, state).await.map_err(|e| fail(EXIT_OTHER, e.to_string()))
    })
}
