mod repl;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use dlgen_core::dialog::{DialogState, Mode};
use dlgen_core::otml::{compile_manifest, parse_otml, validate_descriptor, CompileError, Severity};
use dlgen_core::replay::{parse_script, replay};
use dlgen_core::{load_dataset_file, Dataset};
use dlgen_service::AppState;

#[derive(Parser)]
#[command(name = "dlgen", version, about = "Faceted dialogs over classified collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset and print its statistics.
    Validate { dataset: PathBuf },
    /// Compile an interface descriptor into a manifest.
    Compile {
        otml: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a script of actions and print the final view.
    Replay {
        dataset: PathBuf,
        script: PathBuf,
        #[arg(long, default_value_t = Mode::Generalized)]
        mode: Mode,
        /// Stop at the first failing action.
        #[arg(long)]
        strict: bool,
    },
    /// Interactive text dialog.
    Repl {
        dataset: PathBuf,
        #[arg(long, default_value_t = Mode::Generalized)]
        mode: Mode,
    },
    /// Serve sessions over HTTP.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Idle seconds before a session is dropped.
        #[arg(long, default_value_t = 1800)]
        session_ttl: u64,
    },
}

/// Failure with a specific exit status.
#[derive(Debug)]
struct Exit(u8);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { dataset } => validate(&dataset),
        Command::Compile { otml, output } => compile(&otml, &output),
        Command::Replay {
            dataset,
            script,
            mode,
            strict,
        } => run_replay(&dataset, &script, mode, strict),
        Command::Repl { dataset, mode } => run_repl(&dataset, mode),
        Command::Serve {
            dataset,
            manifest,
            port,
            host,
            session_ttl,
        } => serve(&dataset, &manifest, SocketAddr::new(host, port), session_ttl),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Exit>() {
            Some(Exit(code)) => ExitCode::from(*code),
            None => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn load(path: &Path) -> anyhow::Result<Dataset> {
    load_dataset_file(path).with_context(|| format!("{}", path.display()))
}

fn validate(path: &Path) -> anyhow::Result<()> {
    let ds = load(path)?;
    println!(
        "{} documents, depth {}, facets [{}]",
        ds.documents().len(),
        ds.depth(),
        ds.facet_schema().join(", ")
    );
    println!(
        "vocabulary: {} label tokens, {} terms",
        ds.label_index().len(),
        ds.term_index().len()
    );
    Ok(())
}

fn compile(otml: &Path, output: &Path) -> anyhow::Result<()> {
    let source = std::fs::read_to_string(otml).with_context(|| format!("{}", otml.display()))?;
    let descriptor = parse_otml(&source).with_context(|| format!("{}", otml.display()))?;
    let base = otml.parent().unwrap_or(Path::new("."));
    let ds = load(&base.join(&descriptor.dataset_path))?;
    let manifest = match compile_manifest(&descriptor, &ds) {
        Ok(m) => m,
        Err(CompileError::Capability(findings)) => {
            for f in findings {
                eprintln!("{}: {}", severity(f.severity), f.message);
            }
            return Err(Exit(1).into());
        }
    };
    for f in validate_descriptor(&descriptor, &ds) {
        eprintln!("{}: {}", severity(f.severity), f.message);
    }
    std::fs::write(output, manifest.to_json()).with_context(|| format!("{}", output.display()))?;
    Ok(())
}

fn severity(s: Severity) -> &'static str {
    match s {
        Severity::Error => "error",
        Severity::Warning => "warning",
    }
}

fn run_replay(dataset: &Path, script: &Path, mode: Mode, strict: bool) -> anyhow::Result<()> {
    let ds = load(dataset)?;
    let text = std::fs::read_to_string(script).with_context(|| format!("{}", script.display()))?;
    let actions = parse_script(&text).with_context(|| format!("{}", script.display()))?;
    let start = DialogState::new(Arc::new(ds), mode);
    let report = match replay(start, &actions, strict) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: action {} ({}): {}", e.index + 1, e.action.kind(), e.error);
            return Err(Exit(2).into());
        }
    };
    for e in &report.errors {
        eprintln!("error: action {} ({}): {}", e.index + 1, e.action.kind(), e.error);
    }
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report.state.view())?;
    writeln!(out)?;
    Ok(())
}

fn run_repl(dataset: &Path, mode: Mode) -> anyhow::Result<()> {
    let ds = load(dataset)?;
    let state = DialogState::new(Arc::new(ds), mode);
    let interactive = std::io::IsTerminal::is_terminal(&std::io::stdin());
    repl::run(state, std::io::stdin().lock(), std::io::stdout().lock(), interactive)?;
    Ok(())
}

fn serve(dataset: &Path, manifest: &Path, addr: SocketAddr, ttl: u64) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let state = AppState::from_files(dataset, manifest, Duration::from_secs(ttl))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot listen on {addr}"))?;
        let local = listener.local_addr()?;
        println!("listening on http://{local}");
        std::io::stdout().flush()?;
        dlgen_service::serve(listener, state).await?;
        bail!("server stopped")
    })
}
