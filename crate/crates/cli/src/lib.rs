//! The `teeda` command line.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, missing files, unknown
//! ids), 2 validation or parse errors in the data.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use teeda_core::analytics::{
    compare_breakdowns, corpus_stats, render_stats_summary, render_stats_table, Dimension,
};
use teeda_core::matching::build_network;
use teeda_core::persistence::{
    export_csv_writer, import_csv, import_records, load_corpus_with, render_corpus, render_item,
    save_corpus, ExportError, FieldPolicy, ImportError, NetworkDocument, PersistenceError,
};
use teeda_core::{format_two_decimals, Corpus, DataKind};
use teeda_service::{
    matches_document, report_document, stats_document, Registry, RegistryError, StoreError,
};

#[derive(Debug, Parser)]
#[command(name = "teeda", version, about = "Data request and data jacket registry tools")]
pub struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Keep unknown fields in corpus files instead of rejecting them.
    #[arg(long, global = true)]
    pub lenient: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Request,
    Providable,
}

impl From<KindArg> for DataKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Request => DataKind::Request,
            KindArg::Providable => DataKind::Providable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimensionArg {
    Sharing,
    Types,
    Formats,
}

impl From<DimensionArg> for Dimension {
    fn from(d: DimensionArg) -> Self {
        match d {
            DimensionArg::Sharing => Dimension::Sharing,
            DimensionArg::Types => Dimension::Types,
            DimensionArg::Formats => Dimension::Formats,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP registry on a corpus file.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        data: PathBuf,
    },
    /// Add items from a CSV or record file to a corpus (created if absent).
    Import {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_enum)]
        format: FormatArg,
        file: PathBuf,
        #[arg(long)]
        into: PathBuf,
    },
    /// Write a corpus as CSV (one kind) or as records.
    Export {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "records")]
        format: FormatArg,
        /// Required for CSV; filters records.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats { corpus: PathBuf },
    /// Export the exchange network document.
    Network {
        corpus: PathBuf,
        /// Written to standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank providable data against one request.
    Match {
        corpus: PathBuf,
        #[arg(long)]
        request: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Scenario report per request category.
    Report {
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Compare two corpora on one metadata dimension.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum)]
        dimension: DimensionArg,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn persistence_error(path: &Path, e: PersistenceError) -> CliError {
    match e {
        PersistenceError::Io { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

fn write_error(e: io::Error) -> CliError {
    CliError::Usage(format!("write failed: {e}"))
}

fn load(path: &Path, policy: FieldPolicy) -> CliResult<Corpus> {
    load_corpus_with(path, policy).map_err(|e| persistence_error(path, e))
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents always serialize");
    s.push('\n');
    s
}

/// Parses `args` and runs the command, writing to `out` and `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let policy = if cli.lenient {
        FieldPolicy::Lenient
    } else {
        FieldPolicy::Strict
    };
    let text = match &cli.command {
        Command::Serve { port, host, data } => return serve(*host, *port, data),
        Command::Import {
            kind,
            format,
            file,
            into,
        } => import(cli.json, policy, (*kind).into(), *format, file, into, err)?,
        Command::Export {
            corpus,
            format,
            kind,
            out: dest,
        } => {
            let corpus = load(corpus, policy)?;
            let text = export(&corpus, *format, kind.map(Into::into))?;
            match dest {
                Some(path) => {
                    fs::write(path, &text).map_err(|e| {
                        CliError::Usage(format!("{}: {e}", path.display()))
                    })?;
                    String::new()
                }
                None => text,
            }
        }
        Command::Stats { corpus } => {
            let corpus = load(corpus, policy)?;
            if cli.json {
                json_line(&stats_document(&corpus, None))
            } else {
                let stats = corpus_stats(&corpus);
                format!(
                    "{}\n\n{}",
                    render_stats_summary(&stats),
                    render_stats_table(&stats)
                )
            }
        }
        Command::Network { corpus, out: dest } => {
            let corpus = load(corpus, policy)?;
            let network = build_network(&corpus);
            let doc = NetworkDocument::from_network(&network);
            match dest {
                Some(path) => {
                    fs::write(path, doc.render())
                        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                    if cli.json {
                        doc.render()
                    } else {
                        format!(
                            "{} nodes, {} edges written to {}\n",
                            network.nodes.len(),
                            network.edges.len(),
                            path.display()
                        )
                    }
                }
                None => doc.render(),
            }
        }
        Command::Match {
            corpus,
            request,
            top,
        } => {
            let corpus = load(corpus, policy)?;
            render_match(cli.json, &corpus, request, *top)?
        }
        Command::Report { corpus, top } => {
            let corpus = load(corpus, policy)?;
            let doc = report_document(&corpus, None);
            if cli.json {
                json_line(&doc)
            } else {
                doc.report.render(*top)
            }
        }
        Command::Compare { a, b, dimension } => {
            let ca = load(a, policy)?;
            let cb = load(b, policy)?;
            let paired = compare_breakdowns(&ca, &cb, (*dimension).into());
            if cli.json {
                json_line(&paired)
            } else {
                format!(
                    "A = {}\nB = {}\n\n{}",
                    a.display(),
                    b.display(),
                    paired.render("A", "B")
                )
            }
        }
    };
    out.write_all(text.as_bytes()).map_err(write_error)
}

fn import(
    json: bool,
    policy: FieldPolicy,
    kind: DataKind,
    format: FormatArg,
    file: &Path,
    into: &Path,
    err: &mut dyn Write,
) -> CliResult<String> {
    let mut corpus = if into.exists() {
        load(into, policy)?
    } else {
        Corpus::new()
    };
    let imported = match format {
        FormatArg::Csv => import_csv(file, kind),
        FormatArg::Records => import_records(file, kind),
    }
    .map_err(|e| match e {
        ImportError::Io { .. } => CliError::Usage(e.to_string()),
        ImportError::HeaderMismatch(_) => CliError::Data(format!("{}: {e}", file.display())),
    })?;
    if !imported.errors.is_empty() {
        for e in &imported.errors {
            let _ = writeln!(err, "{}: {e}", file.display());
        }
        return Err(CliError::Data(format!(
            "{} invalid row(s); nothing imported",
            imported.errors.len()
        )));
    }
    let mut ids = Vec::new();
    for item in imported.items {
        let id = corpus
            .insert(item)
            .map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
        ids.push(id);
    }
    save_corpus(&corpus, into).map_err(|e| persistence_error(into, e))?;
    Ok(if json {
        ids.iter()
            .filter_map(|id| corpus.get(id))
            .map(|item| render_item(&corpus, item))
            .collect()
    } else {
        format!("imported {} {kind} item(s) into {}\n", ids.len(), into.display())
    })
}

fn export(corpus: &Corpus, format: FormatArg, kind: Option<DataKind>) -> CliResult<String> {
    match format {
        FormatArg::Records => Ok(match kind {
            None => render_corpus(corpus),
            Some(k) => corpus
                .items_of(k)
                .map(|item| render_item(corpus, item))
                .collect(),
        }),
        FormatArg::Csv => {
            let kind = kind.ok_or_else(|| {
                CliError::Usage("--format csv needs --kind request|providable".into())
            })?;
            let mut buf = Vec::new();
            export_csv_writer(corpus, kind, &mut buf).map_err(|e| match e {
                ExportError::Delimiter { .. } => CliError::Data(e.to_string()),
                other => CliError::Usage(other.to_string()),
            })?;
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
    }
}

fn render_match(json: bool, corpus: &Corpus, request: &str, top: usize) -> CliResult<String> {
    let doc = matches_document(corpus, None, request, Some(top)).map_err(|e| match e {
        RegistryError::UnknownRequest(_) => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    if json {
        return Ok(json_line(&doc));
    }
    let item = corpus.get(request).expect("request exists");
    let mut out = format!(
        "request {}: {} ({} variables)\n",
        request,
        item.name(),
        item.variables().len()
    );
    if doc.unmet {
        out.push_str("unmet: no providable data covers every requested variable\n");
    }
    if doc.matches.is_empty() {
        out.push_str("no providable data shares a variable with this request\n");
    }
    for (rank, m) in doc.matches.iter().enumerate() {
        let missing: Vec<&str> = m.missing.iter().map(|l| l.as_str()).collect();
        out.push_str(&format!(
            "{:>3}. {}  coverage {} ({}/{})  jacket variables {}",
            rank + 1,
            m.jacket_id,
            format_two_decimals(m.coverage),
            m.covered.len(),
            m.covered.len() + m.missing.len(),
            m.jacket_size
        ));
        if !missing.is_empty() {
            out.push_str(&format!("  missing: {}", missing.join(", ")));
        }
        out.push('\n');
    }
    Ok(out)
}

fn serve(host: IpAddr, port: u16, data: &Path) -> CliResult<()> {
    let registry = Registry::open(data).map_err(|e| match e {
        StoreError::Io { .. } => CliError::Usage(e.to_string()),
        StoreError::Corpus(inner) => persistence_error(data, inner),
        other => CliError::Data(other.to_string()),
    })?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    let addr = SocketAddr::new(host, port);
    runtime
        .block_on(teeda_service::http::serve(
            Arc::new(registry),
            addr,
            async {
                let _ = tokio::signal::ctrl_c().await;
            },
        ))
        .map_err(|e| CliError::Usage(format!("{addr}: {e}")))
}
