use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::str::FromStr;

use archdelta_core::metrics::{SimilarityBreakdown, Variant};
use archdelta_core::store::{export_view, to_versioned_json, CacheLayout, ExportFormat};
use archdelta_core::views::ViewKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use comfy_table::presets::UTF8_BORDERS_ONLY;
use comfy_table::Table;

use crate::analyze::{analyze, AnalyzeOptions, AnalyzeOutcome};
use crate::payload::{self, AppError, AppResult, DiffPayload, EXIT_ENV, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "archdelta",
    version,
    about = "Release-by-release architecture views, diffs and metrics for Python repositories"
)]
pub struct Cli {
    /// Cache directory
    #[arg(
        long,
        global = true,
        env = "ARCHDELTA_CACHE",
        default_value = ".archdelta"
    )]
    pub cache: PathBuf,

    /// Output format; defaults to json for `view` and table otherwise
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for extraction (default: one per CPU)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract snapshots and cohesion reports for the tags of a repository
    Analyze {
        /// Local path or git URL
        locator: String,
        /// Comma-separated subset of tags
        #[arg(long, value_delimiter = ',')]
        tags: Option<Vec<String>>,
    },
    /// Print one view of a cached snapshot
    View {
        #[command(flatten)]
        at: TagArgs,
        #[arg(long, value_parser = parse_kind)]
        kind: ViewKind,
        /// Directory scope, repository root when omitted
        #[arg(long, default_value = "")]
        path: String,
    },
    /// Added/removed components and similarity scores between two tags
    Diff {
        #[arg(long)]
        repo: String,
        #[arg(long)]
        base: String,
        #[arg(long)]
        head: String,
        #[arg(long, value_parser = parse_kind, default_value = "directory")]
        kind: ViewKind,
        #[arg(long, default_value = "")]
        path: String,
    },
    /// LCOM4 of every class at one tag
    Cohesion {
        #[command(flatten)]
        at: TagArgs,
    },
    /// Serve the cache over HTTP
    Serve {
        #[arg(long, default_value_t = 8070)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Allowed CORS origin (default: any)
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct TagArgs {
    /// Repository id or locator
    #[arg(long)]
    pub repo: String,
    #[arg(long)]
    pub tag: String,
}

fn parse_kind(s: &str) -> Result<ViewKind, String> {
    ViewKind::from_str(s).map_err(|e| e.to_string())
}

fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .try_init();
}

/// Parses `args` and runs the command, writing data to `out`. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging();
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            if e.is_missing_cache() {
                log::error!("run `archdelta analyze <locator>` first");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> AppResult<i32> {
    let cache = CacheLayout::new(&cli.cache);
    let format = cli.format;
    let write = |out: &mut dyn Write, bytes: &[u8]| {
        out.write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|e| AppError::Usage(format!("cannot write output: {e}")))
    };
    let no_dot = |command: &str| -> AppResult<()> {
        if format == Some(Format::Dot) {
            return Err(AppError::Usage(format!(
                "--format dot is only available for `view`, not `{command}`"
            )));
        }
        Ok(())
    };
    match cli.command {
        Command::Analyze { locator, tags } => {
            no_dot("analyze")?;
            let outcome = analyze(
                &cache,
                &AnalyzeOptions {
                    locator,
                    tags,
                    jobs: cli.jobs,
                },
            )?;
            let bytes = match format.unwrap_or(Format::Table) {
                Format::Json => to_versioned_json(&outcome)?,
                _ => analyze_table(&outcome).into_bytes(),
            };
            write(out, &bytes)?;
        }
        Command::View { at, kind, path } => {
            let repo_id = payload::resolve_repo(&cache, &at.repo);
            let bytes = match format.unwrap_or(Format::Json) {
                Format::Json => payload::view_json(&cache, &repo_id, &at.tag, kind, &path)?,
                Format::Dot => export_view(
                    &payload::load_view(&cache, &repo_id, &at.tag, kind, &path)?,
                    ExportFormat::Dot,
                )?,
                Format::Table => {
                    view_table(&payload::load_view(&cache, &repo_id, &at.tag, kind, &path)?)
                        .into_bytes()
                }
            };
            write(out, &bytes)?;
        }
        Command::Diff {
            repo,
            base,
            head,
            kind,
            path,
        } => {
            no_dot("diff")?;
            let repo_id = payload::resolve_repo(&cache, &repo);
            let bytes = match format.unwrap_or(Format::Table) {
                Format::Json => payload::diff_json(&cache, &repo_id, &base, &head, kind, &path)?,
                _ => diff_table(&payload::diff_payload(
                    &cache, &repo_id, &base, &head, kind, &path,
                )?)
                .into_bytes(),
            };
            write(out, &bytes)?;
        }
        Command::Cohesion { at } => {
            no_dot("cohesion")?;
            let repo_id = payload::resolve_repo(&cache, &at.repo);
            let bytes = match format.unwrap_or(Format::Table) {
                Format::Json => payload::cohesion_json(&cache, &repo_id, &at.tag)?,
                _ => cohesion_table(&archdelta_core::store::load_cohesion(
                    &cache, &repo_id, &at.tag,
                )?)
                .into_bytes(),
            };
            write(out, &bytes)?;
        }
        Command::Serve {
            port,
            host,
            cors_origin,
        } => {
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| AppError::Usage(format!("cannot start runtime: {e}")))?;
            let addr = SocketAddr::new(host, port);
            if let Err(e) = runtime.block_on(crate::api::serve(cache, addr, cors_origin, cli.jobs))
            {
                log::error!("cannot serve on {addr}: {e}");
                return Ok(EXIT_ENV);
            }
        }
    }
    Ok(EXIT_OK)
}

fn table(header: &[&str]) -> Table {
    let mut t = Table::new();
    t.load_preset(UTF8_BORDERS_ONLY).set_header(header.to_vec());
    t
}

fn finish(t: Table) -> String {
    format!("{t}\n")
}

fn analyze_table(outcome: &AnalyzeOutcome) -> String {
    let mut t = table(&[
        "tag",
        "files",
        "functions",
        "classes",
        "parse failures",
        "cached",
    ]);
    for s in &outcome.summaries {
        t.add_row(vec![
            s.tag.clone(),
            s.files.to_string(),
            s.functions.to_string(),
            s.classes.to_string(),
            s.parse_failures.to_string(),
            if s.cached { "yes" } else { "no" }.to_string(),
        ]);
    }
    finish(t)
}

fn view_table(g: &archdelta_core::views::ViewGraph) -> String {
    let mut t = table(&["id", "kind", "label", "qualified name", "external"]);
    for n in &g.nodes {
        t.add_row(vec![
            n.id.to_string(),
            n.kind.display_name().to_string(),
            n.label.clone(),
            n.qualified_name.clone(),
            if n.is_external { "yes" } else { "" }.to_string(),
        ]);
    }
    format!(
        "{} view of '{}': {} nodes, {} edges\n{}",
        g.view,
        g.scope,
        g.nodes.len(),
        g.edges.len(),
        finish(t)
    )
}

fn diff_table(p: &DiffPayload) -> String {
    let mut changes = table(&["change", "kind", "component"]);
    for (sign, items) in [("+", &p.diff.added), ("-", &p.diff.removed)] {
        for i in items {
            changes.add_row(vec![
                sign.to_string(),
                i.kind.display_name().to_string(),
                i.key.clone(),
            ]);
        }
    }
    let mut scores = table(&[
        "variant", "score", "addC", "remC", "addE", "remE", "mto", "aco base", "aco head",
    ]);
    for v in Variant::ALL {
        let b: &SimilarityBreakdown = p.similarity.get(v);
        scores.add_row(vec![
            v.to_string(),
            format!("{:.2}", b.score),
            b.add_c.to_string(),
            b.rem_c.to_string(),
            b.add_e.to_string(),
            b.rem_e.to_string(),
            b.mto.to_string(),
            b.aco_i.to_string(),
            b.aco_j.to_string(),
        ]);
    }
    format!(
        "{} -> {}, {} view of '{}': {} added, {} removed\n{}{}",
        p.diff.base,
        p.diff.head,
        p.diff.view,
        p.diff.scope,
        p.diff.added.len(),
        p.diff.removed.len(),
        finish(changes),
        finish(scores)
    )
}

fn cohesion_table(r: &archdelta_core::metrics::CohesionReport) -> String {
    let mut t = table(&["class", "lcom4", "methods"]);
    for e in &r.entries {
        t.add_row(vec![
            e.class.clone(),
            e.lcom4.to_string(),
            e.methods.to_string(),
        ]);
    }
    finish(t)
}
