//! `coupevo`: record metamodel histories and migrate models with them.
//!
//! Exit codes: 0 on success, 1 on a domain error (or a non-empty diff, a
//! failed constraint, a non-conforming model), 2 on a usage error.

use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use coupevo_core::catalog::{check_applicability, find_operation, list_operations, parse_arg, OperationApplication};
use coupevo_core::diff::{convergence, diff_metamodels, diff_models, DiffModel, MatchPolicy};
use coupevo_core::history::{render_stats_table, stats_table, History, HistoryError, Point, Primitive};
use coupevo_core::meta::{load_metamodel, render_metamodel, validate_metamodel, Metamodel};
use coupevo_core::migrate::{migrate, HookRegistry, MigrateError};
use coupevo_core::model::{check_conformance, load_resource_set, render_resource, ResourceSet};
use coupevo_core::scenario;

#[derive(Parser)]
#[command(name = "coupevo", version, about = "Coupled evolution of metamodels and models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record and inspect a metamodel history.
    #[command(subcommand)]
    History(HistoryCmd),
    /// Browse the catalog of reusable coupled operations.
    #[command(subcommand)]
    Ops(OpsCmd),
    /// Migrate model files to the newest release of a history.
    Migrate {
        history: PathBuf,
        #[arg(required = true)]
        models: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Bundled scenario whose custom migration hooks to use.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Check model files against a metamodel.
    Validate { metamodel: PathBuf, models: Vec<PathBuf> },
    /// Structural difference between two metamodels.
    DiffMm {
        a: PathBuf,
        b: PathBuf,
        /// Also write the differences as a `.diff.json` document.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Structural difference between two model sets.
    DiffModel {
        #[arg(required = true)]
        a: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        against: Vec<PathBuf>,
        #[arg(long)]
        ignore_ref_order: bool,
        /// Metamodel whose identifier attributes drive object matching.
        #[arg(long)]
        mm: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Bundled example scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Subcommand)]
enum HistoryCmd {
    /// Create a history for an existing metamodel.
    Create {
        metamodel: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Apply a reusable operation and record it.
    Apply {
        history: PathBuf,
        operation: String,
        /// Operation argument as `name=value`; lists are comma separated.
        #[arg(long = "arg", value_name = "K=V")]
        args: Vec<String>,
        /// Metamodel to converge on; prints the remaining difference count.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Record a primitive metamodel edit given as JSON.
    Primitive { history: PathBuf, change: String },
    /// Attach a custom migration to the trailing primitive edits.
    Attach {
        history: PathBuf,
        hook: String,
        #[arg(long)]
        span: usize,
        #[arg(long)]
        label: Option<String>,
    },
    /// Remove the last change of the open release.
    Undo { history: PathBuf },
    /// Seal the open release under a label.
    Release {
        history: PathBuf,
        label: String,
        /// Seal even when the open release is empty.
        #[arg(long)]
        force: bool,
    },
    /// List releases and their changes.
    Show { history: PathBuf },
    /// Count operation applications.
    Stats { history: PathBuf },
    /// Write the metamodel at a release ordinal, or `head`.
    Reconstruct {
        history: PathBuf,
        #[arg(long)]
        at: String,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum OpsCmd {
    List,
    Describe { name: String },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    List,
    /// Record a bundled scenario's history from its initial metamodel.
    Build(BuildArgs),
}

#[derive(Args)]
struct BuildArgs {
    name: String,
    #[arg(long)]
    from: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

/// Report styling; `COUPEVO_COLOR=never` disables it.
struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        let never = std::env::var("COUPEVO_COLOR").is_ok_and(|v| v == "never");
        Style { color: !never && std::io::stdout().is_terminal() }
    }

    fn paint(&self, text: &str, ok: bool) -> String {
        match (self.color, ok) {
            (false, _) => text.to_string(),
            (true, true) => format!("\x1b[32m{text}\x1b[0m"),
            (true, false) => format!("\x1b[31m{text}\x1b[0m"),
        }
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("cannot write `{}`", path.display()))?;
    Ok(())
}

fn load_history(path: &Path) -> Result<History> {
    Ok(History::load(path)?)
}

fn save_history(h: &History, path: &Path) -> Result<()> {
    write_atomic(path, &h.to_json())
}

fn load_mm(path: &Path) -> Result<Metamodel> {
    Ok(load_metamodel(path)?)
}

fn load_models(paths: &[PathBuf]) -> Result<ResourceSet> {
    Ok(load_resource_set(paths)?)
}

fn build_application(op: &str, raw: &[String]) -> Result<OperationApplication> {
    let spec = find_operation(op).ok_or_else(|| anyhow!("unknown operation `{op}` (see `coupevo ops list`)"))?.spec();
    let mut app = OperationApplication::new(spec.name);
    for item in raw {
        let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("argument `{item}` is not of the form name=value"))?;
        let p =
            spec.params.iter().find(|p| p.name == k).ok_or_else(|| anyhow!("{}: unknown argument `{k}`", spec.name))?;
        let value = parse_arg(p.ty, v).ok_or_else(|| anyhow!("{}: cannot parse `{v}` for `{k}`", spec.name))?;
        app = app.arg(k, value);
    }
    Ok(app)
}

fn history_cmd(cmd: HistoryCmd, style: &Style) -> Result<bool> {
    match cmd {
        HistoryCmd::Create { metamodel, out, force } => {
            if out.exists() && !force {
                bail!("`{}` already exists; pass --force to overwrite", out.display());
            }
            let h = History::create(&load_mm(&metamodel)?)?;
            save_history(&h, &out)?;
            println!("created history `{}`", out.display());
        }
        HistoryCmd::Apply { history, operation, args, target } => {
            let mut h = load_history(&history)?;
            let app = build_application(&operation, &args)?;
            let results = check_applicability(&app, h.head())?;
            let failed = results.iter().filter(|r| !r.satisfied).count();
            for r in &results {
                let line = r.to_string();
                println!("{}", style.paint(&line, r.satisfied));
            }
            if failed > 0 {
                println!("constraints: {failed} of {} failed; nothing recorded", results.len());
                return Ok(false);
            }
            h.record(app)?;
            save_history(&h, &history)?;
            println!("constraints: all satisfied");
            if let Some(t) = target {
                println!("diff entries: {}", convergence(h.head(), &load_mm(&t)?).len());
            }
        }
        HistoryCmd::Primitive { history, change } => {
            let mut h = load_history(&history)?;
            let p: Primitive = serde_json::from_str(&change).context("primitive change must be a JSON document")?;
            h.record_primitive(p.clone())?;
            save_history(&h, &history)?;
            println!("recorded: {p}");
        }
        HistoryCmd::Attach { history, hook, span, label } => {
            let mut h = load_history(&history)?;
            h.attach_migration(&hook, span, label.as_deref())?;
            save_history(&h, &history)?;
            println!("attached `{hook}` over {span} change(s)");
        }
        HistoryCmd::Undo { history } => {
            let mut h = load_history(&history)?;
            let undone = h.undo_last()?;
            save_history(&h, &history)?;
            println!("undone: {undone}");
        }
        HistoryCmd::Release { history, label, force } => {
            let mut h = load_history(&history)?;
            h.release(&label, force)?;
            save_history(&h, &history)?;
            println!("released `{label}`");
        }
        HistoryCmd::Show { history } => {
            let h = load_history(&history)?;
            for (i, r) in h.releases().iter().enumerate() {
                let state = if r.released { "released" } else { "open" };
                let uri = h.reconstruct(Point::Release(i))?.ns_uris().join(", ");
                println!("release {i} `{}` ({state}, {} change(s)) {uri}", r.label, r.changes.len());
                for (j, c) in r.changes.iter().enumerate() {
                    println!("  {j:>3}. {c}");
                }
            }
        }
        HistoryCmd::Stats { history } => {
            print!("{}", render_stats_table(&stats_table(&load_history(&history)?)));
        }
        HistoryCmd::Reconstruct { history, at, out } => {
            let h = load_history(&history)?;
            let point = if at == "head" {
                Point::Head
            } else {
                Point::Release(at.parse().map_err(|_| anyhow!("--at takes a release ordinal or `head`"))?)
            };
            write_atomic(&out, &render_metamodel(&h.reconstruct(point)?))?;
            println!("wrote `{}`", out.display());
        }
    }
    Ok(true)
}

fn ops_cmd(cmd: OpsCmd) -> Result<bool> {
    match cmd {
        OpsCmd::List => {
            for op in list_operations() {
                println!("{}", op.name);
            }
        }
        OpsCmd::Describe { name } => {
            let spec = find_operation(&name).ok_or_else(|| anyhow!("unknown operation `{name}`"))?.spec();
            println!("{}\n  {}\nparameters:", spec.name, spec.documentation);
            for p in &spec.params {
                let req = if p.required { "required" } else { "optional" };
                println!("  {:<14} {:<22} {req:<8} {}", p.name, format!("{:?}", p.ty), p.doc);
            }
            println!("constraints: {}", spec.constraints.join(", "));
        }
    }
    Ok(true)
}

fn registry_for(name: Option<&str>) -> Result<HookRegistry> {
    match name {
        None => Ok(HookRegistry::new()),
        Some(n) => scenario::registry(n).ok_or_else(|| anyhow!("unknown scenario `{n}`")),
    }
}

fn migrate_cmd(history: &Path, models: &[PathBuf], out: &Path, scenario_name: Option<&str>) -> Result<bool> {
    let h = load_history(history)?;
    let set = load_models(models)?;
    let registry = registry_for(scenario_name)?;
    let (migrated, report) = match migrate(&set, &h, &registry) {
        Ok(r) => r,
        Err(e @ MigrateError::History(HistoryError::UnknownNsUri { .. })) => bail!("unknown release: {e}"),
        Err(e) => return Err(e.into()),
    };
    // Render everything before touching the output directory.
    let files: Vec<(PathBuf, String)> =
        migrated.resources.iter().map(|r| (out.join(&r.uri), render_resource(&migrated.ns_uri, r))).collect();
    for (path, text) in &files {
        write_atomic(path, text)?;
    }
    println!("{report}");
    for (path, _) in &files {
        println!("wrote `{}`", path.display());
    }
    Ok(true)
}

fn print_diff(d: &DiffModel, json: Option<&Path>) -> Result<bool> {
    println!("{d}");
    if let Some(p) = json {
        write_atomic(p, &d.to_json())?;
    }
    Ok(d.is_empty())
}

fn run(cli: Cli) -> Result<bool> {
    let style = Style::detect();
    match cli.command {
        Command::History(c) => history_cmd(c, &style),
        Command::Ops(c) => ops_cmd(c),
        Command::Migrate { history, models, out, scenario } => {
            migrate_cmd(&history, &models, &out, scenario.as_deref())
        }
        Command::Validate { metamodel, models } => {
            let mm = load_mm(&metamodel)?;
            let meta = validate_metamodel(&mm);
            for v in &meta {
                println!("{}", style.paint(&v.to_string(), false));
            }
            if !meta.is_empty() {
                println!("metamodel: {} violation(s)", meta.len());
                return Ok(false);
            }
            if models.is_empty() {
                println!("metamodel: valid");
                return Ok(true);
            }
            let violations = check_conformance(&load_models(&models)?, &mm);
            for v in &violations {
                println!("{}", style.paint(&v.to_string(), false));
            }
            println!("conformance: {} violation(s)", violations.len());
            Ok(violations.is_empty())
        }
        Command::DiffMm { a, b, json } => print_diff(&diff_metamodels(&load_mm(&a)?, &load_mm(&b)?), json.as_deref()),
        Command::DiffModel { a, against, ignore_ref_order, mm, json } => {
            let mm = mm.as_deref().map(load_mm).transpose()?;
            let policy = MatchPolicy { ignore_reference_order: ignore_ref_order };
            let d = diff_models(&load_models(&a)?, &load_models(&against)?, mm.as_ref(), policy)?;
            print_diff(&d, json.as_deref())
        }
        Command::Scenario(ScenarioCmd::List) => {
            println!("{}", scenario::NAME);
            Ok(true)
        }
        Command::Scenario(ScenarioCmd::Build(b)) => {
            if b.name != scenario::NAME {
                bail!("unknown scenario `{}`", b.name);
            }
            let h = scenario::build_history(&load_mm(&b.from)?)?;
            save_history(&h, &b.out)?;
            println!("wrote `{}` ({} release(s))", b.out.display(), h.releases().len());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
