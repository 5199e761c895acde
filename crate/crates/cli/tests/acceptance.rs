//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report is always printed; exits non-zero on any failure.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use coupevo_core::catalog::OperationApplication;
use coupevo_core::diff::{diff_metamodels, diff_models, MatchPolicy};
use coupevo_core::history::{history_stats, History, HistoryError, Point};
use coupevo_core::meta::load_metamodel;
use coupevo_core::meta::Literal;
use coupevo_core::migrate::{migrate, MigrateError};
use coupevo_core::model::{check_references, load_resource_set, MObject, Resource, ResourceSet, Value};
use coupevo_core::scenario;

// Pinned limits.
const CATALOG_SIZE: usize = 34;
const CATALOG_LIMIT: Duration = Duration::from_secs(1);
const FIXTURES_PER_OP: usize = 25;
const MAX_ATTEMPTS_PER_OP: usize = 4000;
const TRANSACTION_LIMIT: Duration = Duration::from_secs(30);
const ROUND_TRIP_CASES: usize = 25;
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(5);
const GOLDEN_LIMIT: Duration = Duration::from_secs(5);
const MIN_REUSABLE_KINDS: usize = 12;
const CUSTOM_LABELS: [&str; 2] = ["Initialize FigureAccessor.typedFigure", "Decouple FigureHandle.referencingElements"];
const RELEASE_LABELS: [&str; 3] = ["1.0", "2.0", "2.1"];
const DETECTION_LIMIT: Duration = Duration::from_secs(2);
const MODEL_FILES: [&str; 2] = ["canvas.model.json", "figures.model.json"];

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixtures() -> PathBuf {
    root().join("fixtures/minigmf")
}

fn coupevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coupevo")).args(args).env("COUPEVO_COLOR", "never").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn inputs() -> Vec<String> {
    MODEL_FILES.iter().map(|f| path_str(&fixtures().join("models/v1.0").join(f))).collect()
}

/// Runs the golden migration through the CLI into `out`.
fn migrate_golden(out: &Path) -> Result<(), String> {
    let history = path_str(&fixtures().join("history.json"));
    let out_s = path_str(out);
    let mut args = vec!["migrate", history.as_str()];
    let ins = inputs();
    args.extend(ins.iter().map(String::as_str));
    args.extend(["-o", out_s.as_str(), "--scenario", scenario::NAME]);
    let o = coupevo(&args);
    ensure(o.status.success(), || format!("migrate failed: {}", String::from_utf8_lossy(&o.stderr)))
}

fn load_history() -> Result<History, String> {
    History::load(&fixtures().join("history.json")).map_err(|e| e.to_string())
}

fn catalog_completeness() -> Check {
    let start = Instant::now();
    let o = coupevo(&["ops", "list"]);
    let elapsed = start.elapsed();
    ensure(o.status.success(), || "ops list failed".into())?;
    let listed: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    let committed = fs::read_to_string(fixtures().join("operations.txt")).map_err(|e| e.to_string())?;
    let expected: BTreeSet<String> = committed.lines().filter(|l| !l.is_empty()).map(str::to_string).collect();
    let got: BTreeSet<String> = listed.iter().cloned().collect();
    ensure(listed.len() == CATALOG_SIZE && got.len() == CATALOG_SIZE, || {
        format!("{} operations listed", listed.len())
    })?;
    ensure(got == expected, || {
        format!(
            "missing {:?}, unexpected {:?}",
            expected.difference(&got).collect::<Vec<_>>(),
            got.difference(&expected).collect::<Vec<_>>()
        )
    })?;
    within(elapsed, CATALOG_LIMIT)?;
    Ok(format!("{CATALOG_SIZE} operations match the committed list"))
}

fn transaction_suite() -> Check {
    let report = support::transaction_suite(FIXTURES_PER_OP, MAX_ATTEMPTS_PER_OP);
    let mut problems = Vec::new();
    for t in &report.tallies {
        if t.migrated < FIXTURES_PER_OP {
            problems.push(format!("{}: {} conforming fixtures", t.op, t.migrated));
        }
        if t.rejected == 0 {
            problems.push(format!("{}: no constraint-failing fixture", t.op));
        }
        problems.extend(t.failures.iter().map(|f| format!("{}: {f}", t.op)));
    }
    ensure(problems.is_empty(), || problems.join("; "))?;
    within(report.elapsed, TRANSACTION_LIMIT)?;
    let migrated: usize = report.tallies.iter().map(|t| t.migrated).sum();
    let rejected: usize = report.tallies.iter().map(|t| t.rejected).sum();
    let refused: usize = report.tallies.iter().map(|t| t.refused).sum();
    Ok(format!(
        "{} operations, {migrated} conforming, {rejected} rejected and {refused} refused fixtures, inputs untouched",
        report.tallies.len()
    ))
}

fn round_trips() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (name, trip) in [
        ("enumeration/subclasses", support::enum_subclass_round_trip as fn(u64) -> support::Trip),
        ("set visibility", support::set_visibility_round_trip),
    ] {
        let (checked, failures) = support::round_trips(trip, ROUND_TRIP_CASES);
        ensure(checked == ROUND_TRIP_CASES, || format!("{name}: only {checked} eligible fixtures"))?;
        ensure(failures.is_empty(), || format!("{name}: {}", failures.join("; ")))?;
        lines.push(format!("{name} x{checked}"));
    }
    within(start.elapsed(), ROUND_TRIP_LIMIT)?;
    Ok(format!("{} compose to identity", lines.join(", ")))
}

fn golden_scenario() -> Check {
    let start = Instant::now();
    let h = load_history()?;
    let sealed: Vec<&str> = h.sealed().map(|(_, r)| r.label.as_str()).collect();
    ensure(sealed == RELEASE_LABELS, || format!("sealed releases {sealed:?}"))?;
    let stats = history_stats(&h);
    let reusable = stats.keys().filter(|k| *k != "Custom").count();
    ensure(reusable >= MIN_REUSABLE_KINDS, || format!("{reusable} distinct reusable operations"))?;
    ensure(stats.get("Custom") == Some(&2), || format!("custom count {:?}", stats.get("Custom")))?;
    let customs: BTreeSet<String> = h
        .releases()
        .iter()
        .flat_map(|r| r.changes.iter())
        .filter_map(|c| match c {
            coupevo_core::history::Change::Custom(m) => Some(m.label.clone()),
            _ => None,
        })
        .collect();
    ensure(customs == CUSTOM_LABELS.iter().map(|s| s.to_string()).collect(), || {
        format!("custom migrations {customs:?}")
    })?;

    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    migrate_golden(out.path())?;
    let migrated = load_resource_set(&MODEL_FILES.map(|f| out.path().join(f))).map_err(|e| e.to_string())?;
    let expected =
        load_resource_set(&MODEL_FILES.map(|f| fixtures().join("expected/v2.1").join(f))).map_err(|e| e.to_string())?;
    let mm = load_metamodel(&fixtures().join("metamodel-2.1.mm.json")).map_err(|e| e.to_string())?;
    let policy = MatchPolicy { ignore_reference_order: true };
    let d = diff_models(&migrated, &expected, Some(&mm), policy).map_err(|e| e.to_string())?;
    ensure(d.is_empty(), || format!("diff against expected:\n{d}"))?;
    let bytes_equal = MODEL_FILES
        .iter()
        .all(|f| fs::read(out.path().join(f)).ok() == fs::read(fixtures().join("expected/v2.1").join(f)).ok());
    within(start.elapsed(), GOLDEN_LIMIT)?;
    Ok(format!(
        "{reusable} reusable kinds, 2 customs, empty diff against expected{}",
        if bytes_equal { " (byte-identical)" } else { "" }
    ))
}

fn canvas_only(ns_uri: &str) -> ResourceSet {
    let mut r = Resource::new("canvas.model.json");
    r.roots.push(MObject::new("c", "gmfgraph.Canvas").with("name", vec![Value::Prim(Literal::Str("main".into()))]));
    ResourceSet { ns_uri: ns_uri.into(), resources: vec![r] }
}

fn release_detection() -> Check {
    let start = Instant::now();
    let h = load_history()?;
    let registry = scenario::registry(scenario::NAME).ok_or("scenario registry missing")?;
    let mut seen = Vec::new();
    for (i, _) in h.sealed() {
        let mm = h.reconstruct(Point::Release(i)).map_err(|e| e.to_string())?;
        let uri = mm.ns_uris()[0].to_string();
        let (_, report) = migrate(&canvas_only(&uri), &h, &registry).map_err(|e| format!("release {i}: {e}"))?;
        ensure(report.source_release == i, || format!("{uri} detected as {} instead of {i}", report.source_release))?;
        seen.push(i);
    }
    let unknown = canvas_only("http://www.eclipse.org/gmf/2004/GraphicalDefinition");
    let before = unknown.clone();
    let err = migrate(&unknown, &h, &registry);
    ensure(matches!(err, Err(MigrateError::History(HistoryError::UnknownNsUri { .. }))), || {
        "unknown URI was not refused".into()
    })?;
    ensure(unknown == before, || "input changed".into())?;

    // Through the CLI nothing is written either.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = dir.path().join("canvas.model.json");
    fs::write(&model, coupevo_core::model::render_resource(&unknown.ns_uri, &unknown.resources[0]))
        .map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let o =
        coupevo(&["migrate", &path_str(&fixtures().join("history.json")), &path_str(&model), "-o", &path_str(&out)]);
    ensure(o.status.code() == Some(1), || format!("exit code {:?}", o.status.code()))?;
    ensure(String::from_utf8_lossy(&o.stderr).contains("unknown release"), || "no `unknown release` message".into())?;
    ensure(!out.exists(), || "output written for an unknown release".into())?;
    within(start.elapsed(), DETECTION_LIMIT)?;
    Ok(format!("releases {seen:?} detected from their URIs, unknown URI refused before mutation"))
}

fn multi_file() -> Check {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    migrate_golden(out.path())?;
    let mut written: Vec<String> = fs::read_dir(out.path())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    written.sort();
    ensure(written == MODEL_FILES, || format!("outputs {written:?}"))?;
    let set = load_resource_set(&MODEL_FILES.map(|f| out.path().join(f))).map_err(|e| e.to_string())?;
    check_references(&set).map_err(|e| e.to_string())?;
    let mut cross = 0;
    for r in &set.resources {
        for root in &r.roots {
            root.walk(&mut |o| {
                cross += o
                    .slots
                    .values()
                    .flatten()
                    .filter(|v| v.as_ref_target().is_some_and(|t| t.resource != r.uri))
                    .count();
            });
        }
    }
    ensure(cross > 0, || "no cross-file references in the outputs".into())?;
    Ok(format!("2 inputs -> {written:?}, {cross} cross-file references resolve"))
}

fn maintainability() -> Check {
    let h = load_history()?;
    let mut edited = h.clone();
    let app = OperationApplication::new("Document Metamodel Element")
        .arg("element", "gmfgraph.Node")
        .arg("documentation", "A diagram node.");
    edited.record(app).map_err(|e| e.to_string())?;
    ensure(edited != h, || "record had no effect".into())?;
    edited.undo_last().map_err(|e| e.to_string())?;
    ensure(edited == h, || "undo did not restore the history".into())?;
    for (i, label) in RELEASE_LABELS.iter().enumerate() {
        let rebuilt = h.reconstruct(Point::Release(i)).map_err(|e| e.to_string())?;
        let snapshot =
            load_metamodel(&fixtures().join(format!("metamodel-{label}.mm.json"))).map_err(|e| e.to_string())?;
        let d = diff_metamodels(&rebuilt, &snapshot);
        ensure(d.is_empty(), || format!("release {label}:\n{d}"))?;
    }
    Ok("record+undo is the identity; releases 1.0, 2.0, 2.1 reconstruct to the snapshots".into())
}

fn stats_table() -> Check {
    let o = coupevo(&["history", "stats", &path_str(&fixtures().join("history.json"))]);
    ensure(o.status.success(), || "history stats failed".into())?;
    let table = stdout(&o);
    let committed = fs::read_to_string(fixtures().join("stats.txt")).map_err(|e| e.to_string())?;
    ensure(table == committed, || format!("table differs from stats.txt:\n{table}"))?;
    let header: Vec<&str> = table.lines().next().unwrap_or_default().split('|').map(str::trim).collect();
    ensure(header == ["Operation", "Kind", "Number"], || format!("header {header:?}"))?;
    let readme = fs::read_to_string(root().join("README.md")).map_err(|e| e.to_string())?;
    for row in ["| Add Super Type | Reusable | 10 |", "| Custom | 2 |"] {
        ensure(readme.contains(row), || format!("README lacks the cited row `{row}`"))?;
    }
    Ok(format!("{} rows match stats.txt; README cites the published table", table.lines().count() - 2))
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    migrate_golden(a.path())?;
    migrate_golden(b.path())?;
    for f in MODEL_FILES {
        let (x, y) = (
            fs::read(a.path().join(f)).map_err(|e| e.to_string())?,
            fs::read(b.path().join(f)).map_err(|e| e.to_string())?,
        );
        ensure(x == y, || format!("{f} differs between runs"))?;
    }
    Ok("two runs produce byte-identical files".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("catalog completeness", catalog_completeness),
        ("transaction property suite", transaction_suite),
        ("round-trip identities", round_trips),
        ("golden scenario", golden_scenario),
        ("release detection", release_detection),
        ("multi-file preservation", multi_file),
        ("maintainability", maintainability),
        ("stats table", stats_table),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1000.0;
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name} ({ms:.0} ms): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({ms:.0} ms): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
