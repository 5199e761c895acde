//! The migration executor: detects the release a model set was written
//! for and carries it forward to the head of the history.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{self, CatalogError};
use crate::history::{apply_primitive, Change, History, HistoryError, Point};
use crate::meta::Metamodel;
use crate::model::{self, check_conformance, ObjRef, ResourceSet, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MigrateError {
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("no hook registered under `{0}`")]
    MissingHook(String),
    #[error("a hook named `{0}` is already registered")]
    DuplicateHook(String),
    #[error("input does not conform to release `{release}`: {}", list(.violations))]
    InitialNonConformance { release: String, violations: Vec<Violation> },
    #[error("release `{release}`, change {change}: {source}")]
    Operation {
        release: String,
        change: usize,
        #[source]
        source: Box<CatalogError>,
    },
    #[error("release `{release}`, changes {first}..={last}: primitive changes need a custom migration: {}", list(.violations))]
    UnmigratedSpan { release: String, first: usize, last: usize, violations: Vec<Violation> },
    #[error("release `{release}`, change {change}: hook `{hook}` failed: {message}")]
    HookFailed { release: String, change: usize, hook: String, message: String },
    #[error("release `{release}`, change {change}: hook `{hook}` left a non-conforming model: {}", list(.violations))]
    PostConformance { release: String, change: usize, hook: String, violations: Vec<Violation> },
    #[error("migrated model does not conform to the head metamodel: {}", list(.0))]
    FinalNonConformance(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type MigrateResult<T> = Result<T, MigrateError>;

/// What a custom migration sees: the metamodel before and after the
/// primitive changes it is attached to, and the model being migrated.
pub struct HookContext<'a> {
    pub before: &'a Metamodel,
    pub after: &'a Metamodel,
    pub set: &'a mut ResourceSet,
}

impl HookContext<'_> {
    /// Instances of `class` and its subclasses under the new metamodel.
    pub fn instances_of(&self, class: &str) -> Vec<ObjRef> {
        model::instances_of(self.set, self.after, class, true)
    }

    /// Instances of `class` and its subclasses under the old metamodel.
    pub fn instances_before(&self, class: &str) -> Vec<ObjRef> {
        model::instances_of(self.set, self.before, class, true)
    }
}

pub type Hook = Box<dyn Fn(&mut HookContext) -> Result<(), String> + Send + Sync>;

#[derive(Default)]
pub struct HookRegistry {
    hooks: BTreeMap<String, Hook>,
}

impl fmt::Debug for HookRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.hooks.keys()).finish()
    }
}

impl HookRegistry {
    pub fn new() -> Self {
        HookRegistry::default()
    }

    pub fn register(
        &mut self,
        name: &str,
        hook: impl Fn(&mut HookContext) -> Result<(), String> + Send + Sync + 'static,
    ) -> MigrateResult<()> {
        if self.hooks.contains_key(name) {
            return Err(MigrateError::DuplicateHook(name.to_string()));
        }
        self.hooks.insert(name.to_string(), Box::new(hook));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.hooks.keys().map(String::as_str)
    }
}

/// How a change's transaction boundary was confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Conformance was checked right after the change.
    Checked,
    /// A primitive inside a span; checked at the end of the span.
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedChange {
    pub release: String,
    pub index: usize,
    pub change: String,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MigrationReport {
    pub source_release: usize,
    pub source_label: String,
    pub applied: Vec<AppliedChange>,
    pub final_conformance: bool,
    #[serde(skip)]
    pub duration: Duration,
}

impl fmt::Display for MigrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source release: {} (ordinal {})", self.source_label, self.source_release)?;
        writeln!(f, "applied changes: {}", self.applied.len())?;
        for a in &self.applied {
            let b = match a.boundary {
                Boundary::Checked => "conforms",
                Boundary::Deferred => "deferred",
            };
            writeln!(f, "  [{} #{}] {} ... {b}", a.release, a.index, a.change)?;
        }
        writeln!(f, "final conformance: {}", if self.final_conformance { "ok" } else { "FAILED" })?;
        write!(f, "duration: {:.3} ms", self.duration.as_secs_f64() * 1000.0)
    }
}

/// Drops slots whose feature is not in the closure of the object's class.
/// Objects of unknown classes are left for the conformance check.
fn drop_unknown_slots(set: &mut ResourceSet, mm: &Metamodel) {
    let mut doomed = Vec::new();
    for (r, p) in set.objects() {
        let o = set.get(&p);
        if mm.class(&o.class).is_none() {
            continue;
        }
        let known: Vec<&str> = mm.all_features(&o.class).iter().map(|f| f.name.as_str()).collect();
        doomed.extend(o.slots.keys().filter(|k| !known.contains(&k.as_str())).map(|k| (r.clone(), k.clone())));
    }
    for (r, k) in doomed {
        // The owner may already be gone with an enclosing dropped slot.
        let _ = set.drop_slot(&r, &k);
    }
}

/// Follows a namespace URI change made by primitive edits.
fn follow_ns_uri(set: &mut ResourceSet, before: &Metamodel, after: &Metamodel) {
    if let Some(p) = before.package_by_uri(&set.ns_uri) {
        if let Some(q) = after.package(&p.name) {
            set.ns_uri = q.ns_uri.clone();
        }
    }
}

/// Migrates `set` from the release it was written for to the head of
/// `history`. The input is never modified.
pub fn migrate(
    set: &ResourceSet,
    history: &History,
    registry: &HookRegistry,
) -> MigrateResult<(ResourceSet, MigrationReport)> {
    let start = Instant::now();
    let source = history.detect_release(&set.ns_uri)?;
    let releases = &history.releases()[source + 1..];
    for change in releases.iter().flat_map(|r| &r.changes) {
        if let Change::Custom(c) = change {
            if !registry.contains(&c.hook) {
                return Err(MigrateError::MissingHook(c.hook.clone()));
            }
        }
    }
    let source_label = history.releases()[source].label.clone();
    let mut mm = history.reconstruct(Point::Release(source))?;
    let violations = check_conformance(set, &mm);
    if !violations.is_empty() {
        return Err(MigrateError::InitialNonConformance { release: source_label, violations });
    }
    let mut work = set.clone();
    let mut applied = Vec::new();
    for release in releases {
        let label = &release.label;
        let changes = &release.changes;
        let mut covered = vec![false; changes.len()];
        for (i, c) in changes.iter().enumerate() {
            if let Change::Custom(c) = c {
                covered[i - c.span..i].iter_mut().for_each(|x| *x = true);
            }
        }
        let mut span_start: Option<(usize, Metamodel)> = None;
        for (i, change) in changes.iter().enumerate() {
            let mut boundary = Boundary::Checked;
            match change {
                Change::Op(app) => {
                    let (next, migrated) = catalog::apply_coupled(app, &mm, Some(&work)).map_err(|source| {
                        MigrateError::Operation { release: label.clone(), change: i, source: Box::new(source) }
                    })?;
                    mm = next;
                    work = migrated.expect("a set was supplied");
                }
                Change::Primitive(p) => {
                    if span_start.is_none() {
                        span_start = Some((i, mm.clone()));
                    }
                    mm = apply_primitive(&mm, p).map_err(|e| HistoryError::Replay {
                        release: source + 1,
                        change: i,
                        message: e.to_string(),
                    })?;
                    let run_ends = !covered[i] && !matches!(changes.get(i + 1), Some(Change::Primitive(_)))
                        || (!covered[i] && covered.get(i + 1) == Some(&true));
                    if covered[i] || !run_ends {
                        boundary = Boundary::Deferred;
                    } else {
                        let (first, before) = span_start.take().expect("span started");
                        follow_ns_uri(&mut work, &before, &mm);
                        drop_unknown_slots(&mut work, &mm);
                        let violations = check_conformance(&work, &mm);
                        if !violations.is_empty() {
                            return Err(MigrateError::UnmigratedSpan {
                                release: label.clone(),
                                first,
                                last: i,
                                violations,
                            });
                        }
                    }
                }
                Change::Custom(c) => {
                    let (_, before) = span_start.take().expect("custom migrations follow their span");
                    follow_ns_uri(&mut work, &before, &mm);
                    let hook = &registry.hooks[&c.hook];
                    let mut ctx = HookContext { before: &before, after: &mm, set: &mut work };
                    hook(&mut ctx).map_err(|message| MigrateError::HookFailed {
                        release: label.clone(),
                        change: i,
                        hook: c.hook.clone(),
                        message,
                    })?;
                    drop_unknown_slots(&mut work, &mm);
                    let violations = check_conformance(&work, &mm);
                    if !violations.is_empty() {
                        return Err(MigrateError::PostConformance {
                            release: label.clone(),
                            change: i,
                            hook: c.hook.clone(),
                            violations,
                        });
                    }
                }
            }
            applied.push(AppliedChange { release: label.clone(), index: i, change: change.to_string(), boundary });
        }
    }
    let violations = check_conformance(&work, history.head());
    if !violations.is_empty() {
        return Err(MigrateError::FinalNonConformance(violations));
    }
    Ok((
        work,
        MigrationReport {
            source_release: source,
            source_label,
            applied,
            final_conformance: true,
            duration: start.elapsed(),
        },
    ))
}
