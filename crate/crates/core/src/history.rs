//! The history model: an initial metamodel followed by releases of recorded
//! changes. Any intermediate metamodel is obtained by replay.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::catalog::{self, CatalogError, OperationApplication};
use crate::meta::{
    split_member, validate_metamodel, Annotation, Classifier, Element, ElementRef, Feature, MetaError, MetaViolation,
    Metamodel, OperationSignature,
};
use crate::to_canonical_json;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("metamodel is invalid: {}", join(.0))]
    InvalidMetamodel(Vec<MetaViolation>),
    #[error(transparent)]
    Operation(#[from] CatalogError),
    #[error("the history has no open release")]
    ReleasedHistory,
    #[error("cannot attach a migration over {span} change(s): only {available} trailing primitive change(s) in the open release")]
    BadSpan { span: usize, available: usize },
    #[error("release label `{0}` is already used")]
    DuplicateLabel(String),
    #[error("the open release is empty; pass force to seal it anyway")]
    EmptyRelease,
    #[error("release {release}, change {change}: {message}")]
    Replay { release: usize, change: usize, message: String },
    #[error("nothing to undo in the open release")]
    NothingToUndo,
    #[error("no sealed release has namespace URI `{uri}`; known: {}", .candidates.join(", "))]
    UnknownNsUri { uri: String, candidates: Vec<String> },
    #[error("release ordinal {0} is out of range")]
    OutOfRange(usize),
    #[error("invalid primitive change: {0}")]
    InvalidPrimitive(String),
    #[error("primitive change breaks the metamodel: {}", join(.0))]
    PrimitiveBreaksMetamodel(Vec<MetaViolation>),
    #[error("cannot access `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("parse error in `{path}` at {location}: {message}")]
    Parse { path: String, location: String, message: String },
}

fn join(v: &[MetaViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type HistoryResult<T> = Result<T, HistoryError>;

/// A new element created by a primitive change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NewElement {
    Classifier(Classifier),
    Feature(Feature),
    Operation(OperationSignature),
}

/// A direct metamodel edit. `target` is the edited element, or the
/// container for `create`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Primitive {
    Create { target: ElementRef, element: NewElement },
    Delete { target: ElementRef },
    Set { target: ElementRef, property: String, value: Json },
    Add { target: ElementRef, property: String, value: Json },
    Remove { target: ElementRef, property: String, value: Json },
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Create { target, element } => {
                let (kind, name) = match element {
                    NewElement::Classifier(c) => (c.kind_name(), c.name()),
                    NewElement::Feature(x) => ("feature", x.name.as_str()),
                    NewElement::Operation(o) => ("operation", o.name.as_str()),
                };
                write!(f, "create {kind} {target}.{name}")
            }
            Primitive::Delete { target } => write!(f, "delete {target}"),
            Primitive::Set { target, property, value } => write!(f, "set {target}.{property} = {value}"),
            Primitive::Add { target, property, value } => write!(f, "add {value} to {target}.{property}"),
            Primitive::Remove { target, property, value } => write!(f, "remove {value} from {target}.{property}"),
        }
    }
}

/// A custom migration attached to the `span` primitive changes preceding it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomMigration {
    pub hook: String,
    /// Display name, used in statistics.
    pub label: String,
    pub span: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Change {
    #[serde(rename = "op")]
    Op(OperationApplication),
    #[serde(rename = "primitive")]
    Primitive(Primitive),
    #[serde(rename = "custom")]
    Custom(CustomMigration),
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::Op(app) => {
                let args: Vec<String> = app.args.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "{}({})", app.op, args.join(", "))
            }
            Change::Primitive(p) => write!(f, "primitive: {p}"),
            Change::Custom(c) => write!(f, "custom migration `{}` [{}] over {} change(s)", c.label, c.hook, c.span),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Release {
    pub label: String,
    pub released: bool,
    #[serde(default)]
    pub changes: Vec<Change>,
}

/// Position in the history to reconstruct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Point {
    /// After all changes of the release with this ordinal.
    Release(usize),
    /// After every recorded change, including the open release.
    Head,
}

#[derive(Serialize, Deserialize)]
struct HistoryDoc<M, R> {
    #[serde(rename = "initialMetamodel")]
    initial_metamodel: M,
    releases: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    initial: Metamodel,
    releases: Vec<Release>,
    head: Metamodel,
}

impl Serialize for History {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        HistoryDoc { initial_metamodel: &self.initial, releases: &self.releases }.serialize(s)
    }
}

impl History {
    /// A history for `mm` with one open, empty release labeled "0".
    pub fn create(mm: &Metamodel) -> HistoryResult<History> {
        let violations = validate_metamodel(mm);
        if !violations.is_empty() {
            return Err(HistoryError::InvalidMetamodel(violations));
        }
        Ok(History { initial: mm.clone(), releases: vec![open_release("0")], head: mm.clone() })
    }

    pub fn initial(&self) -> &Metamodel {
        &self.initial
    }

    pub fn releases(&self) -> &[Release] {
        &self.releases
    }

    /// The metamodel after every recorded change.
    pub fn head(&self) -> &Metamodel {
        &self.head
    }

    /// Sealed releases, in order.
    pub fn sealed(&self) -> impl Iterator<Item = (usize, &Release)> {
        self.releases.iter().enumerate().filter(|(_, r)| r.released)
    }

    fn open_mut(&mut self) -> HistoryResult<&mut Release> {
        match self.releases.last_mut() {
            Some(r) if !r.released => Ok(r),
            _ => Err(HistoryError::ReleasedHistory),
        }
    }

    /// Checks and records a reusable operation against the head metamodel.
    pub fn record(&mut self, app: OperationApplication) -> HistoryResult<()> {
        self.open_mut()?;
        let next = catalog::apply_to_metamodel(&app, &self.head)?;
        self.open_mut()?.changes.push(Change::Op(app));
        self.head = next;
        Ok(())
    }

    /// Records a direct metamodel edit; the edited metamodel must validate.
    pub fn record_primitive(&mut self, p: Primitive) -> HistoryResult<()> {
        self.open_mut()?;
        let next = apply_primitive(&self.head, &p)?;
        self.open_mut()?.changes.push(Change::Primitive(p));
        self.head = next;
        Ok(())
    }

    /// Groups the `span` trailing primitive changes of the open release
    /// under the custom migration `hook`.
    pub fn attach_migration(&mut self, hook: &str, span: usize, label: Option<&str>) -> HistoryResult<()> {
        if hook.trim().is_empty() {
            return Err(HistoryError::InvalidPrimitive("hook name is empty".into()));
        }
        let open = self.open_mut()?;
        let available = open.changes.iter().rev().take_while(|c| matches!(c, Change::Primitive(_))).count();
        if span == 0 || span > available {
            return Err(HistoryError::BadSpan { span, available });
        }
        open.changes.push(Change::Custom(CustomMigration {
            hook: hook.to_string(),
            label: label.unwrap_or(hook).to_string(),
            span,
        }));
        Ok(())
    }

    /// Seals the open release under `label` and opens a new one.
    pub fn release(&mut self, label: &str, force: bool) -> HistoryResult<()> {
        if self.releases.iter().any(|r| r.released && r.label == label) {
            return Err(HistoryError::DuplicateLabel(label.to_string()));
        }
        let next_label = (self.releases.len()).to_string();
        let open = self.open_mut()?;
        if open.changes.is_empty() && !force {
            return Err(HistoryError::EmptyRelease);
        }
        open.label = label.to_string();
        open.released = true;
        self.releases.push(open_release(&next_label));
        Ok(())
    }

    /// Removes the last change of the open release and recomputes the head
    /// by replay.
    pub fn undo_last(&mut self) -> HistoryResult<Change> {
        let open = self.open_mut()?;
        let change = open.changes.pop().ok_or(HistoryError::NothingToUndo)?;
        if let Change::Op(_) | Change::Primitive(_) = change {
            self.head = self.reconstruct(Point::Head)?;
        }
        Ok(change)
    }

    pub fn reconstruct(&self, point: Point) -> HistoryResult<Metamodel> {
        let upto = match point {
            Point::Head => self.releases.len(),
            Point::Release(i) if i < self.releases.len() => i + 1,
            Point::Release(i) => return Err(HistoryError::OutOfRange(i)),
        };
        let mut mm = self.initial.clone();
        for (ri, release) in self.releases[..upto].iter().enumerate() {
            for (ci, change) in release.changes.iter().enumerate() {
                mm = replay_change(&mm, change).map_err(|e| HistoryError::Replay {
                    release: ri,
                    change: ci,
                    message: e.to_string(),
                })?;
            }
        }
        Ok(mm)
    }

    /// The earliest sealed release whose metamodel carries `ns_uri`.
    pub fn detect_release(&self, ns_uri: &str) -> HistoryResult<usize> {
        let mut mm = self.initial.clone();
        let mut known: Vec<String> = Vec::new();
        for (ri, release) in self.releases.iter().enumerate() {
            for (ci, change) in release.changes.iter().enumerate() {
                mm = replay_change(&mm, change).map_err(|e| HistoryError::Replay {
                    release: ri,
                    change: ci,
                    message: e.to_string(),
                })?;
            }
            if !release.released {
                continue;
            }
            if mm.ns_uris().contains(&ns_uri) {
                return Ok(ri);
            }
            for u in mm.ns_uris() {
                if !known.iter().any(|k| k == u) {
                    known.push(u.to_string());
                }
            }
        }
        known.sort_by_key(|k| std::cmp::Reverse(common_prefix(k, ns_uri)));
        known.truncate(3);
        Err(HistoryError::UnknownNsUri { uri: ns_uri.to_string(), candidates: known })
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    /// Parses a history document; `path` is only used in error messages.
    /// Every change is replayed, so a loaded history is known to be sound.
    pub fn from_json(text: &str, path: &str) -> HistoryResult<History> {
        let doc: HistoryDoc<Metamodel, Vec<Release>> = serde_json::from_str(text).map_err(|e| HistoryError::Parse {
            path: path.to_string(),
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        for release in &doc.releases {
            for (ci, change) in release.changes.iter().enumerate() {
                match change {
                    Change::Op(app) if catalog::find_operation(&app.op).is_none() => {
                        return Err(CatalogError::UnknownOperation(app.op.clone()).into())
                    }
                    Change::Custom(c) => {
                        let available = release.changes[..ci]
                            .iter()
                            .rev()
                            .take_while(|c| matches!(c, Change::Primitive(_)))
                            .count();
                        if c.span == 0 || c.span > available {
                            return Err(HistoryError::BadSpan { span: c.span, available });
                        }
                    }
                    _ => {}
                }
            }
        }
        let violations = validate_metamodel(&doc.initial_metamodel);
        if !violations.is_empty() {
            return Err(HistoryError::InvalidMetamodel(violations));
        }
        let mut h =
            History { head: doc.initial_metamodel.clone(), initial: doc.initial_metamodel, releases: doc.releases };
        h.head = h.reconstruct(Point::Head)?;
        Ok(h)
    }

    pub fn load(path: &Path) -> HistoryResult<History> {
        let text = fs::read_to_string(path)
            .map_err(|e| HistoryError::Io { path: path.display().to_string(), message: e.to_string() })?;
        History::from_json(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> HistoryResult<()> {
        fs::write(path, self.to_json())
            .map_err(|e| HistoryError::Io { path: path.display().to_string(), message: e.to_string() })
    }
}

fn open_release(label: &str) -> Release {
    Release { label: label.to_string(), released: false, changes: Vec::new() }
}

fn common_prefix(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// Applies one change to a metamodel, as replay does. Custom migrations do
/// not touch the metamodel.
pub fn replay_change(mm: &Metamodel, change: &Change) -> HistoryResult<Metamodel> {
    match change {
        Change::Op(app) => Ok(catalog::apply_to_metamodel(app, mm)?),
        Change::Primitive(p) => apply_primitive(mm, p),
        Change::Custom(_) => Ok(mm.clone()),
    }
}

/// Count of reusable operation applications by name, plus `Custom`.
pub fn history_stats(history: &History) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for change in history.releases.iter().flat_map(|r| &r.changes) {
        let key = match change {
            Change::Op(app) => {
                catalog::find_operation(&app.op).map(|o| o.spec().name.to_string()).unwrap_or_else(|| app.op.clone())
            }
            Change::Custom(_) => "Custom".to_string(),
            Change::Primitive(_) => continue,
        };
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatRow {
    pub operation: String,
    pub kind: &'static str,
    pub number: usize,
}

/// Statistics as table rows: reusable operations sorted by name, then one
/// row per custom migration label.
pub fn stats_table(history: &History) -> Vec<StatRow> {
    let mut reusable: BTreeMap<String, usize> = BTreeMap::new();
    let mut custom: BTreeMap<String, usize> = BTreeMap::new();
    for change in history.releases.iter().flat_map(|r| &r.changes) {
        match change {
            Change::Op(app) => {
                let name = catalog::find_operation(&app.op)
                    .map(|o| o.spec().name.to_string())
                    .unwrap_or_else(|| app.op.clone());
                *reusable.entry(name).or_insert(0) += 1;
            }
            Change::Custom(c) => *custom.entry(c.label.clone()).or_insert(0) += 1,
            Change::Primitive(_) => {}
        }
    }
    let mut rows: Vec<StatRow> =
        reusable.into_iter().map(|(operation, number)| StatRow { operation, kind: "Reusable", number }).collect();
    rows.sort_by_key(|r| r.operation.to_lowercase());
    rows.extend(custom.into_iter().map(|(operation, number)| StatRow { operation, kind: "Custom", number }));
    rows
}

/// Renders rows as a plain-text table with an `Operation | Kind | Number`
/// header.
pub fn render_stats_table(rows: &[StatRow]) -> String {
    let w = rows.iter().map(|r| r.operation.len()).max().unwrap_or(0).max("Operation".len());
    let mut out = format!("{:<w$} | {:<8} | {:>6}\n", "Operation", "Kind", "Number");
    out.push_str(&format!("{}-|-{}-|-{}\n", "-".repeat(w), "-".repeat(8), "-".repeat(6)));
    for r in rows {
        out.push_str(&format!("{:<w$} | {:<8} | {:>6}\n", r.operation, r.kind, r.number));
    }
    out
}

// ---------------------------------------------------------------------------
// Primitive edits

fn invalid(msg: impl Into<String>) -> HistoryError {
    HistoryError::InvalidPrimitive(msg.into())
}

fn settable(element: &Element) -> &'static [&'static str] {
    match element {
        Element::Package(_) => &["nsUri"],
        Element::Classifier(Classifier::Class(_)) => &["name", "abstract", "interface"],
        Element::Classifier(Classifier::Enum(_)) => &["name"],
        Element::Classifier(Classifier::DataType(_)) => &["name", "primitive"],
        Element::Feature(_, f) if f.is_reference() => {
            &["name", "lower", "upper", "changeable", "volatile", "ordered", "type", "containment", "opposite"]
        }
        Element::Feature(..) => {
            &["name", "lower", "upper", "changeable", "volatile", "ordered", "type", "identifier", "default"]
        }
        Element::Operation(..) => &["name"],
        Element::Literal(..) => &[],
    }
}

/// Round-trips a value through JSON with one property replaced.
fn with_property<T: Serialize + for<'de> Deserialize<'de>>(value: &T, property: &str, new: &Json) -> HistoryResult<T> {
    let mut doc = serde_json::to_value(value).map_err(|e| invalid(e.to_string()))?;
    let map = doc.as_object_mut().ok_or_else(|| invalid("element is not an object"))?;
    if new.is_null() {
        map.remove(property);
    } else {
        map.insert(property.to_string(), new.clone());
    }
    serde_json::from_value(doc).map_err(|e| invalid(format!("bad value for `{property}`: {e}")))
}

fn as_text<'a>(value: &'a Json, property: &str) -> HistoryResult<&'a str> {
    value.as_str().ok_or_else(|| invalid(format!("`{property}` values are strings")))
}

/// Applies a primitive edit to a copy of `mm`; the result must validate.
pub fn apply_primitive(mm: &Metamodel, p: &Primitive) -> HistoryResult<Metamodel> {
    let mut out = mm.clone();
    edit(&mut out, p)?;
    let violations = validate_metamodel(&out);
    if !violations.is_empty() {
        return Err(HistoryError::PrimitiveBreaksMetamodel(violations));
    }
    Ok(out)
}

fn meta(e: MetaError) -> HistoryError {
    invalid(e.to_string())
}

fn edit(mm: &mut Metamodel, p: &Primitive) -> HistoryResult<()> {
    match p {
        Primitive::Create { target, element } => match element {
            NewElement::Classifier(c) => {
                let pkg = target.segments().map_err(meta)?;
                if pkg.len() != 1 {
                    return Err(invalid("classifiers are created in a package"));
                }
                mm.package_mut(pkg[0]).map_err(meta)?.classifiers.push(c.clone());
            }
            NewElement::Feature(f) => mm.class_mut(target.as_str()).map_err(meta)?.features.push(f.clone()),
            NewElement::Operation(o) => mm.class_mut(target.as_str()).map_err(meta)?.operations.push(o.clone()),
        },
        Primitive::Delete { target } => {
            let segs = target.segments().map_err(meta)?;
            match mm.resolve(target).map_err(meta)? {
                Element::Package(_) => mm.packages.retain(|x| x.name != segs[0]),
                Element::Classifier(_) => {
                    mm.package_mut(segs[0]).map_err(meta)?.classifiers.retain(|c| c.name() != segs[1])
                }
                Element::Feature(_, f) => {
                    // Like an editor delete, the partner loses its opposite too.
                    if let Some(partner) = f.opposite().map(str::to_string) {
                        if let Ok(crate::meta::FeatureKind::Reference { opposite, .. }) =
                            mm.feature_mut(&partner).map(|p| &mut p.kind)
                        {
                            *opposite = None;
                        }
                    }
                    let (owner, name) = split_member(target.as_str()).expect("resolved");
                    mm.class_mut(owner).map_err(meta)?.features.retain(|f| f.name != name);
                }
                Element::Operation(..) => {
                    let (owner, name) = split_member(target.as_str()).expect("resolved");
                    mm.class_mut(owner).map_err(meta)?.operations.retain(|o| o.name != name);
                }
                Element::Literal(..) => {
                    let (owner, name) = split_member(target.as_str()).expect("resolved");
                    mm.enumeration_mut(owner).map_err(meta)?.literals.retain(|l| l != name);
                }
            }
        }
        Primitive::Set { target, property, value } => {
            let element = mm.resolve(target).map_err(meta)?;
            if !settable(&element).contains(&property.as_str()) {
                return Err(invalid(format!("`{property}` cannot be set on `{target}`")));
            }
            let segs = target.segments().map_err(meta)?;
            match element {
                Element::Package(_) => {
                    let pkg = mm.package_mut(segs[0]).map_err(meta)?;
                    pkg.ns_uri = as_text(value, property)?.to_string();
                }
                Element::Classifier(_) => {
                    let c = mm.classifier_mut(target.as_str()).map_err(meta)?;
                    *c = with_property(&*c, property, value)?;
                }
                Element::Feature(..) => {
                    let f = mm.feature_mut(target.as_str()).map_err(meta)?;
                    *f = with_property(&*f, property, value)?;
                }
                Element::Operation(..) => {
                    let (owner, name) = split_member(target.as_str()).expect("resolved");
                    let op = mm
                        .class_mut(owner)
                        .map_err(meta)?
                        .operations
                        .iter_mut()
                        .find(|o| o.name == name)
                        .expect("resolved");
                    op.name = as_text(value, property)?.to_string();
                }
                Element::Literal(..) => unreachable!("literals have no settable properties"),
            }
        }
        Primitive::Add { target, property, value } | Primitive::Remove { target, property, value } => {
            let adding = matches!(p, Primitive::Add { .. });
            collection_edit(mm, target, property, value, adding)?;
        }
    }
    Ok(())
}

fn collection_edit(
    mm: &mut Metamodel,
    target: &ElementRef,
    property: &str,
    value: &Json,
    adding: bool,
) -> HistoryResult<()> {
    if property == "annotations" {
        let list = mm.annotations_mut(target).map_err(meta)?;
        if adding {
            let ann: Annotation =
                serde_json::from_value(value.clone()).map_err(|e| invalid(format!("bad annotation: {e}")))?;
            list.push(ann);
        } else {
            let source = as_text(value, property)?;
            let before = list.len();
            list.retain(|a| a.source != source);
            if list.len() == before {
                return Err(invalid(format!("`{target}` has no `{source}` annotation")));
            }
        }
        return Ok(());
    }
    let item = as_text(value, property)?.to_string();
    let list: &mut Vec<String> = match (mm.resolve(target).map_err(meta)?, property) {
        (Element::Classifier(Classifier::Class(_)), "supertypes") => {
            &mut mm.class_mut(target.as_str()).map_err(meta)?.supertypes
        }
        (Element::Classifier(Classifier::Enum(_)), "literals") => {
            &mut mm.enumeration_mut(target.as_str()).map_err(meta)?.literals
        }
        (Element::Operation(..), "parameters") => {
            let (owner, name) = split_member(target.as_str()).expect("resolved");
            let class = mm.class_mut(owner).map_err(meta)?;
            &mut class.operations.iter_mut().find(|o| o.name == name).expect("resolved").parameters
        }
        _ => return Err(invalid(format!("`{target}` has no collection `{property}`"))),
    };
    if adding {
        list.push(item);
    } else {
        let pos = list
            .iter()
            .position(|x| *x == item)
            .ok_or_else(|| invalid(format!("`{item}` not in `{target}.{property}`")))?;
        list.remove(pos);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::shapes_mm;
    use serde_json::json;

    fn create_class(name: &str) -> OperationApplication {
        OperationApplication::new("Create Class").arg("package", "shapes").arg("name", name)
    }

    #[test]
    fn create_and_release() {
        let mut h = History::create(&shapes_mm()).unwrap();
        assert_eq!(h.releases().len(), 1);
        assert_eq!(h.releases()[0].label, "0");
        assert_eq!(h.release("1.0", false), Err(HistoryError::EmptyRelease));
        h.release("1.0", true).unwrap();
        assert!(h.releases()[0].released);
        assert!(!h.releases()[1].released);
        assert_eq!(h.reconstruct(Point::Release(0)).unwrap(), shapes_mm());
        h.record(create_class("Circle")).unwrap();
        assert_eq!(h.release("1.0", false), Err(HistoryError::DuplicateLabel("1.0".into())));
    }

    #[test]
    fn invalid_initial_metamodel() {
        let mut mm = shapes_mm();
        mm.class_mut("shapes.Shape").unwrap().supertypes.push("shapes.Shape".into());
        assert!(matches!(History::create(&mm), Err(HistoryError::InvalidMetamodel(_))));
    }

    #[test]
    fn record_and_reconstruct() {
        let mut h = History::create(&shapes_mm()).unwrap();
        h.record(create_class("Circle")).unwrap();
        assert!(h.head().class("shapes.Circle").is_some());
        assert_eq!(h.reconstruct(Point::Head).unwrap(), *h.head());
        let before = h.clone();
        let err = h.record(create_class("Circle")).unwrap_err();
        assert!(matches!(err, HistoryError::Operation(CatalogError::ConstraintViolation { .. })));
        assert_eq!(h, before);
    }

    #[test]
    fn primitives_and_attach() {
        let mut h = History::create(&shapes_mm()).unwrap();
        h.record_primitive(Primitive::Set {
            target: "shapes.Shape".into(),
            property: "abstract".into(),
            value: json!(true),
        })
        .unwrap();
        assert!(h.head().class("shapes.Shape").unwrap().is_abstract);
        h.record_primitive(Primitive::Add {
            target: "shapes.Color".into(),
            property: "literals".into(),
            value: json!("GREEN"),
        })
        .unwrap();
        h.record_primitive(Primitive::Create {
            target: "shapes".into(),
            element: NewElement::Classifier(Classifier::Class(crate::meta::Class::new("Circle"))),
        })
        .unwrap();
        assert_eq!(h.attach_migration("hook", 4, None), Err(HistoryError::BadSpan { span: 4, available: 3 }));
        h.attach_migration("hook", 3, None).unwrap();
        assert_eq!(h.attach_migration("hook", 1, None), Err(HistoryError::BadSpan { span: 1, available: 0 }));
        h.record(create_class("Square")).unwrap();
        h.record_primitive(Primitive::Delete { target: "shapes.Square".into() }).unwrap();
        assert_eq!(h.attach_migration("hook", 2, None), Err(HistoryError::BadSpan { span: 2, available: 1 }));
    }

    #[test]
    fn primitive_must_keep_metamodel_valid() {
        let mut h = History::create(&shapes_mm()).unwrap();
        let err = h
            .record_primitive(Primitive::Add {
                target: "shapes.Shape".into(),
                property: "supertypes".into(),
                value: json!("shapes.Missing"),
            })
            .unwrap_err();
        assert!(matches!(err, HistoryError::PrimitiveBreaksMetamodel(_)));
        let err = h
            .record_primitive(Primitive::Set {
                target: "shapes.Shape".into(),
                property: "features".into(),
                value: json!([]),
            })
            .unwrap_err();
        assert!(matches!(err, HistoryError::InvalidPrimitive(_)));
    }

    #[test]
    fn undo() {
        let fresh = History::create(&shapes_mm()).unwrap();
        let mut h = fresh.clone();
        assert_eq!(h.undo_last(), Err(HistoryError::NothingToUndo));
        for n in ["A", "B", "C"] {
            h.record(create_class(n)).unwrap();
        }
        for _ in 0..3 {
            h.undo_last().unwrap();
        }
        assert_eq!(h, fresh);
    }

    #[test]
    fn detect() {
        let mut h = History::create(&shapes_mm()).unwrap();
        h.release("1.0", true).unwrap();
        h.record(
            OperationApplication::new("Change Namespace URI").arg("package", "shapes").arg("newUri", "urn:shapes/2"),
        )
        .unwrap();
        h.record(create_class("Circle")).unwrap();
        h.release("2.0", false).unwrap();
        let v1 = shapes_mm().packages[0].ns_uri.clone();
        assert_eq!(h.detect_release(&v1), Ok(0));
        assert_eq!(h.detect_release("urn:shapes/2"), Ok(1));
        let err = h.detect_release("urn:shapes/3").unwrap_err();
        match err {
            HistoryError::UnknownNsUri { candidates, .. } => assert_eq!(candidates[0], "urn:shapes/2"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let mut h = History::create(&shapes_mm()).unwrap();
        h.record(create_class("Circle")).unwrap();
        h.release("1.0", false).unwrap();
        let text = h.to_json();
        assert_eq!(History::from_json(&text, "h").unwrap(), h);
        let err = History::from_json("{\n  \"releases\": [,]\n}", "h").unwrap_err();
        match err {
            HistoryError::Parse { location, .. } => assert!(location.starts_with("line 2"), "{location}"),
            e => panic!("{e}"),
        }
        let bad = text.replace("Create Class", "Create Klass");
        assert_eq!(
            History::from_json(&bad, "h").unwrap_err(),
            HistoryError::Operation(CatalogError::UnknownOperation("Create Klass".into()))
        );
    }

    #[test]
    fn stats() {
        let mut h = History::create(&shapes_mm()).unwrap();
        assert!(history_stats(&h).is_empty());
        h.record(create_class("A")).unwrap();
        h.record(create_class("B")).unwrap();
        h.record_primitive(Primitive::Set {
            target: "shapes.A".into(),
            property: "abstract".into(),
            value: json!(true),
        })
        .unwrap();
        h.attach_migration("noop", 1, Some("Touch A")).unwrap();
        let stats = history_stats(&h);
        assert_eq!(stats["Create Class"], 2);
        assert_eq!(stats["Custom"], 1);
        let rows = stats_table(&h);
        assert_eq!(rows[1].operation, "Touch A");
        assert_eq!(rows[1].kind, "Custom");
        assert!(render_stats_table(&rows).contains("Create Class | Reusable |      2"));
    }
}
