//! Structural differences between metamodels (matched by qualified name)
//! and between model sets (matched by identifier, then by containment
//! position regardless of order).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::meta::{Annotation, Class, Classifier, Literal, Metamodel};
use crate::model::{MObject, ObjRef, ResourceSet, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    Added,
    Removed,
    Changed,
    Moved,
}

impl DiffKind {
    fn flipped(self) -> Self {
        match self {
            DiffKind::Added => DiffKind::Removed,
            DiffKind::Removed => DiffKind::Added,
            k => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub kind: DiffKind,
    /// Path of the element on the left side, if it exists there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffModel {
    pub entries: Vec<DiffEntry>,
}

impl DiffModel {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, kind: DiffKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// The same differences seen from the other side.
    pub fn flipped(&self) -> DiffModel {
        DiffModel {
            entries: self
                .entries
                .iter()
                .map(|e| DiffEntry { kind: e.kind.flipped(), a: e.b.clone(), b: e.a.clone(), detail: e.detail.clone() })
                .collect(),
        }
    }

    /// The `.diff.json` document.
    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    fn push(&mut self, kind: DiffKind, a: Option<String>, b: Option<String>, detail: impl Into<String>) {
        self.entries.push(DiffEntry { kind, a, b, detail: detail.into() });
    }
}

impl fmt::Display for DiffModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let kind = format!("{:?}", e.kind).to_lowercase();
            let path = match (&e.a, &e.b) {
                (Some(a), Some(b)) if a != b => format!("{a} -> {b}"),
                (Some(p), _) | (None, Some(p)) => p.clone(),
                (None, None) => String::new(),
            };
            writeln!(f, "{kind:<8} {path}: {}", e.detail)?;
        }
        write!(f, "{} difference(s)", self.entries.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("model sets have different namespace URIs: `{0}` vs `{1}`")]
    MixedNsUri(String, String),
}

// Metamodels

/// Compares the JSON properties of two matched elements, skipping `skip`.
fn compare_props(out: &mut DiffModel, path: &str, a: Json, b: Json, skip: &[&str]) {
    let (Json::Object(a), Json::Object(b)) = (a, b) else { unreachable!("elements serialize as objects") };
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).filter(|k| !skip.contains(&k.as_str())).collect();
    for k in keys {
        let (x, y) = (a.get(k), b.get(k));
        if x != y {
            let show = |v: Option<&Json>| v.map_or_else(|| "(unset)".to_string(), Json::to_string);
            out.push(
                DiffKind::Changed,
                Some(path.into()),
                Some(path.into()),
                format!("{k}: {} -> {}", show(x), show(y)),
            );
        }
    }
}

fn compare_annotations(out: &mut DiffModel, path: &str, a: &[Annotation], b: &[Annotation]) {
    let key = |l: &[Annotation]| -> BTreeMap<String, Json> {
        l.iter().map(|x| (x.source.clone(), serde_json::to_value(&x.details).expect("details"))).collect()
    };
    let (ka, kb) = (key(a), key(b));
    let at = |s: &str| format!("{path}@{s}");
    for (s, d) in &ka {
        match kb.get(s) {
            None => out.push(DiffKind::Removed, Some(at(s)), None, "annotation"),
            Some(e) if e != d => out.push(DiffKind::Changed, Some(at(s)), Some(at(s)), format!("details: {d} -> {e}")),
            _ => {}
        }
    }
    for s in kb.keys().filter(|s| !ka.contains_key(*s)) {
        out.push(DiffKind::Added, None, Some(at(s)), "annotation");
    }
}

fn to_json<T: Serialize>(v: &T) -> Json {
    serde_json::to_value(v).expect("metamodel elements serialize")
}

/// Matches two named lists and calls `both` on each pair, reporting
/// unmatched elements as added or removed.
fn match_named<'a, T>(
    out: &mut DiffModel,
    prefix: &str,
    what: &str,
    a: impl IntoIterator<Item = &'a T>,
    b: impl IntoIterator<Item = &'a T>,
    name: impl Fn(&T) -> &str,
    mut both: impl FnMut(&mut DiffModel, &str, &'a T, &'a T),
) where
    T: 'a,
{
    let ma: BTreeMap<&str, &T> = a.into_iter().map(|x| (name(x), x)).collect();
    let mb: BTreeMap<&str, &T> = b.into_iter().map(|x| (name(x), x)).collect();
    let path = |n: &str| if prefix.is_empty() { n.to_string() } else { format!("{prefix}.{n}") };
    for (n, x) in &ma {
        match mb.get(n) {
            Some(y) => both(out, &path(n), x, y),
            None => out.push(DiffKind::Removed, Some(path(n)), None, what),
        }
    }
    for n in mb.keys().filter(|n| !ma.contains_key(*n)) {
        out.push(DiffKind::Added, None, Some(path(n)), what);
    }
}

fn compare_classes(out: &mut DiffModel, path: &str, a: &Class, b: &Class) {
    compare_props(out, path, to_json(a), to_json(b), &["name", "features", "operations", "annotations", "kind"]);
    compare_annotations(out, path, &a.annotations, &b.annotations);
    match_named(
        out,
        path,
        "feature",
        &a.features,
        &b.features,
        |f| &f.name,
        |out, p, x, y| {
            compare_props(out, p, to_json(x), to_json(y), &["name", "annotations"]);
            compare_annotations(out, p, &x.annotations, &y.annotations);
        },
    );
    match_named(
        out,
        path,
        "operation",
        &a.operations,
        &b.operations,
        |o| &o.name,
        |out, p, x, y| {
            compare_props(out, p, to_json(x), to_json(y), &["name", "annotations"]);
            compare_annotations(out, p, &x.annotations, &y.annotations);
        },
    );
}

/// Differences between two metamodels, matching every element by its
/// qualified name. Feature and classifier order is not significant;
/// literal and supertype order is.
pub fn diff_metamodels(a: &Metamodel, b: &Metamodel) -> DiffModel {
    let mut out = DiffModel::default();
    match_named(
        &mut out,
        "",
        "package",
        &a.packages,
        &b.packages,
        |p| &p.name,
        |out, path, x, y| {
            compare_props(out, path, to_json(x), to_json(y), &["name", "classifiers", "annotations"]);
            compare_annotations(out, path, &x.annotations, &y.annotations);
            match_named(
                out,
                path,
                "classifier",
                &x.classifiers,
                &y.classifiers,
                Classifier::name,
                |out, p, c, d| match (c, d) {
                    (Classifier::Class(c), Classifier::Class(d)) => compare_classes(out, p, c, d),
                    (c, d) if c.kind_name() != d.kind_name() => out.push(
                        DiffKind::Changed,
                        Some(p.into()),
                        Some(p.into()),
                        format!("kind: {} -> {}", c.kind_name(), d.kind_name()),
                    ),
                    (c, d) => {
                        compare_props(out, p, to_json(c), to_json(d), &["name", "annotations"]);
                        compare_annotations(out, p, c.annotations(), d.annotations());
                    }
                },
            );
        },
    );
    out
}

/// The difference still to be covered when evolving `current` towards
/// `target`; an alias of [`diff_metamodels`].
pub fn convergence(current: &Metamodel, target: &Metamodel) -> DiffModel {
    diff_metamodels(current, target)
}

// Models

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchPolicy {
    /// Compare multi-valued references and containments as multisets.
    pub ignore_reference_order: bool,
}

struct Node<'a> {
    r: ObjRef,
    obj: &'a MObject,
    /// Container and feature; `None` for roots.
    parent: Option<(ObjRef, String)>,
}

struct Side<'a> {
    nodes: Vec<Node<'a>>,
    index: BTreeMap<ObjRef, usize>,
}

impl<'a> Side<'a> {
    fn new(set: &'a ResourceSet) -> Self {
        let mut nodes = Vec::new();
        for res in &set.resources {
            for root in &res.roots {
                collect(&res.uri, root, None, &mut nodes);
            }
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.r.clone(), i)).collect();
        Side { nodes, index }
    }

    fn node(&self, r: &ObjRef) -> &Node<'a> {
        &self.nodes[self.index[r]]
    }

    /// Unmatched children of `parent` in `feature`, or unmatched roots.
    fn children(
        &self,
        parent: Option<(&ObjRef, &str)>,
        resource: &str,
        taken: &BTreeMap<ObjRef, ObjRef>,
    ) -> BTreeMap<String, Vec<&Node<'a>>> {
        let mut out: BTreeMap<String, Vec<&Node<'a>>> = BTreeMap::new();
        let kids: Vec<&Node<'a>> = match parent {
            Some((p, f)) => self
                .node(p)
                .obj
                .get(f)
                .iter()
                .filter_map(Value::as_child)
                .map(|c| self.node(&ObjRef::new(&p.resource, &c.id)))
                .collect(),
            None => self.nodes.iter().filter(|n| n.parent.is_none() && n.r.resource == resource).collect(),
        };
        for k in kids.into_iter().filter(|k| !taken.contains_key(&k.r)) {
            out.entry(k.obj.class.clone()).or_default().push(k);
        }
        out
    }
}

fn collect<'a>(uri: &str, o: &'a MObject, parent: Option<(ObjRef, String)>, out: &mut Vec<Node<'a>>) {
    let r = ObjRef::new(uri, &o.id);
    out.push(Node { r: r.clone(), obj: o, parent });
    for (f, vs) in &o.slots {
        for c in vs.iter().filter_map(Value::as_child) {
            collect(uri, c, Some((r.clone(), f.clone())), out);
        }
    }
}

fn render_literal(l: &Literal) -> String {
    serde_json::to_string(l).expect("literal")
}

/// Attribute slots only; the part of an object compared positionally.
fn signature(o: &MObject) -> String {
    let mut m = Map::new();
    for (f, vs) in &o.slots {
        let items: Vec<String> = vs
            .iter()
            .filter_map(|v| match v {
                Value::Prim(l) => Some(render_literal(l)),
                Value::Enum(e) => Some(format!("#{e}")),
                _ => None,
            })
            .collect();
        if !items.is_empty() {
            m.insert(f.clone(), Json::from(items));
        }
    }
    Json::Object(m).to_string()
}

/// Identity under the metamodel's identifier attributes, if the class
/// declares any and they are set.
fn identity(mm: Option<&Metamodel>, o: &MObject) -> Option<String> {
    let mm = mm?;
    let ids: Vec<String> =
        mm.all_features(&o.class).iter().filter(|f| f.is_identifier()).map(|f| f.name.clone()).collect();
    if ids.is_empty() {
        return None;
    }
    let vals: Vec<String> =
        ids.iter().map(|f| o.get(f).iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")).collect();
    if vals.iter().all(String::is_empty) {
        return None;
    }
    Some(format!("{}|{}", o.class, vals.join("|")))
}

/// Greedy pairing within one container slot and class: equal attributes
/// and id first, then equal attributes, then equal id, then document order.
fn pair_group(a: &[&Node], b: &[&Node], m: &mut BTreeMap<ObjRef, ObjRef>, rev: &mut BTreeMap<ObjRef, ObjRef>) {
    let mut used = vec![false; b.len()];
    let mut done = vec![false; a.len()];
    type Pass<'a> = &'a dyn Fn(&Node, &Node) -> bool;
    let passes: [Pass; 4] = [
        &|x, y| x.obj.id == y.obj.id && signature(x.obj) == signature(y.obj),
        &|x, y| signature(x.obj) == signature(y.obj),
        &|x, y| x.obj.id == y.obj.id,
        &|_, _| true,
    ];
    for pass in passes {
        for (i, x) in a.iter().enumerate() {
            if done[i] {
                continue;
            }
            if let Some(j) = (0..b.len()).find(|&j| !used[j] && pass(x, b[j])) {
                used[j] = true;
                done[i] = true;
                m.insert(x.r.clone(), b[j].r.clone());
                rev.insert(b[j].r.clone(), x.r.clone());
            }
        }
    }
}

fn show_values(vs: &[String]) -> String {
    format!("[{}]", vs.join(", "))
}

/// Differences between two model sets. With `mm`, objects of classes that
/// declare identifier attributes are matched by identifier value wherever
/// they are; all others are matched below an already matched container.
pub fn diff_models(
    a: &ResourceSet,
    b: &ResourceSet,
    mm: Option<&Metamodel>,
    policy: MatchPolicy,
) -> Result<DiffModel, DiffError> {
    if a.ns_uri != b.ns_uri {
        return Err(DiffError::MixedNsUri(a.ns_uri.clone(), b.ns_uri.clone()));
    }
    let (sa, sb) = (Side::new(a), Side::new(b));
    let mut m: BTreeMap<ObjRef, ObjRef> = BTreeMap::new();
    let mut rev: BTreeMap<ObjRef, ObjRef> = BTreeMap::new();
    let mut out = DiffModel::default();

    // Identifier matching, ignoring ambiguous keys.
    let keyed = |s: &Side| {
        let mut k: BTreeMap<String, Vec<ObjRef>> = BTreeMap::new();
        for n in &s.nodes {
            if let Some(id) = identity(mm, n.obj) {
                k.entry(id).or_default().push(n.r.clone());
            }
        }
        k
    };
    let kb = keyed(&sb);
    for (k, ra) in keyed(&sa) {
        if let (1, Some(rb)) = (ra.len(), kb.get(&k).filter(|v| v.len() == 1)) {
            m.insert(ra[0].clone(), rb[0].clone());
            rev.insert(rb[0].clone(), ra[0].clone());
        }
    }

    // Resources by URI.
    let ua: BTreeSet<&str> = a.resources.iter().map(|r| r.uri.as_str()).collect();
    let ub: BTreeSet<&str> = b.resources.iter().map(|r| r.uri.as_str()).collect();
    for u in ua.difference(&ub) {
        out.push(DiffKind::Removed, Some(u.to_string()), None, "resource");
    }
    for u in ub.difference(&ua) {
        out.push(DiffKind::Added, None, Some(u.to_string()), "resource");
    }
    for u in ua.intersection(&ub) {
        let (ga, gb) = (sa.children(None, u, &m), sb.children(None, u, &rev));
        for (class, xs) in &ga {
            if let Some(ys) = gb.get(class) {
                pair_group(xs, ys, &mut m, &mut rev);
            }
        }
    }
    // Top-down through matched containers; pre-order visits parents first.
    for n in &sa.nodes {
        let Some(other) = m.get(&n.r).cloned() else { continue };
        let feats: BTreeSet<&String> = n.obj.slots.keys().chain(sb.node(&other).obj.slots.keys()).collect();
        for f in feats {
            let ga = sa.children(Some((&n.r, f)), "", &m);
            let gb = sb.children(Some((&other, f)), "", &rev);
            for (class, xs) in &ga {
                if let Some(ys) = gb.get(class) {
                    pair_group(xs, ys, &mut m, &mut rev);
                }
            }
        }
    }

    // Unmatched objects, reported at the top of each unmatched subtree.
    let reported = |n: &Node, matched: &BTreeMap<ObjRef, ObjRef>, resources: &BTreeSet<&str>| match &n.parent {
        None => resources.contains(n.r.resource.as_str()),
        Some((p, _)) => matched.contains_key(p),
    };
    let common: BTreeSet<&str> = ua.intersection(&ub).copied().collect();
    for n in sa.nodes.iter().filter(|n| !m.contains_key(&n.r)) {
        if reported(n, &m, &common) {
            out.push(DiffKind::Removed, Some(n.r.to_string()), None, format!("object of class {}", n.obj.class));
        }
    }
    for n in sb.nodes.iter().filter(|n| !rev.contains_key(&n.r)) {
        if reported(n, &rev, &common) {
            out.push(DiffKind::Added, None, Some(n.r.to_string()), format!("object of class {}", n.obj.class));
        }
    }

    // Matched pairs.
    for x in &sa.nodes {
        let Some(yr) = m.get(&x.r) else { continue };
        let y = sb.node(yr);
        let (pa, pb) = (Some(x.r.to_string()), Some(y.r.to_string()));
        if x.obj.class != y.obj.class {
            out.push(DiffKind::Changed, pa.clone(), pb.clone(), format!("class: {} -> {}", x.obj.class, y.obj.class));
        }
        let place_a = x.parent.as_ref().map(|(p, f)| (m.get(p).cloned(), f.clone()));
        let place_b = y.parent.as_ref().map(|(p, f)| (Some(p.clone()), f.clone()));
        let moved = match (&place_a, &place_b) {
            (None, None) => x.r.resource != y.r.resource,
            (a, b) => a != b,
        };
        if moved {
            let at = |p: &Option<(ObjRef, String)>, r: &ObjRef| match p {
                Some((o, f)) => format!("{o}.{f}"),
                None => format!("root of {}", r.resource),
            };
            out.push(
                DiffKind::Moved,
                pa.clone(),
                pb.clone(),
                format!("container: {} -> {}", at(&x.parent, &x.r), at(&y.parent, &y.r)),
            );
        }
        let feats: BTreeSet<&String> = x.obj.slots.keys().chain(y.obj.slots.keys()).collect();
        for f in feats {
            let (va, vb) = (x.obj.get(f), y.obj.get(f));
            let is_ref = va.iter().chain(vb).any(|v| matches!(v, Value::Ref(_) | Value::Child(_)));
            let (mut ra, mut rb): (Vec<String>, Vec<String>) = if is_ref {
                let target = |v: &Value, side_a: bool| -> Option<String> {
                    let r = match v {
                        Value::Ref(r) => r.clone(),
                        Value::Child(c) => ObjRef::new(if side_a { &x.r.resource } else { &y.r.resource }, &c.id),
                        _ => return Some(format!("{v:?}")),
                    };
                    let is_child = matches!(v, Value::Child(_));
                    if side_a {
                        match m.get(&r) {
                            Some(t) => Some(t.to_string()),
                            // Unmatched children are already reported.
                            None if is_child => None,
                            None => Some(format!("unmatched {r}")),
                        }
                    } else if is_child && !rev.contains_key(&r) {
                        None
                    } else {
                        Some(r.to_string())
                    }
                };
                (
                    va.iter().filter_map(|v| target(v, true)).collect(),
                    vb.iter().filter_map(|v| target(v, false)).collect(),
                )
            } else {
                let render = |vs: &[Value]| {
                    vs.iter()
                        .map(|v| match v {
                            Value::Prim(l) => render_literal(l),
                            Value::Enum(e) => format!("#{e}"),
                            _ => unreachable!(),
                        })
                        .collect()
                };
                (render(va), render(vb))
            };
            if is_ref && policy.ignore_reference_order {
                ra.sort();
                rb.sort();
            }
            if ra != rb {
                out.push(
                    DiffKind::Changed,
                    pa.clone(),
                    pb.clone(),
                    format!("{f}: {} -> {}", show_values(&ra), show_values(&rb)),
                );
            }
        }
    }
    Ok(out)
}
