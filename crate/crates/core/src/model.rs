//! Instance models: resource sets of typed object trees, their JSON file
//! format, demand-loading of referenced files, structural editing and
//! conformance checking against a metamodel.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::meta::{Classifier, FeatureKind, Literal, Metamodel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("cannot access `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("parse error in `{path}` at {location}: {message}")]
    Parse { path: String, location: String, message: String },
    #[error("unresolved reference `{target}` in `{resource}`")]
    UnresolvedRef { resource: String, target: String },
    #[error("resources declare different namespace URIs: `{first}` and `{second}`")]
    MixedNsUri { first: String, second: String },
    #[error("no model files given")]
    NoFiles,
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown resource `{0}`")]
    UnknownResource(String),
    #[error("object id `{id}` already used in `{resource}`")]
    IdClash { resource: String, id: String },
    #[error("moving `{0}` would create a containment cycle")]
    ContainmentCycle(String),
}

pub type ModelResult<T> = Result<T, ModelError>;

/// Absolute object identity: resource URI plus resource-unique id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjRef {
    pub resource: String,
    pub id: String,
}

impl ObjRef {
    pub fn new(resource: impl Into<String>, id: impl Into<String>) -> Self {
        ObjRef { resource: resource.into(), id: id.into() }
    }
}

impl fmt::Display for ObjRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.resource, self.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Prim(Literal),
    Enum(String),
    /// Non-containment reference. Always absolute in memory; rendered as
    /// `#id` or `relative/path.model.json#id` on disk.
    Ref(ObjRef),
    Child(Box<MObject>),
}

impl Value {
    pub fn as_ref_target(&self) -> Option<&ObjRef> {
        match self {
            Value::Ref(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_child(&self) -> Option<&MObject> {
        match self {
            Value::Child(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MObject {
    pub id: String,
    /// Qualified class name, `package.Class`.
    pub class: String,
    /// Unset slots are absent; present slots are never empty.
    pub slots: BTreeMap<String, Vec<Value>>,
}

impl MObject {
    pub fn new(id: impl Into<String>, class: impl Into<String>) -> Self {
        MObject { id: id.into(), class: class.into(), slots: BTreeMap::new() }
    }

    pub fn with(mut self, feature: &str, values: Vec<Value>) -> Self {
        self.set(feature, values);
        self
    }

    pub fn get(&self, feature: &str) -> &[Value] {
        self.slots.get(feature).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Replaces a slot; an empty list unsets it.
    pub fn set(&mut self, feature: &str, values: Vec<Value>) {
        if values.is_empty() {
            self.slots.remove(feature);
        } else {
            self.slots.insert(feature.to_string(), values);
        }
    }

    pub fn unset(&mut self, feature: &str) -> Vec<Value> {
        self.slots.remove(feature).unwrap_or_default()
    }

    pub fn push(&mut self, feature: &str, value: Value) {
        self.slots.entry(feature.to_string()).or_default().push(value);
    }

    /// Pre-order walk over this object and its contained descendants.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a MObject)) {
        f(self);
        for values in self.slots.values() {
            for v in values {
                if let Value::Child(c) = v {
                    c.walk(f);
                }
            }
        }
    }

    fn walk_mut(&mut self, f: &mut impl FnMut(&mut MObject)) {
        f(self);
        for values in self.slots.values_mut() {
            for v in values {
                if let Value::Child(c) = v {
                    c.walk_mut(f);
                }
            }
        }
    }

    fn subtree_ids(&self) -> Vec<String> {
        let mut ids = Vec::new();
        self.walk(&mut |o| ids.push(o.id.clone()));
        ids
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    /// Path relative to the resource set's base directory, `/`-separated.
    pub uri: String,
    /// Other files declared as members of the same set.
    pub members: Vec<String>,
    pub roots: Vec<MObject>,
}

impl Resource {
    pub fn new(uri: impl Into<String>) -> Self {
        Resource { uri: uri.into(), members: Vec::new(), roots: Vec::new() }
    }

    pub fn object_count(&self) -> usize {
        let mut n = 0;
        for r in &self.roots {
            r.walk(&mut |_| n += 1);
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSet {
    pub ns_uri: String,
    pub resources: Vec<Resource>,
}

/// Location of an object inside a resource set: resource index, root index
/// and the (slot, position) steps down the containment tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjPath {
    pub resource: usize,
    pub root: usize,
    pub steps: Vec<(String, usize)>,
}

impl ObjPath {
    pub fn parent(&self) -> Option<(ObjPath, &str, usize)> {
        let (last, rest) = self.steps.split_last()?;
        Some((ObjPath { resource: self.resource, root: self.root, steps: rest.to_vec() }, last.0.as_str(), last.1))
    }
}

/// Where to put an object that is created or moved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    Root { resource: String },
    Child { owner: ObjRef, feature: String },
}

impl ResourceSet {
    pub fn new(ns_uri: impl Into<String>) -> Self {
        ResourceSet { ns_uri: ns_uri.into(), resources: Vec::new() }
    }

    pub fn resource(&self, uri: &str) -> Option<&Resource> {
        self.resources.iter().find(|r| r.uri == uri)
    }

    fn resource_index(&self, uri: &str) -> ModelResult<usize> {
        self.resources.iter().position(|r| r.uri == uri).ok_or_else(|| ModelError::UnknownResource(uri.to_string()))
    }

    pub fn object_count(&self) -> usize {
        self.resources.iter().map(Resource::object_count).sum()
    }

    /// All objects in document order: resources in set order, pre-order
    /// within each resource, slots in key order.
    pub fn objects(&self) -> Vec<(ObjRef, ObjPath)> {
        let mut out = Vec::new();
        for (ri, res) in self.resources.iter().enumerate() {
            for (rootix, root) in res.roots.iter().enumerate() {
                let path = ObjPath { resource: ri, root: rootix, steps: Vec::new() };
                collect_paths(&res.uri, root, path, &mut out);
            }
        }
        out
    }

    pub fn locate(&self, r: &ObjRef) -> Option<ObjPath> {
        let ri = self.resources.iter().position(|res| res.uri == r.resource)?;
        let res = &self.resources[ri];
        for (rootix, root) in res.roots.iter().enumerate() {
            let mut steps = Vec::new();
            if find_steps(root, &r.id, &mut steps) {
                return Some(ObjPath { resource: ri, root: rootix, steps });
            }
        }
        None
    }

    pub fn get(&self, p: &ObjPath) -> &MObject {
        let mut o = &self.resources[p.resource].roots[p.root];
        for (slot, ix) in &p.steps {
            o = match &o.slots[slot][*ix] {
                Value::Child(c) => c,
                _ => panic!("object path does not follow containment"),
            };
        }
        o
    }

    pub fn get_mut(&mut self, p: &ObjPath) -> &mut MObject {
        let mut o = &mut self.resources[p.resource].roots[p.root];
        for (slot, ix) in &p.steps {
            o = match o.slots.get_mut(slot).map(|v| &mut v[*ix]) {
                Some(Value::Child(c)) => c,
                _ => panic!("object path does not follow containment"),
            };
        }
        o
    }

    pub fn object(&self, r: &ObjRef) -> Option<&MObject> {
        self.locate(r).map(|p| self.get(&p))
    }

    pub fn object_mut(&mut self, r: &ObjRef) -> ModelResult<&mut MObject> {
        let p = self.locate(r).ok_or_else(|| ModelError::UnknownObject(r.to_string()))?;
        Ok(self.get_mut(&p))
    }

    /// Container object and containing feature, or `None` for roots.
    pub fn container_of(&self, r: &ObjRef) -> Option<(ObjRef, String)> {
        let p = self.locate(r)?;
        let (parent, slot, _) = p.parent()?;
        let owner = self.get(&parent);
        Some((ObjRef::new(r.resource.clone(), owner.id.clone()), slot.to_string()))
    }

    /// True when `inner` is `outer` or contained (transitively) in it.
    pub fn contains(&self, outer: &ObjRef, inner: &ObjRef) -> bool {
        if outer.resource != inner.resource {
            return false;
        }
        self.object(outer).is_some_and(|o| {
            let mut hit = false;
            o.walk(&mut |x| hit |= x.id == inner.id);
            hit
        })
    }

    /// Mutable pre-order visit of every object with its resource URI.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&str, &mut MObject)) {
        for res in &mut self.resources {
            let uri = res.uri.clone();
            for root in &mut res.roots {
                root.walk_mut(&mut |o| f(&uri, o));
            }
        }
    }

    /// First id of the form `base`, `base_2`, `base_3`, ... unused in `resource`.
    pub fn fresh_id(&self, resource: &str, base: &str) -> String {
        let mut used = BTreeSet::new();
        if let Some(res) = self.resource(resource) {
            for r in &res.roots {
                r.walk(&mut |o| {
                    used.insert(o.id.clone());
                });
            }
        }
        if !used.contains(base) {
            return base.to_string();
        }
        (2..).map(|n| format!("{base}_{n}")).find(|c| !used.contains(c)).expect("unbounded")
    }

    /// Removes an object (with its subtree) from its container without
    /// touching references to it.
    pub fn detach(&mut self, r: &ObjRef) -> ModelResult<MObject> {
        let p = self.locate(r).ok_or_else(|| ModelError::UnknownObject(r.to_string()))?;
        match p.parent() {
            None => Ok(self.resources[p.resource].roots.remove(p.root)),
            Some((parent, slot, ix)) => {
                let slot = slot.to_string();
                let owner = self.get_mut(&parent);
                let values = owner.slots.get_mut(&slot).expect("slot on path");
                let Value::Child(obj) = values.remove(ix) else { unreachable!("path steps only follow children") };
                if values.is_empty() {
                    owner.slots.remove(&slot);
                }
                Ok(*obj)
            }
        }
    }

    fn insert(&mut self, obj: MObject, at: &Placement) -> ModelResult<ObjRef> {
        match at {
            Placement::Root { resource } => {
                let ri = self.resource_index(resource)?;
                let id = obj.id.clone();
                self.resources[ri].roots.push(obj);
                Ok(ObjRef::new(resource.clone(), id))
            }
            Placement::Child { owner, feature } => {
                let id = obj.id.clone();
                self.object_mut(owner)?.push(feature, Value::Child(Box::new(obj)));
                Ok(ObjRef::new(owner.resource.clone(), id))
            }
        }
    }

    fn placement_resource<'a>(&self, at: &'a Placement) -> &'a str {
        match at {
            Placement::Root { resource } => resource,
            Placement::Child { owner, .. } => &owner.resource,
        }
    }

    /// Adds a new, empty object. The id must be free in the target resource.
    pub fn create(&mut self, id: &str, class: &str, at: &Placement) -> ModelResult<ObjRef> {
        let resource = self.placement_resource(at).to_string();
        if self.locate(&ObjRef::new(resource.clone(), id)).is_some() {
            return Err(ModelError::IdClash { resource, id: id.to_string() });
        }
        self.insert(MObject::new(id, class), at)
    }

    /// Moves an object (and its subtree) to a new place, rewriting every
    /// reference into the subtree when it changes resource. Returns the
    /// object's new identity.
    pub fn move_object(&mut self, r: &ObjRef, to: &Placement) -> ModelResult<ObjRef> {
        if let Placement::Child { owner, .. } = to {
            if self.locate(owner).is_none() {
                return Err(ModelError::UnknownObject(owner.to_string()));
            }
            if self.contains(r, owner) {
                return Err(ModelError::ContainmentCycle(r.to_string()));
            }
        }
        let target_res = self.placement_resource(to).to_string();
        self.resource_index(&target_res)?;
        let obj = self.object(r).ok_or_else(|| ModelError::UnknownObject(r.to_string()))?;
        let ids = obj.subtree_ids();
        if target_res != r.resource {
            for id in &ids {
                if self.locate(&ObjRef::new(target_res.clone(), id.clone())).is_some() {
                    return Err(ModelError::IdClash { resource: target_res, id: id.clone() });
                }
            }
        }
        let obj = self.detach(r)?;
        let new_ref = self.insert(obj, to)?;
        if target_res != r.resource {
            let moved: BTreeSet<String> = ids.into_iter().collect();
            let old_res = r.resource.clone();
            self.for_each_mut(|_, o| {
                for values in o.slots.values_mut() {
                    for v in values {
                        if let Value::Ref(t) = v {
                            if t.resource == old_res && moved.contains(&t.id) {
                                t.resource = target_res.clone();
                            }
                        }
                    }
                }
            });
        }
        Ok(new_ref)
    }

    /// Deletes an object, its subtree, and every reference to any of them.
    /// Returns the identities removed.
    pub fn delete(&mut self, r: &ObjRef) -> ModelResult<Vec<ObjRef>> {
        let obj = self.detach(r)?;
        let gone: Vec<ObjRef> = obj.subtree_ids().into_iter().map(|id| ObjRef::new(r.resource.clone(), id)).collect();
        let set: BTreeSet<&ObjRef> = gone.iter().collect();
        self.for_each_mut(|_, o| {
            o.slots.retain(|_, values| {
                values.retain(|v| !matches!(v, Value::Ref(t) if set.contains(t)));
                !values.is_empty()
            });
        });
        Ok(gone)
    }

    /// Unsets a slot. Objects contained in it are deleted together with
    /// every reference to them.
    pub fn drop_slot(&mut self, r: &ObjRef, feature: &str) -> ModelResult<()> {
        let values = self.object_mut(r)?.unset(feature);
        let mut doomed = BTreeSet::new();
        for v in &values {
            if let Value::Child(c) = v {
                c.walk(&mut |o| {
                    doomed.insert(ObjRef::new(r.resource.clone(), o.id.clone()));
                });
            }
        }
        if !doomed.is_empty() {
            self.for_each_mut(|_, o| {
                o.slots.retain(|_, values| {
                    values.retain(|v| !matches!(v, Value::Ref(t) if doomed.contains(t)));
                    !values.is_empty()
                });
            });
        }
        Ok(())
    }

    /// Replaces every reference to `from` by a reference to `to`.
    pub fn retarget(&mut self, from: &ObjRef, to: &ObjRef) {
        self.for_each_mut(|_, o| {
            for values in o.slots.values_mut() {
                for v in values {
                    if let Value::Ref(t) = v {
                        if t == from {
                            *t = to.clone();
                        }
                    }
                }
            }
        });
    }

    /// Objects referring to `target` through a non-containment slot:
    /// (referrer, feature).
    pub fn referrers(&self, target: &ObjRef) -> Vec<(ObjRef, String)> {
        let mut out = Vec::new();
        for res in &self.resources {
            for root in &res.roots {
                root.walk(&mut |o| {
                    for (k, values) in &o.slots {
                        if values.iter().any(|v| v.as_ref_target() == Some(target)) {
                            out.push((ObjRef::new(res.uri.clone(), o.id.clone()), k.clone()));
                        }
                    }
                });
            }
        }
        out
    }
}

fn collect_paths(uri: &str, obj: &MObject, path: ObjPath, out: &mut Vec<(ObjRef, ObjPath)>) {
    out.push((ObjRef::new(uri, obj.id.clone()), path.clone()));
    for (slot, values) in &obj.slots {
        for (ix, v) in values.iter().enumerate() {
            if let Value::Child(c) = v {
                let mut p = path.clone();
                p.steps.push((slot.clone(), ix));
                collect_paths(uri, c, p, out);
            }
        }
    }
}

fn find_steps(obj: &MObject, id: &str, steps: &mut Vec<(String, usize)>) -> bool {
    if obj.id == id {
        return true;
    }
    for (slot, values) in &obj.slots {
        for (ix, v) in values.iter().enumerate() {
            if let Value::Child(c) = v {
                steps.push((slot.clone(), ix));
                if find_steps(c, id, steps) {
                    return true;
                }
                steps.pop();
            }
        }
    }
    false
}

/// Instances of `class` (optionally including subclasses) in document order.
pub fn instances_of(set: &ResourceSet, mm: &Metamodel, class: &str, include_subtypes: bool) -> Vec<ObjRef> {
    set.objects()
        .into_iter()
        .filter(|(_, p)| {
            let c = &set.get(p).class;
            if include_subtypes {
                mm.is_subtype(c, class)
            } else {
                c == class
            }
        })
        .map(|(r, _)| r)
        .collect()
}

/// Changes an object's class, leaving its slots untouched.
pub fn retype_object(set: &mut ResourceSet, mm: &Metamodel, obj: &ObjRef, class: &str) -> ModelResult<()> {
    if mm.class(class).is_none() {
        return Err(ModelError::UnknownClass(class.to_string()));
    }
    set.object_mut(obj)?.class = class.to_string();
    Ok(())
}

// ---------------------------------------------------------------------------
// File format

/// Directory part of a `/`-separated URI, without trailing slash.
fn uri_dir(uri: &str) -> &str {
    uri.rsplit_once('/').map(|(d, _)| d).unwrap_or("")
}

fn normalize_uri(path: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for seg in path.split('/') {
        match seg {
            "" | "." => {}
            ".." if parts.last().is_some_and(|p| *p != "..") => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}

/// Resolves a reference path written inside `from_uri` to a set-relative URI.
pub fn resolve_uri(from_uri: &str, rel: &str) -> String {
    let dir = uri_dir(from_uri);
    if dir.is_empty() {
        normalize_uri(rel)
    } else {
        normalize_uri(&format!("{dir}/{rel}"))
    }
}

/// Writes `to_uri` relative to the directory of `from_uri`.
pub fn relative_uri(from_uri: &str, to_uri: &str) -> String {
    let from: Vec<&str> = uri_dir(from_uri).split('/').filter(|s| !s.is_empty()).collect();
    let to: Vec<&str> = to_uri.split('/').collect();
    let common = from.iter().zip(&to).take_while(|(a, b)| a == b).count();
    let mut parts: Vec<&str> = vec![".."; from.len() - common];
    parts.extend(&to[common..]);
    parts.join("/")
}

fn parse_err(path: &str, location: &str, message: impl Into<String>) -> ModelError {
    ModelError::Parse { path: path.to_string(), location: location.to_string(), message: message.into() }
}

/// Parses one `.model.json` document. Returns the header namespace URI and
/// the resource; references are resolved to absolute form but not checked.
pub fn parse_resource(uri: &str, text: &str) -> ModelResult<(String, Resource)> {
    let doc: Json = serde_json::from_str(text)
        .map_err(|e| parse_err(uri, &format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let top = doc.as_object().ok_or_else(|| parse_err(uri, "$", "document must be an object"))?;
    let header = top
        .get("header")
        .and_then(Json::as_object)
        .ok_or_else(|| parse_err(uri, "$.header", "missing header object"))?;
    let ns_uri = header
        .get("nsUri")
        .and_then(Json::as_str)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| parse_err(uri, "$.header.nsUri", "missing namespace URI"))?
        .to_string();
    let members = match header.get("members") {
        None => Vec::new(),
        Some(Json::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.as_str()
                    .map(|s| resolve_uri(uri, s))
                    .ok_or_else(|| parse_err(uri, &format!("$.header.members[{i}]"), "member must be a string"))
            })
            .collect::<ModelResult<_>>()?,
        Some(_) => return Err(parse_err(uri, "$.header.members", "members must be an array")),
    };
    let roots =
        top.get("roots").and_then(Json::as_array).ok_or_else(|| parse_err(uri, "$.roots", "missing roots array"))?;
    let mut res = Resource::new(uri);
    res.members = members;
    let mut ids = BTreeSet::new();
    for (i, r) in roots.iter().enumerate() {
        res.roots.push(parse_object(uri, r, &format!("$.roots[{i}]"), &mut ids)?);
    }
    Ok((ns_uri, res))
}

fn parse_object(uri: &str, j: &Json, loc: &str, ids: &mut BTreeSet<String>) -> ModelResult<MObject> {
    let o = j.as_object().ok_or_else(|| parse_err(uri, loc, "object expected"))?;
    let id = o.get("id").and_then(Json::as_str).ok_or_else(|| parse_err(uri, loc, "missing `id`"))?;
    if id.is_empty() || id.contains('#') {
        return Err(parse_err(uri, loc, format!("invalid object id `{id}`")));
    }
    if !ids.insert(id.to_string()) {
        return Err(parse_err(uri, loc, format!("duplicate object id `{id}`")));
    }
    let class = o.get("class").and_then(Json::as_str).ok_or_else(|| parse_err(uri, loc, "missing `class`"))?;
    let mut obj = MObject::new(id, class);
    if let Some(slots) = o.get("slots") {
        let slots = slots.as_object().ok_or_else(|| parse_err(uri, &format!("{loc}.slots"), "object expected"))?;
        for (name, values) in slots {
            let sloc = format!("{loc}.slots.{name}");
            let items = values.as_array().ok_or_else(|| parse_err(uri, &sloc, "slot values must be an array"))?;
            let mut parsed = Vec::with_capacity(items.len());
            for (i, v) in items.iter().enumerate() {
                parsed.push(parse_value(uri, v, &format!("{sloc}[{i}]"), ids)?);
            }
            obj.set(name, parsed);
        }
    }
    Ok(obj)
}

fn parse_value(uri: &str, j: &Json, loc: &str, ids: &mut BTreeSet<String>) -> ModelResult<Value> {
    Ok(match j {
        Json::Bool(b) => Value::Prim(Literal::Bool(*b)),
        Json::Number(n) => match n.as_i64() {
            Some(i) => Value::Prim(Literal::Int(i)),
            None => Value::Prim(Literal::Float(n.as_f64().ok_or_else(|| parse_err(uri, loc, "number out of range"))?)),
        },
        Json::String(s) => Value::Prim(Literal::Str(s.clone())),
        Json::Object(o) if o.contains_key("enum") => {
            let lit = o
                .get("enum")
                .and_then(Json::as_str)
                .ok_or_else(|| parse_err(uri, loc, "enum literal must be a string"))?;
            Value::Enum(lit.to_string())
        }
        Json::Object(o) if o.contains_key("ref") => {
            let target =
                o.get("ref").and_then(Json::as_str).ok_or_else(|| parse_err(uri, loc, "ref must be a string"))?;
            let (path, id) =
                target.split_once('#').ok_or_else(|| parse_err(uri, loc, format!("reference `{target}` lacks `#`")))?;
            if id.is_empty() {
                return Err(parse_err(uri, loc, format!("reference `{target}` has empty id")));
            }
            let resource = if path.is_empty() { uri.to_string() } else { resolve_uri(uri, path) };
            Value::Ref(ObjRef::new(resource, id))
        }
        Json::Object(_) => Value::Child(Box::new(parse_object(uri, j, loc, ids)?)),
        _ => return Err(parse_err(uri, loc, "unsupported value")),
    })
}

fn object_json(uri: &str, o: &MObject) -> Json {
    let mut m = Map::new();
    m.insert("id".into(), Json::String(o.id.clone()));
    m.insert("class".into(), Json::String(o.class.clone()));
    if !o.slots.is_empty() {
        let slots: Map<String, Json> = o
            .slots
            .iter()
            .map(|(k, vs)| (k.clone(), Json::Array(vs.iter().map(|v| value_json(uri, v)).collect())))
            .collect();
        m.insert("slots".into(), Json::Object(slots));
    }
    Json::Object(m)
}

fn value_json(uri: &str, v: &Value) -> Json {
    match v {
        Value::Prim(l) => serde_json::to_value(l).expect("literal"),
        Value::Enum(e) => json!({ "enum": e }),
        Value::Ref(r) => {
            let target = if r.resource == uri {
                format!("#{}", r.id)
            } else {
                format!("{}#{}", relative_uri(uri, &r.resource), r.id)
            };
            json!({ "ref": target })
        }
        Value::Child(c) => object_json(uri, c),
    }
}

/// Renders one resource as a canonical `.model.json` document.
pub fn render_resource(ns_uri: &str, res: &Resource) -> String {
    let mut header = Map::new();
    header.insert("nsUri".into(), Json::String(ns_uri.to_string()));
    if !res.members.is_empty() {
        let members = res.members.iter().map(|m| Json::String(relative_uri(&res.uri, m))).collect();
        header.insert("members".into(), Json::Array(members));
    }
    let doc = json!({
        "header": Json::Object(header),
        "roots": res.roots.iter().map(|r| object_json(&res.uri, r)).collect::<Vec<_>>(),
    });
    crate::to_canonical_json(&doc)
}

fn read(path: &Path) -> ModelResult<String> {
    fs::read_to_string(path).map_err(|e| ModelError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn canonical(path: &Path) -> ModelResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| ModelError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Relative `/`-separated path from `base` to `path`, both absolute.
fn relative_to(base: &Path, path: &Path) -> String {
    let b: Vec<Component> = base.components().collect();
    let p: Vec<Component> = path.components().collect();
    let common = b.iter().zip(&p).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = vec!["..".to_string(); b.len() - common];
    parts.extend(p[common..].iter().map(|c| c.as_os_str().to_string_lossy().into_owned()));
    parts.join("/")
}

/// Loads the given files plus every file they reference or declare as a
/// member, then checks that every reference resolves. URIs are relative to
/// the directory of the first file.
pub fn load_resource_set<P: AsRef<Path>>(paths: &[P]) -> ModelResult<ResourceSet> {
    let first = paths.first().ok_or(ModelError::NoFiles)?;
    let first = canonical(first.as_ref())?;
    let base = first.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut queue: VecDeque<String> = VecDeque::new();
    for p in paths {
        let uri = relative_to(&base, &canonical(p.as_ref())?);
        if !queue.contains(&uri) {
            queue.push_back(uri);
        }
    }

    let mut set: Option<ResourceSet> = None;
    let mut loaded: BTreeSet<String> = BTreeSet::new();
    while let Some(uri) = queue.pop_front() {
        if !loaded.insert(uri.clone()) {
            continue;
        }
        let text = read(&base.join(&uri))?;
        let (ns, res) = parse_resource(&uri, &text)?;
        let mut wanted: Vec<String> = res.members.clone();
        for r in &res.roots {
            r.walk(&mut |o| {
                for v in o.slots.values().flatten() {
                    if let Value::Ref(t) = v {
                        wanted.push(t.resource.clone());
                    }
                }
            });
        }
        for w in wanted {
            if !loaded.contains(&w) && !queue.contains(&w) {
                queue.push_back(w);
            }
        }
        let set = set.get_or_insert_with(|| ResourceSet::new(ns.clone()));
        if set.ns_uri != ns {
            return Err(ModelError::MixedNsUri { first: set.ns_uri.clone(), second: ns });
        }
        set.resources.push(res);
    }
    let set = set.expect("at least one file loaded");
    check_references(&set)?;
    Ok(set)
}

/// Errors on the first reference whose target object does not exist.
pub fn check_references(set: &ResourceSet) -> ModelResult<()> {
    let known: BTreeSet<ObjRef> = set.objects().into_iter().map(|(r, _)| r).collect();
    for res in &set.resources {
        for root in &res.roots {
            let mut bad = None;
            root.walk(&mut |o| {
                for v in o.slots.values().flatten() {
                    if let Value::Ref(t) = v {
                        if bad.is_none() && !known.contains(t) {
                            bad = Some(t.clone());
                        }
                    }
                }
            });
            if let Some(t) = bad {
                return Err(ModelError::UnresolvedRef { resource: res.uri.clone(), target: t.to_string() });
            }
        }
    }
    Ok(())
}

/// Writes one file per resource under `out_dir`, keeping relative names.
pub fn save_resource_set(set: &ResourceSet, out_dir: &Path) -> ModelResult<Vec<PathBuf>> {
    let io = |p: &Path, e: std::io::Error| ModelError::Io { path: p.display().to_string(), message: e.to_string() };
    let mut written = Vec::new();
    for res in &set.resources {
        let path = out_dir.join(&res.uri);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        fs::write(&path, render_resource(&set.ns_uri, res)).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// Conformance

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    NsUriMismatch,
    DuplicateObjectId,
    UnknownClass,
    AbstractInstantiation,
    UnknownFeature,
    VolatileSlot,
    TypeMismatch,
    UnknownLiteral,
    DanglingRef,
    MultiplicityLower,
    MultiplicityUpper,
    ContainmentViolation,
    OppositeMismatch,
    DuplicateIdentifier,
}

impl Rule {
    /// Rules relaxed inside a custom migration.
    pub fn softenable(self) -> bool {
        matches!(self, Rule::UnknownFeature | Rule::MultiplicityLower | Rule::AbstractInstantiation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(rename = "objectId")]
    pub object_id: String,
    #[serde(rename = "resourceUri")]
    pub resource_uri: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}#{}: {}", self.rule, self.resource_uri, self.object_id, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConformanceMode {
    Strict,
    /// Ignores unknown slots, unmet lower bounds and abstract instances.
    Softened,
}

pub fn check_conformance(set: &ResourceSet, mm: &Metamodel) -> Vec<Violation> {
    check_conformance_with(set, mm, ConformanceMode::Strict)
}

pub fn check_conformance_with(set: &ResourceSet, mm: &Metamodel, mode: ConformanceMode) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |r: &ObjRef, rule: Rule, message: String| {
        if mode == ConformanceMode::Softened && rule.softenable() {
            return;
        }
        out.push(Violation { object_id: r.id.clone(), resource_uri: r.resource.clone(), rule, message });
    };

    if mm.package_by_uri(&set.ns_uri).is_none() {
        let r = ObjRef::new(set.resources.first().map(|r| r.uri.clone()).unwrap_or_default(), "");
        push(&r, Rule::NsUriMismatch, format!("namespace URI `{}` is not declared by the metamodel", set.ns_uri));
    }

    let mut index: HashMap<ObjRef, &MObject> = HashMap::new();
    let mut order: Vec<(ObjRef, &MObject)> = Vec::new();
    for res in &set.resources {
        for root in &res.roots {
            root.walk(&mut |o| {
                let r = ObjRef::new(res.uri.clone(), o.id.clone());
                order.push((r.clone(), o));
                if index.insert(r.clone(), o).is_some() {
                    push(&r, Rule::DuplicateObjectId, format!("id `{}` used twice in resource", o.id));
                }
            });
        }
    }

    let mut identifiers: BTreeMap<(String, String), BTreeMap<String, String>> = BTreeMap::new();

    for (r, o) in &order {
        let Some(class) = mm.class(&o.class) else {
            push(r, Rule::UnknownClass, format!("class `{}` does not exist", o.class));
            continue;
        };
        if class.is_abstract {
            push(r, Rule::AbstractInstantiation, format!("class `{}` is abstract", o.class));
        }
        let features = mm.all_features_with_owner(&o.class);
        for (name, values) in &o.slots {
            let Some((owner, f)) = features.iter().find(|(_, f)| &f.name == name) else {
                push(r, Rule::UnknownFeature, format!("`{}` has no feature `{name}`", o.class));
                continue;
            };
            if f.volatile {
                push(r, Rule::VolatileSlot, format!("volatile feature `{name}` carries values"));
            }
            if !f.upper.admits(values.len()) {
                push(
                    r,
                    Rule::MultiplicityUpper,
                    format!("`{name}` has {} values, upper bound {}", values.len(), f.upper),
                );
            }
            match &f.kind {
                FeatureKind::Attribute { type_ref, identifier, .. } => {
                    for v in values {
                        match (mm.classifier(type_ref), v) {
                            (Some(Classifier::DataType(dt)), Value::Prim(l)) if dt.primitive.admits(l) => {}
                            (Some(Classifier::Enum(e)), Value::Enum(l)) => {
                                if !e.literals.contains(l) {
                                    push(r, Rule::UnknownLiteral, format!("`{l}` is not a literal of `{type_ref}`"));
                                }
                            }
                            _ => push(r, Rule::TypeMismatch, format!("value of `{name}` does not fit `{type_ref}`")),
                        }
                    }
                    if *identifier {
                        if let Some(Value::Prim(l)) = values.first() {
                            let seen = identifiers.entry((owner.clone(), name.clone())).or_default();
                            let key = l.to_string();
                            if let Some(prev) = seen.get(&key) {
                                push(
                                    r,
                                    Rule::DuplicateIdentifier,
                                    format!("identifier {key} of `{owner}.{name}` already used by {prev}"),
                                );
                            } else {
                                seen.insert(key, r.to_string());
                            }
                        }
                    }
                }
                FeatureKind::Reference { type_ref, containment, opposite } => {
                    for v in values {
                        let target = match (v, containment) {
                            (Value::Child(c), true) => ObjRef::new(r.resource.clone(), c.id.clone()),
                            (Value::Ref(t), false) => t.clone(),
                            (Value::Child(_), false) | (Value::Ref(_), true) => {
                                push(
                                    r,
                                    Rule::ContainmentViolation,
                                    format!("`{name}` mixes containment and cross references"),
                                );
                                continue;
                            }
                            _ => {
                                push(r, Rule::TypeMismatch, format!("`{name}` holds a non-object value"));
                                continue;
                            }
                        };
                        let Some(t) = index.get(&target) else {
                            push(r, Rule::DanglingRef, format!("`{name}` refers to missing `{target}`"));
                            continue;
                        };
                        if !mm.is_subtype(&t.class, type_ref) {
                            push(
                                r,
                                Rule::TypeMismatch,
                                format!("`{name}` value `{target}` is a `{}`, not a `{type_ref}`", t.class),
                            );
                        }
                        if let Some(op) = opposite {
                            let back = op.rsplit('.').next().unwrap_or(op);
                            let points_back = t.get(back).iter().any(|bv| match bv {
                                Value::Ref(x) => x == r,
                                Value::Child(c) => target.resource == r.resource && c.id == r.id,
                                _ => false,
                            });
                            if !points_back {
                                push(
                                    r,
                                    Rule::OppositeMismatch,
                                    format!("`{target}` does not point back through `{back}`"),
                                );
                            }
                        }
                    }
                }
            }
        }
        for (_, f) in &features {
            if f.volatile || f.lower == 0 {
                continue;
            }
            let n = o.get(&f.name).len();
            if n < f.lower as usize {
                push(r, Rule::MultiplicityLower, format!("`{}` has {n} values, lower bound {}", f.name, f.lower));
            }
        }
    }
    out
}
