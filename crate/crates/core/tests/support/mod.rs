//! Random small metamodels, conforming models and operation applications.
//!
//! Shared by the property tests here and by the CLI acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coupevo_core::catalog::{apply_coupled, check_applicability, list_operations, CatalogError, OperationApplication};
use coupevo_core::meta::{
    validate_metamodel, Annotation, Class, Classifier, DataType, Enumeration, Feature, FeatureKind, Literal, Metamodel,
    OperationSignature, Package, PrimitiveKind, Upper,
};
use coupevo_core::model::{check_conformance, MObject, ObjRef, Resource, ResourceSet, Value};

pub const MAX_CLASSES: usize = 6;
pub const MAX_OBJECTS: usize = 20;
pub const PKG: &str = "p";
pub const URI: &str = "urn:p";

const FEATURE_NAMES: &[&str] = &["a", "b", "c", "d", "e", "f", "g"];

pub struct Fixture {
    pub seed: u64,
    pub mm: Metamodel,
    pub set: ResourceSet,
}

fn q(name: &str) -> String {
    format!("{PKG}.{name}")
}

fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen_bool(p)
}

fn pick<T: Clone>(rng: &mut ChaCha8Rng, items: &[T]) -> Option<T> {
    items.choose(rng).cloned()
}

fn datatype(name: &str, primitive: PrimitiveKind) -> Classifier {
    Classifier::DataType(DataType { name: name.into(), primitive, annotations: vec![] })
}

const PRIMITIVES: &[(&str, PrimitiveKind)] = &[
    ("String", PrimitiveKind::String),
    ("Integer", PrimitiveKind::Integer),
    ("Float", PrimitiveKind::Float),
    ("Boolean", PrimitiveKind::Boolean),
];

fn random_literal(rng: &mut ChaCha8Rng, kind: PrimitiveKind) -> Literal {
    match kind {
        PrimitiveKind::String => Literal::Str(format!("s{}", rng.gen_range(0..5))),
        PrimitiveKind::Integer => Literal::Int(rng.gen_range(-3..10)),
        PrimitiveKind::Float => Literal::Float(rng.gen_range(0..8) as f64 * 0.5),
        PrimitiveKind::Boolean => Literal::Bool(rng.gen()),
    }
}

fn random_annotations(rng: &mut ChaCha8Rng) -> Vec<Annotation> {
    let mut out = Vec::new();
    if chance(rng, 0.2) {
        out.push(Annotation::new("documentation").with("value", "doc"));
    }
    if chance(rng, 0.15) {
        out.push(Annotation::new("gmf.constraint").with("body", "self.a <> null"));
    }
    if chance(rng, 0.2) {
        out.push(Annotation::new("note").with("k", "v"));
    }
    out
}

fn random_attribute(rng: &mut ChaCha8Rng, name: &str, enums: &[(String, Vec<String>)]) -> Feature {
    let use_enum = !enums.is_empty() && chance(rng, 0.3);
    let lower = if chance(rng, 0.2) { 1 } else { 0 };
    let upper = *[Upper::Bounded(1), Upper::Bounded(1), Upper::Unbounded, Upper::Bounded(3)].choose(rng).unwrap();
    let (type_ref, default) = if use_enum {
        let (e, lits) = pick(rng, enums).unwrap();
        let lit = pick(rng, &lits).unwrap();
        (e, Literal::Str(lit))
    } else {
        let (n, k) = *PRIMITIVES.choose(rng).unwrap();
        (q(n), random_literal(rng, k))
    };
    let mut f = Feature::attribute(name, &type_ref, lower, upper);
    let scalar_key = !use_enum && upper == Upper::Bounded(1) && (type_ref == q("String") || type_ref == q("Integer"));
    if let FeatureKind::Attribute { identifier, default_value, .. } = &mut f.kind {
        *identifier = scalar_key && chance(rng, 0.2);
        if !*identifier && chance(rng, if lower > 0 { 0.6 } else { 0.25 }) {
            *default_value = Some(default);
        }
    }
    if chance(rng, 0.15) {
        f.changeable = false;
    } else if chance(rng, 0.1) {
        f.annotations.push(Annotation::new("genmodel").with("suppressedSetVisibility", "true"));
    }
    if lower == 0 && chance(rng, 0.05) {
        f.volatile = true;
        f.changeable = false;
    }
    f.annotations.extend(random_annotations(rng));
    f
}

fn random_reference(rng: &mut ChaCha8Rng, name: &str, classes: &[String]) -> Feature {
    let containment = chance(rng, 0.4);
    let lower = if !containment && chance(rng, 0.1) { 1 } else { 0 };
    let upper = *[Upper::Bounded(1), Upper::Unbounded, Upper::Bounded(2)].choose(rng).unwrap();
    let mut f = Feature::reference(name, &pick(rng, classes).unwrap(), lower, upper, containment);
    if chance(rng, 0.1) {
        f.changeable = false;
    }
    f.annotations.extend(random_annotations(rng));
    f
}

/// A valid metamodel with one package, at most `MAX_CLASSES` classes.
pub fn random_metamodel(rng: &mut ChaCha8Rng) -> Metamodel {
    loop {
        let mm = draft_metamodel(rng);
        if validate_metamodel(&mm).is_empty() {
            return mm;
        }
    }
}

fn draft_metamodel(rng: &mut ChaCha8Rng) -> Metamodel {
    let mut classifiers: Vec<Classifier> = PRIMITIVES.iter().map(|(n, k)| datatype(n, *k)).collect();
    let mut enums = Vec::new();
    for e in 0..rng.gen_range(1..=2) {
        let literals: Vec<String> = (0..rng.gen_range(1..=3)).map(|l| format!("L{l}")).collect();
        enums.push((q(&format!("E{e}")), literals.clone()));
        classifiers.push(Classifier::Enum(Enumeration {
            name: format!("E{e}"),
            literals,
            annotations: random_annotations(rng),
        }));
    }
    let n = rng.gen_range(2..=MAX_CLASSES);
    let names: Vec<String> = (0..n).map(|i| q(&format!("C{i}"))).collect();
    let mut classes: Vec<Class> = Vec::new();
    for i in 0..n {
        let mut c = Class::new(&format!("C{i}"));
        c.is_interface = chance(rng, 0.15);
        c.is_abstract = chance(rng, 0.25);
        if i > 0 && chance(rng, 0.5) {
            c.supertypes.push(names[rng.gen_range(0..i)].clone());
            if i > 1 && chance(rng, 0.15) {
                let other = names[rng.gen_range(0..i)].clone();
                if !c.supertypes.contains(&other) {
                    c.supertypes.push(other);
                }
            }
        }
        if chance(rng, 0.3) {
            c.operations.push(OperationSignature { name: format!("op{i}"), parameters: vec![], annotations: vec![] });
        }
        c.annotations = random_annotations(rng);
        classes.push(c);
    }
    for class in classes.iter_mut() {
        for _ in 0..rng.gen_range(0..=3) {
            let name = *FEATURE_NAMES.choose(rng).unwrap();
            let f = if chance(rng, 0.6) {
                random_attribute(rng, name, &enums)
            } else {
                random_reference(rng, name, &names)
            };
            class.features.push(f);
        }
    }
    classifiers.extend(classes.into_iter().map(Classifier::Class));
    Metamodel {
        packages: vec![Package {
            name: PKG.into(),
            ns_uri: URI.into(),
            classifiers,
            annotations: random_annotations(rng),
        }],
    }
}

struct ModelBuilder<'a> {
    mm: &'a Metamodel,
    rng: &'a mut ChaCha8Rng,
    next_id: usize,
    budget: usize,
    next_key: i64,
}

impl ModelBuilder<'_> {
    fn concrete_subtypes(&self, class: &str) -> Vec<String> {
        let mut out: Vec<String> = std::iter::once(class.to_string()).chain(self.mm.all_subclasses(class)).collect();
        out.retain(|c| self.mm.class(c).is_some_and(|k| !k.is_abstract));
        out
    }

    fn values(&mut self, f: &Feature) -> usize {
        let max = match f.upper {
            Upper::Bounded(u) => u as usize,
            Upper::Unbounded => 3,
        };
        self.rng.gen_range(f.lower as usize..=max.max(f.lower as usize).min(3))
    }

    fn object(&mut self, class: &str, depth: usize) -> MObject {
        self.budget = self.budget.saturating_sub(1);
        let mut o = MObject::new(format!("o{}", self.next_id), class);
        self.next_id += 1;
        let features: Vec<Feature> = self.mm.all_features(class).into_iter().cloned().collect();
        for f in &features {
            if f.volatile {
                continue;
            }
            match &f.kind {
                FeatureKind::Attribute { type_ref, identifier, .. } => {
                    if f.lower == 0 && !self.rng.gen_bool(0.6) {
                        continue;
                    }
                    let n = self.values(f).max(1);
                    let vals: Vec<Value> = (0..n)
                        .map(|_| {
                            if *identifier {
                                self.next_key += 1;
                                return match self.mm.data_type(type_ref).map(|d| d.primitive) {
                                    Some(PrimitiveKind::Integer) => Value::Prim(Literal::Int(self.next_key)),
                                    _ => Value::Prim(Literal::Str(format!("k{}", self.next_key))),
                                };
                            }
                            match self.mm.classifier(type_ref) {
                                Some(Classifier::Enum(e)) => Value::Enum(e.literals.choose(self.rng).unwrap().clone()),
                                Some(Classifier::DataType(d)) => Value::Prim(random_literal(self.rng, d.primitive)),
                                _ => unreachable!("validated metamodel"),
                            }
                        })
                        .collect();
                    o.set(&f.name, vals);
                }
                FeatureKind::Reference { type_ref, containment: true, .. } => {
                    let kinds = self.concrete_subtypes(type_ref);
                    if depth >= 3 || kinds.is_empty() || self.budget == 0 || !self.rng.gen_bool(0.5) {
                        continue;
                    }
                    let n = self.values(f).max(1).min(self.budget);
                    let children: Vec<Value> = (0..n)
                        .map(|_| {
                            let k = kinds.choose(self.rng).unwrap().clone();
                            Value::Child(Box::new(self.object(&k, depth + 1)))
                        })
                        .collect();
                    o.set(&f.name, children);
                }
                FeatureKind::Reference { .. } => {}
            }
        }
        o
    }
}

/// A model conforming to `mm`, or `None` when the draw cannot satisfy
/// mandatory references.
pub fn random_model(mm: &Metamodel, rng: &mut ChaCha8Rng) -> Option<ResourceSet> {
    let uris: Vec<String> = (0..rng.gen_range(1..=2)).map(|i| format!("r{i}.model.json")).collect();
    let mut set =
        ResourceSet { ns_uri: mm.packages[0].ns_uri.clone(), resources: uris.iter().map(Resource::new).collect() };
    let concrete: Vec<String> = mm.classes().filter(|(_, c)| !c.is_abstract).map(|(n, _)| n).collect();
    let target = rng.gen_range(0..=MAX_OBJECTS);
    let mut b = ModelBuilder { mm, rng, next_id: 0, budget: target, next_key: 0 };
    while b.budget > 0 && !concrete.is_empty() {
        let class = concrete.choose(b.rng).unwrap().clone();
        let root = b.object(&class, 0);
        let r = b.rng.gen_range(0..uris.len());
        set.resources[r].roots.push(root);
    }
    // Cross references, filled once every object exists.
    let all: Vec<(ObjRef, String)> = set
        .objects()
        .into_iter()
        .map(|(r, p)| {
            let class = set.get(&p).class.clone();
            (r, class)
        })
        .collect();
    let mut plan: Vec<(ObjRef, String, Vec<Value>)> = Vec::new();
    for (r, class) in &all {
        for f in mm.all_features(class) {
            let FeatureKind::Reference { type_ref, containment: false, .. } = &f.kind else {
                continue;
            };
            if f.lower == 0 && !rng.gen_bool(0.4) {
                continue;
            }
            let mut candidates: Vec<&ObjRef> =
                all.iter().filter(|(_, c)| mm.is_subtype(c, type_ref)).map(|(o, _)| o).collect();
            candidates.shuffle(rng);
            let max = match f.upper {
                Upper::Bounded(u) => u as usize,
                Upper::Unbounded => 3,
            };
            let n = rng.gen_range(f.lower.max(1) as usize..=max.max(1)).min(candidates.len());
            if n < f.lower as usize {
                return None;
            }
            plan.push((r.clone(), f.name.clone(), candidates[..n].iter().map(|o| Value::Ref((*o).clone())).collect()));
        }
    }
    for (r, feature, values) in plan {
        set.object_mut(&r).ok()?.set(&feature, values);
    }
    check_conformance(&set, mm).is_empty().then_some(set)
}

/// Nudges a random metamodel so that `op` has something to work on.
fn shape_for(op: &str, mm: &mut Metamodel, rng: &mut ChaCha8Rng) {
    let classes: Vec<String> = mm.classes().map(|(n, _)| n).collect();
    let trial = {
        let mut t = mm.clone();
        match op {
            "Sub Classes to Enumeration" => {
                let pkg = &mut t.packages[0];
                let mut kind = Class::new("Kind");
                kind.is_abstract = true;
                pkg.classifiers.push(Classifier::Class(kind));
                for s in 0..rng.gen_range(1..=3) {
                    let mut sub = Class::new(&format!("Kind_S{s}"));
                    sub.supertypes.push(q("Kind"));
                    pkg.classifiers.push(Classifier::Class(sub));
                }
                if chance(rng, 0.7) {
                    let owner = pick(rng, &classes).unwrap();
                    t.class_mut(&owner).unwrap().features.push(Feature::reference(
                        "kinds",
                        &q("Kind"),
                        0,
                        Upper::Unbounded,
                        true,
                    ));
                }
            }
            "Enumeration to Sub Classes" | "Replace Enumeration" => {
                let leaves: Vec<String> =
                    classes.iter().filter(|c| t.direct_subclasses(c).is_empty()).cloned().collect();
                let owner = pick(rng, &leaves).unwrap();
                let lower = if chance(rng, 0.5) { 1 } else { 0 };
                let mut f = Feature::attribute("tone", &q("E0"), lower, Upper::Bounded(1));
                if chance(rng, 0.4) {
                    if let FeatureKind::Attribute { default_value, .. } = &mut f.kind {
                        *default_value = Some(Literal::Str("L0".into()));
                    }
                }
                t.class_mut(&owner).unwrap().features.push(f);
                if op == "Replace Enumeration" {
                    t.packages[0].classifiers.push(Classifier::Enum(Enumeration {
                        name: "Target".into(),
                        literals: vec!["X".into(), "Y".into()],
                        annotations: vec![],
                    }));
                }
            }
            "Extract Super Class" => {
                let mut chosen = classes.clone();
                chosen.shuffle(rng);
                chosen.truncate(rng.gen_range(1..=3));
                for c in &chosen {
                    t.class_mut(c).unwrap().features.push(Feature::attribute(
                        "shared",
                        &q("String"),
                        0,
                        Upper::Bounded(1),
                    ));
                }
            }
            "Inline Super Class"
            | "Push Down Feature"
            | "Unfold Super Class"
            | "Specialize Super Type"
            | "Inheritance to Delegation" => {
                let parent = pick(rng, &classes).unwrap();
                let name = "Sub";
                let mut sub = Class::new(name);
                sub.supertypes.push(parent.clone());
                t.packages[0].classifiers.push(Classifier::Class(sub));
                if op == "Inline Super Class" {
                    t.class_mut(&parent).unwrap().is_abstract = true;
                }
                if op == "Specialize Super Type" {
                    let mut leaf = Class::new("Leaf");
                    leaf.supertypes.push(parent);
                    t.packages[0].classifiers.push(Classifier::Class(leaf));
                }
            }
            "Make Class Abstract when Interface" => {
                let c = pick(rng, &classes).unwrap();
                let k = t.class_mut(&c).unwrap();
                k.is_interface = true;
                k.is_abstract = false;
            }
            "Generalize Attribute" => {
                let c = pick(rng, &classes).unwrap();
                let lower = if chance(rng, 0.3) { 1 } else { 0 };
                let mut f = Feature::attribute("count", &q("Integer"), lower, Upper::Bounded(1));
                if let FeatureKind::Attribute { default_value, .. } = &mut f.kind {
                    *default_value = Some(Literal::Int(0));
                }
                t.class_mut(&c).unwrap().features.push(f);
            }
            _ => {}
        }
        t
    };
    if validate_metamodel(&trial).is_empty() {
        *mm = trial;
    }
}

/// A fixture for exercising `op`, reproducible from `seed`.
pub fn fixture(op: &str, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut mm = random_metamodel(&mut rng);
        shape_for(op, &mut mm, &mut rng);
        if let Some(set) = random_model(&mm, &mut rng) {
            return Fixture { seed, mm, set };
        }
    }
}

/// Every addressable element path.
fn elements(mm: &Metamodel) -> Vec<String> {
    let mut out = vec![PKG.to_string()];
    for c in &mm.packages[0].classifiers {
        let path = q(c.name());
        if let Classifier::Class(k) = c {
            out.extend(k.features.iter().map(|f| format!("{path}.{}", f.name)));
            out.extend(k.operations.iter().map(|o| format!("{path}.{}", o.name)));
        }
        out.push(path);
    }
    out
}

fn annotated(mm: &Metamodel, source: Option<&str>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for e in elements(mm) {
        let anns = mm
            .resolve(&coupevo_core::meta::ElementRef::new(e.clone()))
            .map(|x| x.annotations().to_vec())
            .unwrap_or_default();
        for a in anns {
            if source.is_none_or(|s| s == a.source) {
                out.push((e.clone(), a.source));
            }
        }
    }
    out
}

fn features(mm: &Metamodel, keep: impl Fn(&Feature) -> bool) -> Vec<String> {
    mm.classes()
        .flat_map(|(c, k)| {
            k.features.iter().filter(|f| keep(f)).map(move |f| format!("{c}.{}", f.name)).collect::<Vec<_>>()
        })
        .collect()
}

/// Occasionally swaps a path for one that does not exist.
fn or_missing(rng: &mut ChaCha8Rng, path: Option<String>) -> String {
    match path {
        Some(p) if !chance(rng, 0.08) => p,
        _ => q("Missing"),
    }
}

/// Picks from `first`, falling back to `fallback`, sometimes missing.
fn any_of(rng: &mut ChaCha8Rng, first: &[String], fallback: &[String]) -> String {
    let found = pick(rng, first).or_else(|| pick(rng, fallback));
    or_missing(rng, found)
}

fn name(rng: &mut ChaCha8Rng) -> String {
    let pool = ["a", "b", "x", "y", "z", "New", "C0", "C1"];
    pool.choose(rng).unwrap().to_string()
}

fn owner_of(path: &str) -> String {
    path.rsplit_once('.').map(|(o, _)| o.to_string()).unwrap_or_default()
}

/// A plausible, not necessarily applicable, application of `op` to `mm`.
pub fn random_application(op: &str, mm: &Metamodel, rng: &mut ChaCha8Rng) -> OperationApplication {
    let classes: Vec<String> = mm.classes().map(|(n, _)| n).collect();
    let with_supers: Vec<String> = mm.classes().filter(|(_, c)| !c.supertypes.is_empty()).map(|(n, _)| n).collect();
    let with_subs: Vec<String> = classes.iter().filter(|c| !mm.direct_subclasses(c).is_empty()).cloned().collect();
    let all_features = features(mm, |_| true);
    let attrs = features(mm, |f| !f.is_reference());
    let refs = features(mm, |f| f.is_reference());
    let enums: Vec<String> =
        mm.packages[0].classifiers.iter().filter(|c| matches!(c, Classifier::Enum(_))).map(|c| q(c.name())).collect();
    let datatypes: Vec<String> = PRIMITIVES.iter().map(|(n, _)| q(n)).chain(enums.iter().cloned()).collect();
    let elems = elements(mm);
    let app = OperationApplication::new(op);
    let class = |rng: &mut ChaCha8Rng| any_of(rng, &classes, &[]);
    let sub_and_super = |rng: &mut ChaCha8Rng| -> (String, String) {
        let c = any_of(rng, &with_supers, &classes);
        let s = mm.class(&c).and_then(|k| pick(rng, &k.supertypes)).unwrap_or_else(|| pick(rng, &classes).unwrap());
        (c, s)
    };
    let bounds = |rng: &mut ChaCha8Rng, app: OperationApplication| -> OperationApplication {
        let app = if chance(rng, 0.5) { app.arg("upper", *[-1i64, 1, 2, 5].choose(rng).unwrap()) } else { app };
        if chance(rng, 0.4) {
            app.arg("lower", *[0i64, 0, 1].choose(rng).unwrap())
        } else {
            app
        }
    };
    match op {
        "Add Super Type" => app.arg("class", class(rng)).arg("supertype", class(rng)),
        "Remove Super Type" | "Unfold Super Class" => {
            let (c, s) = sub_and_super(rng);
            app.arg("class", c).arg("supertype", s)
        }
        "Inheritance to Delegation" => {
            let (c, s) = sub_and_super(rng);
            app.arg("class", c).arg("supertype", s).arg("referenceName", name(rng))
        }
        "Specialize Super Type" => {
            let (c, s) = sub_and_super(rng);
            let mut subs = mm.all_subclasses(&s);
            subs.retain(|x| x != &c);
            let n = pick(rng, &subs).unwrap_or_else(|| pick(rng, &classes).unwrap());
            app.arg("class", c).arg("supertype", s).arg("newSupertype", n)
        }
        "Create Attribute" => {
            let ty = pick(rng, &datatypes).unwrap();
            let mut a = app.arg("class", class(rng)).arg("name", name(rng)).arg("type", ty.clone());
            a = bounds(rng, a);
            if chance(rng, 0.5) {
                let default = match ty.as_str() {
                    "p.String" => "text".to_string(),
                    "p.Integer" => "7".to_string(),
                    "p.Float" => "1.5".to_string(),
                    "p.Boolean" => "true".to_string(),
                    e => mm.enumeration(e).and_then(|x| x.literals.first().cloned()).unwrap_or_default(),
                };
                a = a.arg("default", default);
            }
            if chance(rng, 0.1) {
                a = a.arg("identifier", true);
            }
            a
        }
        "Create Class" => {
            let mut a = app.arg("package", PKG).arg("name", name(rng));
            if chance(rng, 0.5) {
                a = a.arg("supertypes", vec![class(rng)]);
            }
            a.arg("abstract", chance(rng, 0.3)).arg("interface", chance(rng, 0.2))
        }
        "Create Reference" => {
            let a = app
                .arg("class", class(rng))
                .arg("name", name(rng))
                .arg("type", class(rng))
                .arg("containment", chance(rng, 0.4));
            bounds(rng, a)
        }
        "Delete Feature"
        | "Make Feature Volatile"
        | "Not Changeable to Suppressed Set Visibility"
        | "Suppressed Set Visibility to Not Changeable" => app.arg("feature", any_of(rng, &all_features, &[])),
        "Delete Operation" => {
            let ops: Vec<String> = mm
                .classes()
                .flat_map(|(c, k)| k.operations.iter().map(move |o| format!("{c}.{}", o.name)).collect::<Vec<_>>())
                .collect();
            app.arg("operation", any_of(rng, &ops, &[]))
        }
        "Document Metamodel Element" => {
            app.arg("element", any_of(rng, &elems, &[])).arg("documentation", "Explains the element.")
        }
        "Create GMF Constraint" | "Change GMF Constraint" => {
            let constrained = annotated(mm, Some("gmf.constraint"));
            let e = if op == "Change GMF Constraint" && chance(rng, 0.8) {
                pick(rng, &constrained).map(|x| x.0)
            } else {
                pick(rng, &elems)
            };
            app.arg("element", or_missing(rng, e)).arg("body", "self.b->notEmpty()")
        }
        "Create Annotation" => {
            let mut details = BTreeMap::new();
            details.insert("k".to_string(), "v".to_string());
            let source = *["note", "extra", "documentation"].choose(rng).unwrap();
            app.arg("element", any_of(rng, &elems, &[])).arg("source", source).arg("details", details)
        }
        "Delete Annotation" | "Move Annotation" => {
            let (e, s) = pick(rng, &annotated(mm, None)).unwrap_or_else(|| (q("C0"), "note".into()));
            let s = if chance(rng, 0.1) { "absent".to_string() } else { s };
            let a = app.arg("element", or_missing(rng, Some(e))).arg("source", s);
            if op == "Move Annotation" {
                a.arg("target", any_of(rng, &elems, &[]))
            } else {
                a
            }
        }
        "Drop Attribute Identifier" => {
            let ids = features(mm, |f| f.is_identifier());
            let a = if chance(rng, 0.8) { pick(rng, &ids) } else { pick(rng, &attrs) };
            app.arg("attribute", or_missing(rng, a))
        }
        "Extract Super Class" => {
            let holders: Vec<String> =
                mm.classes().filter(|(_, c)| c.feature("shared").is_some()).map(|(n, _)| n).collect();
            let mut picked = if holders.is_empty() { vec![pick(rng, &classes).unwrap()] } else { holders };
            if chance(rng, 0.1) {
                picked.push(pick(rng, &classes).unwrap());
            }
            app.arg("name", name(rng)).arg("classes", picked).arg("features", vec!["shared"])
        }
        "Extract Subclass" => {
            let c = class(rng);
            let own: Vec<String> =
                mm.class(&c).map(|k| k.features.iter().map(|f| f.name.clone()).collect()).unwrap_or_default();
            let moved: Vec<String> = own.into_iter().filter(|_| chance(rng, 0.5)).collect();
            app.arg("class", c).arg("name", name(rng)).arg("features", moved)
        }
        "Generalize Attribute" => {
            let a = any_of(rng, &attrs, &[]);
            let mut app = bounds(rng, app.arg("attribute", a));
            if chance(rng, 0.4) {
                app = app.arg("type", "p.Float");
            }
            app
        }
        "Generalize Reference" => {
            let r = any_of(rng, &refs, &[]);
            let mut app = bounds(rng, app.arg("reference", r.clone()));
            if let Some(ty) = mm.feature(&r).map(|f| f.type_ref().to_string()) {
                if chance(rng, 0.4) {
                    let ups = mm.supertype_closure(&ty);
                    app = app.arg("type", pick(rng, &ups).unwrap_or(ty));
                }
            }
            app
        }
        "Inline Super Class" => {
            let abstracts: Vec<String> =
                with_subs.iter().filter(|c| mm.class(c).unwrap().is_abstract).cloned().collect();
            app.arg("supertype", any_of(rng, &abstracts, &classes))
        }
        "Make Class Abstract when Interface" => {
            let ifaces: Vec<String> = mm.classes().filter(|(_, c)| c.is_interface).map(|(n, _)| n).collect();
            app.arg("class", any_of(rng, &ifaces, &classes))
        }
        "Make Reference Containment" => app.arg("reference", any_of(rng, &refs, &[])),
        "Push Down Feature" => {
            let movable =
                features(mm, |_| true).into_iter().filter(|f| with_subs.contains(&owner_of(f))).collect::<Vec<_>>();
            let f = any_of(rng, &movable, &all_features);
            let mut targets: Vec<String> =
                mm.direct_subclasses(&owner_of(&f)).into_iter().filter(|_| chance(rng, 0.7)).collect();
            if targets.is_empty() {
                targets.push(pick(rng, &classes).unwrap());
            }
            app.arg("feature", f).arg("targets", targets)
        }
        "Specialize Reference Type" => {
            let r = any_of(rng, &refs, &[]);
            let ty = mm.feature(&r).map(|f| f.type_ref().to_string()).unwrap_or_default();
            let subs = mm.all_subclasses(&ty);
            app.arg("reference", r).arg("type", pick(rng, &subs).unwrap_or_else(|| pick(rng, &classes).unwrap()))
        }
        "Change Namespace URI" => {
            app.arg("package", PKG).arg("newUri", *["urn:p", "urn:p:2", "urn:other", ""].choose(rng).unwrap())
        }
        "Create Enumeration" => {
            let lits: Vec<String> =
                (0..rng.gen_range(0..=3)).map(|_| pick(rng, &["A", "B", "C"]).unwrap().to_string()).collect();
            app.arg("package", PKG).arg("name", *["E0", "Fresh", "Mode"].choose(rng).unwrap()).arg("literals", lits)
        }
        "Replace Enumeration" => {
            let enum_attrs = features(mm, |f| !f.is_reference() && mm.enumeration(f.type_ref()).is_some());
            let a = any_of(rng, &enum_attrs, &attrs);
            let target = pick(rng, &enums).unwrap();
            let new_lits = mm.enumeration(&target).map(|e| e.literals.clone()).unwrap_or_default();
            let old_lits = mm
                .feature(&a)
                .and_then(|f| mm.enumeration(f.type_ref()))
                .map(|e| e.literals.clone())
                .unwrap_or_default();
            let mut map = BTreeMap::new();
            for l in old_lits {
                if chance(rng, 0.9) {
                    map.insert(l, pick(rng, &new_lits).unwrap_or_default());
                }
            }
            app.arg("attribute", a).arg("enumeration", target).arg("mapping", map)
        }
        "Enumeration to Sub Classes" => {
            let enum_attrs = features(mm, |f| !f.is_reference() && mm.enumeration(f.type_ref()).is_some());
            let a = any_of(rng, &enum_attrs, &attrs);
            app.arg("class", owner_of(&a)).arg("attribute", a)
        }
        "Sub Classes to Enumeration" => {
            let abstracts: Vec<String> =
                with_subs.iter().filter(|c| mm.class(c).unwrap().is_abstract).cloned().collect();
            let mut a = app.arg("class", any_of(rng, &abstracts, &[])).arg("attributeName", name(rng));
            if chance(rng, 0.3) {
                a = a.arg("enumeration", pick(rng, &enums).unwrap());
            }
            a
        }
        other => panic!("no argument generator for `{other}`"),
    }
}

/// Operations whose migration is the identity.
pub const METAMODEL_ONLY: &[&str] = &[
    "Create Class",
    "Create Enumeration",
    "Document Metamodel Element",
    "Create Annotation",
    "Delete Annotation",
    "Move Annotation",
    "Drop Attribute Identifier",
    "Not Changeable to Suppressed Set Visibility",
    "Suppressed Set Visibility to Not Changeable",
    "Delete Operation",
    "Create GMF Constraint",
    "Change GMF Constraint",
];

/// Outcome counts for one operation.
#[derive(Debug, Default, Clone)]
pub struct Tally {
    pub op: String,
    /// Constraints passed and the migrated model conforms.
    pub migrated: usize,
    /// Constraints failed; inputs verified unchanged.
    pub rejected: usize,
    /// Constraints passed but the data refused migration (e.g. values
    /// would be lost); inputs verified unchanged.
    pub refused: usize,
    pub attempts: usize,
    /// Descriptions of broken expectations; empty when all held.
    pub failures: Vec<String>,
}

pub struct SuiteReport {
    pub tallies: Vec<Tally>,
    pub elapsed: Duration,
}

/// Runs every catalog operation on random fixtures until `per_op`
/// applicable fixtures have migrated and one has been rejected, or the
/// attempt cap is reached.
pub fn transaction_suite(per_op: usize, max_attempts: usize) -> SuiteReport {
    let start = Instant::now();
    let mut tallies = Vec::new();
    for (oi, spec) in list_operations().iter().enumerate() {
        let mut t = Tally { op: spec.name.to_string(), ..Tally::default() };
        while (t.migrated < per_op || t.rejected == 0) && t.attempts < max_attempts {
            let seed = (oi as u64) << 32 | t.attempts as u64;
            t.attempts += 1;
            let fx = fixture(spec.name, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let app = random_application(spec.name, &fx.mm, &mut rng);
            let (mm0, set0) = (fx.mm.clone(), fx.set.clone());
            let applicable = match check_applicability(&app, &fx.mm) {
                Ok(results) => results.iter().all(|r| r.satisfied),
                Err(e) => {
                    t.failures.push(format!("seed {seed}: {e}"));
                    continue;
                }
            };
            let outcome = apply_coupled(&app, &fx.mm, Some(&fx.set));
            if fx.mm != mm0 || fx.set != set0 {
                t.failures.push(format!("seed {seed}: inputs modified"));
            }
            match (applicable, outcome) {
                (true, Ok((mm, Some(set)))) => {
                    let bad = validate_metamodel(&mm);
                    let violations = check_conformance(&set, &mm);
                    let untouched = !METAMODEL_ONLY.contains(&spec.name) || set == set0;
                    if !untouched {
                        t.failures.push(format!("seed {seed}: metamodel-only operation changed the model"));
                    } else if bad.is_empty() && violations.is_empty() {
                        t.migrated += 1;
                    } else {
                        t.failures.push(format!("seed {seed}: {bad:?} {violations:?}"));
                    }
                }
                (true, Err(CatalogError::Migration { .. })) => t.refused += 1,
                (false, Err(CatalogError::ConstraintViolation { .. })) => t.rejected += 1,
                (_, Ok(_)) => t.failures.push(format!("seed {seed}: applied although a constraint failed")),
                (_, Err(e)) => t.failures.push(format!("seed {seed}: {e}")),
            }
        }
        tallies.push(t);
    }
    SuiteReport { tallies, elapsed: start.elapsed() }
}

/// Outcome of one round-trip attempt; `None` when the fixture offers no
/// eligible element.
pub type Trip = Option<Result<(), String>>;

fn apply_pair(
    first: &OperationApplication,
    second: impl Fn(&Metamodel) -> OperationApplication,
    fx: &Fixture,
) -> Result<(Metamodel, ResourceSet), String> {
    let (mid, set) = apply_coupled(first, &fx.mm, Some(&fx.set)).map_err(|e| e.to_string())?;
    let back = second(&mid);
    let (end, set) = apply_coupled(&back, &mid, set.as_ref()).map_err(|e| e.to_string())?;
    Ok((end, set.unwrap()))
}

fn identical(fx: &Fixture, end: &Metamodel, set: &ResourceSet) -> Result<(), String> {
    let d = coupevo_core::diff::diff_metamodels(&fx.mm, end);
    if !d.is_empty() {
        return Err(format!("seed {}: metamodel differs\n{d}", fx.seed));
    }
    let policy = coupevo_core::diff::MatchPolicy { ignore_reference_order: true };
    let d = coupevo_core::diff::diff_models(&fx.set, set, Some(&fx.mm), policy).map_err(|e| e.to_string())?;
    if !d.is_empty() {
        return Err(format!("seed {}: model differs\n{d}", fx.seed));
    }
    Ok(())
}

/// Enumeration to Sub Classes followed by Sub Classes to Enumeration, on a
/// mandatory, undecorated enumeration attribute of a concrete class.
pub fn enum_subclass_round_trip(seed: u64) -> Trip {
    let op = "Enumeration to Sub Classes";
    let fx = fixture(op, seed);
    let candidates: Vec<String> = features(&fx.mm, |f| {
        !f.is_reference()
            && fx.mm.enumeration(f.type_ref()).is_some()
            && f.lower == 1
            && f.default_value().is_none()
            && f.annotations.is_empty()
    });
    // The inverse makes the class concrete, so only concrete owners can
    // come back unchanged.
    let attr = candidates.into_iter().find(|a| fx.mm.class(&owner_of(a)).is_some_and(|c| !c.is_abstract))?;
    let class = owner_of(&attr);
    let e2s = OperationApplication::new(op).arg("class", class.as_str()).arg("attribute", attr.as_str());
    if !check_applicability(&e2s, &fx.mm).ok()?.iter().all(|r| r.satisfied) {
        return None;
    }
    let f = fx.mm.feature(&attr).unwrap();
    let (name, enumeration) = (f.name.clone(), f.type_ref().to_string());
    let back = move |_: &Metamodel| {
        OperationApplication::new("Sub Classes to Enumeration")
            .arg("class", class.as_str())
            .arg("attributeName", name.as_str())
            .arg("enumeration", enumeration.as_str())
    };
    Some(apply_pair(&e2s, back, &fx).and_then(|(end, set)| identical(&fx, &end, &set)))
}

/// The two set-visibility conversions, in both orders.
pub fn set_visibility_round_trip(seed: u64) -> Trip {
    let to = "Not Changeable to Suppressed Set Visibility";
    let from = "Suppressed Set Visibility to Not Changeable";
    let fx = fixture(to, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forward = rng.gen_bool(0.5);
    let (first, second) = if forward { (to, from) } else { (from, to) };
    let eligible: Vec<String> = features(&fx.mm, |_| true)
        .into_iter()
        .filter(|f| {
            check_applicability(&OperationApplication::new(first).arg("feature", f.as_str()), &fx.mm)
                .is_ok_and(|r| r.iter().all(|c| c.satisfied))
        })
        .collect();
    let feature = pick(&mut rng, &eligible)?;
    let app = OperationApplication::new(first).arg("feature", feature.as_str());
    let back = |_: &Metamodel| OperationApplication::new(second).arg("feature", feature.as_str());
    Some(apply_pair(&app, back, &fx).and_then(|(end, set)| identical(&fx, &end, &set)))
}

/// Draws seeds until `wanted` eligible fixtures have been checked.
pub fn round_trips(trip: fn(u64) -> Trip, wanted: usize) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut seed = 0;
    while checked < wanted && seed < 50 * wanted as u64 {
        if let Some(outcome) = trip(seed) {
            checked += 1;
            if let Err(e) = outcome {
                failures.push(e);
            }
        }
        seed += 1;
    }
    (checked, failures)
}
