//! The metametamodel: packages, classes, enumerations, data types and
//! features, plus qualified-name resolution and metamodel validation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while navigating or editing a metamodel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("dangling reference `{0}`")]
    DanglingRef(String),
    #[error("malformed element reference `{0}`")]
    InvalidRef(String),
    #[error("`{path}` is not a {expected}")]
    WrongKind { path: String, expected: &'static str },
    #[error("`{0}` already exists")]
    Duplicate(String),
    #[error("unknown property `{property}` on `{path}`")]
    UnknownProperty { path: String, property: String },
    #[error("invalid value for `{property}` on `{path}`: {message}")]
    InvalidValue { path: String, property: String, message: String },
    #[error("cannot access `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("parse error in `{path}` at line {line} column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
}

pub type MetaResult<T> = Result<T, MetaError>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metamodel {
    pub packages: Vec<Package>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Package {
    pub name: String,
    #[serde(rename = "nsUri")]
    pub ns_uri: String,
    #[serde(default)]
    pub classifiers: Vec<Classifier>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classifier {
    #[serde(rename = "class")]
    Class(Class),
    #[serde(rename = "enum")]
    Enum(Enumeration),
    #[serde(rename = "datatype")]
    DataType(DataType),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Class {
    pub name: String,
    #[serde(rename = "abstract", default)]
    pub is_abstract: bool,
    #[serde(rename = "interface", default)]
    pub is_interface: bool,
    /// Qualified names (`package.Class`) of the direct supertypes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supertypes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<Feature>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operations: Vec<OperationSignature>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Enumeration {
    pub name: String,
    #[serde(default)]
    pub literals: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataType {
    pub name: String,
    pub primitive: PrimitiveKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    String,
    Boolean,
    Integer,
    Float,
}

impl PrimitiveKind {
    /// Whether `lit` is a legal value of this primitive kind. Integers are
    /// accepted where floats are expected.
    pub fn admits(self, lit: &Literal) -> bool {
        matches!(
            (self, lit),
            (PrimitiveKind::String, Literal::Str(_))
                | (PrimitiveKind::Boolean, Literal::Bool(_))
                | (PrimitiveKind::Integer, Literal::Int(_))
                | (PrimitiveKind::Float, Literal::Float(_))
                | (PrimitiveKind::Float, Literal::Int(_))
        )
    }

    /// Parses command-line/text input into a literal of this kind.
    pub fn parse(self, text: &str) -> Option<Literal> {
        match self {
            PrimitiveKind::String => Some(Literal::Str(text.to_string())),
            PrimitiveKind::Boolean => text.parse().ok().map(Literal::Bool),
            PrimitiveKind::Integer => text.parse().ok().map(Literal::Int),
            PrimitiveKind::Float => text.parse().ok().map(Literal::Float),
        }
    }
}

/// A typed scalar literal, used for default values and primitive slot values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Upper multiplicity bound. Serialized as an integer, `-1` meaning unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i64", try_from = "i64")]
pub enum Upper {
    Bounded(u32),
    Unbounded,
}

impl Upper {
    pub fn admits(self, count: usize) -> bool {
        match self {
            Upper::Bounded(n) => count <= n as usize,
            Upper::Unbounded => true,
        }
    }

    pub fn is_many(self) -> bool {
        self != Upper::Bounded(1)
    }

    /// `self >= other` with unbounded as +infinity.
    pub fn covers(self, other: Upper) -> bool {
        match (self, other) {
            (Upper::Unbounded, _) => true,
            (Upper::Bounded(_), Upper::Unbounded) => false,
            (Upper::Bounded(a), Upper::Bounded(b)) => a >= b,
        }
    }

    pub fn at_least(self, lower: u32) -> bool {
        match self {
            Upper::Unbounded => true,
            Upper::Bounded(n) => n >= lower,
        }
    }
}

impl From<Upper> for i64 {
    fn from(u: Upper) -> i64 {
        match u {
            Upper::Bounded(n) => n as i64,
            Upper::Unbounded => -1,
        }
    }
}

impl TryFrom<i64> for Upper {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, String> {
        match v {
            -1 => Ok(Upper::Unbounded),
            n if n > 0 && n <= u32::MAX as i64 => Ok(Upper::Bounded(n as u32)),
            n => Err(format!("upper bound must be positive or -1, got {n}")),
        }
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Bounded(n) => write!(f, "{n}"),
            Upper::Unbounded => f.write_str("*"),
        }
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(default)]
    pub lower: u32,
    pub upper: Upper,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub changeable: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub volatile: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub ordered: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FeatureKind {
    #[serde(rename = "attribute")]
    Attribute {
        /// Qualified name of a data type or enumeration.
        #[serde(rename = "type")]
        type_ref: String,
        #[serde(default, skip_serializing_if = "is_false")]
        identifier: bool,
        #[serde(rename = "default", default, skip_serializing_if = "Option::is_none")]
        default_value: Option<Literal>,
    },
    #[serde(rename = "reference")]
    Reference {
        /// Qualified name of the target class.
        #[serde(rename = "type")]
        type_ref: String,
        #[serde(default, skip_serializing_if = "is_false")]
        containment: bool,
        /// Qualified name (`package.Class.feature`) of the opposite reference.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        opposite: Option<String>,
    },
}

impl Feature {
    pub fn attribute(name: &str, type_ref: &str, lower: u32, upper: Upper) -> Self {
        Feature {
            name: name.to_string(),
            lower,
            upper,
            changeable: true,
            volatile: false,
            ordered: true,
            annotations: Vec::new(),
            kind: FeatureKind::Attribute { type_ref: type_ref.to_string(), identifier: false, default_value: None },
        }
    }

    pub fn reference(name: &str, type_ref: &str, lower: u32, upper: Upper, containment: bool) -> Self {
        Feature {
            name: name.to_string(),
            lower,
            upper,
            changeable: true,
            volatile: false,
            ordered: true,
            annotations: Vec::new(),
            kind: FeatureKind::Reference { type_ref: type_ref.to_string(), containment, opposite: None },
        }
    }

    pub fn type_ref(&self) -> &str {
        match &self.kind {
            FeatureKind::Attribute { type_ref, .. } | FeatureKind::Reference { type_ref, .. } => type_ref,
        }
    }

    pub fn set_type_ref(&mut self, new: String) {
        match &mut self.kind {
            FeatureKind::Attribute { type_ref, .. } | FeatureKind::Reference { type_ref, .. } => *type_ref = new,
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self.kind, FeatureKind::Reference { .. })
    }

    pub fn is_containment(&self) -> bool {
        matches!(self.kind, FeatureKind::Reference { containment: true, .. })
    }

    pub fn opposite(&self) -> Option<&str> {
        match &self.kind {
            FeatureKind::Reference { opposite, .. } => opposite.as_deref(),
            FeatureKind::Attribute { .. } => None,
        }
    }

    pub fn is_identifier(&self) -> bool {
        matches!(self.kind, FeatureKind::Attribute { identifier: true, .. })
    }

    pub fn default_value(&self) -> Option<&Literal> {
        match &self.kind {
            FeatureKind::Attribute { default_value, .. } => default_value.as_ref(),
            FeatureKind::Reference { .. } => None,
        }
    }

    /// Same shape ignoring the name and annotations.
    pub fn same_shape(&self, other: &Feature) -> bool {
        self.lower == other.lower
            && self.upper == other.upper
            && self.changeable == other.changeable
            && self.volatile == other.volatile
            && self.ordered == other.ordered
            && self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationSignature {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub source: String,
    #[serde(default)]
    pub details: BTreeMap<String, String>,
}

impl Annotation {
    pub fn new(source: &str) -> Self {
        Annotation { source: source.to_string(), details: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.details.insert(key.to_string(), value.to_string());
        self
    }
}

/// Finds the annotation with `source` in a list.
pub fn annotation<'a>(list: &'a [Annotation], source: &str) -> Option<&'a Annotation> {
    list.iter().find(|a| a.source == source)
}

/// A dotted qualified-name path: `package`, `package.Classifier` or
/// `package.Classifier.member`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementRef(pub String);

impl ElementRef {
    pub fn new(path: impl Into<String>) -> Self {
        ElementRef(path.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> MetaResult<Vec<&str>> {
        let parts: Vec<&str> = self.0.split('.').collect();
        if parts.is_empty() || parts.len() > 3 || parts.iter().any(|p| p.is_empty()) {
            return Err(MetaError::InvalidRef(self.0.clone()));
        }
        Ok(parts)
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementRef {
    fn from(s: &str) -> Self {
        ElementRef(s.to_string())
    }
}

/// A resolved metamodel element.
#[derive(Debug, Clone, Copy)]
pub enum Element<'a> {
    Package(&'a Package),
    Classifier(&'a Classifier),
    Feature(&'a Class, &'a Feature),
    Operation(&'a Class, &'a OperationSignature),
    Literal(&'a Enumeration, &'a str),
}

impl<'a> Element<'a> {
    pub fn annotations(&self) -> &'a [Annotation] {
        match self {
            Element::Package(p) => &p.annotations,
            Element::Classifier(c) => c.annotations(),
            Element::Feature(_, f) => &f.annotations,
            Element::Operation(_, o) => &o.annotations,
            Element::Literal(..) => &[],
        }
    }
}

impl Classifier {
    pub fn name(&self) -> &str {
        match self {
            Classifier::Class(c) => &c.name,
            Classifier::Enum(e) => &e.name,
            Classifier::DataType(d) => &d.name,
        }
    }

    pub fn annotations(&self) -> &[Annotation] {
        match self {
            Classifier::Class(c) => &c.annotations,
            Classifier::Enum(e) => &e.annotations,
            Classifier::DataType(d) => &d.annotations,
        }
    }

    pub fn annotations_mut(&mut self) -> &mut Vec<Annotation> {
        match self {
            Classifier::Class(c) => &mut c.annotations,
            Classifier::Enum(e) => &mut e.annotations,
            Classifier::DataType(d) => &mut d.annotations,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Classifier::Class(_) => "class",
            Classifier::Enum(_) => "enum",
            Classifier::DataType(_) => "datatype",
        }
    }

    pub fn as_class(&self) -> Option<&Class> {
        match self {
            Classifier::Class(c) => Some(c),
            _ => None,
        }
    }
}

impl Class {
    pub fn new(name: &str) -> Self {
        Class { name: name.to_string(), ..Class::default() }
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn feature_mut(&mut self, name: &str) -> Option<&mut Feature> {
        self.features.iter_mut().find(|f| f.name == name)
    }
}

/// Splits `package.Class.member` into (`package.Class`, `member`).
pub fn split_member(path: &str) -> Option<(&str, &str)> {
    let (owner, member) = path.rsplit_once('.')?;
    owner.contains('.').then_some((owner, member))
}

/// Package part of a qualified name.
pub fn package_of(path: &str) -> &str {
    path.split('.').next().unwrap_or(path)
}

impl Metamodel {
    pub fn package(&self, name: &str) -> Option<&Package> {
        self.packages.iter().find(|p| p.name == name)
    }

    pub fn package_mut(&mut self, name: &str) -> MetaResult<&mut Package> {
        self.packages.iter_mut().find(|p| p.name == name).ok_or_else(|| MetaError::DanglingRef(name.to_string()))
    }

    pub fn package_by_uri(&self, uri: &str) -> Option<&Package> {
        self.packages.iter().find(|p| p.ns_uri == uri)
    }

    pub fn ns_uris(&self) -> Vec<&str> {
        self.packages.iter().map(|p| p.ns_uri.as_str()).collect()
    }

    pub fn classifier(&self, path: &str) -> Option<&Classifier> {
        let (pkg, name) = path.split_once('.')?;
        if name.contains('.') {
            return None;
        }
        self.package(pkg)?.classifiers.iter().find(|c| c.name() == name)
    }

    pub fn classifier_mut(&mut self, path: &str) -> MetaResult<&mut Classifier> {
        let dangling = || MetaError::DanglingRef(path.to_string());
        let (pkg, name) = path.split_once('.').ok_or_else(dangling)?;
        self.packages
            .iter_mut()
            .find(|p| p.name == pkg)
            .and_then(|p| p.classifiers.iter_mut().find(|c| c.name() == name))
            .ok_or_else(dangling)
    }

    pub fn class(&self, path: &str) -> Option<&Class> {
        self.classifier(path).and_then(Classifier::as_class)
    }

    pub fn class_mut(&mut self, path: &str) -> MetaResult<&mut Class> {
        match self.classifier_mut(path)? {
            Classifier::Class(c) => Ok(c),
            _ => Err(MetaError::WrongKind { path: path.to_string(), expected: "class" }),
        }
    }

    pub fn enumeration(&self, path: &str) -> Option<&Enumeration> {
        match self.classifier(path)? {
            Classifier::Enum(e) => Some(e),
            _ => None,
        }
    }

    pub fn enumeration_mut(&mut self, path: &str) -> MetaResult<&mut Enumeration> {
        match self.classifier_mut(path)? {
            Classifier::Enum(e) => Ok(e),
            _ => Err(MetaError::WrongKind { path: path.to_string(), expected: "enumeration" }),
        }
    }

    pub fn data_type(&self, path: &str) -> Option<&DataType> {
        match self.classifier(path)? {
            Classifier::DataType(d) => Some(d),
            _ => None,
        }
    }

    /// The feature at `package.Class.feature` (own features only).
    pub fn feature(&self, path: &str) -> Option<&Feature> {
        let (owner, name) = split_member(path)?;
        self.class(owner)?.feature(name)
    }

    pub fn feature_mut(&mut self, path: &str) -> MetaResult<&mut Feature> {
        let (owner, name) = split_member(path).ok_or_else(|| MetaError::InvalidRef(path.to_string()))?;
        self.class_mut(owner)?.feature_mut(name).ok_or_else(|| MetaError::DanglingRef(path.to_string()))
    }

    /// Resolves a qualified path to the unique element it names.
    pub fn resolve(&self, r: &ElementRef) -> MetaResult<Element<'_>> {
        let segs = r.segments()?;
        let dangling = || MetaError::DanglingRef(r.0.clone());
        let pkg = self.package(segs[0]).ok_or_else(dangling)?;
        if segs.len() == 1 {
            return Ok(Element::Package(pkg));
        }
        let cls = pkg.classifiers.iter().find(|c| c.name() == segs[1]).ok_or_else(dangling)?;
        if segs.len() == 2 {
            return Ok(Element::Classifier(cls));
        }
        let member = segs[2];
        match cls {
            Classifier::Class(c) => {
                if let Some(f) = c.feature(member) {
                    Ok(Element::Feature(c, f))
                } else if let Some(o) = c.operations.iter().find(|o| o.name == member) {
                    Ok(Element::Operation(c, o))
                } else {
                    Err(dangling())
                }
            }
            Classifier::Enum(e) => e
                .literals
                .iter()
                .find(|l| l.as_str() == member)
                .map(|l| Element::Literal(e, l.as_str()))
                .ok_or_else(dangling),
            Classifier::DataType(_) => Err(dangling()),
        }
    }

    /// Mutable access to the annotation list of any annotatable element.
    pub fn annotations_mut(&mut self, r: &ElementRef) -> MetaResult<&mut Vec<Annotation>> {
        let segs = r.segments()?;
        let dangling = || MetaError::DanglingRef(r.0.clone());
        match segs.len() {
            1 => Ok(&mut self.package_mut(segs[0])?.annotations),
            2 => Ok(self.classifier_mut(&r.0)?.annotations_mut()),
            _ => {
                let owner = format!("{}.{}", segs[0], segs[1]);
                let class = self.class_mut(&owner)?;
                if let Some(f) = class.features.iter_mut().find(|f| f.name == segs[2]) {
                    Ok(&mut f.annotations)
                } else if let Some(o) = class.operations.iter_mut().find(|o| o.name == segs[2]) {
                    Ok(&mut o.annotations)
                } else {
                    Err(dangling())
                }
            }
        }
    }

    /// All classes with their qualified names, in document order.
    pub fn classes(&self) -> impl Iterator<Item = (String, &Class)> {
        self.packages.iter().flat_map(|p| {
            p.classifiers.iter().filter_map(move |c| match c {
                Classifier::Class(cls) => Some((format!("{}.{}", p.name, cls.name), cls)),
                _ => None,
            })
        })
    }

    /// Features of a class including inherited ones, supertypes first, each
    /// declaring class contributing once. Returns (declaring class, feature).
    pub fn all_features_with_owner(&self, class: &str) -> Vec<(String, &Feature)> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.collect_features(class, &mut seen, &mut out);
        out
    }

    fn collect_features<'a>(&'a self, class: &str, seen: &mut HashSet<String>, out: &mut Vec<(String, &'a Feature)>) {
        if !seen.insert(class.to_string()) {
            return;
        }
        let Some(c) = self.class(class) else { return };
        for sup in &c.supertypes {
            self.collect_features(sup, seen, out);
        }
        out.extend(c.features.iter().map(|f| (class.to_string(), f)));
    }

    pub fn all_features(&self, class: &str) -> Vec<&Feature> {
        self.all_features_with_owner(class).into_iter().map(|(_, f)| f).collect()
    }

    /// Looks up a feature by name in the inherited-feature closure.
    pub fn find_feature(&self, class: &str, name: &str) -> Option<(String, &Feature)> {
        self.all_features_with_owner(class).into_iter().find(|(_, f)| f.name == name)
    }

    /// Strict supertypes of `class`, transitively, in discovery order.
    pub fn supertype_closure(&self, class: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut stack: Vec<String> =
            self.class(class).map(|c| c.supertypes.iter().rev().cloned().collect()).unwrap_or_default();
        while let Some(s) = stack.pop() {
            if s == class || out.contains(&s) {
                continue;
            }
            if let Some(c) = self.class(&s) {
                stack.extend(c.supertypes.iter().rev().cloned());
            }
            out.push(s);
        }
        out
    }

    /// Reflexive-transitive subtype test.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.supertype_closure(sub).iter().any(|s| s == sup)
    }

    pub fn direct_subclasses(&self, class: &str) -> Vec<String> {
        self.classes().filter(|(_, c)| c.supertypes.iter().any(|s| s == class)).map(|(p, _)| p).collect()
    }

    /// Strict subclasses of `class`, transitively, in document order.
    pub fn all_subclasses(&self, class: &str) -> Vec<String> {
        self.classes().map(|(p, _)| p).filter(|p| p != class && self.is_subtype(p, class)).collect()
    }

    /// Every reference feature whose type is `class`: (owner path, feature).
    pub fn references_typed_by(&self, class: &str) -> Vec<(String, &Feature)> {
        self.classes()
            .flat_map(|(p, c)| {
                c.features.iter().filter(|f| f.is_reference() && f.type_ref() == class).map(move |f| (p.clone(), f))
            })
            .collect()
    }

    /// Every feature (attribute or reference) typed by `classifier`.
    pub fn features_typed_by(&self, classifier: &str) -> Vec<(String, &Feature)> {
        self.classes()
            .flat_map(|(p, c)| c.features.iter().filter(|f| f.type_ref() == classifier).map(move |f| (p.clone(), f)))
            .collect()
    }

    /// True when `name` is free as a feature name in `class`, its inherited
    /// features and all of its subclasses.
    pub fn feature_name_free(&self, class: &str, name: &str) -> bool {
        if self.find_feature(class, name).is_some() {
            return false;
        }
        self.all_subclasses(class).iter().all(|s| self.class(s).is_none_or(|c| c.feature(name).is_none()))
    }
}

/// Parses a `.mm.json` document. `path` is only used in error messages.
pub fn parse_metamodel(text: &str, path: &str) -> MetaResult<Metamodel> {
    serde_json::from_str(text).map_err(|e| MetaError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load_metamodel(path: &std::path::Path) -> MetaResult<Metamodel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MetaError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_metamodel(&text, &path.display().to_string())
}

/// The canonical `.mm.json` rendering.
pub fn render_metamodel(mm: &Metamodel) -> String {
    crate::to_canonical_json(mm)
}

/// Rule identifiers reported by [`validate_metamodel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetaRule {
    InvalidName,
    DuplicatePackage,
    EmptyNsUri,
    DuplicateNsUri,
    DuplicateClassifier,
    DanglingRef,
    SupertypeNotClass,
    CyclicInheritance,
    FeatureNameClash,
    DuplicateOperation,
    DuplicateLiteral,
    BoundsInverted,
    AttributeTypeInvalid,
    ReferenceTypeInvalid,
    OppositeInvalid,
    IdentifierInvalid,
    DefaultInvalid,
    DuplicateAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaViolation {
    pub element: String,
    pub rule: MetaRule,
    pub message: String,
}

impl fmt::Display for MetaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.rule, self.element, self.message)
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.contains(['.', '#', ' ', '/'])
}

/// Checks every well-formedness rule of the metametamodel. Pure.
pub fn validate_metamodel(mm: &Metamodel) -> Vec<MetaViolation> {
    let mut out = Vec::new();
    let mut v = |element: &str, rule: MetaRule, message: String| {
        out.push(MetaViolation { element: element.to_string(), rule, message })
    };

    let mut pkg_names = BTreeSet::new();
    let mut uris = BTreeSet::new();
    for p in &mm.packages {
        if !valid_name(&p.name) {
            v(&p.name, MetaRule::InvalidName, format!("invalid package name `{}`", p.name));
        }
        if !pkg_names.insert(p.name.as_str()) {
            v(&p.name, MetaRule::DuplicatePackage, "package name used twice".into());
        }
        if p.ns_uri.trim().is_empty() {
            v(&p.name, MetaRule::EmptyNsUri, "namespace URI is empty".into());
        } else if !uris.insert(p.ns_uri.as_str()) {
            v(&p.name, MetaRule::DuplicateNsUri, format!("namespace URI `{}` used twice", p.ns_uri));
        }
        check_annotations(&p.name, &p.annotations, &mut v);

        let mut names = BTreeSet::new();
        for c in &p.classifiers {
            let path = format!("{}.{}", p.name, c.name());
            if !valid_name(c.name()) {
                v(&path, MetaRule::InvalidName, format!("invalid classifier name `{}`", c.name()));
            }
            if !names.insert(c.name()) {
                v(&path, MetaRule::DuplicateClassifier, "classifier name used twice in package".into());
            }
            check_annotations(&path, c.annotations(), &mut v);
            match c {
                Classifier::Class(cls) => validate_class(mm, &path, cls, &mut v),
                Classifier::Enum(e) => {
                    let mut lits = BTreeSet::new();
                    for l in &e.literals {
                        if !valid_name(l) {
                            v(&path, MetaRule::InvalidName, format!("invalid literal `{l}`"));
                        }
                        if !lits.insert(l.as_str()) {
                            v(&path, MetaRule::DuplicateLiteral, format!("literal `{l}` declared twice"));
                        }
                    }
                }
                Classifier::DataType(_) => {}
            }
        }
    }
    out
}

fn check_annotations(path: &str, anns: &[Annotation], v: &mut impl FnMut(&str, MetaRule, String)) {
    let mut seen = BTreeSet::new();
    for a in anns {
        if !seen.insert(a.source.as_str()) {
            v(path, MetaRule::DuplicateAnnotation, format!("annotation source `{}` used twice", a.source));
        }
    }
}

fn validate_class(mm: &Metamodel, path: &str, cls: &Class, v: &mut impl FnMut(&str, MetaRule, String)) {
    let mut supertypes_ok = true;
    for s in &cls.supertypes {
        match mm.classifier(s) {
            None => {
                supertypes_ok = false;
                v(path, MetaRule::DanglingRef, format!("supertype `{s}` does not resolve"));
            }
            Some(Classifier::Class(_)) => {}
            Some(_) => {
                supertypes_ok = false;
                v(path, MetaRule::SupertypeNotClass, format!("supertype `{s}` is not a class"));
            }
        }
    }
    if supertypes_ok && in_cycle(mm, path) {
        v(path, MetaRule::CyclicInheritance, "class inherits from itself".into());
        return;
    }

    let mut names: BTreeMap<&str, String> = BTreeMap::new();
    for (owner, f) in mm.all_features_with_owner(path) {
        if let Some(prev) = names.insert(f.name.as_str(), owner.clone()) {
            if owner == path || prev == path || cls.supertypes.len() > 1 {
                v(
                    path,
                    MetaRule::FeatureNameClash,
                    format!("feature `{}` declared in both `{prev}` and `{owner}`", f.name),
                );
            }
        }
    }
    let mut ops = BTreeSet::new();
    for o in &cls.operations {
        if !ops.insert(o.name.as_str()) {
            v(path, MetaRule::DuplicateOperation, format!("operation `{}` declared twice", o.name));
        }
        check_annotations(&format!("{path}.{}", o.name), &o.annotations, v);
    }

    for f in &cls.features {
        let fpath = format!("{path}.{}", f.name);
        if !valid_name(&f.name) {
            v(&fpath, MetaRule::InvalidName, format!("invalid feature name `{}`", f.name));
        }
        check_annotations(&fpath, &f.annotations, v);
        if !f.upper.at_least(f.lower) {
            v(&fpath, MetaRule::BoundsInverted, format!("lower bound {} exceeds upper bound {}", f.lower, f.upper));
        }
        match &f.kind {
            FeatureKind::Attribute { type_ref, identifier, default_value } => {
                let ty = mm.classifier(type_ref);
                match ty {
                    None => v(&fpath, MetaRule::DanglingRef, format!("type `{type_ref}` does not resolve")),
                    Some(Classifier::Class(_)) => {
                        v(&fpath, MetaRule::AttributeTypeInvalid, format!("attribute typed by class `{type_ref}`"))
                    }
                    _ => {}
                }
                if *identifier {
                    let ok = f.upper == Upper::Bounded(1)
                        && matches!(ty, Some(Classifier::DataType(d)) if matches!(d.primitive, PrimitiveKind::String | PrimitiveKind::Integer));
                    if !ok {
                        v(
                            &fpath,
                            MetaRule::IdentifierInvalid,
                            "identifier must be a single-valued string or integer".into(),
                        );
                    }
                }
                if let Some(d) = default_value {
                    let ok = match ty {
                        Some(Classifier::DataType(dt)) => dt.primitive.admits(d),
                        Some(Classifier::Enum(e)) => matches!(d, Literal::Str(s) if e.literals.contains(s)),
                        _ => true,
                    };
                    if !ok {
                        v(&fpath, MetaRule::DefaultInvalid, format!("default {d} does not fit type `{type_ref}`"));
                    }
                }
            }
            FeatureKind::Reference { type_ref, opposite, .. } => {
                match mm.classifier(type_ref) {
                    None => v(&fpath, MetaRule::DanglingRef, format!("type `{type_ref}` does not resolve")),
                    Some(Classifier::Class(_)) => {}
                    Some(_) => {
                        v(&fpath, MetaRule::ReferenceTypeInvalid, format!("reference typed by non-class `{type_ref}`"))
                    }
                }
                if let Some(op) = opposite {
                    check_opposite(mm, path, &fpath, f, op, v);
                }
            }
        }
    }
}

fn check_opposite(
    mm: &Metamodel,
    owner: &str,
    fpath: &str,
    f: &Feature,
    op: &str,
    v: &mut impl FnMut(&str, MetaRule, String),
) {
    let Some(other) = mm.feature(op) else {
        v(fpath, MetaRule::DanglingRef, format!("opposite `{op}` does not resolve"));
        return;
    };
    let (other_owner, _) = split_member(op).expect("resolved member path");
    let back = other.opposite();
    if !other.is_reference() || back != Some(fpath) {
        v(fpath, MetaRule::OppositeInvalid, format!("opposite `{op}` does not point back"));
        return;
    }
    if f.type_ref() != other_owner || other.type_ref() != owner {
        v(fpath, MetaRule::OppositeInvalid, format!("opposite `{op}` types do not match owning classes"));
    }
    if f.is_containment() && other.is_containment() {
        v(fpath, MetaRule::OppositeInvalid, "both ends of an opposite pair are containments".into());
    }
}

fn in_cycle(mm: &Metamodel, class: &str) -> bool {
    let mut stack: Vec<String> = mm.class(class).map(|c| c.supertypes.clone()).unwrap_or_default();
    let mut seen = HashSet::new();
    while let Some(s) = stack.pop() {
        if s == class {
            return true;
        }
        if seen.insert(s.clone()) {
            if let Some(c) = mm.class(&s) {
                stack.extend(c.supertypes.iter().cloned());
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn shapes() -> Metamodel {
        let mut shape = Class::new("Shape");
        shape.features.push(Feature::attribute("color", "shapes.Color", 1, Upper::Bounded(1)));
        shape.features.push(Feature::attribute("label", "shapes.String", 0, Upper::Bounded(1)));
        Metamodel {
            packages: vec![Package {
                name: "shapes".into(),
                ns_uri: "urn:shapes".into(),
                classifiers: vec![
                    Classifier::DataType(DataType {
                        name: "String".into(),
                        primitive: PrimitiveKind::String,
                        annotations: vec![],
                    }),
                    Classifier::Enum(Enumeration {
                        name: "Color".into(),
                        literals: vec!["RED".into(), "BLUE".into()],
                        annotations: vec![],
                    }),
                    Classifier::Class(shape),
                ],
                annotations: vec![],
            }],
        }
    }

    fn add_class(mm: &mut Metamodel, name: &str, supers: &[&str], feats: &[&str]) {
        let mut c = Class::new(name);
        c.supertypes = supers.iter().map(|s| format!("shapes.{s}")).collect();
        for f in feats {
            c.features.push(Feature::attribute(f, "shapes.String", 0, Upper::Bounded(1)));
        }
        mm.packages[0].classifiers.push(Classifier::Class(c));
    }

    #[test]
    fn resolve_paths() {
        let mm = shapes();
        assert!(matches!(mm.resolve(&"shapes.Shape".into()), Ok(Element::Classifier(c)) if c.name() == "Shape"));
        assert!(matches!(mm.resolve(&"shapes.Shape.color".into()), Ok(Element::Feature(_, f)) if f.name == "color"));
        assert!(matches!(mm.resolve(&"shapes.Color.RED".into()), Ok(Element::Literal(_, "RED"))));
        assert_eq!(mm.resolve(&"shapes.Missing".into()).unwrap_err(), MetaError::DanglingRef("shapes.Missing".into()));
        assert!(matches!(mm.resolve(&"shapes..x".into()), Err(MetaError::InvalidRef(_))));
    }

    #[test]
    fn all_features_linear_and_diamond() {
        let mut mm = shapes();
        add_class(&mut mm, "A", &[], &["f"]);
        add_class(&mut mm, "B", &["A"], &["g"]);
        let names: Vec<_> = mm.all_features("shapes.B").iter().map(|f| f.name.clone()).collect();
        assert_eq!(names, ["f", "g"]);

        add_class(&mut mm, "C", &["A"], &[]);
        add_class(&mut mm, "D", &["B", "C"], &[]);
        let names: Vec<_> = mm.all_features("shapes.D").iter().map(|f| f.name.clone()).collect();
        assert_eq!(names, ["f", "g"]);
        assert!(validate_metamodel(&mm).is_empty());
    }

    #[test]
    fn subtype_relation() {
        let mut mm = shapes();
        add_class(&mut mm, "A", &[], &[]);
        add_class(&mut mm, "B", &["A"], &[]);
        add_class(&mut mm, "C", &["B"], &[]);
        add_class(&mut mm, "D", &["C"], &[]);
        assert!(mm.is_subtype("shapes.A", "shapes.A"));
        assert!(mm.is_subtype("shapes.B", "shapes.A"));
        assert!(!mm.is_subtype("shapes.A", "shapes.B"));
        assert!(mm.is_subtype("shapes.D", "shapes.A"));
        assert_eq!(mm.all_subclasses("shapes.B"), ["shapes.C", "shapes.D"]);
    }

    #[test]
    fn self_supertype_is_cyclic() {
        let mut mm = shapes();
        add_class(&mut mm, "Loop", &["Loop"], &[]);
        let rules: Vec<_> = validate_metamodel(&mm).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, [MetaRule::CyclicInheritance]);
    }

    #[test]
    fn redeclared_inherited_feature_clashes() {
        let mut mm = shapes();
        add_class(&mut mm, "Base", &[], &["name"]);
        add_class(&mut mm, "Sub", &["Base"], &["name"]);
        let found = validate_metamodel(&mm);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].rule, MetaRule::FeatureNameClash);
        assert_eq!(found[0].element, "shapes.Sub");
    }

    #[test]
    fn validation_is_pure() {
        let mut mm = shapes();
        add_class(&mut mm, "Loop", &["Loop"], &[]);
        let before = mm.clone();
        assert_eq!(validate_metamodel(&mm), validate_metamodel(&mm));
        assert_eq!(mm, before);
    }

    #[test]
    fn bounds_and_identifier_rules() {
        let mut mm = shapes();
        let mut c = Class::new("X");
        c.features.push(Feature::attribute("bad", "shapes.String", 2, Upper::Bounded(1)));
        let mut id = Feature::attribute("id", "shapes.String", 0, Upper::Unbounded);
        if let FeatureKind::Attribute { identifier, .. } = &mut id.kind {
            *identifier = true;
        }
        c.features.push(id);
        mm.packages[0].classifiers.push(Classifier::Class(c));
        let rules: BTreeSet<_> = validate_metamodel(&mm).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&MetaRule::BoundsInverted));
        assert!(rules.contains(&MetaRule::IdentifierInvalid));
    }

    #[test]
    fn serde_shape() {
        let mm = shapes();
        let json = crate::to_canonical_json(&mm);
        assert!(json.contains("\"kind\": \"enum\""));
        assert!(json.contains("\"nsUri\": \"urn:shapes\""));
        let back: Metamodel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mm);
        let unbounded: Upper = serde_json::from_str("-1").unwrap();
        assert_eq!(unbounded, Upper::Unbounded);
        assert!(serde_json::from_str::<Upper>("0").is_err());
    }
}
