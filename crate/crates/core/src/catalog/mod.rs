//! The catalog of reusable coupled operations.
//!
//! Every operation pairs a metamodel adaptation with the instance migration
//! that keeps conforming models conforming. An operation is guarded by named
//! applicability constraints that only look at the metamodel; data-dependent
//! failures surface as [`MigrationFailure`]s while migrating.
//!
//! [`apply_coupled`] is the transaction boundary: it works on copies, and the
//! migrated model is checked for conformance before it is handed back.

mod annotations;
mod enums;
mod features;
mod structure;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta::{validate_metamodel, Classifier, Feature, Literal, MetaError, MetaViolation, Metamodel, Upper};
use crate::model::{self, check_conformance, ObjRef, ResourceSet, Rule, Value, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamType {
    /// Qualified-name path to a metamodel element.
    ElementRef,
    /// A fresh simple name.
    Name,
    /// Free text.
    Text,
    /// A literal interpreted against the type of the feature involved.
    Literal,
    /// Integer; for upper bounds `-1` means unbounded.
    Int,
    Flag,
    RefList,
    NameList,
    /// `key:value` pairs.
    LiteralMap,
}

impl ParamType {
    fn describe(self) -> &'static str {
        match self {
            ParamType::ElementRef => "element-ref",
            ParamType::Name => "name",
            ParamType::Text => "string",
            ParamType::Literal => "literal",
            ParamType::Int => "integer",
            ParamType::Flag => "flag",
            ParamType::RefList => "list of element-ref",
            ParamType::NameList => "list of name",
            ParamType::LiteralMap => "map of literal to literal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    pub doc: &'static str,
}

const fn req(name: &'static str, ty: ParamType, doc: &'static str) -> ParamSpec {
    ParamSpec { name, ty, required: true, doc }
}

const fn opt(name: &'static str, ty: ParamType, doc: &'static str) -> ParamSpec {
    ParamSpec { name, ty, required: false, doc }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationSpec {
    pub name: &'static str,
    pub params: Vec<ParamSpec>,
    pub constraints: Vec<&'static str>,
    pub documentation: &'static str,
}

/// A bound argument value. The JSON form is the natural one: string,
/// integer, boolean, array of strings, or object of strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Flag(bool),
    Int(i64),
    Text(String),
    List(Vec<String>),
    Map(BTreeMap<String, String>),
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Flag(b) => write!(f, "{b}"),
            ArgValue::Int(i) => write!(f, "{i}"),
            ArgValue::Text(s) => f.write_str(s),
            ArgValue::List(items) => f.write_str(&items.join(",")),
            ArgValue::Map(m) => {
                let pairs: Vec<String> = m.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                f.write_str(&pairs.join(","))
            }
        }
    }
}

pub type Args = BTreeMap<String, ArgValue>;

/// A recorded use of a catalog operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationApplication {
    pub op: String,
    #[serde(default)]
    pub args: Args,
}

impl OperationApplication {
    pub fn new(op: &str) -> Self {
        OperationApplication { op: op.to_string(), args: Args::new() }
    }

    pub fn arg(mut self, name: &str, value: impl Into<ArgValue>) -> Self {
        self.args.insert(name.to_string(), value.into());
        self
    }
}

impl From<&str> for ArgValue {
    fn from(s: &str) -> Self {
        ArgValue::Text(s.to_string())
    }
}

impl From<String> for ArgValue {
    fn from(s: String) -> Self {
        ArgValue::Text(s)
    }
}

impl From<bool> for ArgValue {
    fn from(b: bool) -> Self {
        ArgValue::Flag(b)
    }
}

impl From<i64> for ArgValue {
    fn from(i: i64) -> Self {
        ArgValue::Int(i)
    }
}

impl From<Vec<&str>> for ArgValue {
    fn from(v: Vec<&str>) -> Self {
        ArgValue::List(v.into_iter().map(String::from).collect())
    }
}

impl From<Vec<String>> for ArgValue {
    fn from(v: Vec<String>) -> Self {
        ArgValue::List(v)
    }
}

impl From<BTreeMap<String, String>> for ArgValue {
    fn from(m: BTreeMap<String, String>) -> Self {
        ArgValue::Map(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub constraint: String,
    pub satisfied: bool,
    pub message: String,
}

impl fmt::Display for ConstraintResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.satisfied { "ok  " } else { "FAIL" };
        if self.message.is_empty() {
            write!(f, "[{mark}] {}", self.constraint)
        } else {
            write!(f, "[{mark}] {}: {}", self.constraint, self.message)
        }
    }
}

/// Data-dependent reasons a migration cannot proceed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MigrationFailure {
    MissingValue,
    SharedTarget,
    ValueWouldBeLost,
    UnmappedLiteral,
    TypeViolation,
    DirectInstances,
    ContainmentCycle,
    IdClash,
    LowerBoundBroken,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("{op}: missing required argument `{param}`")]
    MissingArg { op: String, param: String },
    #[error("{op}: unknown argument `{param}`")]
    UnknownArg { op: String, param: String },
    #[error("{op}: argument `{param}` must be a {expected}")]
    ArgTypeMismatch { op: String, param: String, expected: &'static str },
    #[error("{op}: constraints not satisfied: {}", failed_names(.results))]
    ConstraintViolation { op: String, results: Vec<ConstraintResult> },
    #[error("{op}: migration failed ({failure:?}): {message}")]
    Migration { op: String, failure: MigrationFailure, message: String },
    #[error("{op}: adapted metamodel is invalid: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidAdaptation { op: String, violations: Vec<MetaViolation> },
    #[error("{op}: migrated model does not conform: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    PostConformance { op: String, violations: Vec<Violation> },
    #[error("{op}: {source}")]
    Meta {
        op: String,
        #[source]
        source: MetaError,
    },
}

fn failed_names(results: &[ConstraintResult]) -> String {
    results.iter().filter(|r| !r.satisfied).map(|r| r.constraint.as_str()).collect::<Vec<_>>().join(", ")
}

pub type CatalogResult<T> = Result<T, CatalogError>;

/// Typed read access to validated arguments.
pub struct ArgView<'a> {
    args: &'a Args,
}

impl<'a> ArgView<'a> {
    pub fn text(&self, name: &str) -> &'a str {
        match self.args.get(name) {
            Some(ArgValue::Text(s)) => s,
            _ => "",
        }
    }

    pub fn opt_text(&self, name: &str) -> Option<&'a str> {
        match self.args.get(name) {
            Some(ArgValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.args.get(name) {
            Some(ArgValue::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn flag(&self, name: &str) -> bool {
        matches!(self.args.get(name), Some(ArgValue::Flag(true)))
    }

    pub fn list(&self, name: &str) -> &'a [String] {
        match self.args.get(name) {
            Some(ArgValue::List(items)) => items,
            _ => &[],
        }
    }

    pub fn map(&self, name: &str) -> Option<&'a BTreeMap<String, String>> {
        match self.args.get(name) {
            Some(ArgValue::Map(m)) => Some(m),
            _ => None,
        }
    }
}

/// Accumulates constraint results.
#[derive(Default)]
pub(crate) struct Checks(Vec<ConstraintResult>);

impl Checks {
    /// Records a result and returns `ok`.
    pub(crate) fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) -> bool {
        self.0.push(ConstraintResult {
            constraint: name.to_string(),
            satisfied: ok,
            message: if ok { String::new() } else { detail.into() },
        });
        ok
    }

    pub(crate) fn done(self) -> Vec<ConstraintResult> {
        self.0
    }
}

/// Working state handed to an operation's migration.
pub struct MigrateCtx<'a> {
    pub before: &'a Metamodel,
    pub after: &'a Metamodel,
    pub set: &'a mut ResourceSet,
    op: &'static str,
}

impl MigrateCtx<'_> {
    pub(crate) fn fail(&self, failure: MigrationFailure, message: impl Into<String>) -> CatalogError {
        CatalogError::Migration { op: self.op.to_string(), failure, message: message.into() }
    }

    /// Instances of `class` and its subclasses as known before adaptation.
    pub(crate) fn instances_before(&self, class: &str) -> Vec<ObjRef> {
        model::instances_of(self.set, self.before, class, true)
    }

    pub(crate) fn direct_instances(&self, class: &str) -> Vec<ObjRef> {
        model::instances_of(self.set, self.before, class, false)
    }

    pub(crate) fn model_err(&self, e: model::ModelError) -> CatalogError {
        model_failure(self.op, e)
    }

    pub(crate) fn obj_mut(&mut self, r: &ObjRef) -> CatalogResult<&mut model::MObject> {
        let op = self.op;
        self.set.object_mut(r).map_err(|e| model_failure(op, e))
    }

    /// Removes a slot; contained objects are deleted together with every
    /// reference to them.
    pub(crate) fn drop_slot(&mut self, obj: &ObjRef, feature: &str) -> CatalogResult<()> {
        let op = self.op;
        self.set.drop_slot(obj, feature).map_err(|e| model_failure(op, e))
    }

    /// Sets `lower` copies of the default value for every instance of
    /// `class` (and subclasses) whose mandatory attribute `feature` is unset.
    pub(crate) fn fill_defaults(&mut self, class: &str, features: &[&Feature]) -> CatalogResult<()> {
        for obj in model::instances_of(self.set, self.after, class, true) {
            for f in features {
                let Some(d) = f.default_value() else { continue };
                if f.lower == 0 || f.volatile {
                    continue;
                }
                let value = literal_value(self.after, f, d);
                let o = self.obj_mut(&obj)?;
                if o.get(&f.name).is_empty() {
                    o.set(&f.name, vec![value; f.lower as usize]);
                }
            }
        }
        Ok(())
    }

    /// Converts lower-bound violations left by data removal into a
    /// migration failure.
    pub(crate) fn ensure_lower_bounds(&self) -> CatalogResult<()> {
        let broken: Vec<String> = check_conformance(self.set, self.after)
            .into_iter()
            .filter(|v| v.rule == Rule::MultiplicityLower)
            .map(|v| v.to_string())
            .collect();
        if broken.is_empty() {
            Ok(())
        } else {
            Err(self.fail(MigrationFailure::LowerBoundBroken, broken.join("; ")))
        }
    }
}

fn model_failure(op: &str, e: model::ModelError) -> CatalogError {
    let failure = match e {
        model::ModelError::ContainmentCycle(_) => MigrationFailure::ContainmentCycle,
        model::ModelError::IdClash { .. } => MigrationFailure::IdClash,
        _ => MigrationFailure::TypeViolation,
    };
    CatalogError::Migration { op: op.to_string(), failure, message: e.to_string() }
}

/// The slot value representing `lit` for attribute `f`.
pub(crate) fn literal_value(mm: &Metamodel, f: &Feature, lit: &Literal) -> Value {
    match (mm.classifier(f.type_ref()), lit) {
        (Some(Classifier::Enum(_)), Literal::Str(s)) => Value::Enum(s.clone()),
        _ => Value::Prim(lit.clone()),
    }
}

/// Parses textual input as a literal of the given attribute type.
pub(crate) fn parse_literal(mm: &Metamodel, type_ref: &str, text: &str) -> Option<Literal> {
    match mm.classifier(type_ref)? {
        Classifier::DataType(d) => d.primitive.parse(text),
        Classifier::Enum(e) => e.literals.iter().any(|l| l == text).then(|| Literal::Str(text.to_string())),
        Classifier::Class(_) => None,
    }
}

pub(crate) fn upper_from(i: i64) -> Option<Upper> {
    Upper::try_from(i).ok()
}

/// A reusable coupled operation.
pub trait CoupledOperation: Sync {
    fn spec(&self) -> OperationSpec;

    /// Evaluates the applicability constraints. Pure.
    fn check(&self, mm: &Metamodel, args: &ArgView) -> Vec<ConstraintResult>;

    /// Adapts the metamodel in place. Only called when `check` passed.
    fn adapt(&self, mm: &mut Metamodel, args: &ArgView) -> Result<(), MetaError>;

    /// Migrates instances in place.
    fn migrate(&self, _ctx: &mut MigrateCtx, _args: &ArgView) -> CatalogResult<()> {
        Ok(())
    }
}

static REGISTRY: [&dyn CoupledOperation; 34] = [
    &structure::AddSuperType,
    &structure::RemoveSuperType,
    &features::CreateAttribute,
    &structure::CreateClass,
    &features::CreateReference,
    &features::DeleteFeature,
    &features::DeleteOperation,
    &annotations::DocumentElement,
    &features::DropAttributeIdentifier,
    &structure::ExtractSuperClass,
    &structure::ExtractSubclass,
    &features::GeneralizeAttribute,
    &features::GeneralizeReference,
    &structure::InlineSuperClass,
    &structure::MakeAbstractWhenInterface,
    &features::MakeReferenceContainment,
    &features::NotChangeableToSuppressedSet,
    &features::SuppressedSetToNotChangeable,
    &features::PushDownFeature,
    &features::SpecializeReferenceType,
    &structure::SpecializeSuperType,
    &structure::UnfoldSuperClass,
    &annotations::ChangeNamespaceUri,
    &annotations::CreateAnnotation,
    &annotations::DeleteAnnotation,
    &annotations::MoveAnnotation,
    &enums::CreateEnumeration,
    &annotations::CreateGmfConstraint,
    &annotations::ChangeGmfConstraint,
    &features::MakeFeatureVolatile,
    &enums::ReplaceEnumeration,
    &enums::EnumerationToSubClasses,
    &enums::SubClassesToEnumeration,
    &structure::InheritanceToDelegation,
];

/// The whole catalog in stable order.
pub fn list_operations() -> Vec<OperationSpec> {
    REGISTRY.iter().map(|op| op.spec()).collect()
}

/// Looks an operation up by name, ignoring ASCII case.
pub fn find_operation(name: &str) -> Option<&'static dyn CoupledOperation> {
    REGISTRY.iter().copied().find(|op| op.spec().name.eq_ignore_ascii_case(name))
}

fn arg_fits(ty: ParamType, v: &ArgValue) -> bool {
    match ty {
        ParamType::ElementRef | ParamType::Name | ParamType::Text | ParamType::Literal => {
            matches!(v, ArgValue::Text(_))
        }
        ParamType::Int => matches!(v, ArgValue::Int(_)),
        ParamType::Flag => matches!(v, ArgValue::Flag(_)),
        ParamType::RefList | ParamType::NameList => matches!(v, ArgValue::List(_)),
        ParamType::LiteralMap => matches!(v, ArgValue::Map(_)),
    }
}

/// Checks argument names, presence and types against the spec.
pub fn validate_args(spec: &OperationSpec, args: &Args) -> CatalogResult<()> {
    for name in args.keys() {
        if !spec.params.iter().any(|p| p.name == name) {
            return Err(CatalogError::UnknownArg { op: spec.name.to_string(), param: name.clone() });
        }
    }
    for p in &spec.params {
        match args.get(p.name) {
            None if p.required => {
                return Err(CatalogError::MissingArg { op: spec.name.to_string(), param: p.name.to_string() })
            }
            Some(v) if !arg_fits(p.ty, v) => {
                return Err(CatalogError::ArgTypeMismatch {
                    op: spec.name.to_string(),
                    param: p.name.to_string(),
                    expected: p.ty.describe(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Parses a command-line value for a parameter of the given type.
pub fn parse_arg(ty: ParamType, text: &str) -> Option<ArgValue> {
    let split =
        |s: &str| -> Vec<String> { s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect() };
    Some(match ty {
        ParamType::ElementRef | ParamType::Name | ParamType::Text | ParamType::Literal => {
            ArgValue::Text(text.to_string())
        }
        ParamType::Int if text == "*" => ArgValue::Int(-1),
        ParamType::Int => ArgValue::Int(text.parse().ok()?),
        ParamType::Flag => ArgValue::Flag(text.parse().ok()?),
        ParamType::RefList | ParamType::NameList => ArgValue::List(split(text)),
        ParamType::LiteralMap => {
            let mut m = BTreeMap::new();
            for pair in split(text) {
                let (k, v) = pair.split_once(':')?;
                m.insert(k.trim().to_string(), v.trim().to_string());
            }
            ArgValue::Map(m)
        }
    })
}

/// Evaluates an operation's constraints against a metamodel.
pub fn check_applicability(app: &OperationApplication, mm: &Metamodel) -> CatalogResult<Vec<ConstraintResult>> {
    let op = find_operation(&app.op).ok_or_else(|| CatalogError::UnknownOperation(app.op.clone()))?;
    validate_args(&op.spec(), &app.args)?;
    Ok(op.check(mm, &ArgView { args: &app.args }))
}

/// Adapts the metamodel only, after checking constraints. Used when
/// replaying a history without models.
pub fn apply_to_metamodel(app: &OperationApplication, mm: &Metamodel) -> CatalogResult<Metamodel> {
    apply_coupled(app, mm, None).map(|(m, _)| m)
}

/// Applies an operation to a metamodel and, optionally, migrates a model
/// set along with it. Inputs are never modified; on success the migrated
/// set conforms to the adapted metamodel.
pub fn apply_coupled(
    app: &OperationApplication,
    mm: &Metamodel,
    set: Option<&ResourceSet>,
) -> CatalogResult<(Metamodel, Option<ResourceSet>)> {
    let op = find_operation(&app.op).ok_or_else(|| CatalogError::UnknownOperation(app.op.clone()))?;
    let spec = op.spec();
    validate_args(&spec, &app.args)?;
    let args = ArgView { args: &app.args };
    let results = op.check(mm, &args);
    if results.iter().any(|r| !r.satisfied) {
        return Err(CatalogError::ConstraintViolation { op: spec.name.to_string(), results });
    }
    let mut adapted = mm.clone();
    op.adapt(&mut adapted, &args).map_err(|source| CatalogError::Meta { op: spec.name.to_string(), source })?;
    let violations = validate_metamodel(&adapted);
    if !violations.is_empty() {
        return Err(CatalogError::InvalidAdaptation { op: spec.name.to_string(), violations });
    }
    let Some(set) = set else {
        return Ok((adapted, None));
    };
    let mut work = set.clone();
    let mut ctx = MigrateCtx { before: mm, after: &adapted, set: &mut work, op: spec.name };
    op.migrate(&mut ctx, &args)?;
    let violations = check_conformance(&work, &adapted);
    if !violations.is_empty() {
        return Err(CatalogError::PostConformance { op: spec.name.to_string(), violations });
    }
    Ok((adapted, Some(work)))
}

/// Helpers shared by the operation implementations.
pub(crate) mod util {
    use super::*;
    use crate::meta::Class;

    pub(crate) fn class<'a>(mm: &'a Metamodel, c: &mut Checks, name: &str, path: &str) -> Option<&'a Class> {
        let found = mm.class(path);
        c.check(name, found.is_some(), format!("`{path}` is not a class"));
        found
    }

    /// Owner path and feature for a `package.Class.feature` reference.
    pub(crate) fn feature<'a>(
        mm: &'a Metamodel,
        c: &mut Checks,
        name: &str,
        path: &str,
    ) -> Option<(String, &'a Feature)> {
        let found =
            crate::meta::split_member(path).and_then(|(owner, _)| mm.feature(path).map(|f| (owner.to_string(), f)));
        c.check(name, found.is_some(), format!("`{path}` is not a feature"));
        found
    }

    pub(crate) fn attribute<'a>(
        mm: &'a Metamodel,
        c: &mut Checks,
        name: &str,
        path: &str,
    ) -> Option<(String, &'a Feature)> {
        let found = crate::meta::split_member(path)
            .and_then(|(owner, _)| mm.feature(path).filter(|f| !f.is_reference()).map(|f| (owner.to_string(), f)));
        c.check(name, found.is_some(), format!("`{path}` is not an attribute"));
        found
    }

    pub(crate) fn reference<'a>(
        mm: &'a Metamodel,
        c: &mut Checks,
        name: &str,
        path: &str,
    ) -> Option<(String, &'a Feature)> {
        let found = crate::meta::split_member(path)
            .and_then(|(owner, _)| mm.feature(path).filter(|f| f.is_reference()).map(|f| (owner.to_string(), f)));
        c.check(name, found.is_some(), format!("`{path}` is not a reference"));
        found
    }

    pub(crate) fn bounds_ok(lower: i64, upper: i64) -> bool {
        lower >= 0 && lower <= u32::MAX as i64 && (upper == -1 || (upper >= 1 && upper >= lower))
    }

    /// Classes that stop being (reflexive) supertypes of `class` when
    /// `supertype` is unlinked from it.
    pub(crate) fn lost_supertypes(mm: &Metamodel, class: &str, supertype: &str) -> Vec<String> {
        let before = mm.supertype_closure(class);
        let mut trial = mm.clone();
        if let Ok(c) = trial.class_mut(class) {
            c.supertypes.retain(|s| s != supertype);
        }
        let after = trial.supertype_closure(class);
        before.into_iter().filter(|s| !after.contains(s)).collect()
    }

    /// Features (owner, feature) inherited through the lost supertypes.
    pub(crate) fn lost_features<'a>(mm: &'a Metamodel, class: &str, lost: &[String]) -> Vec<(String, &'a Feature)> {
        mm.all_features_with_owner(class).into_iter().filter(|(o, _)| lost.contains(o)).collect()
    }

    /// References typed by any of `classes`, rendered for messages.
    pub(crate) fn typed_refs(mm: &Metamodel, classes: &[String]) -> Vec<String> {
        classes
            .iter()
            .flat_map(|l| mm.references_typed_by(l).into_iter().map(|(o, f)| format!("{o}.{}", f.name)))
            .collect()
    }

    /// Features gained by `class` when going from `before` to `after`.
    pub(crate) fn gained_features<'a>(before: &Metamodel, after: &'a Metamodel, class: &str) -> Vec<&'a Feature> {
        let old: Vec<(String, String)> =
            before.all_features_with_owner(class).into_iter().map(|(o, f)| (o, f.name.clone())).collect();
        after
            .all_features_with_owner(class)
            .into_iter()
            .filter(|(o, f)| !old.contains(&(o.clone(), f.name.clone())))
            .map(|(_, f)| f)
            .collect()
    }

    /// Gained mandatory features that cannot be initialized automatically.
    pub(crate) fn uninitializable(gained: &[&Feature]) -> Vec<String> {
        gained
            .iter()
            .filter(|f| f.lower > 0 && !f.volatile && f.default_value().is_none())
            .map(|f| f.name.clone())
            .collect()
    }

    /// Feature-name clashes reported for `classes` by validating `trial`.
    pub(crate) fn clashes(trial: &Metamodel, classes: &[String]) -> Vec<String> {
        let mut affected: Vec<String> = classes.to_vec();
        for c in classes {
            affected.extend(trial.all_subclasses(c));
        }
        validate_metamodel(trial)
            .into_iter()
            .filter(|v| {
                matches!(v.rule, crate::meta::MetaRule::FeatureNameClash | crate::meta::MetaRule::CyclicInheritance)
                    && affected.contains(&v.element)
            })
            .map(|v| v.message)
            .collect()
    }
}
