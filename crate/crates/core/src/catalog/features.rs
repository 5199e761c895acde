//! Operations on attributes, references and operation signatures.

use std::collections::BTreeMap;

use super::util::{attribute, bounds_ok, class, feature, reference};
use super::*;
use crate::meta::{annotation, split_member, Annotation, FeatureKind, MetaResult, PrimitiveKind};
use crate::model::Placement;

use ParamType::*;

const GENMODEL: &str = "genmodel";
const SUPPRESSED_SET: &str = "suppressedSetVisibility";

fn bounds(a: &ArgView, lower: u32, upper: Upper) -> (i64, i64) {
    (a.int("lower").unwrap_or(lower as i64), a.int("upper").unwrap_or(i64::from(upper)))
}

fn owner_of(path: &str) -> &str {
    split_member(path).map(|(o, _)| o).unwrap_or(path)
}

/// Drops the slot `name` from all instances of `owner`.
fn drop_feature_slots(ctx: &mut MigrateCtx, owner: &str, name: &str) -> CatalogResult<()> {
    for obj in ctx.instances_before(owner) {
        ctx.drop_slot(&obj, name)?;
    }
    Ok(())
}

pub struct CreateAttribute;

impl CoupledOperation for CreateAttribute {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Create Attribute",
            params: vec![
                req("class", ElementRef, "owning class"),
                req("name", Name, "attribute name"),
                req("type", ElementRef, "data type or enumeration"),
                opt("lower", Int, "lower bound (default 0)"),
                opt("upper", Int, "upper bound, -1 for unbounded (default 1)"),
                opt("default", Literal, "default value"),
                opt("identifier", Flag, "whether the attribute identifies its object"),
            ],
            constraints: vec![
                "ClassExists",
                "FeatureNameClash",
                "TypeIsDataTypeOrEnum",
                "BoundsValid",
                "DefaultValid",
                "MandatoryHasDefault",
                "IdentifierValid",
            ],
            documentation: "Adds an attribute; mandatory attributes are initialized with their default value.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, name, ty) = (a.text("class"), a.text("name"), a.text("type"));
        if class(mm, &mut c, "ClassExists", cls).is_none() {
            return c.done();
        }
        c.check(
            "FeatureNameClash",
            mm.feature_name_free(cls, name),
            format!("`{name}` already used in the hierarchy of `{cls}`"),
        );
        let prim = mm.data_type(ty).map(|d| d.primitive);
        let is_type = prim.is_some() || mm.enumeration(ty).is_some();
        c.check("TypeIsDataTypeOrEnum", is_type, format!("`{ty}` is not a data type or enumeration"));
        let (lower, upper) = bounds(a, 0, Upper::Bounded(1));
        c.check("BoundsValid", bounds_ok(lower, upper), format!("invalid bounds [{lower}..{upper}]"));
        let default = a.opt_text("default");
        let parsed = default.map(|d| parse_literal(mm, ty, d));
        c.check(
            "DefaultValid",
            !matches!(parsed, Some(None)),
            format!("`{}` is not a valid `{ty}`", default.unwrap_or("")),
        );
        c.check("MandatoryHasDefault", lower == 0 || default.is_some(), "a mandatory attribute needs a default value");
        let id_ok = !a.flag("identifier")
            || (lower == 0 && upper == 1 && matches!(prim, Some(PrimitiveKind::String | PrimitiveKind::Integer)));
        c.check("IdentifierValid", id_ok, "identifiers must be optional, single-valued strings or integers");
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let ty = a.text("type");
        let (lower, upper) = bounds(a, 0, Upper::Bounded(1));
        let upper = upper_from(upper).ok_or_else(|| MetaError::InvalidValue {
            path: String::new(),
            property: "upper".into(),
            message: format!("invalid upper bound {upper}"),
        })?;
        let mut f = Feature::attribute(a.text("name"), ty, lower as u32, upper);
        let default = a.opt_text("default").and_then(|d| parse_literal(mm, ty, d));
        if let FeatureKind::Attribute { identifier, default_value, .. } = &mut f.kind {
            *identifier = a.flag("identifier");
            *default_value = default;
        }
        mm.class_mut(a.text("class"))?.features.push(f);
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let cls = a.text("class");
        let f = ctx.after.class(cls).and_then(|k| k.feature(a.text("name"))).cloned().expect("adapted");
        ctx.fill_defaults(cls, &[&f])
    }
}

pub struct CreateReference;

impl CoupledOperation for CreateReference {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Create Reference",
            params: vec![
                req("class", ElementRef, "owning class"),
                req("name", Name, "reference name"),
                req("type", ElementRef, "target class"),
                opt("lower", Int, "lower bound, must be 0"),
                opt("upper", Int, "upper bound, -1 for unbounded (default 1)"),
                opt("containment", Flag, "whether targets are contained"),
            ],
            constraints: vec!["ClassExists", "FeatureNameClash", "TypeIsClass", "BoundsValid", "LowerBoundZero"],
            documentation: "Adds an optional reference; instances start without targets.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, name, ty) = (a.text("class"), a.text("name"), a.text("type"));
        if class(mm, &mut c, "ClassExists", cls).is_none() {
            return c.done();
        }
        c.check(
            "FeatureNameClash",
            mm.feature_name_free(cls, name),
            format!("`{name}` already used in the hierarchy of `{cls}`"),
        );
        c.check("TypeIsClass", mm.class(ty).is_some(), format!("`{ty}` is not a class"));
        let (lower, upper) = bounds(a, 0, Upper::Bounded(1));
        c.check("BoundsValid", bounds_ok(lower, upper), format!("invalid bounds [{lower}..{upper}]"));
        c.check("LowerBoundZero", lower == 0, "a new reference cannot be mandatory without a custom migration");
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let (_, upper) = bounds(a, 0, Upper::Bounded(1));
        let upper = upper_from(upper).ok_or_else(|| MetaError::InvalidValue {
            path: String::new(),
            property: "upper".into(),
            message: format!("invalid upper bound {upper}"),
        })?;
        let f = Feature::reference(a.text("name"), a.text("type"), 0, upper, a.flag("containment"));
        mm.class_mut(a.text("class"))?.features.push(f);
        Ok(())
    }
}

pub struct DeleteFeature;

impl CoupledOperation for DeleteFeature {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Delete Feature",
            params: vec![req("feature", ElementRef, "feature to delete")],
            constraints: vec!["FeatureExists"],
            documentation: "Deletes a feature and every value it holds; contained objects are deleted too.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        feature(mm, &mut c, "FeatureExists", a.text("feature"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let path = a.text("feature");
        let (owner, name) = split_member(path).ok_or_else(|| MetaError::InvalidRef(path.to_string()))?;
        let opposite = mm.feature(path).and_then(|f| f.opposite()).map(String::from);
        if let Some(op) = opposite {
            if let Ok(FeatureKind::Reference { opposite, .. }) = mm.feature_mut(&op).map(|f| &mut f.kind) {
                *opposite = None;
            }
        }
        mm.class_mut(owner)?.features.retain(|f| f.name != name);
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let path = a.text("feature");
        let (owner, name) = split_member(path).expect("checked");
        drop_feature_slots(ctx, owner, name)?;
        ctx.ensure_lower_bounds()
    }
}

pub struct DeleteOperation;

impl CoupledOperation for DeleteOperation {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Delete Operation",
            params: vec![req("operation", ElementRef, "operation signature to delete")],
            constraints: vec!["OperationExists"],
            documentation: "Removes an operation signature from its class.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("operation");
        let found =
            split_member(path).and_then(|(o, n)| mm.class(o).map(|k| k.operations.iter().any(|op| op.name == n)));
        c.check("OperationExists", found == Some(true), format!("`{path}` is not an operation"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let path = a.text("operation");
        let (owner, name) = split_member(path).ok_or_else(|| MetaError::InvalidRef(path.to_string()))?;
        mm.class_mut(owner)?.operations.retain(|o| o.name != name);
        Ok(())
    }
}

pub struct DropAttributeIdentifier;

impl CoupledOperation for DropAttributeIdentifier {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Drop Attribute Identifier",
            params: vec![req("attribute", ElementRef, "identifier attribute")],
            constraints: vec!["AttributeExists", "IsIdentifier"],
            documentation: "Clears the identifier flag of an attribute.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("attribute");
        if let Some((_, f)) = attribute(mm, &mut c, "AttributeExists", path) {
            c.check("IsIdentifier", f.is_identifier(), format!("`{path}` is not an identifier"));
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        if let FeatureKind::Attribute { identifier, .. } = &mut mm.feature_mut(a.text("attribute"))?.kind {
            *identifier = false;
        }
        Ok(())
    }
}

pub struct GeneralizeAttribute;

impl CoupledOperation for GeneralizeAttribute {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Generalize Attribute",
            params: vec![
                req("attribute", ElementRef, "attribute to widen"),
                opt("lower", Int, "new, smaller or equal lower bound"),
                opt("upper", Int, "new, larger or equal upper bound (-1 for unbounded)"),
                opt("type", ElementRef, "wider data type (integer to float only)"),
            ],
            constraints: vec![
                "AttributeExists",
                "BoundsValid",
                "BoundsWidened",
                "TypeWidened",
                "IdentifierStaysSingle",
            ],
            documentation: "Widens the bounds or the type of an attribute; existing values stay valid.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("attribute");
        let Some((_, f)) = attribute(mm, &mut c, "AttributeExists", path) else { return c.done() };
        let (lower, upper) = bounds(a, f.lower, f.upper);
        if c.check("BoundsValid", bounds_ok(lower, upper), format!("invalid bounds [{lower}..{upper}]")) {
            let widened = lower <= f.lower as i64 && upper_from(upper).is_some_and(|u| u.covers(f.upper));
            c.check(
                "BoundsWidened",
                widened,
                format!("[{lower}..{upper}] does not contain [{}..{}]", f.lower, f.upper),
            );
        }
        let widened = match a.opt_text("type") {
            None => true,
            Some(t) if t == f.type_ref() => true,
            Some(t) => {
                let from = mm.data_type(f.type_ref()).map(|d| d.primitive);
                let to = mm.data_type(t).map(|d| d.primitive);
                from == Some(PrimitiveKind::Integer) && to == Some(PrimitiveKind::Float)
            }
        };
        c.check("TypeWidened", widened, "only integer attributes can be widened, to a float type");
        c.check("IdentifierStaysSingle", !f.is_identifier() || upper == 1, "identifier attributes stay single-valued");
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let f = mm.feature_mut(a.text("attribute"))?;
        let (lower, upper) = bounds(a, f.lower, f.upper);
        f.lower = lower as u32;
        f.upper = upper_from(upper).ok_or_else(|| MetaError::InvalidValue {
            path: String::new(),
            property: "upper".into(),
            message: format!("invalid upper bound {upper}"),
        })?;
        if let Some(t) = a.opt_text("type") {
            f.set_type_ref(t.to_string());
            if let FeatureKind::Attribute { default_value: Some(crate::meta::Literal::Int(i)), .. } = &f.kind {
                let widened = crate::meta::Literal::Float(*i as f64);
                if let FeatureKind::Attribute { default_value, .. } = &mut f.kind {
                    *default_value = Some(widened);
                }
            }
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let path = a.text("attribute");
        let retyped = a.opt_text("type").is_some_and(|t| ctx.before.feature(path).is_some_and(|f| f.type_ref() != t));
        if !retyped {
            return Ok(());
        }
        let (owner, name) = split_member(path).expect("checked");
        for obj in ctx.instances_before(owner) {
            let o = ctx.obj_mut(&obj)?;
            if let Some(values) = o.slots.get_mut(name) {
                for v in values {
                    if let Value::Prim(crate::meta::Literal::Int(i)) = v {
                        *v = Value::Prim(crate::meta::Literal::Float(*i as f64));
                    }
                }
            }
        }
        Ok(())
    }
}

pub struct GeneralizeReference;

impl CoupledOperation for GeneralizeReference {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Generalize Reference",
            params: vec![
                req("reference", ElementRef, "reference to widen"),
                opt("lower", Int, "new, smaller or equal lower bound"),
                opt("upper", Int, "new, larger or equal upper bound (-1 for unbounded)"),
                opt("type", ElementRef, "supertype of the current target type"),
            ],
            constraints: vec!["ReferenceExists", "BoundsValid", "BoundsWidened", "TypeGeneralized", "NoOpposite"],
            documentation: "Widens the bounds of a reference or replaces its type by a supertype.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("reference");
        let Some((_, f)) = reference(mm, &mut c, "ReferenceExists", path) else { return c.done() };
        let (lower, upper) = bounds(a, f.lower, f.upper);
        if c.check("BoundsValid", bounds_ok(lower, upper), format!("invalid bounds [{lower}..{upper}]")) {
            let widened = lower <= f.lower as i64 && upper_from(upper).is_some_and(|u| u.covers(f.upper));
            c.check(
                "BoundsWidened",
                widened,
                format!("[{lower}..{upper}] does not contain [{}..{}]", f.lower, f.upper),
            );
        }
        let new_type = a.opt_text("type").filter(|t| *t != f.type_ref());
        if let Some(t) = new_type {
            c.check(
                "TypeGeneralized",
                mm.class(t).is_some() && mm.is_subtype(f.type_ref(), t),
                format!("`{t}` is not a supertype of `{}`", f.type_ref()),
            );
        } else {
            c.check("TypeGeneralized", true, "");
        }
        c.check(
            "NoOpposite",
            new_type.is_none() || f.opposite().is_none(),
            "retyping a reference with an opposite breaks the pair",
        );
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let f = mm.feature_mut(a.text("reference"))?;
        let (lower, upper) = bounds(a, f.lower, f.upper);
        f.lower = lower as u32;
        f.upper = upper_from(upper).ok_or_else(|| MetaError::InvalidValue {
            path: String::new(),
            property: "upper".into(),
            message: format!("invalid upper bound {upper}"),
        })?;
        if let Some(t) = a.opt_text("type") {
            f.set_type_ref(t.to_string());
        }
        Ok(())
    }
}

pub struct MakeReferenceContainment;

impl CoupledOperation for MakeReferenceContainment {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Make Reference Containment",
            params: vec![req("reference", ElementRef, "non-containment reference")],
            constraints: vec!["ReferenceExists", "NotContainment", "OppositeNotContainment"],
            documentation: "Turns a cross reference into a containment; targets move under their referrer.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("reference");
        let Some((_, f)) = reference(mm, &mut c, "ReferenceExists", path) else { return c.done() };
        c.check("NotContainment", !f.is_containment(), format!("`{path}` already is a containment"));
        let opp_containment = f.opposite().and_then(|o| mm.feature(o)).is_some_and(Feature::is_containment);
        c.check("OppositeNotContainment", !opp_containment, "the opposite is a containment");
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        if let FeatureKind::Reference { containment, .. } = &mut mm.feature_mut(a.text("reference"))?.kind {
            *containment = true;
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let path = a.text("reference");
        let (owner_class, name) = split_member(path).expect("checked");
        let mut plan: Vec<(ObjRef, Vec<ObjRef>)> = Vec::new();
        let mut owner_of_target: BTreeMap<ObjRef, ObjRef> = BTreeMap::new();
        for obj in ctx.instances_before(owner_class) {
            let o = ctx.set.object(&obj).expect("listed");
            let mut targets = Vec::new();
            for v in o.get(name) {
                let Some(t) = v.as_ref_target() else { continue };
                if let Some(prev) = owner_of_target.insert(t.clone(), obj.clone()) {
                    if prev != obj || targets.contains(t) {
                        return Err(ctx.fail(
                            MigrationFailure::SharedTarget,
                            format!("`{t}` is referenced by `{prev}` and `{obj}`"),
                        ));
                    }
                }
                if ctx.set.contains(t, &obj) {
                    return Err(ctx.fail(
                        MigrationFailure::ContainmentCycle,
                        format!("`{obj}` would be contained in itself via `{t}`"),
                    ));
                }
                targets.push(t.clone());
            }
            if !targets.is_empty() {
                plan.push((obj, targets));
            }
        }
        // Identities change when an object moves to another resource; pending
        // entries are rewritten accordingly.
        for i in 0..plan.len() {
            let owner = plan[i].0.clone();
            ctx.obj_mut(&owner)?.unset(name);
            for j in 0..plan[i].1.len() {
                let target = plan[i].1[j].clone();
                let mut ids = Vec::new();
                if let Some(t) = ctx.set.object(&target) {
                    t.walk(&mut |o| ids.push(o.id.clone()));
                }
                let at = Placement::Child { owner: plan[i].0.clone(), feature: name.to_string() };
                let moved = ctx.set.move_object(&target, &at).map_err(|e| ctx.model_err(e))?;
                if moved.resource != target.resource {
                    let rename = |r: &mut ObjRef| {
                        if r.resource == target.resource && ids.contains(&r.id) {
                            r.resource = moved.resource.clone();
                        }
                    };
                    for (o, ts) in plan.iter_mut() {
                        rename(o);
                        ts.iter_mut().for_each(rename);
                    }
                }
            }
        }
        ctx.ensure_lower_bounds()
    }
}

fn suppressed(f: &Feature) -> bool {
    annotation(&f.annotations, GENMODEL).and_then(|a| a.details.get(SUPPRESSED_SET)).is_some_and(|v| v == "true")
}

pub struct NotChangeableToSuppressedSet;

impl CoupledOperation for NotChangeableToSuppressedSet {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Not Changeable to Suppressed Set Visibility",
            params: vec![req("feature", ElementRef, "non-changeable feature")],
            constraints: vec!["FeatureExists", "NotChangeable", "NotSuppressed"],
            documentation: "Makes a feature changeable but hides its setter in generated code.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("feature");
        if let Some((_, f)) = feature(mm, &mut c, "FeatureExists", path) {
            c.check("NotChangeable", !f.changeable, format!("`{path}` is changeable"));
            c.check("NotSuppressed", !suppressed(f), format!("`{path}` already suppresses its setter"));
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let f = mm.feature_mut(a.text("feature"))?;
        f.changeable = true;
        match f.annotations.iter_mut().find(|x| x.source == GENMODEL) {
            Some(ann) => {
                ann.details.insert(SUPPRESSED_SET.into(), "true".into());
            }
            None => f.annotations.push(Annotation::new(GENMODEL).with(SUPPRESSED_SET, "true")),
        }
        Ok(())
    }
}

pub struct SuppressedSetToNotChangeable;

impl CoupledOperation for SuppressedSetToNotChangeable {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Suppressed Set Visibility to Not Changeable",
            params: vec![req("feature", ElementRef, "feature with a suppressed setter")],
            constraints: vec!["FeatureExists", "IsChangeable", "IsSuppressed"],
            documentation: "Replaces a suppressed setter by making the feature not changeable.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("feature");
        if let Some((_, f)) = feature(mm, &mut c, "FeatureExists", path) {
            c.check("IsChangeable", f.changeable, format!("`{path}` is not changeable"));
            c.check("IsSuppressed", suppressed(f), format!("`{path}` does not suppress its setter"));
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let f = mm.feature_mut(a.text("feature"))?;
        f.changeable = false;
        if let Some(ann) = f.annotations.iter_mut().find(|x| x.source == GENMODEL) {
            ann.details.remove(SUPPRESSED_SET);
        }
        f.annotations.retain(|x| x.source != GENMODEL || !x.details.is_empty());
        Ok(())
    }
}

pub struct PushDownFeature;

impl CoupledOperation for PushDownFeature {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Push Down Feature",
            params: vec![
                req("feature", ElementRef, "feature to push down"),
                req("targets", RefList, "direct subclasses that receive a copy"),
            ],
            constraints: vec!["FeatureExists", "TargetsAreDirectSubclasses", "NoOpposite", "FeatureNameClash"],
            documentation: "Moves a feature from a class into some of its direct subclasses.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("feature");
        let Some((owner, f)) = feature(mm, &mut c, "FeatureExists", path) else { return c.done() };
        let subs = mm.direct_subclasses(&owner);
        let targets = a.list("targets");
        let distinct = targets.iter().collect::<std::collections::BTreeSet<_>>().len() == targets.len();
        c.check(
            "TargetsAreDirectSubclasses",
            distinct && targets.iter().all(|t| subs.contains(t)),
            format!("targets must be distinct direct subclasses of `{owner}`"),
        );
        c.check("NoOpposite", f.opposite().is_none(), format!("`{path}` has an opposite"));
        // Removing from the owner first, a target may still inherit the name
        // through another path.
        let mut trial = mm.clone();
        let name = f.name.clone();
        if let Ok(k) = trial.class_mut(&owner) {
            k.features.retain(|x| x.name != name);
        }
        let clash: Vec<&String> =
            targets.iter().filter(|t| trial.class(t).is_some() && !trial.feature_name_free(t, &name)).collect();
        c.check("FeatureNameClash", clash.is_empty(), format!("`{name}` clashes in {clash:?}"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let path = a.text("feature");
        let (owner, name) = split_member(path).ok_or_else(|| MetaError::InvalidRef(path.to_string()))?;
        let f = mm.feature(path).cloned().ok_or_else(|| MetaError::DanglingRef(path.to_string()))?;
        mm.class_mut(owner)?.features.retain(|x| x.name != name);
        for t in a.list("targets") {
            mm.class_mut(t)?.features.push(f.clone());
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let path = a.text("feature");
        let (owner, name) = split_member(path).expect("checked");
        let targets = a.list("targets");
        let mut lost = Vec::new();
        for obj in ctx.instances_before(owner) {
            let o = ctx.set.object(&obj).expect("listed");
            let kept = targets.iter().any(|t| ctx.before.is_subtype(&o.class, t));
            if !kept && !o.get(name).is_empty() {
                lost.push(obj.to_string());
            }
        }
        if lost.is_empty() {
            Ok(())
        } else {
            Err(ctx.fail(
                MigrationFailure::ValueWouldBeLost,
                format!("values of `{name}` outside the targets: {}", lost.join(", ")),
            ))
        }
    }
}

pub struct SpecializeReferenceType;

impl CoupledOperation for SpecializeReferenceType {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Specialize Reference Type",
            params: vec![
                req("reference", ElementRef, "reference to narrow"),
                req("type", ElementRef, "strict subclass of the current type"),
            ],
            constraints: vec!["ReferenceExists", "TypeNotSpecialized", "NoOpposite"],
            documentation:
                "Narrows a reference's type to a subclass; every existing target must already be an instance of it.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (path, t) = (a.text("reference"), a.text("type"));
        let Some((_, f)) = reference(mm, &mut c, "ReferenceExists", path) else { return c.done() };
        c.check(
            "TypeNotSpecialized",
            mm.class(t).is_some() && t != f.type_ref() && mm.is_subtype(t, f.type_ref()),
            format!("`{t}` is not a strict subclass of `{}`", f.type_ref()),
        );
        c.check("NoOpposite", f.opposite().is_none(), format!("`{path}` has an opposite"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        mm.feature_mut(a.text("reference"))?.set_type_ref(a.text("type").to_string());
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let (path, t) = (a.text("reference"), a.text("type"));
        let (owner, name) = split_member(path).expect("checked");
        let mut offenders = Vec::new();
        for obj in ctx.instances_before(owner) {
            let o = ctx.set.object(&obj).expect("listed");
            for v in o.get(name) {
                let class = match v {
                    Value::Ref(r) => ctx.set.object(r).map(|x| x.class.clone()),
                    Value::Child(c) => Some(c.class.clone()),
                    _ => None,
                };
                if let Some(class) = class.filter(|c| !ctx.after.is_subtype(c, t)) {
                    let id = match v {
                        Value::Ref(r) => r.to_string(),
                        Value::Child(c) => ObjRef::new(obj.resource.clone(), c.id.clone()).to_string(),
                        _ => unreachable!(),
                    };
                    offenders.push(format!("{id} ({class})"));
                }
            }
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(ctx.fail(MigrationFailure::TypeViolation, format!("not instances of `{t}`: {}", offenders.join(", "))))
        }
    }
}

pub struct MakeFeatureVolatile;

impl CoupledOperation for MakeFeatureVolatile {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Make Feature Volatile",
            params: vec![req("feature", ElementRef, "feature whose values become derived")],
            constraints: vec!["FeatureExists", "NotVolatile", "NoOpposite"],
            documentation: "Makes a feature volatile and not changeable; stored values are deleted.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("feature");
        if let Some((_, f)) = feature(mm, &mut c, "FeatureExists", path) {
            c.check("NotVolatile", !f.volatile, format!("`{path}` already is volatile"));
            c.check("NoOpposite", f.opposite().is_none(), format!("`{path}` has an opposite"));
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let f = mm.feature_mut(a.text("feature"))?;
        f.volatile = true;
        f.changeable = false;
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let path = a.text("feature");
        drop_feature_slots(ctx, owner_of(path), split_member(path).expect("checked").1)?;
        ctx.ensure_lower_bounds()
    }
}
