//! Operations on classes and the inheritance hierarchy.

use super::util::{clashes, class, gained_features, lost_features, lost_supertypes, typed_refs, uninitializable};
use super::*;
use crate::meta::{package_of, Class, Classifier, MetaResult};
use crate::model::{MObject, Value};

use ParamType::*;

pub struct AddSuperType;

impl CoupledOperation for AddSuperType {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Add Super Type",
            params: vec![
                req("class", ElementRef, "class that gains the supertype"),
                req("supertype", ElementRef, "class to add as supertype"),
            ],
            constraints: vec![
                "ClassExists",
                "SupertypeExists",
                "NotAlreadySupertype",
                "NoCycle",
                "FeatureNameClash",
                "InheritedMandatoryInitializable",
            ],
            documentation: "Adds a supertype to a class; inherited optional features start unset.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, sup) = (a.text("class"), a.text("supertype"));
        let found = class(mm, &mut c, "ClassExists", cls);
        let found_sup = class(mm, &mut c, "SupertypeExists", sup);
        let (Some(k), Some(_)) = (found, found_sup) else { return c.done() };
        if !c.check(
            "NotAlreadySupertype",
            cls != sup && !k.supertypes.iter().any(|s| s == sup),
            format!("`{sup}` is already a supertype of `{cls}`"),
        ) {
            return c.done();
        }
        if !c.check("NoCycle", !mm.is_subtype(sup, cls), format!("`{sup}` is a subtype of `{cls}`")) {
            return c.done();
        }
        let mut trial = mm.clone();
        trial.class_mut(cls).expect("checked").supertypes.push(sup.to_string());
        let clash = clashes(&trial, &[cls.to_string()]);
        c.check("FeatureNameClash", clash.is_empty(), clash.join("; "));
        let missing = uninitializable(&gained_features(mm, &trial, cls));
        c.check(
            "InheritedMandatoryInitializable",
            missing.is_empty(),
            format!("mandatory features without default: {}", missing.join(", ")),
        );
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        mm.class_mut(a.text("class"))?.supertypes.push(a.text("supertype").to_string());
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let cls = a.text("class");
        let gained: Vec<Feature> = gained_features(ctx.before, ctx.after, cls).into_iter().cloned().collect();
        ctx.fill_defaults(cls, &gained.iter().collect::<Vec<_>>())
    }
}

pub struct RemoveSuperType;

impl CoupledOperation for RemoveSuperType {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Remove Super Type",
            params: vec![
                req("class", ElementRef, "class losing the supertype"),
                req("supertype", ElementRef, "direct supertype to remove"),
            ],
            constraints: vec!["ClassExists", "IsDirectSupertype", "NoTypingBreak"],
            documentation: "Removes a supertype; values of features no longer inherited are deleted.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, sup) = (a.text("class"), a.text("supertype"));
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        if !c.check(
            "IsDirectSupertype",
            k.supertypes.iter().any(|s| s == sup),
            format!("`{sup}` is not a direct supertype of `{cls}`"),
        ) {
            return c.done();
        }
        let refs = typed_refs(mm, &lost_supertypes(mm, cls, sup));
        c.check("NoTypingBreak", refs.is_empty(), format!("references typed by lost supertypes: {}", refs.join(", ")));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let sup = a.text("supertype");
        mm.class_mut(a.text("class"))?.supertypes.retain(|s| s != sup);
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        drop_unknown_slots(ctx, a.text("class"))?;
        ctx.ensure_lower_bounds()
    }
}

/// Drops slots of instances of `class` (and subclasses) whose feature is no
/// longer in the class's closure.
fn drop_unknown_slots(ctx: &mut MigrateCtx, class: &str) -> CatalogResult<()> {
    for obj in ctx.instances_before(class) {
        let o = ctx.set.object(&obj).expect("listed object");
        let keep: Vec<String> = ctx.after.all_features(&o.class).iter().map(|f| f.name.clone()).collect();
        let doomed: Vec<String> = o.slots.keys().filter(|k| !keep.contains(k)).cloned().collect();
        for f in doomed {
            ctx.drop_slot(&obj, &f)?;
        }
    }
    Ok(())
}

pub struct CreateClass;

impl CoupledOperation for CreateClass {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Create Class",
            params: vec![
                req("package", ElementRef, "package receiving the class"),
                req("name", Name, "name of the new class"),
                opt("supertypes", RefList, "supertypes of the new class"),
                opt("abstract", Flag, "whether the class is abstract"),
                opt("interface", Flag, "whether the class is an interface"),
            ],
            constraints: vec!["PackageExists", "NameFresh", "SupertypesExist", "FeatureNameClash"],
            documentation: "Creates a new, empty class.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let pkg = a.text("package");
        let name = a.text("name");
        let Some(p) = mm.package(pkg) else {
            c.check("PackageExists", false, format!("no package `{pkg}`"));
            return c.done();
        };
        c.check("PackageExists", true, "");
        c.check("NameFresh", !p.classifiers.iter().any(|k| k.name() == name), format!("`{pkg}.{name}` already exists"));
        let missing: Vec<&String> = a.list("supertypes").iter().filter(|s| mm.class(s).is_none()).collect();
        if !c.check("SupertypesExist", missing.is_empty(), format!("not classes: {missing:?}")) {
            return c.done();
        }
        let mut trial = mm.clone();
        let path = format!("{pkg}.{name}");
        if let Ok(p) = trial.package_mut(pkg) {
            let mut k = Class::new(name);
            k.supertypes = a.list("supertypes").to_vec();
            p.classifiers.push(Classifier::Class(k));
        }
        let clash = clashes(&trial, &[path]);
        c.check("FeatureNameClash", clash.is_empty(), clash.join("; "));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let mut k = Class::new(a.text("name"));
        k.supertypes = a.list("supertypes").to_vec();
        k.is_abstract = a.flag("abstract");
        k.is_interface = a.flag("interface");
        mm.package_mut(a.text("package"))?.classifiers.push(Classifier::Class(k));
        Ok(())
    }
}

pub struct ExtractSuperClass;

impl CoupledOperation for ExtractSuperClass {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Extract Super Class",
            params: vec![
                req("name", Name, "name of the new abstract superclass"),
                req("classes", RefList, "classes that get the new superclass"),
                req("features", NameList, "names of the features pulled up from every class"),
                opt("package", ElementRef, "package for the new class (default: that of the first class)"),
            ],
            constraints: vec![
                "ClassesExist",
                "NameFresh",
                "FeaturesPresent",
                "FeaturesEqual",
                "NoOpposites",
                "FeatureNameClash",
            ],
            documentation: "Creates an abstract superclass for several classes and pulls equal features up into it.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let classes = a.list("classes");
        let names = a.list("features");
        let distinct = classes.iter().collect::<std::collections::BTreeSet<_>>().len() == classes.len();
        let all_exist = !classes.is_empty() && distinct && classes.iter().all(|k| mm.class(k).is_some());
        if !c.check("ClassesExist", all_exist, "classes must be a non-empty list of distinct classes") {
            return c.done();
        }
        let pkg = a.opt_text("package").unwrap_or_else(|| package_of(&classes[0]));
        let path = format!("{pkg}.{}", a.text("name"));
        c.check(
            "NameFresh",
            mm.package(pkg).is_some() && mm.classifier(&path).is_none(),
            format!("`{path}` is not a fresh class name"),
        );
        let mut present = true;
        let mut equal = true;
        let mut opposites = Vec::new();
        for n in names {
            let found: Vec<Option<&Feature>> = classes.iter().map(|k| mm.class(k).and_then(|k| k.feature(n))).collect();
            if found.iter().any(Option::is_none) {
                present = false;
                continue;
            }
            let first = found[0].expect("present");
            equal &= found.iter().all(|f| f.expect("present").same_shape(first));
            if found.iter().any(|f| f.expect("present").opposite().is_some()) {
                opposites.push(n.clone());
            }
        }
        c.check("FeaturesPresent", present, "every listed feature must be owned by every listed class");
        c.check("FeaturesEqual", equal, "pulled-up features differ in type, bounds or flags");
        c.check("NoOpposites", opposites.is_empty(), format!("features with opposites: {}", opposites.join(", ")));
        if c.0.iter().any(|r| !r.satisfied) {
            return c.done();
        }
        let mut trial = mm.clone();
        let ok = self.adapt(&mut trial, a).is_ok();
        let clash = if ok { clashes(&trial, classes) } else { vec!["adaptation failed".into()] };
        c.check("FeatureNameClash", clash.is_empty(), clash.join("; "));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let classes = a.list("classes");
        let names = a.list("features");
        let pkg = a.opt_text("package").unwrap_or_else(|| package_of(&classes[0])).to_string();
        let name = a.text("name");
        let mut sup = Class::new(name);
        sup.is_abstract = true;
        for n in names {
            let f = mm
                .class(&classes[0])
                .and_then(|k| k.feature(n))
                .cloned()
                .ok_or_else(|| MetaError::DanglingRef(format!("{}.{n}", classes[0])))?;
            sup.features.push(f);
        }
        mm.package_mut(&pkg)?.classifiers.push(Classifier::Class(sup));
        for k in classes {
            let k = mm.class_mut(k)?;
            k.features.retain(|f| !names.contains(&f.name));
            k.supertypes.push(format!("{pkg}.{name}"));
        }
        Ok(())
    }
}

pub struct ExtractSubclass;

impl CoupledOperation for ExtractSubclass {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Extract Subclass",
            params: vec![
                req("class", ElementRef, "class to specialize"),
                req("name", Name, "name of the new subclass"),
                req("features", NameList, "own features moved into the subclass"),
            ],
            constraints: vec!["ClassExists", "NameFresh", "FeaturesOwned", "NoOpposites"],
            documentation: "Creates a subclass, moves features into it and re-types every direct instance to it.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let cls = a.text("class");
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        let path = format!("{}.{}", package_of(cls), a.text("name"));
        c.check("NameFresh", mm.classifier(&path).is_none(), format!("`{path}` already exists"));
        let missing: Vec<&String> = a.list("features").iter().filter(|n| k.feature(n).is_none()).collect();
        c.check("FeaturesOwned", missing.is_empty(), format!("not own features of `{cls}`: {missing:?}"));
        let opp: Vec<&String> =
            a.list("features").iter().filter(|n| k.feature(n).is_some_and(|f| f.opposite().is_some())).collect();
        c.check("NoOpposites", opp.is_empty(), format!("features with opposites: {opp:?}"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let cls = a.text("class");
        let names = a.list("features");
        let owner = mm.class_mut(cls)?;
        let mut sub = Class::new(a.text("name"));
        sub.supertypes.push(cls.to_string());
        for n in names {
            if let Some(pos) = owner.features.iter().position(|f| &f.name == n) {
                sub.features.push(owner.features.remove(pos));
            }
        }
        mm.package_mut(package_of(cls))?.classifiers.push(Classifier::Class(sub));
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let cls = a.text("class");
        let sub = format!("{}.{}", package_of(cls), a.text("name"));
        let names = a.list("features");
        let mut lost = Vec::new();
        for obj in ctx.instances_before(cls) {
            let o = ctx.set.object(&obj).expect("listed");
            if o.class != cls && names.iter().any(|n| !o.get(n).is_empty()) {
                lost.push(obj.to_string());
            }
        }
        if !lost.is_empty() {
            return Err(ctx.fail(
                MigrationFailure::ValueWouldBeLost,
                format!("subclass instances carry moved features: {}", lost.join(", ")),
            ));
        }
        for obj in ctx.direct_instances(cls) {
            ctx.obj_mut(&obj)?.class = sub.clone();
        }
        Ok(())
    }
}

pub struct InlineSuperClass;

impl CoupledOperation for InlineSuperClass {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Inline Super Class",
            params: vec![req("supertype", ElementRef, "abstract class to inline into its subclasses")],
            constraints: vec![
                "ClassExists",
                "IsAbstract",
                "HasSubclasses",
                "NotUsedAsType",
                "NoOpposites",
                "FeatureNameClash",
            ],
            documentation: "Copies the features of an abstract superclass into its direct subclasses and deletes it.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let sup = a.text("supertype");
        let Some(k) = class(mm, &mut c, "ClassExists", sup) else { return c.done() };
        c.check("IsAbstract", k.is_abstract, format!("`{sup}` is not abstract"));
        let subs = mm.direct_subclasses(sup);
        c.check("HasSubclasses", !subs.is_empty(), format!("`{sup}` has no subclasses"));
        let refs = typed_refs(mm, &[sup.to_string()]);
        c.check("NotUsedAsType", refs.is_empty(), format!("used as type by {}", refs.join(", ")));
        let opp: Vec<&str> = k.features.iter().filter(|f| f.opposite().is_some()).map(|f| f.name.as_str()).collect();
        c.check("NoOpposites", opp.is_empty(), format!("features with opposites: {}", opp.join(", ")));
        if c.0.iter().any(|r| !r.satisfied) {
            return c.done();
        }
        let mut trial = mm.clone();
        let clash = match self.adapt(&mut trial, a) {
            Ok(()) => clashes(&trial, &subs),
            Err(e) => vec![e.to_string()],
        };
        c.check("FeatureNameClash", clash.is_empty(), clash.join("; "));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let sup = a.text("supertype");
        let inlined = mm.class(sup).cloned().ok_or_else(|| MetaError::DanglingRef(sup.to_string()))?;
        for sub in mm.direct_subclasses(sup) {
            let k = mm.class_mut(&sub)?;
            let pos = k.supertypes.iter().position(|s| s == sup).expect("direct subclass");
            k.supertypes.remove(pos);
            let fresh: Vec<String> = inlined.supertypes.iter().filter(|s| !k.supertypes.contains(s)).cloned().collect();
            for (i, s) in fresh.into_iter().enumerate() {
                k.supertypes.insert(pos + i, s);
            }
            let mut features = inlined.features.clone();
            features.append(&mut k.features);
            k.features = features;
            let mut ops = inlined.operations.clone();
            ops.append(&mut k.operations);
            k.operations = ops;
        }
        let name = inlined.name.as_str();
        mm.package_mut(package_of(sup))?.classifiers.retain(|c| c.name() != name);
        Ok(())
    }
}

pub struct MakeAbstractWhenInterface;

impl CoupledOperation for MakeAbstractWhenInterface {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Make Class Abstract when Interface",
            params: vec![req("class", ElementRef, "interface class to make abstract")],
            constraints: vec!["ClassExists", "IsInterface", "NotAbstract"],
            documentation: "Marks an interface class abstract; fails at migration time if it has direct instances.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let cls = a.text("class");
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        c.check("IsInterface", k.is_interface, format!("`{cls}` is not an interface"));
        c.check("NotAbstract", !k.is_abstract, format!("`{cls}` is already abstract"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        mm.class_mut(a.text("class"))?.is_abstract = true;
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let direct = ctx.direct_instances(a.text("class"));
        if direct.is_empty() {
            return Ok(());
        }
        let names: Vec<String> = direct.iter().map(|r| r.to_string()).collect();
        Err(ctx.fail(MigrationFailure::DirectInstances, format!("direct instances exist: {}", names.join(", "))))
    }
}

pub struct SpecializeSuperType;

impl CoupledOperation for SpecializeSuperType {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Specialize Super Type",
            params: vec![
                req("class", ElementRef, "class whose supertype is specialized"),
                req("supertype", ElementRef, "current direct supertype"),
                req("newSupertype", ElementRef, "subclass of the current supertype"),
            ],
            constraints: vec![
                "ClassExists",
                "IsDirectSupertype",
                "IsStrictSubclass",
                "NoCycle",
                "FeatureNameClash",
                "InheritedMandatoryInitializable",
            ],
            documentation: "Replaces a supertype by one of its subclasses.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, sup, new) = (a.text("class"), a.text("supertype"), a.text("newSupertype"));
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        c.check(
            "IsDirectSupertype",
            k.supertypes.iter().any(|s| s == sup),
            format!("`{sup}` is not a direct supertype of `{cls}`"),
        );
        c.check(
            "IsStrictSubclass",
            mm.class(new).is_some() && new != sup && mm.is_subtype(new, sup),
            format!("`{new}` is not a strict subclass of `{sup}`"),
        );
        c.check("NoCycle", !mm.is_subtype(new, cls), format!("`{new}` is a subtype of `{cls}`"));
        if c.0.iter().any(|r| !r.satisfied) {
            return c.done();
        }
        let mut trial = mm.clone();
        let _ = self.adapt(&mut trial, a);
        let clash = clashes(&trial, &[cls.to_string()]);
        c.check("FeatureNameClash", clash.is_empty(), clash.join("; "));
        let missing = uninitializable(&gained_features(mm, &trial, cls));
        c.check(
            "InheritedMandatoryInitializable",
            missing.is_empty(),
            format!("mandatory features without default: {}", missing.join(", ")),
        );
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let (sup, new) = (a.text("supertype"), a.text("newSupertype"));
        let k = mm.class_mut(a.text("class"))?;
        for s in &mut k.supertypes {
            if s == sup {
                *s = new.to_string();
            }
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let cls = a.text("class");
        let gained: Vec<Feature> = gained_features(ctx.before, ctx.after, cls).into_iter().cloned().collect();
        ctx.fill_defaults(cls, &gained.iter().collect::<Vec<_>>())
    }
}

pub struct UnfoldSuperClass;

impl UnfoldSuperClass {
    /// Features that must be copied so the class keeps its closure.
    fn copied(mm: &Metamodel, cls: &str, sup: &str) -> Vec<Feature> {
        lost_features(mm, cls, &lost_supertypes(mm, cls, sup)).into_iter().map(|(_, f)| f.clone()).collect()
    }
}

impl CoupledOperation for UnfoldSuperClass {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Unfold Super Class",
            params: vec![
                req("class", ElementRef, "class that absorbs the supertype's features"),
                req("supertype", ElementRef, "direct supertype to unfold"),
            ],
            constraints: vec!["ClassExists", "IsDirectSupertype", "NoTypingBreak", "NoOpposites"],
            documentation: "Copies a supertype's features into a class and removes the inheritance link.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, sup) = (a.text("class"), a.text("supertype"));
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        if !c.check(
            "IsDirectSupertype",
            k.supertypes.iter().any(|s| s == sup),
            format!("`{sup}` is not a direct supertype of `{cls}`"),
        ) {
            return c.done();
        }
        let refs = typed_refs(mm, &lost_supertypes(mm, cls, sup));
        c.check("NoTypingBreak", refs.is_empty(), format!("references typed by unfolded classes: {}", refs.join(", ")));
        let opp: Vec<String> =
            Self::copied(mm, cls, sup).into_iter().filter(|f| f.opposite().is_some()).map(|f| f.name).collect();
        c.check("NoOpposites", opp.is_empty(), format!("features with opposites: {}", opp.join(", ")));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let (cls, sup) = (a.text("class"), a.text("supertype"));
        let mut copied = Self::copied(mm, cls, sup);
        let k = mm.class_mut(cls)?;
        k.supertypes.retain(|s| s != sup);
        copied.append(&mut k.features);
        k.features = copied;
        Ok(())
    }
}

pub struct InheritanceToDelegation;

impl CoupledOperation for InheritanceToDelegation {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Inheritance to Delegation",
            params: vec![
                req("class", ElementRef, "class that stops inheriting"),
                req("supertype", ElementRef, "direct supertype turned into a delegate"),
                req("referenceName", Name, "name of the new containment reference to the delegate"),
            ],
            constraints: vec![
                "ClassExists",
                "IsDirectSupertype",
                "SupertypeConcrete",
                "ReferenceNameFree",
                "NoTypingBreak",
                "NoOpposites",
            ],
            documentation: "Replaces inheritance by a mandatory containment reference to a delegate object.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, sup, name) = (a.text("class"), a.text("supertype"), a.text("referenceName"));
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        if !c.check(
            "IsDirectSupertype",
            k.supertypes.iter().any(|s| s == sup),
            format!("`{sup}` is not a direct supertype of `{cls}`"),
        ) {
            return c.done();
        }
        c.check("SupertypeConcrete", mm.class(sup).is_some_and(|s| !s.is_abstract), format!("`{sup}` is abstract"));
        let mut trial = mm.clone();
        trial.class_mut(cls).expect("checked").supertypes.retain(|s| s != sup);
        c.check(
            "ReferenceNameFree",
            // Delegated slots keep their keys until moved, so the name must
            // be free before the link goes too.
            !name.is_empty() && mm.feature_name_free(cls, name) && trial.feature_name_free(cls, name),
            format!("`{name}` clashes with a feature of `{cls}` or its subclasses"),
        );
        let lost = lost_supertypes(mm, cls, sup);
        let refs = typed_refs(mm, &lost);
        c.check("NoTypingBreak", refs.is_empty(), format!("references typed by lost supertypes: {}", refs.join(", ")));
        let opp: Vec<String> = lost_features(mm, cls, &lost)
            .into_iter()
            .filter(|(_, f)| f.opposite().is_some())
            .map(|(_, f)| f.name.clone())
            .collect();
        c.check("NoOpposites", opp.is_empty(), format!("delegated features with opposites: {}", opp.join(", ")));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let (cls, sup) = (a.text("class"), a.text("supertype"));
        let k = mm.class_mut(cls)?;
        k.supertypes.retain(|s| s != sup);
        k.features.push(Feature::reference(a.text("referenceName"), sup, 1, Upper::Bounded(1), true));
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let (cls, sup, name) = (a.text("class"), a.text("supertype"), a.text("referenceName"));
        for obj in ctx.instances_before(cls) {
            let class_name = ctx.set.object(&obj).expect("listed").class.clone();
            let keep: Vec<String> = ctx.after.all_features(&class_name).iter().map(|f| f.name.clone()).collect();
            let id = ctx.set.fresh_id(&obj.resource, &format!("{}_{name}", obj.id));
            let o = ctx.obj_mut(&obj)?;
            let moved: Vec<String> = o.slots.keys().filter(|k| !keep.contains(k)).cloned().collect();
            let mut delegate = MObject::new(id, sup);
            for k in moved {
                let values = o.unset(&k);
                delegate.set(&k, values);
            }
            o.set(name, vec![Value::Child(Box::new(delegate))]);
        }
        Ok(())
    }
}
