//! Enumerations, and the conversions between enumeration attributes and
//! subclass hierarchies.

use std::collections::BTreeSet;

use super::util::{attribute, class};
use super::*;
use crate::meta::{package_of, split_member, Class, Enumeration, FeatureKind, MetaResult};

use ParamType::*;

pub struct CreateEnumeration;

impl CoupledOperation for CreateEnumeration {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Create Enumeration",
            params: vec![
                req("package", ElementRef, "package receiving the enumeration"),
                req("name", Name, "enumeration name"),
                opt("literals", NameList, "literals in order"),
            ],
            constraints: vec!["PackageExists", "NameFresh", "LiteralsUnique"],
            documentation: "Creates a new enumeration.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (pkg, name) = (a.text("package"), a.text("name"));
        let Some(p) = mm.package(pkg) else {
            c.check("PackageExists", false, format!("no package `{pkg}`"));
            return c.done();
        };
        c.check("PackageExists", true, "");
        c.check("NameFresh", !p.classifiers.iter().any(|k| k.name() == name), format!("`{pkg}.{name}` already exists"));
        let lits = a.list("literals");
        let unique = lits.iter().collect::<BTreeSet<_>>().len() == lits.len();
        c.check("LiteralsUnique", unique, "literals must be distinct");
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let e = Enumeration {
            name: a.text("name").to_string(),
            literals: a.list("literals").to_vec(),
            annotations: Vec::new(),
        };
        mm.package_mut(a.text("package"))?.classifiers.push(Classifier::Enum(e));
        Ok(())
    }
}

pub struct ReplaceEnumeration;

impl CoupledOperation for ReplaceEnumeration {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Replace Enumeration",
            params: vec![
                req("attribute", ElementRef, "enumeration-typed attribute"),
                req("enumeration", ElementRef, "replacement enumeration"),
                req("mapping", LiteralMap, "old literal to new literal"),
            ],
            constraints: vec!["AttributeExists", "IsEnumTyped", "TargetIsEnumeration", "MappingValid", "DefaultMapped"],
            documentation: "Retypes an attribute to another enumeration and maps every stored literal.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (path, target) = (a.text("attribute"), a.text("enumeration"));
        let Some((_, f)) = attribute(mm, &mut c, "AttributeExists", path) else { return c.done() };
        let Some(from) = mm.enumeration(f.type_ref()) else {
            c.check("IsEnumTyped", false, format!("`{path}` is not typed by an enumeration"));
            return c.done();
        };
        c.check("IsEnumTyped", true, "");
        let Some(to) = mm.enumeration(target).filter(|_| target != f.type_ref()) else {
            c.check("TargetIsEnumeration", false, format!("`{target}` is not another enumeration"));
            return c.done();
        };
        c.check("TargetIsEnumeration", true, "");
        let map = a.map("mapping").cloned().unwrap_or_default();
        let bad: Vec<String> = map
            .iter()
            .filter(|(k, v)| !from.literals.contains(k) || !to.literals.contains(v))
            .map(|(k, v)| format!("{k}:{v}"))
            .collect();
        c.check(
            "MappingValid",
            bad.is_empty(),
            format!("pairs not from `{}` to `{target}`: {}", f.type_ref(), bad.join(", ")),
        );
        let default = match f.default_value() {
            Some(crate::meta::Literal::Str(d)) => Some(d),
            _ => None,
        };
        c.check("DefaultMapped", default.is_none_or(|d| map.contains_key(d)), "the default literal is not mapped");
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let map = a.map("mapping").cloned().unwrap_or_default();
        let f = mm.feature_mut(a.text("attribute"))?;
        f.set_type_ref(a.text("enumeration").to_string());
        if let FeatureKind::Attribute { default_value: Some(crate::meta::Literal::Str(d)), .. } = &mut f.kind {
            if let Some(n) = map.get(d.as_str()) {
                *d = n.clone();
            }
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let path = a.text("attribute");
        let (owner, name) = split_member(path).expect("checked");
        let map = a.map("mapping").cloned().unwrap_or_default();
        for obj in ctx.instances_before(owner) {
            let o = ctx.obj_mut(&obj)?;
            let mut gap = None;
            if let Some(values) = o.slots.get_mut(name) {
                for v in values {
                    if let Value::Enum(l) = v {
                        match map.get(l.as_str()) {
                            Some(n) => *l = n.clone(),
                            None => gap = Some(l.clone()),
                        }
                    }
                }
            }
            if let Some(l) = gap {
                return Err(
                    ctx.fail(MigrationFailure::UnmappedLiteral, format!("`{obj}` holds unmapped literal `{l}`"))
                );
            }
        }
        Ok(())
    }
}

fn subclass_name(class: &str, literal: &str) -> String {
    let simple = class.rsplit('.').next().unwrap_or(class);
    format!("{}.{simple}_{literal}", package_of(class))
}

pub struct EnumerationToSubClasses;

impl CoupledOperation for EnumerationToSubClasses {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Enumeration to Sub Classes",
            params: vec![
                req("class", ElementRef, "class owning the attribute"),
                req("attribute", ElementRef, "single-valued enumeration attribute to replace"),
            ],
            constraints: vec![
                "ClassExists",
                "AttributeOwned",
                "IsEnumTyped",
                "HasLiterals",
                "SingleValued",
                "NoSubclasses",
                "SubclassNamesFree",
            ],
            documentation: "Replaces an enumeration attribute by one subclass per literal and re-types instances.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (cls, path) = (a.text("class"), a.text("attribute"));
        if class(mm, &mut c, "ClassExists", cls).is_none() {
            return c.done();
        }
        let owned = split_member(path).is_some_and(|(o, _)| o == cls);
        let found = mm.feature(path).filter(|f| owned && !f.is_reference());
        let Some(f) = found else {
            c.check("AttributeOwned", false, format!("`{path}` is not an attribute of `{cls}`"));
            return c.done();
        };
        c.check("AttributeOwned", true, "");
        let Some(e) = mm.enumeration(f.type_ref()) else {
            c.check("IsEnumTyped", false, format!("`{path}` is not typed by an enumeration"));
            return c.done();
        };
        c.check("IsEnumTyped", true, "");
        c.check("HasLiterals", !e.literals.is_empty(), format!("`{}` has no literals", f.type_ref()));
        c.check("SingleValued", f.upper == Upper::Bounded(1), format!("`{path}` is multi-valued"));
        c.check("NoSubclasses", mm.direct_subclasses(cls).is_empty(), format!("`{cls}` already has subclasses"));
        let taken: Vec<String> =
            e.literals.iter().map(|l| subclass_name(cls, l)).filter(|n| mm.classifier(n).is_some()).collect();
        c.check("SubclassNamesFree", taken.is_empty(), format!("already defined: {}", taken.join(", ")));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let (cls, path) = (a.text("class"), a.text("attribute"));
        let (_, name) = split_member(path).ok_or_else(|| MetaError::InvalidRef(path.to_string()))?;
        let ty = mm
            .feature(path)
            .map(|f| f.type_ref().to_string())
            .ok_or_else(|| MetaError::DanglingRef(path.to_string()))?;
        let literals = mm.enumeration(&ty).map(|e| e.literals.clone()).unwrap_or_default();
        let k = mm.class_mut(cls)?;
        k.features.retain(|f| f.name != name);
        k.is_abstract = true;
        let pkg = mm.package_mut(package_of(cls))?;
        for l in literals {
            let full = subclass_name(cls, &l);
            let mut sub = Class::new(full.rsplit('.').next().unwrap_or(&full));
            sub.supertypes.push(cls.to_string());
            pkg.classifiers.push(Classifier::Class(sub));
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let (cls, path) = (a.text("class"), a.text("attribute"));
        let (_, name) = split_member(path).expect("checked");
        let default = match ctx.before.feature(path).and_then(|f| f.default_value()) {
            Some(crate::meta::Literal::Str(d)) => Some(d.clone()),
            _ => None,
        };
        for obj in ctx.direct_instances(cls) {
            let o = ctx.obj_mut(&obj)?;
            let value = match o.unset(name).first() {
                Some(Value::Enum(l)) => Some(l.clone()),
                _ => default.clone(),
            };
            let Some(l) = value else {
                return Err(ctx
                    .fail(MigrationFailure::MissingValue, format!("`{obj}` has no `{name}` and there is no default")));
            };
            o.class = subclass_name(cls, &l);
        }
        Ok(())
    }
}

pub struct SubClassesToEnumeration;

impl SubClassesToEnumeration {
    /// (subclass path, literal) pairs in declaration order.
    fn literals(mm: &Metamodel, cls: &str) -> Vec<(String, String)> {
        let simple = cls.rsplit('.').next().unwrap_or(cls);
        let prefix = format!("{simple}_");
        mm.direct_subclasses(cls)
            .into_iter()
            .map(|s| {
                let name = s.rsplit('.').next().unwrap_or(&s);
                let lit = name.strip_prefix(&prefix).filter(|l| !l.is_empty()).unwrap_or(name).to_string();
                (s, lit)
            })
            .collect()
    }

    fn enum_path(cls: &str, a: &ArgView) -> String {
        match a.opt_text("enumeration") {
            Some(e) if e.contains('.') => e.to_string(),
            Some(e) => format!("{}.{e}", package_of(cls)),
            None => {
                let attr = a.text("attributeName");
                let mut cap = attr.chars();
                let cap: String = cap.next().map(|c| c.to_uppercase().chain(cap).collect()).unwrap_or_default();
                format!("{cls}{cap}")
            }
        }
    }
}

impl CoupledOperation for SubClassesToEnumeration {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Sub Classes to Enumeration",
            params: vec![
                req("class", ElementRef, "abstract class whose subclasses become literals"),
                req("attributeName", Name, "name of the new enumeration attribute"),
                opt("enumeration", ElementRef, "enumeration to create or reuse (default: class name + attribute name)"),
            ],
            constraints: vec![
                "ClassExists",
                "IsAbstract",
                "HasSubclasses",
                "SubclassesAreLeaves",
                "SubclassesFeatureless",
                "SubclassesNotReferenced",
                "LiteralsUnique",
                "FeatureNameClash",
                "EnumerationCompatible",
            ],
            documentation: "Replaces featureless leaf subclasses by an enumeration attribute and re-types instances.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let cls = a.text("class");
        let Some(k) = class(mm, &mut c, "ClassExists", cls) else { return c.done() };
        c.check("IsAbstract", k.is_abstract, format!("`{cls}` is not abstract"));
        let pairs = Self::literals(mm, cls);
        if !c.check("HasSubclasses", !pairs.is_empty(), format!("`{cls}` has no subclasses")) {
            return c.done();
        }
        let subs: Vec<&Class> = pairs.iter().filter_map(|(s, _)| mm.class(s)).collect();
        let not_leaf: Vec<&str> = pairs
            .iter()
            .zip(&subs)
            .filter(|((s, _), k)| !mm.direct_subclasses(s).is_empty() || k.supertypes.len() != 1)
            .map(|((s, _), _)| s.as_str())
            .collect();
        c.check(
            "SubclassesAreLeaves",
            not_leaf.is_empty(),
            format!("not leaves with a single supertype: {}", not_leaf.join(", ")),
        );
        let featured: Vec<&str> = subs
            .iter()
            .filter(|k| !k.features.is_empty() || !k.operations.is_empty())
            .map(|k| k.name.as_str())
            .collect();
        c.check(
            "SubclassesFeatureless",
            featured.is_empty(),
            format!("subclasses with own features: {}", featured.join(", ")),
        );
        let used: Vec<String> = pairs.iter().flat_map(|(s, _)| util::typed_refs(mm, std::slice::from_ref(s))).collect();
        c.check("SubclassesNotReferenced", used.is_empty(), format!("used as reference types by {}", used.join(", ")));
        let lits: Vec<&String> = pairs.iter().map(|(_, l)| l).collect();
        c.check("LiteralsUnique", lits.iter().collect::<BTreeSet<_>>().len() == lits.len(), "derived literals collide");
        let attr = a.text("attributeName");
        c.check(
            "FeatureNameClash",
            mm.feature_name_free(cls, attr),
            format!("`{attr}` already used in the hierarchy of `{cls}`"),
        );
        let path = Self::enum_path(cls, a);
        let compatible = match mm.classifier(&path) {
            None => mm.package(package_of(&path)).is_some(),
            Some(Classifier::Enum(e)) => e.literals.iter().eq(lits.iter().copied()),
            Some(_) => false,
        };
        c.check(
            "EnumerationCompatible",
            compatible,
            format!("`{path}` exists with different literals or is not an enumeration"),
        );
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let cls = a.text("class");
        let pairs = Self::literals(mm, cls);
        let path = Self::enum_path(cls, a);
        if mm.classifier(&path).is_none() {
            let e = Enumeration {
                name: path.rsplit('.').next().unwrap_or(&path).to_string(),
                literals: pairs.iter().map(|(_, l)| l.clone()).collect(),
                annotations: Vec::new(),
            };
            mm.package_mut(package_of(&path))?.classifiers.push(Classifier::Enum(e));
        }
        let k = mm.class_mut(cls)?;
        k.is_abstract = false;
        k.features.push(Feature::attribute(a.text("attributeName"), &path, 1, Upper::Bounded(1)));
        for (s, _) in &pairs {
            let name = s.rsplit('.').next().unwrap_or(s).to_string();
            mm.package_mut(package_of(s))?.classifiers.retain(|c| c.name() != name);
        }
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let cls = a.text("class");
        let attr = a.text("attributeName");
        for (sub, lit) in Self::literals(ctx.before, cls) {
            for obj in ctx.direct_instances(&sub) {
                let o = ctx.obj_mut(&obj)?;
                o.class = cls.to_string();
                o.set(attr, vec![Value::Enum(lit.clone())]);
            }
        }
        Ok(())
    }
}
