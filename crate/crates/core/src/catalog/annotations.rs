//! Annotation edits and the namespace URI. Except for the namespace URI
//! change, none of these touch instances.

use super::*;
use crate::meta::{annotation, Annotation, Element, ElementRef as Path, MetaResult};

use ParamType::*;

const DOCUMENTATION: &str = "documentation";
const GMF_CONSTRAINT: &str = "gmf.constraint";

/// Annotations of an annotatable element; enumeration literals are not.
fn annotations_of<'a>(mm: &'a Metamodel, path: &str) -> Option<&'a [Annotation]> {
    match mm.resolve(&Path::new(path)).ok()? {
        Element::Literal(..) => None,
        e => Some(e.annotations()),
    }
}

fn element<'a>(mm: &'a Metamodel, c: &mut Checks, name: &str, path: &str) -> Option<&'a [Annotation]> {
    let found = annotations_of(mm, path);
    c.check(name, found.is_some(), format!("`{path}` is not an annotatable element"));
    found
}

/// Sets `key` of the annotation `source`, creating the annotation if needed.
fn put_detail(mm: &mut Metamodel, path: &str, source: &str, key: &str, value: &str) -> MetaResult<()> {
    let list = mm.annotations_mut(&Path::new(path))?;
    match list.iter_mut().find(|a| a.source == source) {
        Some(a) => {
            a.details.insert(key.to_string(), value.to_string());
        }
        None => list.push(Annotation::new(source).with(key, value)),
    }
    Ok(())
}

pub struct DocumentElement;

impl CoupledOperation for DocumentElement {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Document Metamodel Element",
            params: vec![
                req("element", ElementRef, "element to document"),
                req("documentation", Text, "documentation text"),
            ],
            constraints: vec!["ElementExists"],
            documentation: "Sets or replaces the documentation of a metamodel element.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        element(mm, &mut c, "ElementExists", a.text("element"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        put_detail(mm, a.text("element"), DOCUMENTATION, "value", a.text("documentation"))
    }
}

pub struct ChangeNamespaceUri;

impl CoupledOperation for ChangeNamespaceUri {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Change Namespace URI",
            params: vec![req("package", ElementRef, "package to renumber"), req("newUri", Text, "new namespace URI")],
            constraints: vec!["PackageExists", "UriNonEmpty", "UriChanged", "UriUnique"],
            documentation: "Replaces a package's namespace URI and rewrites the headers of all model files.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (pkg, uri) = (a.text("package"), a.text("newUri"));
        let Some(p) = mm.package(pkg) else {
            c.check("PackageExists", false, format!("no package `{pkg}`"));
            return c.done();
        };
        c.check("PackageExists", true, "");
        c.check("UriNonEmpty", !uri.trim().is_empty(), "the namespace URI is empty");
        c.check("UriChanged", p.ns_uri != uri, format!("`{pkg}` already has namespace URI `{uri}`"));
        let taken = mm.packages.iter().any(|q| q.name != p.name && q.ns_uri == uri);
        c.check("UriUnique", !taken, format!("`{uri}` is used by another package"));
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        mm.package_mut(a.text("package"))?.ns_uri = a.text("newUri").to_string();
        Ok(())
    }

    fn migrate(&self, ctx: &mut MigrateCtx, a: &ArgView) -> CatalogResult<()> {
        let old = ctx.before.package(a.text("package")).map(|p| p.ns_uri.as_str());
        if old == Some(ctx.set.ns_uri.as_str()) {
            ctx.set.ns_uri = a.text("newUri").to_string();
        }
        Ok(())
    }
}

pub struct CreateAnnotation;

impl CoupledOperation for CreateAnnotation {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Create Annotation",
            params: vec![
                req("element", ElementRef, "annotated element"),
                req("source", Text, "annotation source"),
                opt("details", LiteralMap, "annotation details"),
            ],
            constraints: vec!["ElementExists", "SourceNonEmpty", "SourceFree"],
            documentation: "Adds an annotation to a metamodel element.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (path, source) = (a.text("element"), a.text("source"));
        let Some(list) = element(mm, &mut c, "ElementExists", path) else { return c.done() };
        c.check("SourceNonEmpty", !source.is_empty(), "the annotation source is empty");
        c.check(
            "SourceFree",
            annotation(list, source).is_none(),
            format!("`{path}` already has a `{source}` annotation"),
        );
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let mut ann = Annotation::new(a.text("source"));
        if let Some(details) = a.map("details") {
            ann.details = details.clone();
        }
        mm.annotations_mut(&Path::new(a.text("element")))?.push(ann);
        Ok(())
    }
}

pub struct DeleteAnnotation;

impl CoupledOperation for DeleteAnnotation {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Delete Annotation",
            params: vec![
                req("element", ElementRef, "annotated element"),
                req("source", Text, "source of the annotation to delete"),
            ],
            constraints: vec!["ElementExists", "AnnotationExists"],
            documentation: "Removes an annotation from a metamodel element.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (path, source) = (a.text("element"), a.text("source"));
        let Some(list) = element(mm, &mut c, "ElementExists", path) else { return c.done() };
        c.check(
            "AnnotationExists",
            annotation(list, source).is_some(),
            format!("`{path}` has no `{source}` annotation"),
        );
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let source = a.text("source");
        mm.annotations_mut(&Path::new(a.text("element")))?.retain(|x| x.source != source);
        Ok(())
    }
}

pub struct MoveAnnotation;

impl CoupledOperation for MoveAnnotation {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Move Annotation",
            params: vec![
                req("element", ElementRef, "element currently carrying the annotation"),
                req("source", Text, "source of the annotation to move"),
                req("target", ElementRef, "element receiving the annotation"),
            ],
            constraints: vec!["ElementExists", "AnnotationExists", "TargetExists", "SourceFreeAtTarget"],
            documentation: "Moves an annotation, with its details, to another element.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let (path, source, target) = (a.text("element"), a.text("source"), a.text("target"));
        if let Some(list) = element(mm, &mut c, "ElementExists", path) {
            c.check(
                "AnnotationExists",
                annotation(list, source).is_some(),
                format!("`{path}` has no `{source}` annotation"),
            );
        }
        if let Some(list) = element(mm, &mut c, "TargetExists", target) {
            c.check(
                "SourceFreeAtTarget",
                path == target || annotation(list, source).is_none(),
                format!("`{target}` already has a `{source}` annotation"),
            );
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        let source = a.text("source");
        let list = mm.annotations_mut(&Path::new(a.text("element")))?;
        let pos = list
            .iter()
            .position(|x| x.source == source)
            .ok_or_else(|| MetaError::DanglingRef(format!("{} annotation `{source}`", a.text("element"))))?;
        let ann = list.remove(pos);
        mm.annotations_mut(&Path::new(a.text("target")))?.push(ann);
        Ok(())
    }
}

pub struct CreateGmfConstraint;

impl CoupledOperation for CreateGmfConstraint {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Create GMF Constraint",
            params: vec![req("element", ElementRef, "constrained element"), req("body", Text, "constraint expression")],
            constraints: vec!["ElementExists", "NoConstraintYet"],
            documentation: "Attaches a GMF constraint expression to a metamodel element.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("element");
        if let Some(list) = element(mm, &mut c, "ElementExists", path) {
            c.check(
                "NoConstraintYet",
                annotation(list, GMF_CONSTRAINT).is_none(),
                format!("`{path}` already has a GMF constraint"),
            );
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        put_detail(mm, a.text("element"), GMF_CONSTRAINT, "body", a.text("body"))
    }
}

pub struct ChangeGmfConstraint;

impl CoupledOperation for ChangeGmfConstraint {
    fn spec(&self) -> OperationSpec {
        OperationSpec {
            name: "Change GMF Constraint",
            params: vec![
                req("element", ElementRef, "constrained element"),
                req("body", Text, "new constraint expression"),
            ],
            constraints: vec!["ElementExists", "ConstraintExists"],
            documentation: "Replaces the expression of an existing GMF constraint.",
        }
    }

    fn check(&self, mm: &Metamodel, a: &ArgView) -> Vec<ConstraintResult> {
        let mut c = Checks::default();
        let path = a.text("element");
        if let Some(list) = element(mm, &mut c, "ElementExists", path) {
            c.check(
                "ConstraintExists",
                annotation(list, GMF_CONSTRAINT).is_some(),
                format!("`{path}` has no GMF constraint"),
            );
        }
        c.done()
    }

    fn adapt(&self, mm: &mut Metamodel, a: &ArgView) -> MetaResult<()> {
        put_detail(mm, a.text("element"), GMF_CONSTRAINT, "body", a.text("body"))
    }
}
