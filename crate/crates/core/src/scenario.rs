//! A miniature graphical-definition metamodel evolved over three releases,
//! with the two custom migrations its evolution needs. The fixture files
//! live under `fixtures/minigmf`; this module records the history and
//! provides the hooks.

use crate::catalog::OperationApplication;
use crate::history::{History, HistoryResult, NewElement, Primitive};
use crate::meta::{Class, Classifier, ElementRef, Feature, Literal, Metamodel, Upper};
use crate::migrate::{HookContext, HookRegistry};
use crate::model::{Placement, Value};

pub const NAME: &str = "minigmf";

pub const URI_1_0: &str = "http://www.eclipse.org/gmf/2005/GraphicalDefinition";
pub const URI_2_0: &str = "http://www.eclipse.org/gmf/2006/GraphicalDefinition";
pub const URI_2_1: &str = "http://www.eclipse.org/gmf/2008/GraphicalDefinition";

pub const INIT_TYPED_FIGURE: &str = "init_typed_figure";
pub const DECOUPLE_FIGURES: &str = "decouple_figures";

/// Class name given to figures created for accessors that had none.
pub const DEFAULT_FIGURE_CLASS: &str = "org.eclipse.draw2d.IFigure";

const P: &str = "gmfgraph";

fn q(name: &str) -> String {
    format!("{P}.{name}")
}

fn op(name: &str) -> OperationApplication {
    OperationApplication::new(name)
}

/// Records the evolution from the 1.0 metamodel to 2.1, sealing releases
/// "1.0", "2.0" and "2.1".
pub fn build_history(v1: &Metamodel) -> HistoryResult<History> {
    let mut h = History::create(v1)?;
    h.release("1.0", true)?;

    h.record(op("Change Namespace URI").arg("package", P).arg("newUri", URI_2_0))?;
    h.record(
        op("Extract Super Class")
            .arg("name", "Identity")
            .arg("classes", vec![q("Canvas"), q("FigureGallery"), q("Figure")])
            .arg("features", vec!["name"]),
    )?;
    h.record(
        op("Document Metamodel Element")
            .arg("element", q("Identity"))
            .arg("documentation", "An element with a unique name."),
    )?;
    for c in ["Layoutable", "Decoratable", "DecorationFigure"] {
        h.record(op("Make Class Abstract when Interface").arg("class", q(c)))?;
    }
    for c in ["Node", "Compartment"] {
        h.record(op("Add Super Type").arg("class", q(c)).arg("supertype", q("Layoutable")))?;
    }
    h.record(op("Remove Super Type").arg("class", q("Connection")).arg("supertype", q("Decoratable")))?;
    h.record(op("Inline Super Class").arg("supertype", q("Shape")))?;
    h.record(op("Generalize Attribute").arg("attribute", q("Rectangle.lineWidth")).arg("type", q("Float")))?;
    h.record(
        op("Specialize Super Type")
            .arg("class", q("PolylineDecoration"))
            .arg("supertype", q("Figure"))
            .arg("newSupertype", q("DecorationFigure")),
    )?;
    h.record(
        op("Specialize Reference Type")
            .arg("reference", q("Connection.sourceDecoration"))
            .arg("type", q("DecorationFigure")),
    )?;
    h.record(op("Make Reference Containment").arg("reference", q("CustomFigure.customChildren")))?;
    h.record(op("Delete Feature").arg("feature", q("FigureGallery.accessors")))?;
    h.record(op("Delete Feature").arg("feature", q("Node.resizeConstraint")))?;
    h.record(op("Delete Operation").arg("operation", q("Figure.getFigureName")))?;
    h.record(op("Drop Attribute Identifier").arg("attribute", q("CustomFigure.qualifiedClassName")))?;
    h.record(
        op("Not Changeable to Suppressed Set Visibility").arg("feature", q("FigureGallery.implementationBundle")),
    )?;
    h.record(op("Create Class").arg("package", P).arg("name", "VisualFacet").arg("abstract", true))?;
    h.record(
        op("Create Class").arg("package", P).arg("name", "GeneralFacet").arg("supertypes", vec![q("VisualFacet")]),
    )?;
    h.record(
        op("Create Reference")
            .arg("class", q("DiagramElement"))
            .arg("name", "facets")
            .arg("type", q("VisualFacet"))
            .arg("upper", -1)
            .arg("containment", true),
    )?;
    h.record(op("Create Attribute").arg("class", q("GeneralFacet")).arg("name", "data").arg("type", q("String")))?;
    h.record(
        op("Create Attribute")
            .arg("class", q("Compartment"))
            .arg("name", "needsTitle")
            .arg("type", q("Boolean"))
            .arg("lower", 1)
            .arg("default", "true"),
    )?;
    h.record(
        op("Push Down Feature").arg("feature", q("DiagramElement.affixedParentSide")).arg("targets", vec![q("Node")]),
    )?;
    h.record(op("Unfold Super Class").arg("class", q("Compartment")).arg("supertype", q("Collapsible")))?;
    h.record(op("Generalize Reference").arg("reference", q("Canvas.galleries")).arg("upper", -1))?;

    // Figures become reusable through descriptors.
    h.record_primitive(Primitive::Delete { target: ElementRef::new(q("Figure.referencingElements")) })?;
    let mut descriptor = Class::new("FigureDescriptor");
    descriptor.features.push(Feature::reference("actualFigure", &q("Figure"), 1, Upper::Bounded(1), false));
    h.record_primitive(Primitive::Create {
        target: ElementRef::new(P),
        element: NewElement::Classifier(Classifier::Class(descriptor)),
    })?;
    h.record_primitive(Primitive::Create {
        target: ElementRef::new(q("FigureGallery")),
        element: NewElement::Feature(Feature::reference(
            "descriptors",
            &q("FigureDescriptor"),
            0,
            Upper::Unbounded,
            true,
        )),
    })?;
    h.record_primitive(Primitive::Set {
        target: ElementRef::new(q("DiagramElement.figure")),
        property: "type".into(),
        value: q("FigureDescriptor").into(),
    })?;
    h.attach_migration(DECOUPLE_FIGURES, 4, Some("Decouple FigureHandle.referencingElements"))?;
    h.record(
        op("Document Metamodel Element")
            .arg("element", q("FigureDescriptor"))
            .arg("documentation", "Wraps a figure so that diagram elements can share it."),
    )?;
    h.release("2.0", false)?;

    h.record(op("Change Namespace URI").arg("package", P).arg("newUri", URI_2_1))?;
    h.record(op("Suppressed Set Visibility to Not Changeable").arg("feature", q("CustomFigure.bundleName")))?;
    h.record(
        op("Document Metamodel Element")
            .arg("element", q("Canvas"))
            .arg("documentation", "The root of a graphical definition."),
    )?;
    h.record_primitive(Primitive::Set {
        target: ElementRef::new(q("FigureAccessor.typedFigure")),
        property: "lower".into(),
        value: 1.into(),
    })?;
    h.attach_migration(INIT_TYPED_FIGURE, 1, Some("Initialize FigureAccessor.typedFigure"))?;
    h.release("2.1", false)?;
    Ok(h)
}

/// Gives every figure accessor without a typed figure a fresh custom figure.
pub fn init_typed_figure(ctx: &mut HookContext) -> Result<(), String> {
    for acc in ctx.instances_of(&q("FigureAccessor")) {
        let unset = ctx.set.object(&acc).ok_or("accessor vanished")?.get("typedFigure").is_empty();
        if !unset {
            continue;
        }
        let id = ctx.set.fresh_id(&acc.resource, &format!("{}_figure", acc.id));
        let at = Placement::Child { owner: acc.clone(), feature: "typedFigure".into() };
        let fig = ctx.set.create(&id, &q("CustomFigure"), &at).map_err(|e| e.to_string())?;
        let o = ctx.set.object_mut(&fig).map_err(|e| e.to_string())?;
        o.set("qualifiedClassName", vec![Value::Prim(Literal::Str(DEFAULT_FIGURE_CLASS.into()))]);
    }
    Ok(())
}

/// Wraps each figure used by diagram elements in one descriptor, stored in
/// the figure's gallery, and points the elements at the descriptor.
pub fn decouple_figures(ctx: &mut HookContext) -> Result<(), String> {
    let elements = ctx.instances_before(&q("DiagramElement"));
    let mut users = std::collections::BTreeMap::new();
    for e in &elements {
        let o = ctx.set.object(e).ok_or("element vanished")?;
        if let Some(fig) = o.get("figure").first().and_then(Value::as_ref_target) {
            users.entry(fig.clone()).or_insert_with(Vec::new).push(e.clone());
        }
    }
    // Document order keeps the descriptors stable across runs.
    let figures: Vec<_> = ctx.set.objects().into_iter().map(|(r, _)| r).filter(|r| users.contains_key(r)).collect();
    let gallery_class = q("FigureGallery");
    for fig in figures {
        let mut gallery = ctx.set.container_of(&fig).map(|(c, _)| c);
        while let Some(g) = gallery.clone() {
            let class = &ctx.set.object(&g).ok_or("container vanished")?.class;
            if ctx.after.is_subtype(class, &gallery_class) {
                break;
            }
            gallery = ctx.set.container_of(&g).map(|(c, _)| c);
        }
        let gallery = gallery.ok_or_else(|| format!("figure {fig} is not inside a figure gallery"))?;
        let id = ctx.set.fresh_id(&gallery.resource, &format!("{}_desc", fig.id));
        let at = Placement::Child { owner: gallery, feature: "descriptors".into() };
        let desc = ctx.set.create(&id, &q("FigureDescriptor"), &at).map_err(|e| e.to_string())?;
        ctx.set.object_mut(&desc).map_err(|e| e.to_string())?.set("actualFigure", vec![Value::Ref(fig.clone())]);
        for e in &users[&fig] {
            ctx.set.object_mut(e).map_err(|e| e.to_string())?.set("figure", vec![Value::Ref(desc.clone())]);
        }
    }
    Ok(())
}

/// The hook registry of a bundled scenario, by name.
pub fn registry(name: &str) -> Option<HookRegistry> {
    if name != NAME {
        return None;
    }
    let mut reg = HookRegistry::new();
    reg.register(INIT_TYPED_FIGURE, init_typed_figure).expect("fresh registry");
    reg.register(DECOUPLE_FIGURES, decouple_figures).expect("fresh registry");
    Some(reg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::{Class, Package};
    use crate::model::{MObject, ObjRef, Resource, ResourceSet};

    fn mm() -> Metamodel {
        let mut gallery = Class::new("FigureGallery");
        gallery.features.push(Feature::reference("figures", &q("Figure"), 0, Upper::Unbounded, true));
        gallery.features.push(Feature::reference("descriptors", &q("FigureDescriptor"), 0, Upper::Unbounded, true));
        let mut fig = Class::new("Figure");
        fig.features.push(Feature::reference("children", &q("Figure"), 0, Upper::Unbounded, true));
        let mut custom = Class::new("CustomFigure");
        custom.supertypes.push(q("Figure"));
        custom.features.push(Feature::attribute("qualifiedClassName", &q("String"), 1, Upper::Bounded(1)));
        let mut acc = Class::new("FigureAccessor");
        acc.features.push(Feature::reference("typedFigure", &q("Figure"), 1, Upper::Bounded(1), true));
        let mut el = Class::new("DiagramElement");
        el.features.push(Feature::reference("figure", &q("FigureDescriptor"), 0, Upper::Bounded(1), false));
        let mut desc = Class::new("FigureDescriptor");
        desc.features.push(Feature::reference("actualFigure", &q("Figure"), 1, Upper::Bounded(1), false));
        let string = crate::meta::DataType {
            name: "String".into(),
            primitive: crate::meta::PrimitiveKind::String,
            annotations: vec![],
        };
        Metamodel {
            packages: vec![Package {
                name: P.into(),
                ns_uri: "urn:test".into(),
                classifiers: [gallery, fig, custom, acc, el, desc]
                    .into_iter()
                    .map(Classifier::Class)
                    .chain([Classifier::DataType(string)])
                    .collect(),
                annotations: vec![],
            }],
        }
    }

    fn run(set: &mut ResourceSet, hook: fn(&mut HookContext) -> Result<(), String>) {
        let m = mm();
        let mut ctx = HookContext { before: &m, after: &m, set };
        hook(&mut ctx).unwrap();
    }

    fn single(roots: Vec<MObject>) -> ResourceSet {
        let mut res = Resource::new("m.model.json");
        res.roots = roots;
        let mut set = ResourceSet::new("urn:test");
        set.resources.push(res);
        set
    }

    fn r(id: &str) -> ObjRef {
        ObjRef::new("m.model.json", id)
    }

    #[test]
    fn accessor_without_figure_gains_one() {
        let typed = MObject::new("f", q("CustomFigure"))
            .with("qualifiedClassName", vec![Value::Prim(Literal::Str("x".into()))]);
        let mut set = single(vec![
            MObject::new("a", q("FigureAccessor")),
            MObject::new("b", q("FigureAccessor")).with("typedFigure", vec![Value::Child(Box::new(typed))]),
        ]);
        run(&mut set, init_typed_figure);
        let a = set.object(&r("a")).unwrap();
        let made = a.get("typedFigure")[0].as_child().unwrap();
        assert_eq!(made.id, "a_figure");
        assert_eq!(made.get("qualifiedClassName"), [Value::Prim(Literal::Str(DEFAULT_FIGURE_CLASS.into()))]);
        let b = set.object(&r("b")).unwrap();
        assert_eq!(b.get("typedFigure")[0].as_child().unwrap().id, "f");
    }

    #[test]
    fn empty_model_is_untouched() {
        let mut set = single(vec![]);
        run(&mut set, init_typed_figure);
        run(&mut set, decouple_figures);
        assert_eq!(set, single(vec![]));
    }

    #[test]
    fn shared_figure_gets_one_descriptor() {
        let gallery = MObject::new("g", q("FigureGallery")).with(
            "figures",
            vec![
                Value::Child(Box::new(MObject::new("shared", q("Figure")))),
                Value::Child(Box::new(MObject::new("lonely", q("Figure")))),
            ],
        );
        let uses = |id: &str| MObject::new(id, q("DiagramElement")).with("figure", vec![Value::Ref(r("shared"))]);
        let mut set = single(vec![gallery, uses("e1"), uses("e2")]);
        run(&mut set, decouple_figures);
        let g = set.object(&r("g")).unwrap();
        assert_eq!(g.get("descriptors").len(), 1);
        let desc = g.get("descriptors")[0].as_child().unwrap();
        assert_eq!(desc.get("actualFigure"), [Value::Ref(r("shared"))]);
        for e in ["e1", "e2"] {
            assert_eq!(set.object(&r(e)).unwrap().get("figure"), [Value::Ref(r(&desc.id))]);
        }
    }

    #[test]
    fn registry_by_name() {
        let reg = registry(NAME).unwrap();
        assert!(reg.contains(INIT_TYPED_FIGURE) && reg.contains(DECOUPLE_FIGURES));
        assert!(registry("other").is_none());
    }
}
