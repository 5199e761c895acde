"""Hand-authored snapshots of the mini graphical-definition metamodel.

Version 1.0 is written out literally; 2.0 and 2.1 are derived from it by
explicit edits that mirror the release notes below, without running the
engine. The history replay must converge on these files.
"""
import copy
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent.parent
P = "gmfgraph"


def attr(name, ty, lower=0, upper=1, **kw):
    f = {"name": name, "kind": "attribute", "type": f"{P}.{ty}", "lower": lower, "upper": upper}
    f.update(kw)
    return f


def ref(name, ty, lower=0, upper=1, **kw):
    f = {"name": name, "kind": "reference", "type": f"{P}.{ty}", "lower": lower, "upper": upper}
    f.update(kw)
    return f


def cls(name, features=(), supertypes=(), abstract=False, interface=False, **kw):
    c = {"kind": "class", "name": name, "abstract": abstract, "interface": interface}
    if supertypes:
        c["supertypes"] = [f"{P}.{s}" for s in supertypes]
    if features:
        c["features"] = list(features)
    c.update(kw)
    return c


def dt(name, prim):
    return {"kind": "datatype", "name": name, "primitive": prim}


v10 = {
    "packages": [
        {
            "name": P,
            "nsUri": "http://www.eclipse.org/gmf/2005/GraphicalDefinition",
            "classifiers": [
                dt("String", "string"),
                dt("Integer", "integer"),
                dt("Float", "float"),
                dt("Boolean", "boolean"),
                {"kind": "enum", "name": "Direction", "literals": ["NONE", "NORTH", "SOUTH", "EAST", "WEST"]},
                cls("Canvas", [
                    attr("name", "String", identifier=True),
                    ref("nodes", "Node", upper=-1, containment=True),
                    ref("connections", "Connection", upper=-1, containment=True),
                    ref("compartments", "Compartment", upper=-1, containment=True),
                    ref("labels", "DiagramLabel", upper=-1, containment=True),
                    ref("galleries", "FigureGallery"),
                ]),
                cls("FigureGallery", [
                    attr("name", "String", identifier=True),
                    ref("figures", "Figure", upper=-1, containment=True),
                    ref("accessors", "FigureAccessor", upper=-1, containment=True),
                    attr("implementationBundle", "String", changeable=False),
                ]),
                cls("DiagramElement", [
                    ref("figure", "Figure", opposite=f"{P}.Figure.referencingElements"),
                    attr("affixedParentSide", "Direction"),
                ], abstract=True),
                cls("Layoutable", [attr("layoutHint", "String")], interface=True),
                cls("Decoratable", interface=True),
                cls("Collapsible", [attr("collapsible", "Boolean")], interface=True),
                cls("Node", [attr("resizeConstraint", "Direction")], ["DiagramElement"]),
                cls("DiagramLabel", [attr("elementIcon", "Boolean")], ["Node"]),
                cls("Connection", [ref("sourceDecoration", "Figure")], ["DiagramElement", "Decoratable"]),
                cls("Compartment", supertypes=["DiagramElement", "Collapsible"]),
                cls("Figure", [
                    attr("name", "String", identifier=True),
                    ref("children", "Figure", upper=-1, containment=True),
                    ref("referencingElements", "DiagramElement", upper=-1, changeable=False,
                        opposite=f"{P}.DiagramElement.figure"),
                ], abstract=True, operations=[{"name": "getFigureName"}]),
                cls("DecorationFigure", supertypes=["Figure"], interface=True),
                cls("Shape", [attr("outline", "Boolean"), attr("lineWidth", "Integer")], ["Figure"], abstract=True),
                cls("Rectangle", supertypes=["Shape"]),
                cls("Ellipse", supertypes=["Shape"]),
                cls("Label", [attr("text", "String")], ["Figure"]),
                cls("PolylineDecoration", supertypes=["Figure"]),
                cls("CustomFigure", [
                    attr("qualifiedClassName", "String", lower=1, identifier=True),
                    attr("bundleName", "String", annotations=[
                        {"source": "genmodel", "details": {"suppressedSetVisibility": "true"}}]),
                    ref("customChildren", "FigureAccessor", upper=-1),
                ], ["Figure"]),
                cls("FigureAccessor", [
                    attr("accessor", "String"),
                    ref("typedFigure", "Figure", containment=True),
                ]),
            ],
        }
    ]
}


def classifier(mm, name):
    return next(c for c in mm["packages"][0]["classifiers"] if c["name"] == name)


def feature(mm, cname, fname):
    return next(f for f in classifier(mm, cname)["features"] if f["name"] == fname)


def drop_feature(mm, cname, fname):
    c = classifier(mm, cname)
    c["features"] = [f for f in c["features"] if f["name"] != fname]
    if not c["features"]:
        del c["features"]


def add_feature(mm, cname, f):
    classifier(mm, cname).setdefault("features", []).append(f)


def document(c, text):
    c.setdefault("annotations", []).append({"source": "documentation", "details": {"value": text}})


# Release 2.0
v20 = copy.deepcopy(v10)
v20["packages"][0]["nsUri"] = "http://www.eclipse.org/gmf/2006/GraphicalDefinition"
name_attr = feature(v20, "Canvas", "name")
for c in ("Canvas", "FigureGallery", "Figure"):
    drop_feature(v20, c, "name")
    classifier(v20, c).setdefault("supertypes", []).append(f"{P}.Identity")
identity = cls("Identity", [copy.deepcopy(name_attr)], abstract=True)
document(identity, "An element with a unique name.")
v20["packages"][0]["classifiers"].append(identity)
for c in ("Layoutable", "Decoratable", "DecorationFigure"):
    classifier(v20, c)["abstract"] = True
classifier(v20, "Node")["supertypes"].append(f"{P}.Layoutable")
classifier(v20, "Compartment")["supertypes"] = [f"{P}.DiagramElement", f"{P}.Layoutable"]
classifier(v20, "Connection")["supertypes"] = [f"{P}.DiagramElement"]
# Shape is inlined into Rectangle and Ellipse.
shape = classifier(v20, "Shape")
v20["packages"][0]["classifiers"].remove(shape)
for c in ("Rectangle", "Ellipse"):
    classifier(v20, c)["supertypes"] = [f"{P}.Figure"]
    classifier(v20, c)["features"] = copy.deepcopy(shape["features"])
feature(v20, "Rectangle", "lineWidth")["type"] = f"{P}.Float"
classifier(v20, "PolylineDecoration")["supertypes"] = [f"{P}.DecorationFigure"]
feature(v20, "Connection", "sourceDecoration")["type"] = f"{P}.DecorationFigure"
feature(v20, "CustomFigure", "customChildren")["containment"] = True
drop_feature(v20, "FigureGallery", "accessors")
drop_feature(v20, "Node", "resizeConstraint")
del classifier(v20, "Figure")["operations"]
del feature(v20, "CustomFigure", "qualifiedClassName")["identifier"]
bundle = feature(v20, "FigureGallery", "implementationBundle")
del bundle["changeable"]
bundle["annotations"] = [{"source": "genmodel", "details": {"suppressedSetVisibility": "true"}}]
v20["packages"][0]["classifiers"].append(cls("VisualFacet", abstract=True))
v20["packages"][0]["classifiers"].append(cls("GeneralFacet", [attr("data", "String")], ["VisualFacet"]))
add_feature(v20, "DiagramElement", ref("facets", "VisualFacet", upper=-1, containment=True))
add_feature(v20, "Compartment", attr("needsTitle", "Boolean", lower=1, default=True))
affixed = feature(v20, "DiagramElement", "affixedParentSide")
drop_feature(v20, "DiagramElement", "affixedParentSide")
add_feature(v20, "Node", affixed)
add_feature(v20, "Compartment", copy.deepcopy(feature(v20, "Collapsible", "collapsible")))
feature(v20, "Canvas", "galleries")["upper"] = -1
# Decoupling figures from diagram elements.
del feature(v20, "DiagramElement", "figure")["opposite"]
feature(v20, "DiagramElement", "figure")["type"] = f"{P}.FigureDescriptor"
drop_feature(v20, "Figure", "referencingElements")
descriptor = cls("FigureDescriptor", [ref("actualFigure", "Figure", lower=1)])
document(descriptor, "Wraps a figure so that diagram elements can share it.")
v20["packages"][0]["classifiers"].append(descriptor)
add_feature(v20, "FigureGallery", ref("descriptors", "FigureDescriptor", upper=-1, containment=True))

# Release 2.1
v21 = copy.deepcopy(v20)
v21["packages"][0]["nsUri"] = "http://www.eclipse.org/gmf/2008/GraphicalDefinition"
bundle = feature(v21, "CustomFigure", "bundleName")
bundle["changeable"] = False
del bundle["annotations"]
document(classifier(v21, "Canvas"), "The root of a graphical definition.")
feature(v21, "FigureAccessor", "typedFigure")["lower"] = 1

for label, mm in (("1.0", v10), ("2.0", v20), ("2.1", v21)):
    text = json.dumps(mm, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    (HERE / f"metamodel-{label}.mm.json").write_text(text)
