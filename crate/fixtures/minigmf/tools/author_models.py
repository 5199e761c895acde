"""Hand-authored model fixtures: the 1.0 input set and the 2.1 set expected
after migration, worked out change by change from the release notes."""
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent.parent
P = "gmfgraph"
CANVAS, FIGURES = "canvas.model.json", "figures.model.json"


def obj(i, cls, **slots):
    out = {"id": i, "class": f"{P}.{cls}"}
    s = {}
    for k, v in slots.items():
        s[k] = v if isinstance(v, list) else [v]
    if s:
        out["slots"] = s
    return out


def enum(lit):
    return {"enum": lit}


def ref(target, here):
    file, _, i = target.partition("#")
    return {"ref": f"#{i}" if file == here else target}


def write(path, uri, roots):
    doc = {"header": {"nsUri": uri}, "roots": roots}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def fig(i):
    return f"{FIGURES}#{i}"


def el(i):
    return f"{CANVAS}#{i}"


# Release 1.0 input.
v10_canvas = [
    obj("c1", "Canvas", name="main",
        galleries=ref(fig("g1"), CANVAS),
        nodes=[
            obj("n1", "Node", figure=ref(fig("f_rect"), CANVAS), resizeConstraint=enum("NORTH"),
                affixedParentSide=enum("EAST")),
            obj("n2", "Node", figure=ref(fig("f_rect"), CANVAS), resizeConstraint=enum("SOUTH")),
            obj("n3", "Node", figure=ref(fig("f_cust"), CANVAS)),
        ],
        labels=[obj("l1", "DiagramLabel", figure=ref(fig("f_label"), CANVAS), elementIcon=True,
                    affixedParentSide=enum("WEST"))],
        connections=[obj("e1", "Connection", figure=ref(fig("f_ell"), CANVAS),
                         sourceDecoration=ref(fig("f_deco"), CANVAS))],
        compartments=[
            obj("k1", "Compartment", figure=ref(fig("f_rect"), CANVAS), collapsible=True),
            obj("k2", "Compartment", collapsible=False),
        ]),
]
v10_figures = [
    obj("g1", "FigureGallery", name="default", implementationBundle="org.example.figures",
        figures=[
            obj("f_rect", "Rectangle", name="NodeRect", outline=True, lineWidth=2,
                children=[obj("f_inner", "Label", name="Inner", text="x")],
                referencingElements=[ref(el("n1"), FIGURES), ref(el("n2"), FIGURES), ref(el("k1"), FIGURES)]),
            obj("f_label", "Label", name="NameLabel", text="Name", referencingElements=ref(el("l1"), FIGURES)),
            obj("f_ell", "Ellipse", name="ConnLine", lineWidth=1, referencingElements=ref(el("e1"), FIGURES)),
            obj("f_deco", "PolylineDecoration", name="Arrow"),
            obj("f_cust", "CustomFigure", name="Custom", qualifiedClassName="org.example.CustomFigure",
                bundleName="org.example", customChildren=[ref(f"{FIGURES}#a1", FIGURES), ref(f"{FIGURES}#a2", FIGURES)],
                referencingElements=ref(el("n3"), FIGURES)),
            obj("f_unused", "Ellipse", name="Unused", outline=False),
        ],
        accessors=[
            obj("a1", "FigureAccessor", accessor="getInner",
                typedFigure=obj("f_a1fig", "Rectangle", name="AccessorRect", lineWidth=3)),
            obj("a2", "FigureAccessor", accessor="getOther"),
        ]),
]
write(HERE / "models/v1.0" / CANVAS, "http://www.eclipse.org/gmf/2005/GraphicalDefinition", v10_canvas)
write(HERE / "models/v1.0" / FIGURES, "http://www.eclipse.org/gmf/2005/GraphicalDefinition", v10_figures)

# Expected 2.1 output.
#  - resizeConstraint values are dropped with the feature
#  - every compartment gains needsTitle = true
#  - Rectangle.lineWidth values become floats
#  - accessors move into CustomFigure.customChildren
#  - each figure referenced through DiagramElement.figure gets one descriptor
#    in its gallery, and the diagram elements point at the descriptor
#  - referencingElements values disappear with the feature
#  - accessors without a typed figure get a fresh CustomFigure
v21_canvas = [
    obj("c1", "Canvas", name="main",
        galleries=ref(fig("g1"), CANVAS),
        nodes=[
            obj("n1", "Node", figure=ref(fig("f_rect_desc"), CANVAS), affixedParentSide=enum("EAST")),
            obj("n2", "Node", figure=ref(fig("f_rect_desc"), CANVAS)),
            obj("n3", "Node", figure=ref(fig("f_cust_desc"), CANVAS)),
        ],
        labels=[obj("l1", "DiagramLabel", figure=ref(fig("f_label_desc"), CANVAS), elementIcon=True,
                    affixedParentSide=enum("WEST"))],
        connections=[obj("e1", "Connection", figure=ref(fig("f_ell_desc"), CANVAS),
                         sourceDecoration=ref(fig("f_deco"), CANVAS))],
        compartments=[
            obj("k1", "Compartment", figure=ref(fig("f_rect_desc"), CANVAS), collapsible=True, needsTitle=True),
            obj("k2", "Compartment", collapsible=False, needsTitle=True),
        ]),
]
v21_figures = [
    obj("g1", "FigureGallery", name="default", implementationBundle="org.example.figures",
        figures=[
            obj("f_rect", "Rectangle", name="NodeRect", outline=True, lineWidth=2.0,
                children=[obj("f_inner", "Label", name="Inner", text="x")]),
            obj("f_label", "Label", name="NameLabel", text="Name"),
            obj("f_ell", "Ellipse", name="ConnLine", lineWidth=1),
            obj("f_deco", "PolylineDecoration", name="Arrow"),
            obj("f_cust", "CustomFigure", name="Custom", qualifiedClassName="org.example.CustomFigure",
                bundleName="org.example",
                customChildren=[
                    obj("a1", "FigureAccessor", accessor="getInner",
                        typedFigure=obj("f_a1fig", "Rectangle", name="AccessorRect", lineWidth=3.0)),
                    obj("a2", "FigureAccessor", accessor="getOther",
                        typedFigure=obj("a2_figure", "CustomFigure", qualifiedClassName="org.eclipse.draw2d.IFigure")),
                ]),
            obj("f_unused", "Ellipse", name="Unused", outline=False),
        ],
        descriptors=[
            obj("f_rect_desc", "FigureDescriptor", actualFigure=ref(fig("f_rect"), FIGURES)),
            obj("f_label_desc", "FigureDescriptor", actualFigure=ref(fig("f_label"), FIGURES)),
            obj("f_ell_desc", "FigureDescriptor", actualFigure=ref(fig("f_ell"), FIGURES)),
            obj("f_cust_desc", "FigureDescriptor", actualFigure=ref(fig("f_cust"), FIGURES)),
        ]),
]
write(HERE / "expected/v2.1" / CANVAS, "http://www.eclipse.org/gmf/2008/GraphicalDefinition", v21_canvas)
write(HERE / "expected/v2.1" / FIGURES, "http://www.eclipse.org/gmf/2008/GraphicalDefinition", v21_figures)
