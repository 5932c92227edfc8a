"""Text and SVG output for sampled structures.

tree-paren: node := symbol "(" child* ")", children separated by spaces,
with z-leaves written ``z`` first and, inside a subtree, A-leaves ``A``.
JSONL: {"color": int, "children": [...]} with leaves {"leaf": "z"} or
{"leaf": "A"}.
"""
import json
import re

from .errors import MalformedExcursion


def _walk(spec, nodes, subtree):
    """Nested (color, h, kids) form of a preorder node list."""
    it = iter(nodes)

    def build():
        g = next(it)
        kids = []
        for c in spec.children[g]:
            if subtree and c == 0:
                kids.append("A")
            else:
                kids.append(build())
        return (int(spec.color[g]), int(spec.h[g]), kids)

    return build()


def to_paren(spec, nodes, subtree=False):
    def render(t):
        if t == "A":
            return "A"
        c, h, kids = t
        inner = ["z"] * h + [render(k) for k in kids]
        return f"{spec.symbols[c]}({' '.join(inner)})"

    return render(_walk(spec, nodes, subtree))


def to_json(spec, nodes, subtree=False):
    def render(t):
        if t == "A":
            return {"leaf": "A"}
        c, h, kids = t
        return {"color": c, "children": [{"leaf": "z"}] * h + [render(k) for k in kids]}

    return render(_walk(spec, nodes, subtree))


def _lookup(spec):
    table = {}
    for g in range(spec.n_monomials):
        table[(int(spec.color[g]), int(spec.h[g]), spec.children[g])] = g
    return table


def from_paren(spec, text):
    """Inverse of ``to_paren`` for complete trees."""
    tokens = re.findall(r"[A-Za-z_][A-Za-z0-9_]*\(|\)|z", text)
    index = {s: i for i, s in enumerate(spec.symbols)}
    table = _lookup(spec)
    out = []
    pos = 0

    def node():
        nonlocal pos
        tok = tokens[pos]
        if not tok.endswith("("):
            raise MalformedExcursion(f"expected a node, got {tok!r}")
        c = index[tok[:-1]]
        slot = len(out)
        out.append(None)
        pos += 1
        h, kids = 0, []
        while tokens[pos] != ")":
            if tokens[pos] == "z":
                h += 1
                pos += 1
            else:
                kids.append(int(spec.color[node()]))
        pos += 1
        g = table.get((c, h, tuple(sorted(kids))))
        if g is None:
            raise MalformedExcursion(f"no monomial of {spec.symbols[c]} matches")
        out[slot] = g
        return g

    node()
    if pos != len(tokens):
        raise MalformedExcursion("trailing text after the tree")
    return tuple(out)


def format_structure(spec, s, fmt="tree-paren"):
    """One output line for a tree (ColoredTree) or a bridge (list of Subtree)."""
    if isinstance(s, list):
        if fmt == "jsonl":
            return json.dumps({"bridge": [to_json(spec, t.nodes, True) for t in s]},
                              separators=(",", ":"))
        return " ".join(to_paren(spec, t.nodes, True) for t in s)
    if fmt == "jsonl":
        return json.dumps(to_json(spec, s.nodes), separators=(",", ":"))
    return to_paren(spec, s.nodes)


def rhv_svg(spec, nodes, size=512.0):
    """Rectangle subdivision drawn from an rhv tree.

    Two H children stack top and bottom, two V children sit side by side,
    four R children fill quadrants; a z is an undivided rectangle.
    """
    if tuple(spec.symbols) != ("R", "H", "V"):
        raise ValueError("the SVG renderer only knows the rhv model")
    rects = []

    def draw(t, x, y, w, h):
        c, nz, kids = t
        if not kids:
            rects.append((x, y, w, h))
            return
        colors = [k[0] for k in kids]
        if colors == [1, 1]:
            draw(kids[0], x, y, w, h / 2)
            draw(kids[1], x, y + h / 2, w, h / 2)
        elif colors == [2, 2]:
            draw(kids[0], x, y, w / 2, h)
            draw(kids[1], x + w / 2, y, w / 2, h)
        else:
            for i, k in enumerate(kids):
                draw(k, x + (i % 2) * w / 2, y + (i // 2) * h / 2, w / 2, h / 2)

    draw(_walk(spec, nodes, False), 0.0, 0.0, size, size)
    body = "\n".join(
        f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}"/>'
        for x, y, w, h in rects)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
            f'viewBox="0 0 {size:g} {size:g}">\n'
            '<g fill="none" stroke="black" stroke-width="0.5">\n'
            f"{body}\n</g>\n</svg>\n")
