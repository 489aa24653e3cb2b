"""Scenario files: JSON documents describing a model threefold and its queries.

Rationals are written as integers or ``"a/b"`` strings; floats are rejected.
Every validation error names the offending field path.  Module elements are
objects mapping basis monomials such as ``"D*pt*t^2*s"`` to rationals.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .classlat import GeometryModel, KClass
from .coeffring import CoeffRing
from .errors import InputError
from .exact import Vec, parse_int, parse_rational
from .quasipoly import QuasiPoly
from .vertexmodel import VertexConfig, WeightTable, parse_basis
from .wallcross import DTInput, InsertionFunctional, Scenario

KNOWN_OPS = ("coeffs", "wallcross", "ptgen", "expand")


def _obj(data, path: str) -> dict:
    if not isinstance(data, dict):
        raise InputError("expected an object", path)
    return data


def _list(data, path: str, length: int | None = None) -> list:
    if not isinstance(data, list):
        raise InputError("expected a list", path)
    if length is not None and len(data) != length:
        raise InputError(f"expected {length} entries, got {len(data)}", path)
    return data


def _no_floats(data, path: str):
    if isinstance(data, float):
        raise InputError(f"floating point value {data!r} is not allowed; write 'a/b'", path)
    if isinstance(data, dict):
        for k, v in data.items():
            _no_floats(v, f"{path}.{k}")
    elif isinstance(data, list):
        for i, v in enumerate(data):
            _no_floats(v, f"{path}[{i}]")


def parse_element(data, path: str, symbols=None, ring: CoeffRing | None = None):
    """A rational (scalar) or an object {basis text: rational} (module element)."""
    if not isinstance(data, dict):
        return parse_rational(data, path)
    out = {}
    for text, c in data.items():
        key = parse_basis(text, f"{path}.{text}")
        if symbols is not None:
            for name in key[0]:
                if name not in symbols:
                    raise InputError(f"unknown base symbol {name!r}", f"{path}.{text}")
        if ring is not None and not ring.admits(key[2]):
            raise InputError(f"s^{key[2]} is not available in {ring}", f"{path}.{text}")
        out[key] = out.get(key, 0) + parse_rational(c, f"{path}.{text}")
    return Vec(out)


def parse_beta(data, path: str, rank: int) -> tuple:
    items = _list(data, path, rank)
    beta = tuple(parse_int(x, f"{path}[{i}]") for i, x in enumerate(items))
    if any(x < 0 for x in beta) or not any(beta):
        raise InputError(f"class {list(beta)} is not effective", path)
    return beta


def parse_qp(data, path: str, symbols=None, ring=None) -> QuasiPoly:
    """{"period": d, "branches": [[c_0, c_1, ...] per residue]} (coefficients low degree first)."""
    data = _obj(data, path)
    period = parse_int(data.get("period", 1), f"{path}.period")
    if period < 1:
        raise InputError("period must be positive", f"{path}.period")
    branches = _list(data.get("branches"), f"{path}.branches", period)
    parsed = []
    kinds = set()
    for r, br in enumerate(branches):
        coeffs = [parse_element(c, f"{path}.branches[{r}][{i}]", symbols, ring)
                  for i, c in enumerate(_list(br, f"{path}.branches[{r}]"))]
        kinds |= {isinstance(c, Vec) for c in coeffs}
        parsed.append(tuple(coeffs))
    if len(kinds) > 1:
        raise InputError("mixes scalar and module coefficients", path)
    return QuasiPoly.from_branches(period, parsed)


def _parse_weight_polys(data, path: str) -> dict:
    out = {}
    for i, terms in _obj(data, path).items():
        try:
            idx = int(i)
        except ValueError:
            raise InputError(f"weight index {i!r} is not an integer", path) from None
        poly = {}
        for t, term in enumerate(_list(terms, f"{path}.{i}")):
            tp = f"{path}.{i}[{t}]"
            e1, e2, s, c = _list(term, tp, 4)
            key = (parse_int(e1, tp), parse_int(e2, tp), parse_int(s, tp))
            poly[key] = poly.get(key, 0) + parse_rational(c, f"{tp}[3]")
        out[idx] = poly
    return out


def _parse_type(data, path: str, rank: int) -> tuple:
    d, beta = _list(data, path, 2)
    d = parse_int(d, f"{path}[0]")
    beta = tuple(parse_int(x, f"{path}[1]") for x in _list(beta, f"{path}[1]", rank))
    return (d, beta)


def build_scenario(doc: dict, truncation_override: int | None = None) -> Scenario:
    _no_floats(doc, "$")
    doc = _obj(doc, "$")
    geo_d = _obj(doc.get("geometry"), "geometry")
    rank = parse_int(geo_d.get("rank"), "geometry.rank")

    def vec(name, parse=parse_int):
        return tuple(parse(x, f"geometry.{name}[{i}]") for i, x in enumerate(_list(geo_d.get(name), f"geometry.{name}", rank)))

    geometry = GeometryModel(rank, vec("c1"), vec("omega", parse_rational), vec("L"))

    vx = _obj(doc.get("vertex", {}), "vertex")
    truncation = vx.get("truncation")
    if truncation is not None:
        truncation = parse_int(truncation, "vertex.truncation")
    if truncation_override is not None:
        truncation = truncation_override
    ring = CoeffRing(truncation)
    symbols = {}
    for name, hd in _obj(vx.get("symbols", {}), "vertex.symbols").items():
        if not name.isidentifier() or name in ("t", "s"):
            raise InputError(f"bad symbol name {name!r}", "vertex.symbols")
        symbols[name] = parse_int(hd, f"vertex.symbols.{name}")
    wd = _obj(vx.get("weights", {}), "vertex.weights")
    entries = {}
    for i, e in enumerate(_list(wd.get("entries", []), "vertex.weights.entries")):
        p = f"vertex.weights.entries[{i}]"
        e = _obj(e, p)
        first, second = _list(e.get("pair"), f"{p}.pair", 2)
        key = (_parse_type(first, f"{p}.pair[0]", rank), _parse_type(second, f"{p}.pair[1]", rank))
        entries[key] = _parse_weight_polys(e.get("w", {}), f"{p}.w")
    default = _parse_weight_polys(wd["default"], "vertex.weights.default") if "default" in wd else None
    weights = WeightTable(entries, default)
    parity = vx.get("parity", "split")
    config = VertexConfig(geometry, weights, symbols, ring, parity)

    point = parse_element(doc.get("point_class", {}), "point_class", symbols, ring)
    if not isinstance(point, Vec):
        raise InputError("point class must be a module element", "point_class")

    tables, thresholds, vanishing, middle = {}, {}, {}, {}
    for i, c in enumerate(_list(doc.get("classes", []), "classes")):
        p = f"classes[{i}]"
        c = _obj(c, p)
        beta = parse_beta(c.get("beta"), f"{p}.beta", rank)
        if beta in tables:
            raise InputError(f"class {list(beta)} listed twice", p)
        qp = parse_qp(c.get("dt"), f"{p}.dt", symbols, ring)
        if qp.polys and not all(isinstance(v, Vec) for poly in qp.polys.values() for v in poly.values()):
            raise InputError("DT values must be module elements", f"{p}.dt")
        tables[beta] = qp
        if "C" in c:
            thresholds[beta] = parse_rational(c["C"], f"{p}.C")
        if "M" in c:
            vanishing[beta] = parse_int(c["M"], f"{p}.M")
        for n_text, v in _obj(c.get("middle", {}), f"{p}.middle").items():
            try:
                n = int(n_text)
            except ValueError:
                raise InputError(f"middle-window key {n_text!r} is not an integer", f"{p}.middle") from None
            el = parse_element(v, f"{p}.middle.{n_text}", symbols, ring)
            if not isinstance(el, Vec):
                raise InputError("middle-window values must be module elements", f"{p}.middle.{n_text}")
            middle[(beta, n)] = el
    dt = DTInput(geometry, tables, truncation)
    for (beta, n) in middle:
        if beta in vanishing and beta in thresholds:
            top = thresholds[beta] * geometry.omega_dot(beta)
            if not vanishing[beta] < n <= top:
                raise InputError(f"middle-window value at n={n} lies outside ({vanishing[beta]}, {top}]",
                                 f"classes[{list(beta)}].middle")
    samples = parse_int(doc.get("tail_samples", 48), "tail_samples")
    queries = [parse_query(q, f"queries[{i}]", rank, symbols, ring) for i, q in enumerate(_list(doc.get("queries", []), "queries"))]
    return Scenario(geometry, config, dt, point, thresholds, vanishing, middle,
                    name=str(doc.get("name", "scenario")), tail_samples=samples, queries=queries)


def parse_query(q, path: str, rank: int, symbols, ring) -> dict:
    q = _obj(q, path)
    op = q.get("op")
    if op not in KNOWN_OPS:
        raise InputError(f"unknown operation {op!r}; expected one of {', '.join(KNOWN_OPS)}", f"{path}.op")
    out = {"op": op, "path": path}
    if op in ("wallcross", "ptgen") or (op == "expand" and "beta" in q):
        out["beta"] = parse_beta(q.get("beta"), f"{path}.beta", rank)
    if op == "wallcross":
        out["n"] = parse_int(q.get("n"), f"{path}.n")
        out["omega_new"] = tuple(parse_rational(x, f"{path}.omega_new[{i}]")
                                 for i, x in enumerate(_list(q.get("omega_new"), f"{path}.omega_new", rank)))
        if any(x <= 0 for x in out["omega_new"]):
            raise InputError("components must be positive", f"{path}.omega_new")
    if op == "ptgen" and "insertion" in q:
        ins = _obj(q["insertion"], f"{path}.insertion")
        coeffs = parse_element(ins.get("coeffs", {}), f"{path}.insertion.coeffs", symbols, None)
        if not isinstance(coeffs, Vec):
            raise InputError("insertion coefficients must be an object", f"{path}.insertion.coeffs")
        out["insertion"] = InsertionFunctional(dict(coeffs), parse_int(ins.get("degree", 0), f"{path}.insertion.degree"))
    if op == "coeffs":
        out["classes"] = []
        for i, c in enumerate(_list(q.get("classes"), f"{path}.classes")):
            cp = f"{path}.classes[{i}]"
            d, beta, n = _list(c, cp, 3)
            out["classes"].append(KClass(parse_int(d, f"{cp}[0]"),
                                         tuple(parse_int(x, f"{cp}[1]") for x in _list(beta, f"{cp}[1]", rank)),
                                         parse_int(n, f"{cp}[2]")))
        if not out["classes"]:
            raise InputError("at least one class is needed", f"{path}.classes")
        for key in ("tau", "tau_new"):
            spec = _obj(q.get(key), f"{path}.{key}")
            if "pair_c" in spec:
                out[key] = ("pair", parse_rational(spec["pair_c"], f"{path}.{key}.pair_c"))
            elif "omega" in spec:
                w = tuple(parse_rational(x, f"{path}.{key}.omega[{i}]")
                          for i, x in enumerate(_list(spec["omega"], f"{path}.{key}.omega", rank)))
                if any(x <= 0 for x in w):
                    raise InputError("components must be positive", f"{path}.{key}.omega")
                out[key] = ("slope", w)
            else:
                raise InputError("give either pair_c or omega", f"{path}.{key}")
    if op == "expand" and "beta" not in q:
        g = _obj(q.get("gf"), f"{path}.gf")
        out["vanishing"] = parse_int(g.get("vanishing"), f"{path}.gf.vanishing")
        out["tail_from"] = parse_int(g.get("tail_from"), f"{path}.gf.tail_from")
        out["tail"] = parse_qp(g, f"{path}.gf", symbols, ring)
        out["exceptional"] = {}
        for n_text, v in _obj(g.get("exceptional", {}), f"{path}.gf.exceptional").items():
            try:
                n = int(n_text)
            except ValueError:
                raise InputError(f"key {n_text!r} is not an integer", f"{path}.gf.exceptional") from None
            out["exceptional"][n] = parse_element(v, f"{path}.gf.exceptional.{n_text}", symbols, ring)
    if "n_max" in q:
        out["n_max"] = parse_int(q["n_max"], f"{path}.n_max")
    if "samples" in q:
        out["samples"] = parse_int(q["samples"], f"{path}.samples")
    return out


def load_text(text: str, truncation_override: int | None = None) -> Scenario:
    try:
        doc = json.loads(text, parse_float=lambda s: float(s))
    except json.JSONDecodeError as exc:
        raise InputError(f"not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}", "$") from None
    scenario = build_scenario(doc, truncation_override)
    scenario.source_hash = hashlib.sha256(text.encode()).hexdigest()  # type: ignore[attr-defined]
    return scenario


def load_scenario(path: str | Path, truncation_override: int | None = None) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read scenario file: {exc.strerror}", str(path)) from None
    return load_text(text, truncation_override)


def shipped_scenario_path(name: str) -> Path:
    """Path of a scenario file shipped with the package, e.g. ``"fano_rank1"``."""
    ref = resources.files("ptrational") / "scenarios" / f"{name}.json"
    return Path(str(ref))


def shipped_scenarios() -> list[str]:
    root = resources.files("ptrational") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
