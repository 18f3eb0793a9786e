"""JSON (de)serialization of problems."""

import json

import numpy as np

from .errors import ParameterError, UnsupportedError
from .instances import NcChainInstance, ScChainInstance, build_chain_matrix
from .problem import (CompositeProblem, dense_map, euclidean_norm, indicator_nonpositive,
                      indicator_zero, l1_norm, quadratic)

SCHEMA_VERSION = 1
_H = {
    "indicator_zero": lambda spec: indicator_zero(),
    "indicator_nonpositive_orthant": lambda spec: indicator_nonpositive(),
    "euclidean_norm": lambda spec: euclidean_norm(spec.get("weight", 1.0)),
    "l1_norm": lambda spec: l1_norm(spec.get("weight", 1.0)),
}


def _floats(a):
    return np.asarray(a, dtype=np.float64).tolist()


def problem_to_dict(problem, x0=None):
    """Describe a problem as plain JSON types.

    Chain objectives are stored by their parameters, quadratics by ``Q`` and
    ``c``. Custom oracles cannot be serialized.
    """
    f, h, A = problem.f, problem.h, problem.A
    inst = problem.meta.get("instance")
    if isinstance(inst, ScChainInstance):
        fd = {"kind": "chain_sc", "N": inst.N, "d": inst.d, "L_f": inst.L_f, "mu_f": inst.mu_f,
              "alpha": inst.alpha, "declared_mu_f": f.mu_f}
    elif isinstance(inst, NcChainInstance):
        fd = {"kind": "chain_nc", "N": inst.N, "d": inst.d, "L_f": inst.L_f, "alpha": inst.alpha}
    elif f.name == "quadratic":
        fd = {"kind": "quadratic", "Q": _floats(f.params["Q"]), "c": _floats(f.params["c"]),
              "L_f": f.L_f, "mu_f": f.mu_f}
    else:
        raise UnsupportedError(f"cannot serialize objective {f.name!r}")

    if h.kind not in _H:
        raise UnsupportedError(f"cannot serialize regularizer kind {h.kind!r}", kind=h.kind)
    hd = {"kind": h.kind}
    if "weight" in h.params:
        hd["weight"] = h.params["weight"]

    if A.kind == "chain":
        ad = {"kind": "chain", "N": A.params["N"], "d": A.params["d"]}
    elif A.kind == "dense":
        ad = {"kind": "dense", "matrix": _floats(A.matrix), "L_A": A.L_A,
              "sigma_min": A.sigma_min, "sigma_min_nz": A.sigma_min_nz}
    else:
        raise UnsupportedError(f"cannot serialize linear map kind {A.kind!r}")

    doc = {"schema": SCHEMA_VERSION, "kind": problem.meta.get("kind", "custom"),
           "f": fd, "h": hd, "A": ad, "b": _floats(problem.b)}
    if x0 is not None:
        doc["x0"] = _floats(x0)
    params = {k: v for k, v in problem.meta.items()
              if k not in ("instance", "kind") and isinstance(v, (int, float, str))}
    if params:
        doc["params"] = params
    return doc


def problem_from_dict(doc):
    """Inverse of `problem_to_dict`; returns ``(problem, x0)`` with ``x0`` zeros when absent."""
    try:
        fd, hd, ad = doc["f"], doc["h"], doc["A"]
        b = np.asarray(doc["b"], dtype=np.float64)
    except KeyError as err:
        raise ParameterError(f"problem document is missing {err}") from None

    if ad["kind"] == "chain":
        A = build_chain_matrix(ad["N"], ad["d"])
    elif ad["kind"] == "dense":
        A = dense_map(ad["matrix"], ad.get("L_A"), ad.get("sigma_min"), ad.get("sigma_min_nz"))
    else:
        raise ParameterError(f"unknown linear map kind {ad['kind']!r}")
    if hd["kind"] not in _H:
        raise ParameterError(f"unknown regularizer kind {hd['kind']!r}")
    h = _H[hd["kind"]](hd)

    meta = dict(doc.get("params", {}))
    meta["kind"] = doc.get("kind", "custom")
    kind = fd["kind"]
    if kind == "chain_sc":
        inst = ScChainInstance(fd["N"], fd["d"], fd["L_f"], fd["mu_f"], fd["alpha"])
        f = inst.objective(mu_f=fd.get("declared_mu_f"))
        meta["instance"] = inst
    elif kind == "chain_nc":
        inst = NcChainInstance(fd["N"], fd["d"], fd["L_f"], fd["alpha"])
        f = inst.objective()
        meta["instance"] = inst
    elif kind == "quadratic":
        f = quadratic(fd["Q"], fd.get("c"), fd.get("L_f"), fd.get("mu_f"))
    else:
        raise ParameterError(f"unknown objective kind {kind!r}")
    if f.dim != A.n or b.size != A.m:
        raise ParameterError(f"dimension mismatch: f.dim={f.dim}, A is {A.m}x{A.n}, len(b)={b.size}")
    problem = CompositeProblem(f, h, A, b, meta=meta)
    x0 = np.asarray(doc["x0"], dtype=np.float64) if "x0" in doc else np.zeros(A.n)
    return problem, x0


def save_problem(path, problem, x0=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(problem_to_dict(problem, x0), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ParameterError(f"{path}: invalid JSON ({err})") from None
    return problem_from_dict(doc)
