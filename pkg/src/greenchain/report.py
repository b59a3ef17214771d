"""Cross-route comparison of ``G(j,k)/G(k,j)`` and its JSON report."""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import BirthDeathChain, remove_laziness, symmetry_ratio
from .embedding import build_embedding, green_from_embedding
from .exact import green_matrix
from .mc import SimConfig, ratio_estimate, simulate_line, simulate_tree
from .network import line_conductances, solve_voltages
from .tree import TreeChain, assign_conductances, green_tree_matrix, path_ratio

MC_SIGMAS = 4.0
ROUTES = ("ratio_exact", "ratio_voltage", "ratio_local_time")


def skipped(reason: str) -> str:
    return f"skipped: {reason}"


def file_digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


@dataclass
class Report:
    input_digest: str
    kind: str
    tolerance: float
    records: list = field(default_factory=list)

    @property
    def failing(self) -> list:
        return [r for r in self.records if isinstance(r["max_rel_dev"], float)
                and not r["max_rel_dev"] <= self.tolerance]

    @property
    def verdict(self) -> str:
        return "fail" if self.failing else "pass"

    def as_dict(self) -> dict:
        return {
            "input_digest": self.input_digest,
            "kind": self.kind,
            "tolerance": self.tolerance,
            "records": sorted(self.records, key=lambda r: (_sort_key(r["j"]), _sort_key(r["k"]))),
            "verdict": self.verdict,
            "failing_pairs": [[r["j"], r["k"]] for r in self.failing],
        }


def _sort_key(v):
    return (isinstance(v, str), v)


def _format(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_format(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_format(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_stable(obj) -> str:
    """JSON with sorted keys and floats written with 17 significant digits,
    so identical inputs give byte-identical output."""
    return _format(obj)


def _record(j, k, closed, routes: dict, mc_band):
    rec = {"j": j, "k": k, "ratio_closed_form": closed, "mc_band": mc_band}
    devs = []
    for name in ROUTES:
        value = routes.get(name, skipped("not requested"))
        rec[name] = value
        if isinstance(value, float):
            devs.append(abs(value - closed) / closed)
    rec["max_rel_dev"] = max(devs) if devs else skipped("no numeric route")
    return rec


def _mc_band(forward, backward, closed):
    ratio, err = ratio_estimate(forward, backward)
    return {
        "ratio": ratio,
        "stderr": err,
        "lower": ratio - MC_SIGMAS * err,
        "upper": ratio + MC_SIGMAS * err,
        "contains_closed_form": bool(abs(ratio - closed) <= MC_SIGMAS * err),
        "truncated_trials": forward.truncated_trials + backward.truncated_trials,
    }


def _threads():
    try:
        return max(1, int(os.environ.get("GREENCHAIN_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = _threads()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def line_records(chain: BirthDeathChain, pairs, mc: SimConfig | None = None) -> list:
    """Compare every route on each ``(j, k)`` of ``pairs``."""
    gm = green_matrix(chain)
    net = line_conductances(chain)
    base = remove_laziness(chain) if chain.is_lazy else chain
    emb = build_embedding(base)
    voltages = {}

    def volt(src):
        if src not in voltages:
            voltages[src] = solve_voltages(net, src, chain.absorbing)
        return voltages[src]

    def local(j, k):
        return (green_from_embedding(emb, j, k, chain.lo, chain.hi)
                / (1.0 - float(chain.a[k - chain.lo])))

    def one(pair):
        j, k = pair
        closed = symmetry_ratio(chain, j, k)
        routes = {
            "ratio_exact": gm[j, k] / gm[k, j],
            "ratio_voltage": (net.total(k) * volt(j)[k]) / (net.total(j) * volt(k)[j]),
            "ratio_local_time": local(j, k) / local(k, j),
        }
        band = skipped("monte carlo not requested")
        if mc is not None:
            band = _mc_band(simulate_line(chain, j, k, mc), simulate_line(chain, k, j, mc), closed)
        return _record(j, k, closed, routes, band)

    return _map(one, list(pairs))


def tree_records(tc: TreeChain, pairs, mc: SimConfig | None = None) -> list:
    gm = green_tree_matrix(tc)
    net = assign_conductances(tc)

    def one(pair):
        j, k = pair
        closed = path_ratio(tc, j, k)
        vj = solve_voltages(net, j, tc.leaves)
        vk = solve_voltages(net, k, tc.leaves)
        routes = {
            "ratio_exact": gm[j, k] / gm[k, j],
            "ratio_voltage": (net.total(k) * vj[k]) / (net.total(j) * vk[j]),
            "ratio_local_time": skipped("the Brownian embedding does not extend to trees"),
        }
        band = skipped("monte carlo not requested")
        if mc is not None:
            band = _mc_band(simulate_tree(tc, j, k, mc), simulate_tree(tc, k, j, mc), closed)
        return _record(j, k, closed, routes, band)

    return _map(one, list(pairs))


def all_pairs(states) -> list:
    states = list(states)
    return [(j, k) for i, j in enumerate(states) for k in states[i + 1:]]


def sample_pairs(states, count, seed) -> list:
    pairs = all_pairs(states)
    if count is None or count >= len(pairs):
        return pairs
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(pairs), size=count, replace=False).tolist())
    return [pairs[i] for i in chosen]
