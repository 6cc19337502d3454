"""TSPLIB95 EUC_2D instances, optimum tours and quality thresholds."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

DATA_ENV = "DIVTSP_DATA_DIR"
_TABLE_LIMIT = 2000


class TSPLIBError(ValueError):
    """Raised for malformed or unsupported TSPLIB documents."""


class ConfigurationError(ValueError):
    """Raised when a run cannot be configured from the given inputs."""


def nint(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class Instance:
    """A symmetric EUC_2D TSP instance with cities indexed ``0..n-1``."""

    name: str
    coords: np.ndarray
    optimum_cost: int | None = None
    comment: str = ""

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coords must be an (n, 2) array")
        if len(coords) < 4:
            raise ValueError(f"need at least 4 cities, got {len(coords)}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return len(self.coords)

    def distance(self, i: int, j: int) -> int:
        """Rounded Euclidean distance (TSPLIB ``nint``)."""
        if "dist" in self.__dict__:
            return int(self.dist[i, j])
        (xi, yi), (xj, yj) = self.coords[i], self.coords[j]
        return nint(math.hypot(xi - xj, yi - yj))

    @cached_property
    def dist(self) -> np.ndarray:
        """Full ``n x n`` int32 distance table.

        Built on first use; the search kernels need it. ``distance`` answers
        single queries without building it.
        """
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        table = np.floor(np.sqrt((diff**2).sum(axis=2)) + 0.5).astype(np.int32)
        table.setflags(write=False)
        return table

    @property
    def has_table(self) -> bool:
        return "dist" in self.__dict__ or self.n <= _TABLE_LIMIT

    def with_optimum(self, cost: int) -> "Instance":
        new = replace(self, optimum_cost=int(cost))
        if "dist" in self.__dict__:
            new.__dict__["dist"] = self.dist
        return new


@dataclass(frozen=True)
class QualityThreshold:
    """Tours with ``cost <= value`` are acceptable; ``value = (1+alpha) * OPT``."""

    alpha: float
    value: float

    def accepts(self, cost: float) -> bool:
        return cost <= self.value


def make_threshold(inst: Instance, alpha: float) -> QualityThreshold:
    if not alpha > 0:
        raise ConfigurationError(f"alpha must be > 0, got {alpha}")
    if inst.optimum_cost is None:
        raise ConfigurationError(
            f"optimum cost of {inst.name!r} is unknown; supply an optimum tour "
            "(--opt-tour) or the optimum cost (--opt-cost)"
        )
    return QualityThreshold(alpha=float(alpha), value=(1.0 + alpha) * inst.optimum_cost)


def _split_header(line: str):
    key, sep, value = line.partition(":")
    if not sep:
        return None, None
    return key.strip(), value.strip()


def parse_instance(text: str, source: str = "<string>") -> Instance:
    """Parse a TSPLIB ``.tsp`` document with ``EDGE_WEIGHT_TYPE: EUC_2D``."""
    header: dict[str, str] = {}
    lines = text.splitlines()
    k = 0
    section = None
    while k < len(lines):
        raw = lines[k].strip()
        k += 1
        if not raw:
            continue
        if raw == "EOF":
            break
        if raw.endswith("_SECTION"):
            section = raw
            break
        key, value = _split_header(raw)
        if key is None or not key:
            raise TSPLIBError(f"{source}:{k}: malformed header line {raw!r}")
        header[key] = value

    if header.get("TYPE", "TSP") not in ("TSP",):
        raise TSPLIBError(f"{source}: unsupported problem type {header['TYPE']!r}")
    weight_type = header.get("EDGE_WEIGHT_TYPE")
    if weight_type != "EUC_2D":
        raise TSPLIBError(f"{source}: unsupported edge weight type {weight_type!r}")
    if "DIMENSION" not in header:
        raise TSPLIBError(f"{source}: missing DIMENSION")
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise TSPLIBError(f"{source}: malformed DIMENSION {header['DIMENSION']!r}") from None
    if section != "NODE_COORD_SECTION":
        raise TSPLIBError(f"{source}: expected NODE_COORD_SECTION, found {section!r}")

    coords = np.full((n, 2), np.nan)
    seen = np.zeros(n, dtype=bool)
    while k < len(lines):
        raw = lines[k].strip()
        k += 1
        if not raw:
            continue
        if raw == "EOF":
            break
        parts = raw.split()
        if len(parts) != 3:
            raise TSPLIBError(f"{source}:{k}: expected 'index x y', got {raw!r}")
        try:
            idx = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise TSPLIBError(f"{source}:{k}: malformed coordinate line {raw!r}") from None
        if not 1 <= idx <= n:
            raise TSPLIBError(f"{source}:{k}: city index {idx} outside 1..{n}")
        if seen[idx - 1]:
            raise TSPLIBError(f"{source}:{k}: duplicate city index {idx}")
        seen[idx - 1] = True
        coords[idx - 1] = (x, y)
    if not seen.all():
        missing = np.flatnonzero(~seen)[:5] + 1
        raise TSPLIBError(
            f"{source}: DIMENSION is {n} but {int((~seen).sum())} cities are missing "
            f"(first: {', '.join(map(str, missing))})"
        )
    return Instance(name=header.get("NAME", Path(source).stem), coords=coords,
                    comment=header.get("COMMENT", ""))


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def format_instance(inst: Instance) -> str:
    out = [f"NAME : {inst.name}"]
    if inst.comment:
        out.append(f"COMMENT : {inst.comment}")
    out += ["TYPE : TSP", f"DIMENSION : {inst.n}", "EDGE_WEIGHT_TYPE : EUC_2D",
            "NODE_COORD_SECTION"]
    for i, (x, y) in enumerate(inst.coords, start=1):
        out.append(f"{i} {_fmt_num(x)} {_fmt_num(y)}")
    out.append("EOF")
    return "\n".join(out) + "\n"


def iter_tour_documents(text: str, source: str = "<string>"):
    """Yield ``(name, perm, dimension)`` for each tour in a (possibly
    concatenated) TSPLIB ``.tour`` text. ``perm`` is 0-based."""
    tokens_header: dict[str, str] = {}
    lines = text.splitlines()
    k = 0
    count = 0
    while k < len(lines):
        raw = lines[k].strip()
        k += 1
        if not raw or raw == "EOF":
            continue
        if raw == "TOUR_SECTION":
            count += 1
            name = tokens_header.get("NAME", f"{Path(source).name}#{count}")
            cities: list[int] = []
            terminated = False
            while k < len(lines) and not terminated:
                raw = lines[k].strip()
                k += 1
                for tok in raw.split():
                    try:
                        v = int(tok)
                    except ValueError:
                        raise TSPLIBError(
                            f"{source}:{k}: tour {name!r}: bad city token {tok!r}") from None
                    if v == -1:
                        terminated = True
                        break
                    cities.append(v)
            if not terminated:
                raise TSPLIBError(f"{source}: tour {name!r}: TOUR_SECTION not terminated by -1")
            dim = tokens_header.get("DIMENSION")
            yield name, cities, (int(dim) if dim else None)
            tokens_header = {}
            continue
        key, value = _split_header(raw)
        if key is None:
            raise TSPLIBError(f"{source}:{k}: malformed header line {raw!r}")
        if key == "TYPE" and value != "TOUR":
            raise TSPLIBError(f"{source}:{k}: expected TYPE TOUR, got {value!r}")
        tokens_header[key] = value


def check_tour(name: str, cities: list[int], dim: int | None, n: int) -> np.ndarray:
    """Validate 1-based city labels and return the 0-based permutation."""
    if dim is not None and dim != n:
        raise TSPLIBError(f"tour {name!r}: DIMENSION {dim} does not match instance size {n}")
    if len(cities) != n:
        raise TSPLIBError(f"tour {name!r}: lists {len(cities)} cities, expected {n}")
    perm = np.asarray(cities, dtype=np.int64) - 1
    if perm.min() < 0 or perm.max() >= n:
        raise TSPLIBError(f"tour {name!r}: city label outside 1..{n}")
    counts = np.bincount(perm, minlength=n)
    if (counts != 1).any():
        dup = int(np.flatnonzero(counts > 1)[0]) + 1
        raise TSPLIBError(f"tour {name!r}: city {dup} listed more than once")
    return perm.astype(np.int32)


def parse_opt_tour(text: str, inst: Instance, source: str = "<string>"):
    """Parse a single optimum tour for ``inst``.

    Returns a :class:`~divtsp.tour.Tour`; pair it with
    ``inst.with_optimum(tour.cost)`` to record the optimum.
    """
    from .tour import Tour, tour_cost

    docs = list(iter_tour_documents(text, source))
    if len(docs) != 1:
        raise TSPLIBError(f"{source}: expected exactly one tour, found {len(docs)}")
    name, cities, dim = docs[0]
    perm = check_tour(name, cities, dim, inst.n)
    return Tour(perm, tour_cost(inst, perm))


def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "data" / "tsplib"


def resolve_instance_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.suffix == ".tsp" or p.exists():
        return p
    candidate = data_dir() / f"{name_or_path}.tsp"
    if candidate.exists():
        return candidate
    for f in data_dir().glob("*.tsp"):
        if f.stem.lower() == name_or_path.lower():
            return f
    raise FileNotFoundError(f"no instance file or bundled instance named {name_or_path!r}")


def load_instance(name_or_path: str | os.PathLike, opt_tour: str | os.PathLike | None = None,
                  opt_cost: float | None = None) -> tuple[Instance, "object | None"]:
    """Load an instance and its optimum.

    A bundled name (``"eil51"``) or a path is accepted. Without ``opt_tour``,
    a sibling ``<stem>.opt.tour`` is used when present; an optimum tour takes
    precedence over ``opt_cost``. Returns ``(instance, optimum Tour or None)``.
    """
    path = resolve_instance_path(str(name_or_path))
    inst = parse_instance(path.read_text(), source=str(path))
    if opt_tour is None:
        sibling = path.with_name(path.name[: -len(".tsp")] + ".opt.tour") \
            if path.name.endswith(".tsp") else None
        if sibling is not None and sibling.exists():
            opt_tour = sibling
    best = None
    if opt_tour is not None:
        tp = Path(opt_tour)
        best = parse_opt_tour(tp.read_text(), inst, source=str(tp))
        inst = inst.with_optimum(best.cost)
    elif opt_cost is not None:
        inst = inst.with_optimum(int(opt_cost))
    return inst, best


def bundled_instances() -> list[str]:
    return sorted(p.stem for p in data_dir().glob("*.tsp"))
