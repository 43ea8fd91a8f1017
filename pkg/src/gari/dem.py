"""Detector error models: parsing, canonicalization and detector typing.

Only the flattened text form is accepted (no ``repeat`` blocks). Decomposition
separators ``^`` are flattened by symmetric difference, so the resulting
mechanisms describe the undecomposed correlated model.
"""

from __future__ import annotations

import dataclasses
import gzip
import io
import logging
import pathlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

X_TYPE = 0
Z_TYPE = 1
_TYPE_NAMES = {"X": X_TYPE, "Z": Z_TYPE}


class DemSyntaxError(ValueError):
    """Malformed DEM text; carries the offending line number."""

    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class ErrorMechanism:
    """One independent fault class.

    Attributes:
        probability: Firing probability, strictly between 0 and 1.
        detectors: Sorted detector indices flipped by the fault.
        observables: Sorted logical observable indices flipped by the fault.
    """

    probability: float
    detectors: tuple[int, ...] = ()
    observables: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.probability < 1.0:
            raise ValueError(f"probability {self.probability} outside (0, 1)")
        for name in ("detectors", "observables"):
            v = getattr(self, name)
            if len(set(v)) != len(v):
                raise ValueError(f"duplicate {name} in {v}")

    @property
    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.detectors, self.observables

    @property
    def undetectable(self) -> bool:
        """True for a logical fault that flips no detector."""
        return not self.detectors and bool(self.observables)


@dataclass(frozen=True)
class DetectorTyping:
    """Total map from detector index to X-type (0) or Z-type (1)."""

    types: np.ndarray
    source: str = "sidecar-file"

    @property
    def num_detectors(self) -> int:
        return int(self.types.shape[0])

    def type_of(self, det: int) -> str:
        return "X" if self.types[det] == X_TYPE else "Z"

    @property
    def x_detectors(self) -> np.ndarray:
        return np.flatnonzero(self.types == X_TYPE)

    @property
    def z_detectors(self) -> np.ndarray:
        return np.flatnonzero(self.types == Z_TYPE)


@dataclass(frozen=True)
class DemModel:
    mechanisms: tuple[ErrorMechanism, ...]
    num_detectors: int
    num_observables: int
    typing: DetectorTyping | None = None
    coords: Mapping[int, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for m in self.mechanisms:
            if m.detectors and m.detectors[-1] >= self.num_detectors:
                raise ValueError(f"detector index {m.detectors[-1]} >= {self.num_detectors}")
            if m.observables and m.observables[-1] >= self.num_observables:
                raise ValueError(f"observable index {m.observables[-1]} >= {self.num_observables}")
        if self.typing is not None and self.typing.num_detectors != self.num_detectors:
            raise ValueError("typing does not cover the model's detectors")

    def with_typing(self, typing: DetectorTyping) -> "DemModel":
        return dataclasses.replace(self, typing=typing)


# -- parsing -----------------------------------------------------------------

_INSTR = re.compile(r"^([A-Za-z_]+)\s*(?:\(([^)]*)\))?\s*(.*)$")


def _parse_args(raw: str | None, lineno: int) -> list[float]:
    if raw is None or not raw.strip():
        return []
    try:
        return [float(a) for a in raw.split(",")]
    except ValueError:
        raise DemSyntaxError(lineno, f"bad argument list ({raw})") from None


def _target_index(tok: str, prefix: str, lineno: int) -> int:
    if not tok.startswith(prefix) or not tok[1:].isdigit():
        raise DemSyntaxError(lineno, f"bad target {tok!r}")
    return int(tok[1:])


def parse_dem(text: str | Iterable[str]) -> DemModel:
    """Parse flattened DEM text into a model without typing.

    One mechanism is produced per ``error(...)`` line; no merging happens
    here (see `canonicalize`).

    Raises:
        DemSyntaxError: on malformed lines, ``repeat`` blocks, or a
            probability outside (0, 1).
    """
    lines = text.splitlines() if isinstance(text, str) else text
    shift = 0
    mechs: list[ErrorMechanism] = []
    coords: dict[int, tuple[float, ...]] = {}
    max_det = -1
    max_obs = -1
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _INSTR.match(line)
        if m is None:
            raise DemSyntaxError(lineno, f"cannot parse {line!r}")
        name, raw_args, rest = m.group(1).lower(), m.group(2), m.group(3)
        args = _parse_args(raw_args, lineno)
        toks = rest.split()
        if name == "error":
            if len(args) != 1:
                raise DemSyntaxError(lineno, "error() takes exactly one probability")
            p = args[0]
            if not 0.0 < p < 1.0:
                raise DemSyntaxError(lineno, f"probability {p} outside (0, 1)")
            dets: set[int] = set()
            obs: set[int] = set()
            for tok in toks:
                if tok == "^":
                    continue
                if tok[0] in "Dd":
                    dets ^= {_target_index(tok.upper(), "D", lineno) + shift}
                elif tok[0] in "Ll":
                    obs ^= {_target_index(tok.upper(), "L", lineno)}
                else:
                    raise DemSyntaxError(lineno, f"bad target {tok!r}")
            for tok in toks:
                if tok[0] in "Dd":
                    max_det = max(max_det, int(tok[1:]) + shift)
                elif tok[0] in "Ll":
                    max_obs = max(max_obs, int(tok[1:]))
            mechs.append(ErrorMechanism(p, tuple(sorted(dets)), tuple(sorted(obs))))
        elif name == "detector":
            for tok in toks:
                k = _target_index(tok.upper(), "D", lineno) + shift
                coords[k] = tuple(args)
                max_det = max(max_det, k)
        elif name == "logical_observable":
            for tok in toks:
                max_obs = max(max_obs, _target_index(tok.upper(), "L", lineno))
        elif name == "shift_detectors":
            if len(toks) != 1 or not toks[0].isdigit():
                raise DemSyntaxError(lineno, "shift_detectors needs one non-negative integer")
            shift += int(toks[0])
        elif name == "repeat":
            raise DemSyntaxError(lineno, "repeat blocks are not supported; flatten the model first")
        else:
            raise DemSyntaxError(lineno, f"unknown instruction {name!r}")
    return DemModel(tuple(mechs), max_det + 1, max_obs + 1, None, coords)


def xor_fold(probs: Iterable[float]) -> float:
    """Probability that an odd number of independent events fire."""
    q = 0.0
    for p in probs:
        q = q * (1.0 - p) + p * (1.0 - q)
    return q


def canonicalize(mechs: Sequence[ErrorMechanism]) -> list[ErrorMechanism]:
    """Merge mechanisms with identical symptoms and drop silent ones.

    Members sharing a (detectors, observables) key are folded with
    ``p + q - 2pq``. Mechanisms with no detectors and no observables are
    dropped. Undetectable logical faults are kept (and logged); rejecting
    them is left to the correlated-model builder. The result is sorted by
    key, so it does not depend on input order.
    """
    groups: dict[tuple, list[float]] = {}
    for m in mechs:
        if not m.detectors and not m.observables:
            continue
        groups.setdefault(m.key, []).append(m.probability)
    out = []
    for key in sorted(groups):
        # sorting the members makes the fold bit-identical under permutation
        p = xor_fold(sorted(groups[key]))
        if not 0.0 < p < 1.0:
            raise ValueError(f"merged probability {p} for {key} outside (0, 1)")
        out.append(ErrorMechanism(p, key[0], key[1]))
    n_undet = sum(1 for m in out if m.undetectable)
    if n_undet:
        log.warning("%d undetectable logical fault(s) in model", n_undet)
    return out


def canonical_model(model: DemModel) -> DemModel:
    return dataclasses.replace(model, mechanisms=tuple(canonicalize(model.mechanisms)))


# -- detector typing ------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateRule:
    """Type detectors by the value of coordinate ``index``."""

    index: int
    values: Mapping[float, str]


def parse_sidecar(text: str) -> dict[str, list[int]]:
    """Parse ``X: <indices>`` / ``Z: <indices>`` entries (newline or ';')."""
    out: dict[str, list[int]] = {}
    for chunk in re.split(r"[;\n]", text):
        chunk = chunk.split("#", 1)[0].strip()
        if not chunk:
            continue
        label, sep, rest = chunk.partition(":")
        label = label.strip().upper()
        if not sep or label not in _TYPE_NAMES:
            raise ValueError(f"bad sidecar entry {chunk!r}")
        if label in out:
            raise ValueError(f"duplicate sidecar entry for {label}")
        out[label] = [int(t) for t in rest.split()]
    return out


def classify_detectors(model: DemModel,
                       rule: CoordinateRule | Mapping[str, Sequence[int]] | str) -> DetectorTyping:
    """Assign X/Z type to every detector of ``model``.

    ``rule`` is a `CoordinateRule`, a mapping ``{"X": [...], "Z": [...]}`` or
    the text of a sidecar file.
    """
    n = model.num_detectors
    types = np.full(n, -1, dtype=np.int8)
    if isinstance(rule, CoordinateRule):
        for k in range(n):
            c = model.coords.get(k)
            if c is None or len(c) <= rule.index:
                raise ValueError(f"detector D{k} has no coordinate {rule.index}")
            v = c[rule.index]
            if v not in rule.values:
                raise ValueError(f"detector D{k}: unknown coordinate value {v}")
            types[k] = _TYPE_NAMES[rule.values[v].upper()]
        return DetectorTyping(types, "coordinate-rule")

    listing = parse_sidecar(rule) if isinstance(rule, str) else rule
    for label, idx in listing.items():
        t = _TYPE_NAMES[label.upper()]
        for k in idx:
            if not 0 <= k < n:
                raise ValueError(f"sidecar index {k} out of range for {n} detectors")
            if types[k] != -1:
                raise ValueError(f"detector D{k} listed under both types")
            types[k] = t
    missing = np.flatnonzero(types < 0)
    if missing.size:
        raise ValueError(f"{missing.size} untyped detector(s), first D{missing[0]}")
    return DetectorTyping(types, "sidecar-file")


def parse_coordinate_rule(text: str) -> CoordinateRule:
    """Parse ``"3:0=X,1=Z"`` into a `CoordinateRule`."""
    idx, _, body = text.partition(":")
    values = {}
    for item in body.split(","):
        v, _, t = item.partition("=")
        if t.strip().upper() not in _TYPE_NAMES:
            raise ValueError(f"bad coordinate rule item {item!r}")
        values[float(v)] = t.strip().upper()
    return CoordinateRule(int(idx), values)


# -- I/O ------------------------------------------------------------------------

def _read_text(path) -> str:
    path = pathlib.Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt") as fh:
            return fh.read()
    return path.read_text()


def default_sidecar(path) -> pathlib.Path:
    """``foo.dem`` / ``foo.dem.gz`` -> ``foo.typing``."""
    path = pathlib.Path(path)
    name = path.name
    for suffix in (".gz", ".dem"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return path.with_name(name + ".typing")


def load_dem(path, typing: CoordinateRule | Mapping | str | None = None) -> DemModel:
    """Read, canonicalize and type a DEM file.

    Without an explicit ``typing`` the sidecar next to the file is used.
    A string ``typing`` is interpreted as a sidecar path.
    """
    model = canonical_model(parse_dem(_read_text(path)))
    if typing is None:
        sidecar = default_sidecar(path)
        if not sidecar.exists():
            raise FileNotFoundError(f"no detector typing given and {sidecar} not found")
        typing = sidecar.read_text()
    elif isinstance(typing, (str, pathlib.Path)):
        typing = pathlib.Path(typing).read_text()
    return model.with_typing(classify_detectors(model, typing))


def _fmt_coord(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def to_text(model: DemModel) -> str:
    """Serialize a model back to flattened DEM text."""
    buf = io.StringIO()
    for m in model.mechanisms:
        targets = [f"D{k}" for k in m.detectors] + [f"L{k}" for k in m.observables]
        buf.write(f"error({m.probability!r}) {' '.join(targets)}\n")
    for k in range(model.num_detectors):
        c = model.coords.get(k)
        if c:
            buf.write(f"detector({', '.join(_fmt_coord(v) for v in c)}) D{k}\n")
        else:
            buf.write(f"detector D{k}\n")
    for k in range(model.num_observables):
        buf.write(f"logical_observable L{k}\n")
    return buf.getvalue()
