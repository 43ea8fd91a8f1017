from __future__ import annotations

import pathlib
import sys

import numpy as np
import pytest

from gari.augment import build_correlated, build_gari
from gari.dem import DemModel, DetectorTyping, ErrorMechanism

sys.path.insert(0, str(pathlib.Path(__file__).parent))

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"


def toy_model() -> DemModel:
    """D0 is X-type, D1 Z-type; a Z fault, an X fault and their Y combination."""
    mechs = (
        ErrorMechanism(0.01, (0,), ()),
        ErrorMechanism(0.01, (1,), (0,)),
        ErrorMechanism(0.02, (0, 1), (0,)),
    )
    return DemModel(mechs, 2, 1, DetectorTyping(np.array([0, 1], dtype=np.int8)))


@pytest.fixture
def toy():
    cm = build_correlated(toy_model())
    return cm, build_gari(cm)


def fixture_path(d: int, p: float = 0.001) -> pathlib.Path:
    return DATA / f"bb_d{d}_p{p:g}.dem.gz"


def require_fixture(d: int, p: float = 0.001) -> pathlib.Path:
    path = fixture_path(d, p)
    if not path.exists():
        pytest.skip(f"{path.name} missing; run tools/make_bb_dems.py")
    return path


ACCEPTANCE: list[str] = []


def acceptance_line(criterion: int, ok: bool | None, detail: str) -> str:
    status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
    line = f"criterion {criterion}: {status}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
