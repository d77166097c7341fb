"""Regression fixtures: oracle values computed once and stored as JSON.

The directory defaults to the ``fixtures`` folder shipped with the package and
can be redirected with the PCT_PDM_FIXTURES environment variable.
Regenerate with ``python -m pct_pdm.fixtures [--out DIR]``; never hand-edit.
"""
from __future__ import annotations

import argparse
import json
import os
from pathlib import Path
import tempfile

ENV_VAR = "PCT_PDM_FIXTURES"


def fixture_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "fixtures"


def atomic_write(path, text):
    """Write via a temporary file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_fixture(name, directory=None):
    path = Path(directory or fixture_dir()) / f"{name}.json"
    with open(path) as fh:
        return json.load(fh)


def save_fixture(name, data, directory=None):
    path = Path(directory or fixture_dir()) / f"{name}.json"
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _generators():
    from . import eigensolver as es
    from . import mass_catalog as mc
    from . import pct_maps as pm
    from . import radial3d as r3

    def example1_osc1_norms():
        s = pm.oscillator1(mc.build("example1", gamma=2.0), 1.0, 1.0)
        return {
            "meta": {"profile": "example1", "gamma": 2.0, "alpha": 1.0, "tau": 1.0, "rule": "graded Gauss-Legendre"},
            "A": [s.A(n) for n in range(6)],
        }

    def example1_osc1_verify():
        s = pm.oscillator1(mc.build("example1", gamma=2.0), 1.0, 1.0)
        grid = es.Grid(-15.0, 15.0, 4000)
        r = es.verify(s, grid, 5, 1e-5)
        return {
            "meta": {"grid": grid.to_dict(), "tol": 1e-5, "extrapolation": "richardson"},
            "E_numeric": r.numeric,
            "E_raw": r.numeric_raw,
        }

    def morse_example4_verify():
        s = pm.morse(mc.build("example4", **{"lambda": 1.0}), 1.0, 9.0, 1.0)
        grid = es.Grid(0.0, 20.0, 8000)
        r = es.verify(s, grid, 3, 1e-4)
        return {
            "meta": {"grid": grid.to_dict(), "n_check": 3, "tol": 1e-4, "lambda": 1.0, "xi": 9.0, "tau": 1.0},
            "E_numeric": r.numeric,
            "box_max_shift": r.box_stability["max_shift"],
            "chosen": r.adjudication["chosen"],
        }

    def radial_case_a_offsets():
        out = {"meta": {"alpha": 1.0, "gamma": 2.0, "C": 1.0, "grid": es.Grid(0.0, 10.0, 6000).to_dict(),
                        "extrapolation": "aitken"}}
        for ell in (0, 1):
            r = es.verify(r3.powerlaw_case_a(1.0, 2.0, 1.0, ell), es.Grid(0.0, 10.0, 6000), 3, 1e-6, "aitken")
            out[f"ell{ell}"] = {"E_numeric": r.numeric, "offset_printed": r.offsets["printed"]["mean"]}
        return out

    def singular_log_levels():
        grid = es.Grid(-8.0, 8.0, 4000, "Log")
        r = es.verify(r3.powerlaw_singular(1.0, 1.0), grid, 3, 1e-6)
        return {"meta": {"alpha": 1.0, "C": 1.0, "grid": grid.to_dict()}, "E_numeric": r.numeric}

    return {
        "example1_osc1_norms": example1_osc1_norms,
        "example1_osc1_verify": example1_osc1_verify,
        "morse_example4_verify": morse_example4_verify,
        "radial_case_a_offsets": radial_case_a_offsets,
        "singular_log_levels": singular_log_levels,
    }


def generate(directory=None, names=None):
    gens = _generators()
    written = []
    for name in names or sorted(gens):
        data = gens[name]()
        data.setdefault("meta", {})["generator"] = f"pct_pdm.fixtures:{name}"
        written.append(save_fixture(name, data, directory))
    return written


def main(argv=None):
    ap = argparse.ArgumentParser(description="regenerate regression fixtures")
    ap.add_argument("--out", help="target directory (default: fixture_dir())")
    ap.add_argument("names", nargs="*", help="fixture names (default: all)")
    args = ap.parse_args(argv)
    for path in generate(args.out, args.names or None):
        print(path)


if __name__ == "__main__":
    main()
