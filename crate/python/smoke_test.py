#!/usr/bin/env python3
"""Smoke test for the parlay_kelly_py extension module.

Build the extension first:

    cargo build -p parlay-kelly-py --release

then run this script from the repository root:

    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_extension():
    """Stage the built cdylib under an importable name and import it."""
    candidates = [
        REPO / "target" / "release" / "libparlay_kelly_py.so",
        REPO / "target" / "debug" / "libparlay_kelly_py.so",
        REPO / "target" / "release" / "libparlay_kelly_py.dylib",
        REPO / "target" / "debug" / "libparlay_kelly_py.dylib",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "extension not built; run `cargo build -p parlay-kelly-py --release` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="parlay_kelly_py_"))
    shutil.copy2(newest, stage / "parlay_kelly_py.so")
    sys.path.insert(0, str(stage))
    import parlay_kelly_py

    return parlay_kelly_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    pk = import_extension()
    print(f"parlay_kelly_py {pk.__version__} loaded")

    # Odds conversion.
    approx(pk.price_from_odds(2.0), 0.5, 1e-15)

    # Single-event closed form on the worked example.
    e1 = pk.Event("e1", [0.6, 0.4], prices=[0.5, 0.5])
    e2 = pk.Event("e2", [0.5, 0.3, 0.2], prices=[0.45, 0.35, 0.25])
    s1 = pk.solve_event(e1)
    s2 = pk.solve_event(e2)
    approx(s1.cash, 0.8, 1e-12)
    approx(s1.stakes[0], 0.2, 1e-12)
    approx(s2.cash, 10.0 / 11.0, 1e-12)
    approx(s2.stakes[0], 1.0 / 11.0, 1e-12)
    assert s1.kkt_pass and s2.kkt_pass
    print(f"solve_event: cash=({s1.cash:.6f}, {s2.cash:.6f}) ok")

    # The exact parlay book is the outer product of the event solutions.
    ms = pk.MarketSet([e1, e2])
    book = pk.build_book(ms)
    assert len(book) == 4
    stakes = {tuple(legs): stake for legs, stake, _ in book.tickets()}
    approx(stakes[(None, None)], 8.0 / 11.0, 1e-12)
    approx(stakes[("1", None)], 2.0 / 11.0, 1e-12)
    approx(stakes[(None, "1")], 0.8 / 11.0, 1e-12)
    approx(stakes[("1", "1")], 0.2 / 11.0, 1e-12)
    approx(sum(stakes.values()), 1.0, 1e-12)
    approx(book.v_par, 0.0251607, 1e-6)
    print(f"build_book: {len(book)} tickets, v_par={book.v_par:.7f} ok")

    # Singles-only optimum reproduces the exact two-binary solution.
    a = pk.Event("a", [0.55, 0.45], prices=[0.5, 0.5])
    b = pk.Event("b", [0.6, 0.4], prices=[0.5, 0.5])
    pair = pk.MarketSet([a, b])
    singles = pk.optimize_singles(pair, tol=1e-12)
    f1, f2 = pk.thorp_exact(0.1, 0.2)
    approx(singles.stakes[0][0], f1, 1e-10)
    approx(singles.stakes[1][0], f2, 1e-10)
    print(f"optimize_singles: f=({f1:.7f}, {f2:.7f}) ok")

    # Forbidding parlays costs growth, but not much.
    v_par, v_sing, gap = pk.growth_gap(pair, tol=1e-12)
    assert gap >= 0.0
    approx(gap, 2.0001334e-4, 1e-8)
    print(f"growth_gap: v_par={v_par:.7f} v_sing={v_sing:.7f} gap={gap:.3e} ok")

    # The generic ticket-space optimizer agrees on the value.
    rows, objective, certificate, iterations = pk.optimize_tickets(ms)
    assert abs(objective - book.v_par) < 1e-8
    print(
        f"optimize_tickets: objective={objective:.9f} "
        f"(certificate {certificate:.2e}, {iterations} iterations) ok"
    )

    # Order estimation on synthetic data.
    xs = [0.1 * k for k in range(1, 7)]
    slope, intercept, r2 = pk.estimate_order(xs, [x**3 for x in xs])
    approx(slope, 3.0, 1e-12)
    approx(r2, 1.0, 1e-12)

    # Low-edge sweep on a symmetric two-binary family: cubic shrinkage,
    # quartic loss.
    out = pk.sweep([[0.5, 0.5], [0.5, 0.5]], [[0.1, -0.1], [0.15, -0.15]])
    assert all(rec["support_ok"] for rec in out["records"])
    assert abs(out["delta_slope"] - 3.0) < 0.15, out["delta_slope"]
    assert abs(out["gap_slope"] - 4.0) < 0.2, out["gap_slope"]
    assert all(rec["gap"] >= -1e-11 for rec in out["records"])
    print(
        f"sweep: delta slope {out['delta_slope']:.4f}, "
        f"gap slope {out['gap_slope']:.4f} ok"
    )

    # Determinism: identical calls give identical floats.
    again = pk.optimize_singles(pair, tol=1e-12)
    assert again.stakes == singles.stakes
    assert again.objective == singles.objective

    # Validation errors surface as ValueError.
    try:
        pk.Event("bad", [0.5, 0.48], prices=[0.5, 0.5])
    except ValueError:
        pass
    else:
        sys.exit("expected ValueError for a bad probability sum")
    assert not math.isnan(v_par)

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
