import csv

import pytest

from typhoon_resilience.grid_case import bundled_case, bundled_path, TerrainGrid


@pytest.fixture(scope="session")
def rts79():
    return bundled_case("rts79")


@pytest.fixture(scope="session")
def rts79_terrain():
    return TerrainGrid.load(bundled_path("rts79_terrain.csv"))


def write_case(d, buses, gens, lines, pos=None):
    """Write a small case to directory ``d``.

    lines: (id, from, to, x, limit) tuples; straight polylines between ``pos``.
    """
    pos = pos or {b: (22.0 + 0.05 * i, 112.0 + 0.05 * (i % 2)) for i, b in enumerate(sorted(buses))}
    with open(d / "buses.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "load_mw"])
        for b, l in buses.items():
            w.writerow([b, l])
    with open(d / "generators.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bus", "pmax_mw", "pmin_mw"])
        for b, p in gens:
            w.writerow([b, p, 0])
    with open(d / "corridors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "from", "to", "x_pu", "limit_mw", "vd_line", "vd_tower", "gamma", "op_years",
                    "polyline"])
        for cid, a, b, x, lim in lines:
            pa, pb = pos.get(a, (22.0, 112.0)), pos.get(b, (22.1, 112.1))
            w.writerow([cid, a, b, x, lim, 36, 42, "", 15, f"{pa[0]},{pa[1]};{pb[0]},{pb[1]}"])
    return d / "buses.csv", d / "generators.csv", d / "corridors.csv"


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record an acceptance outcome: ``criterion(n, ok, detail)``."""
    def record(n, ok, detail):
        ACCEPTANCE.setdefault(n, []).append((bool(ok), detail))
        print(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[n]
        ok = all(e[0] for e in entries)
        shown = [d for good, d in entries if not good] if not ok else [d for _, d in entries]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {'; '.join(shown)}")
