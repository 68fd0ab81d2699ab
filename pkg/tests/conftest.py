import json
import random
import sqlite3
from pathlib import Path

import pytest

from sqlscore.harness import DatabaseRegistry, TimingConfig, clear_execution_log

FIXTURE_DB_ID = "shop"
FIXTURE_SOURCE = "unit"


def build_shop_db(path: Path) -> None:
    rng = random.Random(42)
    con = sqlite3.connect(path)
    con.executescript(
        """
        CREATE TABLE customers (
            id INTEGER,
            name TEXT,
            city TEXT,
            signup_year INTEGER
        );
        CREATE TABLE orders (
            id INTEGER,
            customer_id INTEGER,
            total REAL,
            placed_on TEXT,
            status TEXT
        );
        CREATE TABLE items (
            id INTEGER,
            order_id INTEGER,
            product TEXT,
            qty INTEGER,
            price REAL
        );
        """
    )
    # Sized so representative queries run in the milliseconds, and no primary
    # keys so point lookups scan: per-run timing noise then stays small
    # relative to measured latency, which the VES comparisons depend on.
    n_customers, n_orders, n_items = 60000, 30000, 50000
    cities = ["Rome", "Paris", "Tabuk", "Lima", "Oslo"]
    names = ["Ada", "Grace", "Alan", "Edsger", "Barbara", "Tony", "Radia"]
    products = ["widget", "gadget", "sprocket", "gizmo"]
    statuses = ["open", "shipped", "returned"]
    con.executemany(
        "INSERT INTO customers VALUES (?, ?, ?, ?)",
        [
            (cid, rng.choice(names), rng.choice(cities), rng.randint(2015, 2024))
            for cid in range(1, n_customers + 1)
        ],
    )
    con.executemany(
        "INSERT INTO orders VALUES (?, ?, ?, ?, ?)",
        [
            (
                oid,
                rng.randint(1, n_customers),
                round(rng.uniform(5.0, 500.0), 2),
                f"2025-0{rng.randint(1, 9)}-{rng.randint(10, 28)}",
                rng.choice(statuses),
            )
            for oid in range(1, n_orders + 1)
        ],
    )
    con.executemany(
        "INSERT INTO items VALUES (?, ?, ?, ?, ?)",
        [
            (
                iid,
                rng.randint(1, n_orders),
                rng.choice(products),
                rng.randint(1, 9),
                round(rng.uniform(1.0, 80.0), 2),
            )
            for iid in range(1, n_items + 1)
        ],
    )
    con.commit()
    con.close()


@pytest.fixture(scope="session")
def fixture_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("dbs")
    db_path = root / "shop.sqlite"
    build_shop_db(db_path)
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({
        "databases": [
            {
                "db_id": FIXTURE_DB_ID,
                "source": FIXTURE_SOURCE,
                "engine": "sqlite",
                "location": "shop.sqlite",
            }
        ]
    }))
    return {"db": db_path, "manifest": manifest}


@pytest.fixture(scope="session")
def registry(fixture_env):
    return DatabaseRegistry.load(fixture_env["manifest"])


@pytest.fixture
def fast_timing():
    return TimingConfig(warmup_runs=0, measured_runs=2, timeout_s=10.0)


@pytest.fixture(autouse=True)
def _clean_execution_log():
    clear_execution_log()
    yield


# One pass/fail line per acceptance criterion, printed after the run.
ACCEPTANCE_RESULTS: dict[str, bool] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}")
