#!/usr/bin/env python3
"""Compiled vs pure-Python gestalt matcher benchmark.

The matcher gates every candidate in group scoring, so its throughput bounds
reward-service latency whenever the database is not the bottleneck. Run after
building the extension:

    python3 benchmarks/bench_match_ratio.py
"""

import random
import statistics
import time

from sqlscore.analyzer import extract_skeleton
from sqlscore.similarity import GESTALT_BACKEND, match_ratio, match_ratio_python

QUERIES = [
    "SELECT name FROM customers WHERE city = 'Rome' AND signup_year > 2019",
    "SELECT T1.city, SUM(T2.total) FROM customers AS T1 JOIN orders AS T2 "
    "ON T1.id = T2.customer_id GROUP BY T1.city ORDER BY SUM(T2.total) DESC",
    "SELECT product, COUNT(*) FROM items WHERE price BETWEEN 5 AND 80 "
    "GROUP BY product HAVING COUNT(*) > 10 LIMIT 20",
    "SELECT name FROM customers WHERE id IN (SELECT customer_id FROM orders "
    "WHERE total > 400) AND city != 'Lima' ORDER BY name",
]


def build_pairs(n: int, seed: int = 17):
    rng = random.Random(seed)
    rendered = [
        extract_skeleton(q, weighted=w).rendered
        for q in QUERIES for w in (False, True)
    ]
    pairs = []
    for _ in range(n):
        a, b = rng.choice(rendered), rng.choice(rendered)
        if rng.random() < 0.3:  # perturb to avoid trivial identical pairs
            cut = rng.randrange(len(b))
            b = b[:cut] + b[cut:][::-1]
        pairs.append((a, b))
    return pairs


def bench(fn, pairs, repeats: int = 5):
    times = []
    checksum = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a, b in pairs:
            checksum += fn(a, b)
        times.append(time.perf_counter() - t0)
    return min(times), checksum


def main():
    pairs = build_pairs(2000)
    mean_len = statistics.mean(len(a) + len(b) for a, b in pairs) / 2

    t_pure, c_pure = bench(match_ratio_python, pairs)
    t_active, c_active = bench(match_ratio, pairs)
    assert abs(c_pure - c_active) < 1e-9, "backends disagree"

    n = len(pairs)
    print(f"active backend : {GESTALT_BACKEND}")
    print(f"pairs          : {n} (mean rendered length {mean_len:.0f} chars)")
    print(f"{'backend':<10} | {'total s':>9} | {'pairs/s':>10} | {'us/pair':>8}")
    print("-" * 48)
    for name, t in (("python", t_pure), (GESTALT_BACKEND, t_active)):
        print(f"{name:<10} | {t:9.4f} | {n / t:10.0f} | {t / n * 1e6:8.1f}")
    if GESTALT_BACKEND == "compiled":
        print(f"speedup        : {t_pure / t_active:.1f}x")


if __name__ == "__main__":
    main()
