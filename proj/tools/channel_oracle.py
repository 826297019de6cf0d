#!/usr/bin/env python3
"""Straight-line reference values for the link-budget functions.

Writes one CSV row per random input set. The C++ test suite reads the file
and compares every column against its own implementation.

    python3 tools/channel_oracle.py > tests/data/channel_oracle.csv
"""
import math
import random
import sys

PHI, OMEGA0, ETA, GAMMA, K0 = 3.04, -3.61, -23.29, 4.14, 20.7


def path_loss(l, w):
    a = w - OMEGA0
    return 10 * PHI * math.log10(l) + ETA * a * math.exp(-a / GAMMA) + K0


def rate_from_path_loss(b, p, noise, pl):
    return b * math.log2(1 + p * 10 ** (-pl / 10) / noise)


def gain(gt, gr, lam, d, rain_db):
    return gt * gr * lam * lam / (4 * math.pi * d) ** 2 * 10 ** (-rain_db / 10)


def rate_from_gain(b, p, noise, g):
    return b * math.log2(1 + p * g / noise)


def main(n=1000, seed=20240611):
    rng = random.Random(seed)
    cols = ["l", "w", "path_loss", "b", "p", "noise", "pl", "pl_rate", "gt", "gr", "lam", "d", "rain",
            "g_ground", "g_inter", "g", "gain_rate"]
    out = sys.stdout
    out.write(",".join(cols) + "\n")
    for _ in range(n):
        l = 10 ** rng.uniform(1, 4.5)
        w = rng.uniform(0.0, 90.0)
        b = 10 ** rng.uniform(6, 8)
        p = 10 ** rng.uniform(-2, 2)
        noise = 10 ** rng.uniform(-15, -11)
        pl_in = rng.uniform(60, 180)
        gt = 10 ** rng.uniform(0, 5)
        gr = 10 ** rng.uniform(0, 5)
        lam = rng.uniform(0.005, 0.1)
        d = 10 ** rng.uniform(5, 7.6)
        rain = rng.uniform(0, 20)
        g = 10 ** rng.uniform(-20, -8)
        row = [l, w, path_loss(l, w), b, p, noise, pl_in, rate_from_path_loss(b, p, noise, pl_in), gt, gr, lam,
               d, rain, gain(gt, gr, lam, d, rain), gain(gt, gr, lam, d, 0.0), g, rate_from_gain(b, p, noise, g)]
        out.write(",".join(repr(x) for x in row) + "\n")


if __name__ == "__main__":
    main()
