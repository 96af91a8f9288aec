"""Regenerate theory_values.json with 50-digit mpmath evaluations.

    python3 theory_oracle.py > theory_values.json

Arguments are drawn as doubles and fed to mpmath exactly, so the only
error in a comparison is the Rust side's.
"""

import json
import random

import mpmath as mp

mp.mp.dps = 50
rng = random.Random(20240601)
POINTS = 20


def ln2(n):
    return mp.log(n) ** 2


def g1(g):
    return mp.gamma(1 / g + 1)


def theorem1_ln(n, c0):
    return ln2(n) / (4 * c0 * n)


def theorem2_ln(n, c0, g, e_is_2g):
    e = 2 * g if e_is_2g else 2
    return g * ln2(n) / (4 * g1(g) ** e * c0 * mp.mpf(n) ** g)


def lambda_star(n, c0):
    return ln2(n) / (4 * c0 * c0 * n)


def lambda_star_gamma(n, c0, g):
    return ln2(n) / (4 * c0 * c0 * g1(g) ** (2 * g) * mp.mpf(n) ** g)


def st_product_bound(k, t):
    kf = mp.factorial(k)
    return t**k / kf**2 * (k * mp.log(k * k / t) + 2 * kf / mp.mpf(k) ** k)


def st_product_bound_gamma(k, t, g):
    a, gk = g1(g), mp.gamma(mp.mpf(k) / g + 1)
    return t ** (k / g) * a ** (2 * k) / gk**2 * ((k / g) * mp.log(k * k / t) + 2 * gk / (mp.mpf(k) ** k * a**k))


def simplex_volume_bound(k, g, u):
    return u ** (k / g) * g1(g) ** k / mp.gamma(k / g + 1)


def beta_of_n(n):
    return (1 - 1 / mp.sqrt(mp.log(n))) ** 2 / 4


def summand(n, beta, l):
    t = beta * ln2(n) / n
    lf = mp.factorial(l)
    return mp.mpf(n) ** (l - 1) / lf**2 * t**l * (l * mp.log(l * l / t) + 2 * lf / mp.mpf(l) ** l)


def expected_pbeta(n, beta):
    total = mp.mpf(0)
    for l in range(1, n):
        u = summand(n, beta, l)
        total += u
        if l > 10 and u < total * mp.mpf(10) ** -40:
            break
    return total


def bh_constant(s):
    return 1 / mp.gamma(1 + 1 / s) ** s


def f(x):
    return float(x)


def main():
    rows = []

    def add(name, args, value):
        rows.append({"fn": name, "args": args, "value": mp.nstr(value, 30)})

    for _ in range(POINTS):
        n = rng.randint(10, 10**7)
        c0 = rng.uniform(0.01, 2.0)
        g = rng.uniform(0.1, 1.0)
        add("theorem1_ln", [n, c0], theorem1_ln(n, mp.mpf(c0)))
        add("theorem2_ln_gamma2", [n, c0, g], theorem2_ln(n, mp.mpf(c0), mp.mpf(g), False))
        add("theorem2_ln_gamma2gamma", [n, c0, g], theorem2_ln(n, mp.mpf(c0), mp.mpf(g), True))
        add("lambda_star", [n, c0], lambda_star(n, mp.mpf(c0)))
        add("lambda_star_gamma", [n, c0, g], lambda_star_gamma(n, mp.mpf(c0), mp.mpf(g)))
        add("beta_of_n", [n], beta_of_n(n))
        s = rng.uniform(0.1, 0.95)
        add("bh_constant", [s], bh_constant(mp.mpf(s)))

        k = rng.randint(1, 12)
        t = rng.uniform(1e-3, 0.9) * k * k
        add("st_product_bound", [k, t], st_product_bound(k, mp.mpf(t)))
        add("st_product_bound_gamma", [k, t, g], st_product_bound_gamma(k, mp.mpf(t), mp.mpf(g)))
        u = rng.uniform(0.01, 3.0)
        add("simplex_volume_bound", [k, g, u], simplex_volume_bound(k, mp.mpf(g), mp.mpf(u)))

        nb = rng.randint(100, 10**6)
        beta = rng.uniform(0.02, 0.25)
        l = rng.randint(1, 30)
        add("ln_first_moment_summand", [nb, beta, l], mp.log(summand(nb, mp.mpf(beta), l)))
        add("expected_pbeta", [nb, beta], expected_pbeta(nb, mp.mpf(beta)))

    for n in (10**3, 10**4, 10**5, 10**6):
        add("expected_pbeta_at_beta_of_n", [n], expected_pbeta(n, mp.mpf(f(beta_of_n(n)))))

    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
