import random
from fractions import Fraction

import pytest

import noetherkit as nk
from noetherkit.symexpr import SymbolTable
from noetherkit.sysdsl import GeneratorDecl, SystemSpec


def load_fixture(name: str) -> nk.SystemSpec:
    return nk.parse(open(nk.fixture_path(name)).read())


@pytest.fixture(scope="session")
def galilei():
    return load_fixture("galilei")


@pytest.fixture(scope="session")
def magnetic():
    return load_fixture("magnetic")


@pytest.fixture(scope="session")
def scale_free():
    return load_fixture("scale_free")


@pytest.fixture(scope="session")
def oscillator():
    return load_fixture("oscillator")


@pytest.fixture(scope="session")
def galilei_report(galilei):
    return nk.analyze(galilei)


@pytest.fixture(scope="session")
def magnetic_report(magnetic):
    return nk.analyze(magnetic)


@pytest.fixture(scope="session")
def scale_report(scale_free):
    return nk.analyze(scale_free)


@pytest.fixture(scope="session")
def oscillator_report(oscillator):
    return nk.analyze(oscillator)


def random_expr(rng: random.Random, table: SymbolTable, symbols,
                max_terms: int = 4, max_degree: int = 3,
                negative_ok=()) -> nk.Expr:
    """Random canonical expression: a short sum of monomials in the given
    symbols with small rational coefficients."""
    symbols = list(symbols)
    out = table.zero()
    for _ in range(rng.randint(1, max_terms)):
        coeff = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        term = table.const(coeff)
        budget = rng.randint(0, max_degree)
        for _ in range(budget):
            s = rng.choice(symbols)
            if s in negative_ok and rng.random() < 0.25:
                term = term * table.sym(s) ** -1
            else:
                term = term * table.sym(s)
        out = out + term
    return out


def random_spec(rng: random.Random) -> SystemSpec:
    """Random small valid system declaration, for round-trip tests."""
    n = rng.randint(1, 3)
    coords = [f"q{i + 1}" for i in range(n)]
    all_params = ["M", "k", "b", "c"]
    params = all_params[: rng.randint(0, len(all_params))]
    positive = [p for p in params if rng.random() < 0.5]
    table = SymbolTable.build(coords, params, positive)
    conf = list(coords) + [table.time] + list(params)
    lag_syms = conf + list(table.velocities)
    lagrangian = random_expr(rng, table, lag_syms, negative_ok=params)
    gens = []
    for gi in range(rng.randint(1, 3)):
        delta_q = tuple(
            random_expr(rng, table, conf) if rng.random() < 0.7 else table.zero()
            for _ in coords)
        delta_t = (random_expr(rng, table, [table.time] + list(params))
                   if rng.random() < 0.5 else table.zero())
        lam = random_expr(rng, table, conf) if rng.random() < 0.4 else None
        gens.append(GeneratorDecl(f"gen_{gi}", delta_q, delta_t, lam))
    return SystemSpec(f"random_{rng.randint(0, 10 ** 6)}", table,
                      lagrangian, tuple(gens))
