"""Hadamard matrix constructions, verification and the order registry.

A registry answers "which orders are Hadamard orders?" and resolves
``n = h + d`` with h the largest registered order not exceeding n.
"""

from __future__ import annotations

import bisect
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np

from .signmatrix import SignMatrix

DEFAULT_SIZE_LIMIT = 4096

# Multiples of 4 below 2000 with no known Hadamard matrix.
UNKNOWN_ORDERS_BELOW_2000 = (668, 716, 892, 1132, 1244, 1388, 1436, 1676, 1772, 1916, 1948, 1964)

Recipe = Union[tuple[str, int], tuple[str, "Recipe", "Recipe"]]


class HadamardError(ValueError):
    pass


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def _sylvester_array(k: int) -> np.ndarray:
    h = np.ones((1, 1), dtype=np.int8)
    core = np.array([[1, 1], [1, -1]], dtype=np.int8)
    for _ in range(k):
        h = np.kron(core, h)
    return h


def sylvester(k: int, size_limit: int = DEFAULT_SIZE_LIMIT) -> SignMatrix:
    if k < 0:
        raise HadamardError(f"exponent must be non-negative, got {k}")
    if 2 ** k > size_limit:
        raise HadamardError(f"order 2^{k} exceeds size limit {size_limit}")
    return SignMatrix.from_array(_sylvester_array(k))


def _jacobsthal(q: int) -> np.ndarray:
    chi = np.full(q, -1, dtype=np.int8)
    chi[0] = 0
    chi[[(x * x) % q for x in range(1, q)]] = 1
    idx = (np.arange(q)[None, :] - np.arange(q)[:, None]) % q
    return chi[idx]


def _check_paley_prime(q: int, residue: int) -> None:
    if not is_prime(q):
        raise HadamardError(f"q = {q} is not prime")
    if q % 4 != residue:
        raise HadamardError(f"q = {q} is not congruent to {residue} mod 4")


def paley_i(q: int, size_limit: int = DEFAULT_SIZE_LIMIT) -> SignMatrix:
    """Paley type I matrix of order q + 1, for a prime q = 3 (mod 4)."""
    _check_paley_prime(q, 3)
    if q + 1 > size_limit:
        raise HadamardError(f"order {q + 1} exceeds size limit {size_limit}")
    s = np.zeros((q + 1, q + 1), dtype=np.int8)
    s[0, 1:] = 1
    s[1:, 0] = -1
    s[1:, 1:] = _jacobsthal(q)
    return SignMatrix.from_array(s + np.eye(q + 1, dtype=np.int8))


def paley_ii(q: int, size_limit: int = DEFAULT_SIZE_LIMIT) -> SignMatrix:
    """Paley type II matrix of order 2(q + 1), for a prime q = 1 (mod 4)."""
    _check_paley_prime(q, 1)
    if 2 * (q + 1) > size_limit:
        raise HadamardError(f"order {2 * (q + 1)} exceeds size limit {size_limit}")
    c = np.zeros((q + 1, q + 1), dtype=np.int8)
    c[0, 1:] = 1
    c[1:, 0] = 1
    c[1:, 1:] = _jacobsthal(q)
    plus = np.array([[1, 1], [1, -1]], dtype=np.int8)
    minus = np.array([[1, -1], [-1, -1]], dtype=np.int8)
    return SignMatrix.from_array(np.kron(c, plus) + np.kron(np.eye(q + 1, dtype=np.int8), minus))


def is_hadamard(m: SignMatrix) -> bool:
    """True iff ``m @ m.T == order * I`` exactly."""
    if not m.is_square:
        raise ValueError(f"is_hadamard needs a square matrix, got {m.rows}x{m.cols}")
    g = m.gram()
    return bool(np.array_equal(g, m.rows * np.eye(m.rows, dtype=np.int64)))


def kronecker(h1: SignMatrix, h2: SignMatrix) -> SignMatrix:
    for label, m in (("first", h1), ("second", h2)):
        if not m.is_square or not is_hadamard(m):
            raise HadamardError(f"{label} factor is not a Hadamard matrix")
    return SignMatrix.from_array(np.kron(h1.to_array(np.int8), h2.to_array(np.int8)))


def recipe_order(recipe: Recipe) -> int:
    kind = recipe[0]
    if kind == "sylvester":
        return 2 ** recipe[1]
    if kind == "paley1":
        return recipe[1] + 1
    if kind == "paley2":
        return 2 * (recipe[1] + 1)
    if kind == "kron":
        return recipe_order(recipe[1]) * recipe_order(recipe[2])
    raise HadamardError(f"unknown recipe {recipe!r}")


def recipe_label(recipe: Recipe) -> str:
    if recipe[0] == "kron":
        return f"({recipe_label(recipe[1])} x {recipe_label(recipe[2])})"
    return f"{recipe[0]}({recipe[1]})"


@lru_cache(maxsize=64)
def build(recipe: Recipe, size_limit: int = DEFAULT_SIZE_LIMIT) -> SignMatrix:
    kind = recipe[0]
    if kind == "sylvester":
        return sylvester(recipe[1], size_limit)
    if kind == "paley1":
        return paley_i(recipe[1], size_limit)
    if kind == "paley2":
        return paley_ii(recipe[1], size_limit)
    if kind == "kron":
        if recipe_order(recipe) > size_limit:
            raise HadamardError(f"order {recipe_order(recipe)} exceeds size limit {size_limit}")
        return kronecker(build(recipe[1], size_limit), build(recipe[2], size_limit))
    raise HadamardError(f"unknown recipe {recipe!r}")


@dataclass(frozen=True)
class HadamardCert:
    order: int
    recipe: Recipe
    verified: bool

    @property
    def label(self) -> str:
        return recipe_label(self.recipe)


def certify(recipe: Recipe, size_limit: int = DEFAULT_SIZE_LIMIT) -> HadamardCert:
    m = build(recipe, size_limit)
    return HadamardCert(order=m.rows, recipe=recipe, verified=is_hadamard(m))


@dataclass(frozen=True)
class OrderRegistry:
    """A set of Hadamard orders.

    ``mode`` is ``"constructible"`` (every order has a recipe that this package
    can build and verify) or ``"known-table"`` (orders taken on trust from the
    literature or a registry file).
    """

    mode: str
    known_orders: tuple[int, ...]
    recipes: dict[int, Recipe] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("constructible", "known-table"):
            raise ValueError(f"unknown registry mode {self.mode!r}")
        orders = tuple(sorted(set(self.known_orders) | {1, 2, 4}))
        if any(o < 1 for o in orders):
            raise ValueError("orders must be positive")
        object.__setattr__(self, "known_orders", orders)
        if self.mode == "constructible":
            missing = [o for o in orders if o not in self.recipes]
            if missing:
                raise ValueError(f"constructible registry lacks recipes for {missing[:5]}")

    def __contains__(self, order: int) -> bool:
        i = bisect.bisect_left(self.known_orders, order)
        return i < len(self.known_orders) and self.known_orders[i] == order

    def __len__(self) -> int:
        return len(self.known_orders)

    def resolve_gap(self, n: int) -> tuple[int, int]:
        return resolve_gap(n, self)

    def cert(self, order: int) -> HadamardCert:
        if order not in self.recipes:
            raise HadamardError(f"no construction recipe for order {order}")
        return certify(self.recipes[order])

    def matrix(self, order: int) -> SignMatrix:
        """A Hadamard matrix of the given order, if this package can build one."""
        recipe = self.recipes.get(order) or _constructible_recipes(max(order, 4)).get(order)
        if recipe is None:
            raise HadamardError(f"cannot construct a Hadamard matrix of order {order}")
        return build(recipe)


def resolve_gap(n: int, reg: OrderRegistry) -> tuple[int, int]:
    """Largest registered order h <= n, and the gap d = n - h."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    i = bisect.bisect_right(reg.known_orders, n)
    if i == 0:
        raise HadamardError(f"registry has no order <= {n}")
    h = reg.known_orders[i - 1]
    return h, n - h


@lru_cache(maxsize=8)
def _constructible_recipes(limit: int) -> dict[int, Recipe]:
    recipes: dict[int, Recipe] = {}
    k = 0
    while 2 ** k <= limit:
        recipes.setdefault(2 ** k, ("sylvester", k))
        k += 1
    for q in range(3, limit):
        if not is_prime(q):
            continue
        if q % 4 == 3 and q + 1 <= limit:
            recipes.setdefault(q + 1, ("paley1", q))
        if q % 4 == 1 and 2 * (q + 1) <= limit:
            recipes.setdefault(2 * (q + 1), ("paley2", q))
    changed = True
    while changed:
        changed = False
        orders = sorted(o for o in recipes if o > 1)
        for i, a in enumerate(orders):
            for b in orders[i:]:
                if a * b > limit:
                    break
                if a * b not in recipes:
                    recipes[a * b] = ("kron", recipes[a], recipes[b])
                    changed = True
    return recipes


def constructible_registry(limit: int = 1024) -> OrderRegistry:
    recipes = dict(_constructible_recipes(limit))
    return OrderRegistry("constructible", tuple(recipes), recipes)


def known_table_registry(limit: int = 2000) -> OrderRegistry:
    if limit > 2000:
        raise ValueError("the built-in table only covers orders up to 2000")
    orders = [o for o in range(4, limit + 1, 4) if o not in UNKNOWN_ORDERS_BELOW_2000]
    return OrderRegistry("known-table", (1, 2, *orders))


def parse_registry(text: str) -> OrderRegistry:
    orders = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            orders.append(int(line))
        except ValueError:
            raise ValueError(f"line {lineno}: not an integer: {raw!r}") from None
    return OrderRegistry("known-table", tuple(orders))


def load_registry(path: str | Path) -> OrderRegistry:
    return parse_registry(Path(path).read_text(encoding="utf-8"))


def format_registry(reg: OrderRegistry) -> str:
    return f"# {reg.mode} registry, {len(reg)} orders\n" + "".join(f"{o}\n" for o in reg.known_orders)


def default_registry(path: str | Path | None = None) -> OrderRegistry:
    """Registry from ``path``, else from ``$MAXDET_REGISTRY``, else the built-in table."""
    path = path or os.environ.get("MAXDET_REGISTRY")
    if path:
        return load_registry(path)
    return known_table_registry()
