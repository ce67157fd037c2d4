"""Duhamel iterates J_T, J_n and the truncated expansion of the NLS solution.

Time dependence on [p, t_end] is carried by Chebyshev interpolation at
Chebyshev-Gauss nodes; each iterate integrates the cubic term of lower ones.
"""

import logging
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C

from ..config import config
from ..models.errors import ConfigError
from .nls import NlsSystem
from .trees import SignedTree, enumerate_trees

logger = logging.getLogger(__name__)


class DuhamelSolver:
    """Iterates of a_k(t) started from ``a0`` at time ``p``."""

    def __init__(
        self,
        system: NlsSystem,
        a0: np.ndarray,
        p: float = 0.0,
        t_end: Optional[float] = None,
        nodes: Optional[int] = None,
    ):
        self.system = system
        self.a0 = np.asarray(a0, dtype=complex)
        self.p = float(p)
        self.t_end = self.p + 1.0 if t_end is None else float(t_end)
        if self.t_end <= self.p:
            raise ConfigError(f"Duhamel interval [{self.p}, {self.t_end}] is empty")
        self.nodes = config.diagram.chebyshev_nodes if nodes is None else nodes
        self._orders: list[np.ndarray] = [np.broadcast_to(self.a0, (self.nodes, len(self.a0)))]

    @cached_property
    def _x(self) -> np.ndarray:
        j = np.arange(self.nodes)
        return np.cos(np.pi * (j + 0.5) / self.nodes)[::-1]

    @cached_property
    def times(self) -> np.ndarray:
        return self._to_t(self._x)

    @cached_property
    def _fit(self) -> np.ndarray:
        return np.linalg.inv(C.chebvander(self._x, self.nodes - 1))

    def _to_t(self, x):
        return self.p + 0.5 * (np.asarray(x) + 1.0) * (self.t_end - self.p)

    def _to_x(self, t):
        return 2.0 * (np.asarray(t, dtype=float) - self.p) / (self.t_end - self.p) - 1.0

    def primitive(self, values: np.ndarray) -> np.ndarray:
        """Chebyshev coefficients of the integral from p of node ``values`` ``(Q, M)``."""
        coef = self._fit @ values
        return C.chebint(coef, lbnd=-1.0, scl=0.5 * (self.t_end - self.p), axis=0)

    def _evaluate(self, coef: np.ndarray, t) -> np.ndarray:
        x = self._to_x(t)
        if np.any(x < -1 - 1e-12) or np.any(x > 1 + 1e-12):
            raise ConfigError(f"Time {t} lies outside [{self.p}, {self.t_end}]")
        return C.chebval(x, coef).T if np.ndim(x) else C.chebval(x, coef)

    def _integrate_cubic(self, f, g, h, zeta: int = 1) -> np.ndarray:
        cubic = self.system.cubic
        vals = np.stack([cubic(f[j], g[j], h[j], t, zeta) for j, t in enumerate(self.times)])
        return self.primitive(vals)

    # -- iterates -----------------------------------------------------------

    def order_values(self, n: int) -> np.ndarray:
        """J_n at the Chebyshev nodes, shape ``(Q, M)``."""
        while len(self._orders) <= n:
            m = len(self._orders)
            total = np.zeros((self.nodes, len(self.a0)), dtype=complex)
            for n1 in range(m):
                for n2 in range(m - n1):
                    n3 = m - 1 - n1 - n2
                    total = total + self._integrand(n1, n2, n3)
            self._orders.append(self._node_values(self.primitive(total)))
            logger.debug(f"Computed Duhamel iterate of order {m}")
        return self._orders[n]

    def _integrand(self, n1: int, n2: int, n3: int) -> np.ndarray:
        f, g, h = self._orders[n1], np.conj(self._orders[n2]), self._orders[n3]
        cubic = self.system.cubic
        return np.stack([cubic(f[j], g[j], h[j], t) for j, t in enumerate(self.times)])

    def _node_values(self, coef: np.ndarray) -> np.ndarray:
        return C.chebval(self._x, coef).T

    def iterate(self, n: int, t: float) -> np.ndarray:
        """J_n(t) for every mode."""
        if n == 0:
            return self.a0.copy()
        self.order_values(n - 1)
        total = np.zeros((self.nodes, len(self.a0)), dtype=complex)
        for n1 in range(n):
            for n2 in range(n - n1):
                total = total + self._integrand(n1, n2, n - 1 - n1 - n2)
        return self._evaluate(self.primitive(total), t)

    def truncated(self, order: int, t: float) -> np.ndarray:
        """a_tr(t) = sum_{n <= order} J_n(t)."""
        return sum((self.iterate(n, t) for n in range(order + 1)), np.zeros_like(self.a0))

    def tree_iterate(self, tree: SignedTree, t: float) -> np.ndarray:
        """J_T(t) for a single signed tree."""
        return self._evaluate(self._tree_coef(tree, 0), t) if tree.order else self._leaf(tree.sign)

    def _leaf(self, sign: int) -> np.ndarray:
        return self.a0.copy() if sign > 0 else np.conj(self.a0)

    def _tree_node_values(self, tree: SignedTree, node: int) -> np.ndarray:
        if tree.is_leaf(node):
            return np.broadcast_to(self._leaf(tree.signs[node]), (self.nodes, len(self.a0)))
        return self._node_values(self._tree_coef(tree, node))

    def _tree_coef(self, tree: SignedTree, node: int) -> np.ndarray:
        f, g, h = (self._tree_node_values(tree, c) for c in tree.children[node])
        return self._integrate_cubic(f, g, h, tree.signs[node])

    def order_from_trees(self, n: int, t: float) -> np.ndarray:
        """J_n(t) as the sum of J_T over + trees of order n."""
        return sum(
            (self.tree_iterate(tr, t) for tr in enumerate_trees(n)), np.zeros_like(self.a0)
        )


def truncated_solution(
    system: NlsSystem, a0: np.ndarray, order: int, times: Sequence[float], p: float = 0.0
) -> np.ndarray:
    """a_tr at each of ``times`` (all within [p, p + 1])."""
    solver = DuhamelSolver(system, a0, p)
    return np.stack([solver.truncated(order, t) for t in times])


__all__ = ["DuhamelSolver", "truncated_solution"]
