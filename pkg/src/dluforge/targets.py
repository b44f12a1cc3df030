"""Registry of named analytic target functions for the CLI and test harness.

Targets are selected by name only; no arbitrary code is loaded.
"""

from __future__ import annotations

import numpy as np

from .constructions import TargetFunction
from .network import ParameterError


def _t(name, fn, dim, domain):
    return TargetFunction(name, fn, dim, domain)


_REGISTRY = {
    "identity": lambda: _t("identity", lambda X: X[:, 0], 1, [(-1.0, 1.0)]),
    "ramp": lambda: _t("ramp", lambda X: X[:, 0], 1, [(0.0, 1.0)]),
    "square": lambda: _t("square", lambda X: X[:, 0] ** 2, 1, [(0.0, 1.0)]),
    "square-sym": lambda: _t("square-sym", lambda X: X[:, 0] ** 2, 1, [(-1.0, 1.0)]),
    "cube": lambda: _t("cube", lambda X: X[:, 0] ** 3, 1, [(0.0, 1.0)]),
    "exp": lambda: _t("exp", lambda X: np.exp(X[:, 0]), 1, [(-1.0, 1.0)]),
    "exp-neg-abs": lambda: _t("exp-neg-abs", lambda X: np.exp(-np.abs(X[:, 0])),
                              1, [(-30.0, 30.0)]),
    "abs-half": lambda: _t("abs-half", lambda X: np.abs(X[:, 0] - 0.5), 1, [(0.0, 1.0)]),
    "runge": lambda: _t("runge", lambda X: 1.0 / (1.0 + 25.0 * X[:, 0] ** 2),
                        1, [(-1.0, 1.0)]),
    "gauss": lambda: _t("gauss", lambda X: np.exp(-X[:, 0] ** 2), 1, [(-1.0, 1.0)]),
    "xy": lambda: _t("xy", lambda X: X[:, 0] * X[:, 1], 2, [(-1.0, 1.0)] * 2),
    "zero": lambda: _t("zero", lambda X: np.zeros(len(X)), 1, [(0.0, 1.0)]),
    "one": lambda: _t("one", lambda X: np.ones(len(X)), 1, [(0.0, 1.0)]),
    "half": lambda: _t("half", lambda X: np.full(len(X), 0.5), 1, [(0.0, 1.0)]),
    "smooth-2d": lambda: _t("smooth-2d",
                            lambda X: np.sin(2.0 * X[:, 0]) * np.cos(X[:, 1]),
                            2, [(0.0, 1.0)] * 2),
}


def exp_neg_l1(dim: int) -> TargetFunction:
    return _t(f"exp-neg-l1-{dim}d",
              lambda X: np.exp(-np.sum(np.abs(X), axis=1)),
              dim, [(-30.0, 30.0)] * dim)


def get_target(name: str) -> TargetFunction:
    name = name.lower()
    if name.startswith("exp-neg-l1-") and name.endswith("d"):
        return exp_neg_l1(int(name[len("exp-neg-l1-"):-1]))
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ParameterError(
            f"unknown target {name!r}; known: {', '.join(sorted(_REGISTRY))}"
        ) from None


def target_names() -> list:
    return sorted(_REGISTRY)
