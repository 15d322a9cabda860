"""Weighted maximum mean discrepancy estimators and the matching objective.

The plug-in squared-MMD estimator between samples X (m points) and Y (n
points) under kernel K is

    (1/m^2) sum_ij K(x_i, x_j) + (1/n^2) sum_ij K(y_i, y_j)
        - (2/(m n)) sum_ij K(x_i, y_j).

Placing a probability vector w on the input sample generalizes the first and
third terms to sum_ij w_i w_j K(x_i, x_j) and (2/n) sum_j sum_i w_i K(x_i, y_j);
uniform weights w_i = 1/m recover the unweighted estimator exactly.

The matching objective composes a base kernel with a feature extractor,
K(x, y) = k(E(x), E(y)). During optimization the input-side term is a constant
and can be dropped; reported objective values always include it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, gram, grad_second_arg_weighted_sum
from .models import ExtractorSpec, extractor_forward_batch, extractor_vjp_batch

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class WeightedInput:
    """Input sample X with a probability vector over its rows."""

    X: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if X.shape[0] < 1:
            raise ValueError("input sample must contain at least one point")
        if w.size != X.shape[0]:
            raise ValueError("weight count must match the number of input points")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(w)):
            raise ValueError("input sample and weights must be finite")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_TOL}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.X.shape[0]


def uniform_weighted(X: np.ndarray) -> WeightedInput:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return WeightedInput(X, np.full(X.shape[0], 1.0 / X.shape[0]))


def mmd2_hat(kernel: KernelSpec, X: np.ndarray, Y: np.ndarray) -> float:
    """Unweighted plug-in squared-MMD estimate between row samples X and Y."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    m, n = X.shape[0], Y.shape[0]
    kxx = gram(kernel, X, X).sum() / (m * m)
    kyy = gram(kernel, Y, Y).sum() / (n * n)
    kxy = gram(kernel, X, Y).sum() * (2.0 / (m * n))
    return float(kxx + kyy - kxy)


def mmd2_hat_weighted(kernel: KernelSpec, inp: WeightedInput, Y: np.ndarray) -> float:
    """Weighted plug-in squared-MMD estimate; uniform weights recover mmd2_hat."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = Y.shape[0]
    w = inp.weights
    kxx = float(w @ gram(kernel, inp.X, inp.X) @ w)
    kyy = gram(kernel, Y, Y).sum() / (n * n)
    kxy = float(w @ gram(kernel, inp.X, Y).sum(axis=1)) * (2.0 / n)
    return float(kxx + kyy - kxy)


@dataclass(frozen=True)
class MatchObjective:
    """Weighted MMD^2 between E(X) and E(Y) with the input side precomputed.

    Freezes the extracted input features and the input-side constant
    sum_ij w_i w_j k(e_i, e_j) so repeated objective and gradient evaluations
    during optimization touch only the output sample.
    """

    kernel: KernelSpec
    extractor: ExtractorSpec
    inp: WeightedInput
    input_features: np.ndarray
    input_constant: float

    @classmethod
    def build(cls, kernel: KernelSpec, extractor: ExtractorSpec, inp: WeightedInput):
        feats = extractor_forward_batch(extractor, inp.X)
        const = float(inp.weights @ gram(kernel, feats, feats) @ inp.weights)
        return cls(kernel, extractor, inp, feats, const)


def kmm_objective(obj: MatchObjective, Y: np.ndarray, include_constant: bool = True) -> float:
    """Objective value at output sample Y (rows are generated points)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    FY = extractor_forward_batch(obj.extractor, Y)
    n = FY.shape[0]
    kyy = gram(obj.kernel, FY, FY).sum() / (n * n)
    kxy = float(obj.inp.weights @ gram(obj.kernel, obj.input_features, FY).sum(axis=1))
    val = kyy - (2.0 / n) * kxy
    if include_constant:
        val += obj.input_constant
    return float(val)


def kmm_gradient_wrt_outputs(obj: MatchObjective, Y: np.ndarray) -> np.ndarray:
    """Gradient of the objective with respect to each output row of Y.

    Row l of the returned array is

        (2/n^2) sum_i grad_y k(f_i, f_l) - (2/n) sum_i w_i grad_y k(e_i, f_l)

    pulled back through the extractor, where f are output features and e are
    the frozen input features.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    FY = extractor_forward_batch(obj.extractor, Y)
    n = FY.shape[0]
    ones = np.full(n, 2.0 / (n * n))
    U = grad_second_arg_weighted_sum(obj.kernel, FY, FY, ones)
    U -= grad_second_arg_weighted_sum(
        obj.kernel, obj.input_features, FY, (2.0 / n) * obj.inp.weights
    )
    return extractor_vjp_batch(obj.extractor, Y, U)
