"""Greedy wedge-volume bases for finite vector families."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WedgeBasis:
    """Selected vectors and the coefficients of every input vector in them.

    ``coefficients[i]`` expresses ``vectors[i]`` in the basis, so that
    ``vectors == coefficients @ basis``.
    """

    indices: tuple[int, ...]
    basis: np.ndarray
    coefficients: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.indices)


def _volume(vectors: np.ndarray) -> float:
    gram = vectors @ vectors.T
    return float(np.sqrt(max(np.linalg.det(gram), 0.0)))


def wedge_basis(vectors, rtol: float = 1e-10) -> WedgeBasis:
    """Pick a basis of span(S) greedily by maximal wedge volume.

    The first vector has maximal norm; each next one maximizes
    |X_1 ^ ... ^ X_k| (square root of the Gram determinant). Every vector of
    S then has coefficients of size at most 2^(d - 1) in the basis.
    """
    s = np.asarray(vectors, dtype=float)
    if s.size == 0:
        return WedgeBasis((), np.zeros((0, 0)), np.zeros((0, 0)))
    s = s.reshape(len(s), -1)
    scale = float(np.max(np.linalg.norm(s, axis=1)))
    chosen: list[int] = []
    if scale > 0:
        chosen.append(int(np.argmax(np.linalg.norm(s, axis=1))))
        while len(chosen) < s.shape[1]:
            volumes = [
                _volume(s[chosen + [i]]) if i not in chosen else -1.0 for i in range(len(s))
            ]
            best = int(np.argmax(volumes))
            if volumes[best] <= rtol * scale ** (len(chosen) + 1):
                break
            chosen.append(best)
    basis = s[chosen]
    if chosen:
        coeffs, *_ = np.linalg.lstsq(basis.T, s.T, rcond=None)
        coeffs = coeffs.T
    else:
        coeffs = np.zeros((len(s), 0))
    return WedgeBasis(tuple(chosen), basis, coeffs)
