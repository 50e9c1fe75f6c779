"""Truncated basis representation of a lattice policy and its text format."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from ..lattice import BinEdges, LatticeFormatError, StateBins

BASES = ("DFT", "HAAR", "DB4", "SVD", "GMM")


def count_parameters(basis: str, K: int, shape: tuple) -> int:
    """Stored numbers for a ``K``-term embedding of a ``b_S x b_A`` lattice.

    GMM keeps a weight, mean, variance and its index per component; SVD keeps
    ``U``, ``D`` and ``V``; fixed orthonormal bases keep one weight per term.
    """
    b_S, b_A = shape
    basis = basis.upper()
    if basis == "GMM":
        return 4 * K
    if basis == "SVD":
        return b_S * K + K * K + b_A * K
    if basis in ("DFT", "HAAR", "DB4"):
        return K
    raise ValueError(f"unknown basis {basis!r}")


@dataclass(frozen=True, eq=False)
class SpectralEmbedding:
    """The ``K`` retained components of a lattice in one basis.

    ``coefficients`` holds basis-specific arrays:

    * DFT: ``index`` (flat index of each conjugate-pair representative) and
      complex ``value``;
    * HAAR / DB4: ``index`` into the power-of-two padded grid and ``value``;
    * SVD: ``U``, ``s``, ``Vt``;
    * GMM: ``weights``, ``means``, ``variances``.
    """

    basis: str
    K: int
    shape: tuple
    coefficients: dict
    state_bins: StateBins = None
    action_bins: BinEdges = None
    parameter_count: int = field(default=None)

    def __post_init__(self):
        basis = self.basis.upper()
        if basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}; choose from {BASES}")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        frozen = {}
        for key, arr in self.coefficients.items():
            arr = np.array(arr, copy=True)
            arr.setflags(write=False)
            frozen[key] = arr
        object.__setattr__(self, "coefficients", MappingProxyType(frozen))
        expected = count_parameters(basis, self.K, self.shape)
        if self.parameter_count is None:
            object.__setattr__(self, "parameter_count", expected)
        elif self.parameter_count != expected:
            raise ValueError(f"parameter_count {self.parameter_count} != {expected} for {basis}")
        if self.state_bins is None:
            object.__setattr__(self, "state_bins", BinEdges.index(self.shape[0]))
        if self.action_bins is None:
            object.__setattr__(self, "action_bins", BinEdges.index(self.shape[1]))

    def __getitem__(self, key):
        return self.coefficients[key]


def padded_shape(shape) -> tuple:
    return tuple(1 << max(int(d) - 1, 0).bit_length() for d in shape)


# -- file format -------------------------------------------------------------

def _f(x) -> str:
    return format(float(x), ".17g")


def save_embedding(emb: SpectralEmbedding, path) -> None:
    """Header ``basis K b_S b_A parameter_count`` followed by the coefficients."""
    b_S, b_A = emb.shape
    lines = [f"{emb.basis} {emb.K} {b_S} {b_A} {emb.parameter_count}"]
    c = emb.coefficients
    if emb.basis == "DFT":
        lines += [f"{int(i)} {_f(v.real)} {_f(v.imag)}" for i, v in zip(c["index"], c["value"])]
    elif emb.basis in ("HAAR", "DB4"):
        lines += [f"{int(i)} {_f(v)}" for i, v in zip(c["index"], c["value"])]
    elif emb.basis == "SVD":
        lines.append("# U columns")
        lines += [" ".join(_f(x) for x in col) for col in c["U"].T]
        lines.append("# singular values")
        lines.append(" ".join(_f(x) for x in c["s"]))
        lines.append("# V columns")
        lines += [" ".join(_f(x) for x in row) for row in c["Vt"]]
    else:
        lines.append("# index weight mean variance")
        lines += [
            f"{k} {_f(w)} {_f(m)} {_f(v)}"
            for k, (w, m, v) in enumerate(zip(c["weights"], c["means"], c["variances"]))
        ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embedding(path, state_bins=None, action_bins=None) -> SpectralEmbedding:
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    lines = [ln.split("#", 1)[0].strip() for ln in raw]
    lines = [ln for ln in lines if ln]
    try:
        basis, K, b_S, b_A, n_par = lines[0].split()
        K, b_S, b_A, n_par = int(K), int(b_S), int(b_A), int(n_par)
        body = [[float(t) for t in ln.split()] for ln in lines[1:]]
    except (ValueError, IndexError):
        raise LatticeFormatError(f"{path}: malformed embedding file") from None
    basis = basis.upper()
    if basis == "DFT":
        arr = np.array(body, dtype=float).reshape(-1, 3)
        coeffs = {"index": arr[:, 0].astype(np.int64), "value": arr[:, 1] + 1j * arr[:, 2]}
    elif basis in ("HAAR", "DB4"):
        arr = np.array(body, dtype=float).reshape(-1, 2)
        coeffs = {"index": arr[:, 0].astype(np.int64), "value": arr[:, 1]}
    elif basis == "SVD":
        if len(body) != 2 * K + 1:
            raise LatticeFormatError(f"{path}: SVD block sizes do not match K={K}")
        coeffs = {
            "U": np.array(body[:K]).T,
            "s": np.array(body[K]),
            "Vt": np.array(body[K + 1:]),
        }
    elif basis == "GMM":
        arr = np.array(body, dtype=float).reshape(-1, 4)
        coeffs = {"weights": arr[:, 1], "means": arr[:, 2], "variances": arr[:, 3]}
    else:
        raise LatticeFormatError(f"{path}: unknown basis {basis!r}")
    return SpectralEmbedding(basis, K, (b_S, b_A), coeffs, state_bins, action_bins, n_par)
