"""Matrix spaces P_n(F) for F in {R, C, H}, Gaussian and Haar sampling,
radial decomposition and minors.

All matrices are stored as complex numpy arrays. A quaternionic n x n matrix
is stored as a 2n x 2n complex matrix made of 2 x 2 blocks
``[[a, b], [-conj(b), conj(a)]]``.

================================  =============================================
``FieldContext``                  field tag plus derived constants
``StructuredMatrix``              matrix with a structure tag
``RadialPoint``                   point of the Weyl chamber
``sample_gaussian_hermitian``     standard Gaussian on P_n(F)
``sample_gaussian_rectangular``   standard Gaussian on M_{n,k}(F)
``sample_haar_unitary``           Haar element of U(n), SO(n) or Sp(n)
``radial_part``                   chamber point of a Hermitian structured matrix
``omega``                         block diagonal representative of a chamber point
``minor``                         leading principal minor
``minor_process``                 radial parts of all leading minors
================================  =============================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "FieldContext",
    "StructuredMatrix",
    "RadialPoint",
    "EigensolverError",
    "ChamberError",
    "sample_gaussian_hermitian",
    "sample_gaussian_rectangular",
    "sample_haar_unitary",
    "radial_part",
    "omega",
    "omega_rank",
    "minor",
    "minor_process",
    "pfaffian",
    "pfaffian_batch",
    "sample_haar_batch",
    "radial_coords_batch",
    "gaussian_rectangular_batch",
    "omega_batch_data",
    "quaternion_j",
    "inner_product",
    "make_rng",
]

FIELDS = ("R", "C", "H")
KINDS = ("hermitian_P", "rectangular_M", "unitary_U")


class EigensolverError(RuntimeError):
    """Raised when the Hermitian eigensolver fails; carries the residual norm."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual norm {residual:.3e})")
        self.residual = residual


class ChamberError(ValueError):
    """A vector does not lie in the required Weyl chamber."""


def make_rng(seed: int | None = None) -> np.random.Generator:
    """Return a PCG64 generator seeded from a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class FieldContext:
    """Field tag and matrix size, with the derived constants.

    Attributes
    ----------
    field : {"R", "C", "H"}
    n : int
        Size of the matrices over the field.
    """

    field: str
    n: int

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}, got {self.field!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def c(self) -> int:
        return 2 if self.field == "H" else 1

    @property
    def n_tilde(self) -> int:
        return self.n // 2 if self.field == "R" else self.n

    @property
    def epsilon(self) -> int:
        return self.n % 2

    @property
    def chamber_type(self) -> str:
        if self.field == "C":
            return "A"
        if self.field == "H":
            return "C"
        return "B" if self.n % 2 else "D"

    @property
    def ambient(self) -> int:
        """Size of the complex matrices used to store elements."""
        return 2 * self.n if self.field == "H" else self.n

    @property
    def b(self) -> float:
        """Scale of the trace form on P_n(F)."""
        return 1.0 if self.field == "C" else 0.5

    @property
    def a(self) -> float:
        """Scale of the real trace form on M_{n,k}(F)."""
        return 1.0 if self.field == "R" else 2.0

    @property
    def dim_hermitian(self) -> int:
        """Real dimension of P_n(F)."""
        n = self.n
        return {"C": n * n, "R": n * (n - 1) // 2, "H": n * (2 * n + 1)}[self.field]

    def dim_rectangular(self, k: int) -> int:
        """Real dimension of M_{n,k}(F)."""
        return {"R": 1, "C": 2, "H": 4}[self.field] * self.n * k

    def with_n(self, n: int) -> "FieldContext":
        return FieldContext(self.field, n)


@dataclass
class StructuredMatrix:
    """A complex matrix tagged with its structure.

    ``kind`` is ``hermitian_P`` (element of P_n(F)), ``rectangular_M``
    (element of M_{n,k}(F), ``cols`` = k) or ``unitary_U``.
    """

    ctx: FieldContext
    kind: str
    data: np.ndarray
    cols: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.data = np.asarray(self.data, dtype=complex)
        if self.kind == "rectangular_M":
            if self.cols is None:
                q = 2 if self.ctx.field == "H" else 1
                self.cols = self.data.shape[1] // q
        else:
            self.cols = self.ctx.n

    def check(self, tol: float = 1e-10) -> None:
        """Raise ``ValueError`` if the structural invariants fail."""
        d = self.data
        f = self.ctx.field
        if self.kind == "hermitian_P":
            if not np.allclose(d, d.conj().T, atol=tol):
                raise ValueError("matrix is not Hermitian")
            if f == "R" and np.max(np.abs(d.real), initial=0.0) > tol:
                raise ValueError("P_n(R) element must be purely imaginary")
            if f == "H":
                J = quaternion_j(self.ctx.n)
                if not np.allclose(J @ d.conj() @ J.T, -d, atol=tol):
                    raise ValueError("P_n(H) element lacks the quaternionic structure")
        elif self.kind == "unitary_U":
            m = d.shape[0]
            if np.max(np.abs(d @ d.conj().T - np.eye(m))) > tol:
                raise ValueError("matrix is not unitary")
            if f == "R":
                if np.max(np.abs(d.imag), initial=0.0) > tol or np.linalg.det(d.real) < 0:
                    raise ValueError("element of SO(n) expected")
            if f == "H":
                J = quaternion_j(self.ctx.n)
                if not np.allclose(J @ d.conj() @ J.T, d, atol=tol):
                    raise ValueError("element of Sp(n) expected")
        else:
            if f == "R" and np.max(np.abs(d.imag), initial=0.0) > tol:
                raise ValueError("real matrix expected")
            if f == "H":
                Jl = quaternion_j(self.ctx.n)
                Jr = quaternion_j(self.cols)
                if not np.allclose(Jl @ d.conj() @ Jr.T, d, atol=tol):
                    raise ValueError("quaternionic block structure expected")

    def to_dict(self) -> dict[str, Any]:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.data]
        out = {"field": self.ctx.field, "n": self.ctx.n, "kind": self.kind, "rows": rows}
        if self.kind == "rectangular_M":
            out["k"] = self.cols
        return out

    def to_json(self) -> str:
        return dumps_compact(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "StructuredMatrix":
        ctx = FieldContext(obj["field"], int(obj["n"]))
        data = np.array([[complex(re, im) for re, im in row] for row in obj["rows"]])
        return cls(ctx, obj["kind"], data, obj.get("k"))


@dataclass
class RadialPoint:
    """A point of the Weyl chamber C_n attached to a field context."""

    ctx: FieldContext
    coords: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if self.coords.shape[0] != self.ctx.n_tilde:
            raise ChamberError(
                f"expected {self.ctx.n_tilde} coordinates for {self.ctx}, got {self.coords.shape[0]}"
            )

    def check(self, tol: float = 1e-12) -> None:
        if not in_chamber(self.ctx, self.coords, tol):
            raise ChamberError(f"{self.coords.tolist()} is not in the type {self.ctx.chamber_type} chamber")

    def is_interior(self, tol: float = 0.0) -> bool:
        return in_chamber(self.ctx, self.coords, -tol, strict=True)


def in_chamber(ctx: FieldContext, x: np.ndarray, tol: float = 1e-12, strict: bool = False) -> bool:
    """Membership in the (closed, or open when ``strict``) Weyl chamber."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != ctx.n_tilde:
        return False
    if x.shape[0] == 0:
        return True
    t = ctx.chamber_type
    gaps = list(x[:-1] - x[1:])
    if t == "D":
        if x.shape[0] >= 2:
            gaps[-1] = x[-2] - abs(x[-1])
    elif t in ("B", "C"):
        gaps.append(x[-1])
    g = np.array(gaps)
    if g.size == 0:
        return True
    return bool(np.all(g > tol)) if strict else bool(np.all(g >= -tol))


def quaternion_j(n: int) -> np.ndarray:
    """Block diagonal matrix with n blocks [[0, 1], [-1, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[2 * i, 2 * i + 1] = 1.0
        J[2 * i + 1, 2 * i] = -1.0
    return J


def inner_product(ctx: FieldContext, M: np.ndarray, N: np.ndarray) -> float:
    """The Euclidean structure b * tr(MN) on P_n(F)."""
    return float(ctx.b * np.real(np.trace(np.asarray(M) @ np.asarray(N))))


def _gue_complex(m: int, rng: np.random.Generator) -> np.ndarray:
    # standard Gaussian for the form tr(AB) on m x m Hermitian matrices
    G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (G + G.conj().T) / 2.0


def sample_gaussian_hermitian(ctx: FieldContext, rng: np.random.Generator) -> StructuredMatrix:
    """Standard Gaussian element of P_n(F) for the form b * tr(MN)."""
    n = ctx.n
    if ctx.field == "C":
        data = _gue_complex(n, rng)
    elif ctx.field == "R":
        X = np.zeros((n, n))
        iu = np.triu_indices(n, 1)
        X[iu] = rng.standard_normal(len(iu[0]))
        X = X - X.T
        data = 1j * X
    else:
        # orthogonal projection of a GUE(2n) sample onto P_n(H), rescaled
        # because the form on P_n(H) carries the factor 1/2
        A = _gue_complex(2 * n, rng)
        J = quaternion_j(n)
        data = np.sqrt(2.0) * (A - J @ A.conj() @ J.T) / 2.0
    return StructuredMatrix(ctx, "hermitian_P", data)


def sample_gaussian_rectangular(ctx: FieldContext, k: int, rng: np.random.Generator) -> StructuredMatrix:
    """Standard Gaussian element of M_{n,k}(F) for the form a * Re tr(MN*)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = ctx.n
    if ctx.field == "R":
        data = rng.standard_normal((n, k)).astype(complex)
    elif ctx.field == "C":
        data = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2.0)
    else:
        # each real coordinate has variance 1/4
        a = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / 2.0
        b = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / 2.0
        data = np.zeros((2 * n, 2 * k), dtype=complex)
        data[0::2, 0::2] = a
        data[0::2, 1::2] = b
        data[1::2, 0::2] = -b.conj()
        data[1::2, 1::2] = a.conj()
    return StructuredMatrix(ctx, "rectangular_M", data, k)


def sample_haar_unitary(ctx: FieldContext, rng: np.random.Generator) -> StructuredMatrix:
    """Haar distributed element of U(n), SO(n) or Sp(n) (inside U(2n))."""
    n = ctx.n
    if ctx.field == "C":
        Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
        Q, R = np.linalg.qr(Z)
        ph = np.diagonal(R) / np.abs(np.diagonal(R))
        U = Q * ph
    elif ctx.field == "R":
        Z = rng.standard_normal((n, n))
        Q, R = np.linalg.qr(Z)
        Q = Q * np.sign(np.diagonal(R))
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        U = Q.astype(complex)
    else:
        U = _haar_symplectic(n, rng)
    return StructuredMatrix(ctx, "unitary_U", U)


def _haar_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    # Gram-Schmidt over quaternionic columns: column 2j+1 is -J conj(column 2j),
    # so every pair spans a quaternionic line and the result lies in Sp(n).
    J = quaternion_j(n)
    U = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        v = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
        for _ in range(2):  # re-orthogonalize once for stability
            if j:
                B = U[:, : 2 * j]
                v = v - B @ (B.conj().T @ v)
        v = v / np.linalg.norm(v)
        U[:, 2 * j] = v
        U[:, 2 * j + 1] = -J @ v.conj()
    return U


def pfaffian(A: np.ndarray) -> float:
    """Pfaffian of a real antisymmetric matrix (Parlett-Reid elimination)."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1 :, k])))
        if kp != k + 1:
            A[[k + 1, kp], k:] = A[[kp, k + 1], k:]
            A[k:, [k + 1, kp]] = A[k:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            col = A[k + 2 :, k + 1].copy()
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return float(pf)


def pfaffian_batch(A: np.ndarray) -> np.ndarray:
    """Pfaffians of a stack (..., 2m, 2m) of real antisymmetric matrices."""
    A = np.array(A, dtype=float)
    shape = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n))
    B = A.shape[0]
    if n % 2:
        return np.zeros(shape)
    pf = np.ones(B)
    idx = np.arange(B)
    for k in range(0, n - 1, 2):
        kp = k + 1 + np.argmax(np.abs(A[:, k + 1 :, k]), axis=1)
        swap = kp != k + 1
        if swap.any():
            rows = A[idx, k + 1, :].copy()
            A[idx, k + 1, :] = A[idx, kp, :]
            A[idx, kp, :] = rows
            cols = A[idx, :, k + 1].copy()
            A[idx, :, k + 1] = A[idx, :, kp]
            A[idx, :, kp] = cols
            pf[swap] = -pf[swap]
        piv = A[:, k, k + 1]
        zero = piv == 0.0
        pf = np.where(zero, 0.0, pf * piv)
        if k + 2 < n:
            safe = np.where(zero, 1.0, piv)
            tau = A[:, k, k + 2 :] / safe[:, None]
            col = A[:, k + 2 :, k + 1].copy()
            A[:, k + 2 :, k + 2 :] += tau[:, :, None] * col[:, None, :] - col[:, :, None] * tau[:, None, :]
    return pf.reshape(shape)


def sample_haar_batch(ctx: FieldContext, rng: np.random.Generator, size: int) -> np.ndarray:
    """Stack of ``size`` Haar samples: complex for U(n) and Sp(n), real for SO(n)."""
    n = ctx.n
    if ctx.field == "C":
        Z = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / np.sqrt(2.0)
        Q, R = np.linalg.qr(Z)
        d = np.diagonal(R, axis1=1, axis2=2)
        return Q * (d / np.abs(d))[:, None, :]
    if ctx.field == "R":
        Z = rng.standard_normal((size, n, n))
        Q, R = np.linalg.qr(Z)
        Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
        neg = np.linalg.det(Q) < 0
        Q[neg, :, 0] = -Q[neg, :, 0]
        return Q
    # same quaternionic Gram-Schmidt as _haar_symplectic, vectorized over the batch
    J = quaternion_j(n)
    U = np.zeros((size, 2 * n, 2 * n), dtype=complex)
    for j in range(n):
        v = rng.standard_normal((size, 2 * n)) + 1j * rng.standard_normal((size, 2 * n))
        for _ in range(2):
            if j:
                B = U[:, :, : 2 * j]
                v = v - np.einsum("bij,bj->bi", B, np.einsum("bji,bj->bi", B.conj(), v))
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        U[:, :, 2 * j] = v
        U[:, :, 2 * j + 1] = -(v.conj() @ J.T)
    return U


def gaussian_rectangular_batch(ctx: FieldContext, k: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Stack of standard Gaussian elements of M_{n,k}(F).

    Same normalization as :func:`sample_gaussian_rectangular`; real arrays for R.
    """
    n = ctx.n
    if ctx.field == "R":
        return rng.standard_normal((size, n, k))
    if ctx.field == "C":
        return (rng.standard_normal((size, n, k)) + 1j * rng.standard_normal((size, n, k))) / np.sqrt(2.0)
    a = (rng.standard_normal((size, n, k)) + 1j * rng.standard_normal((size, n, k))) / 2.0
    b = (rng.standard_normal((size, n, k)) + 1j * rng.standard_normal((size, n, k))) / 2.0
    data = np.zeros((size, 2 * n, 2 * k), dtype=complex)
    data[:, 0::2, 0::2] = a
    data[:, 0::2, 1::2] = b
    data[:, 1::2, 0::2] = -b.conj()
    data[:, 1::2, 1::2] = a.conj()
    return data


def omega_batch_data(ctx: FieldContext, coords: np.ndarray) -> np.ndarray:
    """Stack of omega(x) matrices; for R the real antisymmetric X with omega = iX."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    size, m = coords.shape
    if ctx.field == "C":
        out = np.zeros((size, ctx.n, ctx.n), dtype=complex)
        idx = np.arange(m)
        out[:, idx, idx] = coords
        return out
    if ctx.field == "R":
        out = np.zeros((size, ctx.n, ctx.n))
        idx = np.arange(m)
        out[:, 2 * idx, 2 * idx + 1] = coords
        out[:, 2 * idx + 1, 2 * idx] = -coords
        return out
    out = np.zeros((size, 2 * ctx.n, 2 * ctx.n), dtype=complex)
    idx = np.arange(m)
    out[:, 2 * idx, 2 * idx] = coords
    out[:, 2 * idx + 1, 2 * idx + 1] = -coords
    return out


def radial_coords_batch(ctx: FieldContext, data: np.ndarray) -> np.ndarray:
    """Radial coordinates of a stack of P_n(F) matrices, shape (size, n~).

    For R the stack may be given as the real antisymmetric X with M = iX.
    """
    m = ctx.n_tilde
    if ctx.field == "R" and not np.iscomplexobj(data):
        X = data
        data = 1j * X
    else:
        X = None
    w = np.linalg.eigvalsh(data)[:, ::-1]
    if ctx.field == "C":
        return np.ascontiguousarray(w)
    lam = -np.sort(-np.abs(w[:, :m]), axis=1)
    if ctx.field == "R" and ctx.n % 2 == 0 and m > 0:
        if X is None:
            X = np.real(-1j * data)
        neg = pfaffian_batch(X) < 0
        lam[neg, -1] = -lam[neg, -1]
    return lam


def _eigvalsh(data: np.ndarray) -> np.ndarray:
    try:
        w = np.linalg.eigvalsh(data)
    except np.linalg.LinAlgError:
        try:
            import scipy.linalg

            w, V = scipy.linalg.eigh(data, driver="ev")
        except Exception as exc:  # pragma: no cover - pathological input
            raise EigensolverError("Hermitian eigensolver did not converge") from exc
        res = float(np.linalg.norm(data @ V - V * w))
        if not np.isfinite(res) or res > 1e-8 * max(1.0, float(np.linalg.norm(data))):
            raise EigensolverError("Hermitian eigensolver did not converge", res)
    return w[::-1]


def _radial_coords(ctx: FieldContext, data: np.ndarray) -> np.ndarray:
    w = _eigvalsh(data)
    if ctx.field == "C":
        return w.copy()
    m = ctx.n_tilde
    lam = np.abs(w[:m])
    lam = np.sort(lam)[::-1]
    if ctx.field == "R" and ctx.n % 2 == 0 and m > 0:
        # the sign of the last coordinate is the sign of the Pfaffian of -iM
        pf = pfaffian(np.real(-1j * data))
        if pf < 0:
            lam[-1] = -lam[-1]
    return lam


def radial_part(M: StructuredMatrix) -> RadialPoint:
    """Unique chamber point ``lam`` with ``M = U omega(lam) U*``."""
    if M.kind != "hermitian_P":
        raise ValueError("radial_part needs a hermitian_P matrix")
    return RadialPoint(M.ctx, _radial_coords(M.ctx, M.data))


def omega(lam: RadialPoint | tuple[FieldContext, Sequence[float]]) -> StructuredMatrix:
    """Block diagonal element of P_n(F) whose radial part is ``lam``."""
    if not isinstance(lam, RadialPoint):
        lam = RadialPoint(lam[0], np.asarray(lam[1], dtype=float))
    ctx = lam.ctx
    x = lam.coords
    m = ctx.ambient
    data = np.zeros((m, m), dtype=complex)
    if ctx.field == "C":
        data[np.diag_indices(m)] = x
    elif ctx.field == "R":
        for i, a in enumerate(x):
            data[2 * i, 2 * i + 1] = 1j * a
            data[2 * i + 1, 2 * i] = -1j * a
    else:
        for i, a in enumerate(x):
            data[2 * i, 2 * i] = a
            data[2 * i + 1, 2 * i + 1] = -a
    return StructuredMatrix(ctx, "hermitian_P", data)


def omega_rank(ctx: FieldContext, k: int) -> StructuredMatrix:
    """omega(1, ..., 1, 0, ..., 0) with k ones."""
    if not 0 <= k <= ctx.n_tilde:
        raise ValueError(f"k must lie in [0, {ctx.n_tilde}]")
    x = np.zeros(ctx.n_tilde)
    x[:k] = 1.0
    return omega(RadialPoint(ctx, x))


def minor(M: StructuredMatrix, k: int) -> StructuredMatrix:
    """Leading principal minor of order k (k quaternionic rows for H).

    For a rectangular matrix the first k rows are kept.
    """
    n = M.ctx.n
    if not 1 <= k <= n:
        raise ValueError(f"minor order must lie in [1, {n}], got {k}")
    q = 2 if M.ctx.field == "H" else 1
    ctx = M.ctx.with_n(k)
    if M.kind == "hermitian_P":
        return StructuredMatrix(ctx, "hermitian_P", M.data[: q * k, : q * k].copy())
    if M.kind == "rectangular_M":
        return StructuredMatrix(ctx, "rectangular_M", M.data[: q * k, :].copy(), M.cols)
    raise ValueError("minors of unitary matrices are not structured")


def minor_process(M: StructuredMatrix):
    """Radial parts of all leading minors, as a pattern.

    For H the half levels are the ordered absolute values of the r largest
    eigenvalues of the complex leading minor of order 2r - 1.
    """
    from .gtpolytope import GTPattern

    if M.kind != "hermitian_P":
        raise ValueError("minor_process needs a hermitian_P matrix")
    ctx = M.ctx
    levels = []
    for k in range(1, ctx.n + 1):
        if ctx.field == "H":
            w = _eigvalsh(M.data[: 2 * k - 1, : 2 * k - 1])
            levels.append(np.sort(np.abs(w[:k]))[::-1])
            levels.append(_radial_coords(ctx.with_n(k), M.data[: 2 * k, : 2 * k]))
        else:
            levels.append(_radial_coords(ctx.with_n(k), M.data[:k, :k]))
    return GTPattern(ctx, levels)


def dumps_compact(obj: Any) -> str:
    """Compact JSON; floats are written with full double precision."""

    def conv(o):
        if isinstance(o, (float, np.floating)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return [conv(v) for v in o.tolist()]
        if isinstance(o, dict):
            return {k: conv(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [conv(v) for v in o]
        return o

    return json.dumps(conv(obj), separators=(",", ":"))
