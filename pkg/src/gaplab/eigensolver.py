"""Dense symmetric eigensolver: Householder tridiagonalization followed by
implicit Wilkinson-shift QL iteration with accumulated plane rotations.

Written from the classical algorithm rather than delegating to a library
solver; the hot kernels are compiled with numba.  Eigenvalues are returned
ascending with a stable index tiebreak, and each eigenvector is normalized
so its largest-magnitude coordinate (lowest index on ties) is positive, so
repeated runs produce identical output.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .ensemble import SymMatrix
from .errors import ConvergenceError, ParameterError

_EPS = float(np.finfo(np.float64).eps)

# total implicit-shift sweeps allowed = _SWEEP_CAP_FACTOR * n
_SWEEP_CAP_FACTOR = 50


@njit(cache=True, nogil=True)
def _tridiagonalize(a, q, accumulate):
    """Reduce symmetric a (overwritten) to tridiagonal form.

    Returns (d, e): diagonal and subdiagonal (e[i] couples i-1 and i).
    If `accumulate`, q (preallocated n x n) receives the orthogonal basis
    with basis vector j stored in ROW j, i.e. a = q.T diag-tri q.
    """
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    h_of = np.zeros(n)

    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        if l > 0:
            scale = 0.0
            for k in range(l + 1):
                scale += abs(a[i, k])
            if scale == 0.0:
                e[i] = a[i, l]
            else:
                for k in range(l + 1):
                    a[i, k] /= scale
                    h += a[i, k] * a[i, k]
                f = a[i, l]
                g = -math.sqrt(h) if f >= 0.0 else math.sqrt(h)
                e[i] = scale * g
                h -= f * g
                a[i, l] = f - g
                f = 0.0
                for j in range(l + 1):
                    g = 0.0
                    for k in range(j + 1):
                        g += a[j, k] * a[i, k]
                    for k in range(j + 1, l + 1):
                        g += a[k, j] * a[i, k]
                    e[j] = g / h
                    f += e[j] * a[i, j]
                hh = f / (h + h)
                for j in range(l + 1):
                    f = a[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        a[j, k] -= f * e[k] + g * a[i, k]
        else:
            e[i] = a[i, l]
        h_of[i] = h

    if accumulate:
        # q rows j < i hold the partial product; reflector i (row i of a,
        # scaled, with squared norm h_of[i]) updates them in place.
        for i in range(n):
            if i > 0 and h_of[i] != 0.0:
                hinv = 1.0 / h_of[i]
                for j in range(i):
                    g = 0.0
                    for k in range(i):
                        g += a[i, k] * q[j, k]
                    g *= hinv
                    for k in range(i):
                        q[j, k] -= g * a[i, k]
            q[i, i] = 1.0

    for i in range(n):
        d[i] = a[i, i]
    return d, e


@njit(cache=True, nogil=True)
def _ql_implicit(d, e, q, accumulate, max_sweeps):
    """Implicit-shift QL on tridiagonal (d, e); e[i] couples d[i], d[i+1].

    Rotations are applied to the ROWS of q when `accumulate`.  Returns
    (lo, hi) of the sub-block that failed to split within max_sweeps,
    or (-1, -1) on success.
    """
    n = d.shape[0]
    # shift subdiagonal storage so e[i] couples (i, i+1)
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0

    sweeps = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return l, m

            # Wilkinson shift from the 2x2 corner at l
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            sign_r = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sign_r)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if accumulate:
                    for k in range(n):
                        f2 = q[i + 1, k]
                        q[i + 1, k] = s * q[i, k] + c * f2
                        q[i, k] = c * q[i, k] - s * f2
            if not underflow:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    return -1, -1


@dataclass
class Spectrum:
    """Eigenvalues ascending, orthonormal eigenvector columns, and gaps.

    `vectors` is None when the decomposition was requested
    eigenvalues-only.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray | None
    gaps: np.ndarray = field(init=False)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        self.gaps = np.diff(self.eigenvalues)

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def validate(self, m):
        """Assert ordering, orthonormality, and the eigen-residual bounds
        against the source matrix; used by tests after decompositions."""
        a = m.a if isinstance(m, SymMatrix) else np.asarray(m)
        n = self.n
        if np.any(np.diff(self.eigenvalues) < 0):
            raise AssertionError("eigenvalues not ascending")
        if self.vectors is not None:
            norm = max(1.0, float(np.max(np.abs(self.eigenvalues))))
            gram = self.vectors.T @ self.vectors - np.eye(n)
            if np.abs(gram).max() > 1e-10 * n:
                raise AssertionError("eigenvectors not orthonormal")
            res = a @ self.vectors - self.vectors * self.eigenvalues
            if np.linalg.norm(res, axis=0).max() > 1e-10 * n * norm:
                raise AssertionError("eigen-residual too large")


def eig_sym(m, vectors=True):
    """Full spectral decomposition of a symmetric matrix.

    Deterministic for fixed input.  Raises ConvergenceError (carrying the
    offending tridiagonal sub-block) if the sweep budget 50*n is exhausted,
    which does not happen for finite input in practice.
    """
    a = m.a if isinstance(m, SymMatrix) else np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError("m", "must be a square matrix")
    if not np.all(np.isfinite(a)):
        raise ParameterError("m", "entries must be finite")
    if not np.array_equal(a, a.T):
        raise ParameterError("m", "matrix must be exactly symmetric")
    n = a.shape[0]
    if n == 1:
        vecs = np.ones((1, 1)) if vectors else None
        return Spectrum(a[0, 0:1].copy(), vecs)

    work = np.array(a, dtype=np.float64, order="C", copy=True)
    q = np.zeros((n, n)) if vectors else np.zeros((1, 1))
    d, e = _tridiagonalize(work, q, vectors)
    lo, hi = _ql_implicit(d, e, q, vectors, _SWEEP_CAP_FACTOR * n)
    if lo >= 0:
        raise ConvergenceError(lo, hi, diag=d[lo : hi + 1].copy(), offdiag=e[lo:hi].copy())

    order = np.argsort(d, kind="stable")
    lam = d[order]
    if not vectors:
        return Spectrum(lam, None)

    v = q[order].T.copy()  # basis rows -> eigenvector columns, sorted
    # sign convention: largest-magnitude coordinate positive, lowest index on ties
    lead = np.argmax(np.abs(v), axis=0)
    flip = v[lead, np.arange(n)] < 0.0
    v[:, flip] *= -1.0
    return Spectrum(lam, v)


def operator_norm(spectrum):
    """Spectral norm max(|lambda_1|, |lambda_n|)."""
    lam = spectrum.eigenvalues
    return float(max(abs(lam[0]), abs(lam[-1])))


def residual_eigenpair_locate(spectrum, lam, v, eta):
    """Locate the eigenpair nearest an approximate one.

    If ||(M - lam) v|| <= eta, returns (index, |lam - lam_i0|,
    min over sign of ||v -+ u_i0||) for the eigenvector u_i0 with the
    largest overlap with v; otherwise returns None.  Uses the decomposition
    itself: the residual equals ||(Lambda - lam) V^T v|| exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-12:
        raise ParameterError("v", f"must be a unit vector, got norm {norm!r}")
    if spectrum.vectors is None:
        raise ParameterError("spectrum", "needs eigenvectors")
    coeff = spectrum.vectors.T @ v
    residual = float(np.linalg.norm((spectrum.eigenvalues - lam) * coeff))
    if residual > eta:
        return None
    i0 = int(np.argmax(np.abs(coeff)))
    u = spectrum.vectors[:, i0]
    vec_dist = min(float(np.linalg.norm(v - u)), float(np.linalg.norm(v + u)))
    return i0, float(abs(lam - spectrum.eigenvalues[i0])), vec_dist


def interlacing_check(m, drop, slack_factor=1e-9):
    """Check Cauchy interlacing of a principal minor's spectrum.

    With ascending eigenvalues lam of m and mu of the minor obtained by
    deleting row/column `drop`, verifies lam[i] <= mu[i] <= lam[i+1] for
    all i up to a slack of slack_factor * max(1, ||m||).  Returns
    (holds, max_violation).
    """
    from .ensemble import principal_minor  # local import avoids cycle at module load

    full = eig_sym(m, vectors=False)
    minor, _, _ = principal_minor(m, drop)
    sub = eig_sym(minor, vectors=False)
    lam = full.eigenvalues
    mu = sub.eigenvalues
    below = lam[:-1] - mu       # > 0 means lam[i] > mu[i]
    above = mu - lam[1:]        # > 0 means mu[i] > lam[i+1]
    worst = float(max(0.0, below.max(), above.max()))
    slack = slack_factor * max(1.0, operator_norm(full))
    return worst <= slack, worst


def save_spectrum(spectrum, path_or_file):
    """Text form: "lambda:" then eigenvalues, "V:" then eigenvector rows."""

    def fmt(x):
        return format(float(x), ".17g")

    lines = ["lambda: " + " ".join(fmt(x) for x in spectrum.eigenvalues)]
    if spectrum.vectors is not None:
        lines.append("V:")
        lines.extend(" ".join(fmt(x) for x in row) for row in spectrum.vectors)
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_spectrum(path_or_file):
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("lambda:"):
        raise ParameterError("spectrum_file", "missing lambda header")
    lam = np.array([float(x) for x in lines[0].split()[1:]], dtype=np.float64)
    vecs = None
    if len(lines) > 1:
        if lines[1] != "V:":
            raise ParameterError("spectrum_file", "expected V: block")
        vecs = np.array([[float(x) for x in ln.split()] for ln in lines[2:]])
        if vecs.shape != (lam.size, lam.size):
            raise ParameterError("spectrum_file", "eigenvector block has wrong shape")
    return Spectrum(lam, vecs)
