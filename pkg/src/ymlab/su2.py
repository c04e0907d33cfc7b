"""su(2) algebra and SU(2) group helpers, vectorized over leading axes.

Algebra elements are 3-vectors of coefficients in the basis e_a = -(i/2) sigma_a,
orthonormal for <X, Y> = -2 tr(XY), with [e_a, e_b] = eps_abc e_c (cross product).
Group elements are unit quaternions (w, x, y, z) = w I + x i_1 + y i_2 + z i_3 with
i_a = -i sigma_a = 2 e_a, which multiply as Hamilton quaternions.
"""

import numpy as np

_PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


def bracket(x, y):
    return np.cross(x, y)


def inner(x, y):
    return np.sum(x * y, axis=-1)


def to_matrix_alg(x):
    """2x2 anti-Hermitian matrix of an algebra element."""
    x = np.asarray(x, float)
    return np.einsum("...a,aij->...ij", x, -0.5j * _PAULI)


def to_matrix(q):
    """2x2 SU(2) matrix of a unit quaternion."""
    q = np.asarray(q, float)
    eye = np.eye(2, dtype=complex)
    return q[..., 0, None, None] * eye + np.einsum("...a,aij->...ij", q[..., 1:], -1j * _PAULI)


def identity(shape=()):
    q = np.zeros(tuple(shape) + (4,))
    q[..., 0] = 1.0
    return q


def qmul(p, q):
    pw, pv = p[..., :1], p[..., 1:]
    qw, qv = q[..., :1], q[..., 1:]
    w = pw * qw - np.sum(pv * qv, axis=-1, keepdims=True)
    v = pw * qv + qw * pv + np.cross(pv, qv)
    return np.concatenate([w, v], axis=-1)


def qconj(q):
    out = np.array(q, float, copy=True)
    out[..., 1:] *= -1.0
    return out


def normalize(q):
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def exp(x):
    """exp of an algebra element as a unit quaternion: (cos(t/2), sin(t/2) x/t)."""
    x = np.asarray(x, float)
    t = np.linalg.norm(x, axis=-1, keepdims=True)
    # sin(t/2)/t written through np.sinc to stay smooth at t = 0
    s = 0.5 * np.sinc(t / (2.0 * np.pi))
    return np.concatenate([np.cos(0.5 * t), s * x], axis=-1)


def log(q):
    """Principal logarithm; inverse of exp for rotation angle t < 2 pi."""
    q = np.asarray(q, float)
    v = q[..., 1:]
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    t = 2.0 * np.arctan2(nv, q[..., :1])
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(nv > 1e-300, t / np.where(nv > 0, nv, 1.0), 2.0 / q[..., :1])
    return ratio * v


def adjoint(q, x):
    """Ad_q x = q x q^{-1} (a rotation of the coefficient vector)."""
    w = q[..., :1]
    v = q[..., 1:]
    c = np.cross(v, x)
    return x + 2.0 * w * c + 2.0 * np.cross(v, c)


def distance_to_identity(q):
    """Operator norm of u - I; equals |q - 1| = sqrt(2 - 2w)."""
    q = np.asarray(q, float)
    return np.sqrt(np.maximum(2.0 - 2.0 * q[..., 0], 0.0))


def maurer_cartan(dq, q):
    """Algebra coefficients of (du) u^{-1} given du (quaternion components)."""
    return 2.0 * qmul(dq, qconj(q))[..., 1:]
