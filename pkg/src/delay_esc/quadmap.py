"""Static quadratic maps with a known extremum."""

from dataclasses import dataclass

import numpy as np

from ._validation import InvalidInputError, check_square, check_vector


@dataclass(frozen=True)
class StaticQuadraticMap:
    """``Q(theta) = y_star + 0.5 (theta - theta_star)^T H (theta - theta_star)``.

    The Hessian is stored with its sign. A negative definite Hessian makes
    ``theta_star`` a maximizer, a positive definite one a minimizer.
    """

    y_star: float
    theta_star: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        theta_star = check_vector(self.theta_star, "theta_star")
        n = theta_star.shape[0]
        H = check_square(self.hessian, "hessian", n)
        if np.max(np.abs(H - H.T)) > 1e-12:
            raise InvalidInputError("hessian must be symmetric")
        eig = np.linalg.eigvalsh(H)
        if not (np.all(eig < 0) or np.all(eig > 0)):
            raise InvalidInputError(f"hessian must be sign-definite, eigenvalues {eig}")
        theta_star.setflags(write=False)
        H = H.copy()
        H.setflags(write=False)
        object.__setattr__(self, "y_star", float(self.y_star))
        object.__setattr__(self, "theta_star", theta_star)
        object.__setattr__(self, "hessian", H)

    @property
    def n(self):
        return self.theta_star.shape[0]

    @property
    def is_maximum(self):
        return bool(np.linalg.eigvalsh(self.hessian)[-1] < 0)

    def __call__(self, theta):
        return evaluate(self, theta)


def evaluate(qmap, theta):
    theta = check_vector(theta, "theta", qmap.n)
    d = theta - qmap.theta_star
    return qmap.y_star + 0.5 * float(d @ qmap.hessian @ d)


def true_gradient(qmap, theta):
    """Exact gradient ``H (theta - theta_star)``; an oracle for analysis only."""
    theta = check_vector(theta, "theta", qmap.n)
    return qmap.hessian @ (theta - qmap.theta_star)


def benchmark_map():
    """The two-input benchmark map: maximum 5 at ``[0, 1]``."""
    return StaticQuadraticMap(
        y_star=5.0,
        theta_star=np.array([0.0, 1.0]),
        hessian=-np.array([[2.0, 2.0], [2.0, 4.0]]),
    )
