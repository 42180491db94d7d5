import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_phase(theta):
    """Map angles onto [-pi, pi).

    ``theta - 2*pi*floor((theta + pi) / (2*pi))``, with the rounding edge case
    that lands exactly on +pi folded back to -pi. Used for every phase the
    package hands out.
    """
    theta = np.asarray(theta, dtype=float)
    out = theta - TWO_PI * np.floor((theta + np.pi) / TWO_PI)
    out = np.where(out >= np.pi, out - TWO_PI, out)
    out = np.where(out < -np.pi, -np.pi, out)
    return out if out.ndim else float(out)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)
