"""NumPy reference implementations of the fused inner-loop kernels."""
import numpy as np


def cube_inplace(a: np.ndarray) -> None:
    """a <- a**3, elementwise, in place (real array)."""
    np.multiply(a, a * a, out=a)


def etdrk2_stage1(E, phi1dt, c_hat, n1_hat, out) -> None:
    """out <- E*c_hat + phi1dt*n1_hat (all complex, elementwise)."""
    np.multiply(E, c_hat, out=out)
    out += phi1dt * n1_hat


def etdrk2_stage2(a_hat, phi2dt, n1_hat, n2_hat, out) -> None:
    """out <- a_hat + phi2dt*(n2_hat - n1_hat)."""
    np.subtract(n2_hat, n1_hat, out=out)
    out *= phi2dt
    out += a_hat
