import os
import shutil
import tempfile
from contextlib import contextmanager

import numpy as np


@contextmanager
def ignoring(*exceptions):
    try:
        yield
    except exceptions:
        pass


@contextmanager
def tmpfile(extension="", dir=None):
    extension = "." + extension.lstrip(".")
    handle, filename = tempfile.mkstemp(extension, dir=dir)
    os.close(handle)
    os.remove(filename)

    try:
        yield filename
    finally:
        if os.path.exists(filename):
            if os.path.isdir(filename):
                shutil.rmtree(filename)
            else:
                with ignoring(OSError):
                    os.remove(filename)


def direct_dft_power(x):
    """|(2 pi N)^{-1/2} sum_p x_p e^{-i p lambda_q}|^2 at every Fourier
    frequency, by the O(N^2) definition."""
    n = len(x)
    p = np.arange(n)
    kernel = np.exp(-2j * np.pi * np.outer(p, p) / n)
    return np.abs(kernel @ x) ** 2 / (2 * np.pi * n)


def central_difference(func, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h
        out.append((func(x + step) - func(x - step)) / (2 * h))
    return np.array(out)


def psi_weights(ar, n):
    """First n coefficients of 1 / (1 + a_1 z + ... + a_k z^k)."""
    psi = np.zeros(n)
    psi[0] = 1.0
    for m in range(1, n):
        lags = min(m, len(ar))
        psi[m] = -np.dot(ar[:lags], psi[m - 1 :: -1][:lags])
    return psi


def gamma_from_psi(ar, n=200000):
    """Fisher information of (d, a) from the psi weights of the AR part:
    pi^2 / 6, -sum_m psi_m / (m + j) and sum_n psi_n psi_{n + |i - j|}."""
    k = len(ar)
    psi = psi_weights(np.asarray(ar, dtype=float), n)
    out = np.empty((k + 1, k + 1))
    out[0, 0] = np.pi ** 2 / 6
    m = np.arange(n)
    for j in range(1, k + 1):
        out[0, j] = out[j, 0] = -np.sum(psi / (m + j))
        for i in range(1, k + 1):
            h = abs(i - j)
            out[i, j] = psi[: n - h] @ psi[h:]
    return out
