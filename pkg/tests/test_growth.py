import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinorbit.errors import InputError
from thinorbit.gl2 import sanov_family
from thinorbit.growth import dyadic_counts, fit_growth


def test_exact_power_laws():
    Ns = [2.0**e for e in range(3, 9)]
    assert fit_growth([(N, int(3 * N**2)) for N in Ns]).slope == pytest.approx(2, abs=1e-12)
    # N = 32^j makes N^1.4 = 2^(7j) an integer
    fit = fit_growth([(32.0**j, 5 * 2 ** (7 * j)) for j in (1, 2, 3, 4)])
    assert fit.slope == pytest.approx(1.4, abs=1e-12) and fit.residual < 1e-12


@given(st.floats(0.5, 3), st.floats(0.1, 100))
@settings(max_examples=50)
def test_slope_exact_on_synthetic_laws(s, c):
    samples = [(N, c * N**s) for N in (4.0, 16.0, 64.0, 256.0)]
    xs = np.log([N for N, _ in samples])
    ys = np.log([v for _, v in samples])
    if not np.all(np.isfinite(ys)) or min(v for _, v in samples) < 1:
        return
    fit = fit_growth([(N, round(v)) for N, v in samples])
    ref = np.polyfit(xs, np.log([round(v) for _, v in samples]), 1)[0]
    assert fit.slope == pytest.approx(ref, abs=1e-9)


def test_too_few_samples():
    with pytest.raises(InputError):
        fit_growth([(2, 3), (4, 9)])
    with pytest.raises(InputError):
        fit_growth([(2, 3), (2, 5), (4, 9)])
    with pytest.raises(InputError):
        fit_growth([(2, 3), (4, 0), (8, 9)])


def test_lattice_group_grows_quadratically():
    # Gamma(2) contains the k=2 group with finite index, so counts grow like N^2
    counts = dyadic_counts(sanov_family(2), 4, 10)
    assert 1.8 <= fit_growth(counts).slope <= 2.05
