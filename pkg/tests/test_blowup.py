import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ksblowup.blowup import BlowupReport, fit_power_law


@given(T=st.floats(0.01, 2.0), alpha=st.floats(0.5, 3.0), c=st.floats(0.1, 10.0))
def test_fit_recovers_exact_power_law(T, alpha, c):
    t = T - T * np.logspace(-1, -6, 60)
    y = c * (T - t) ** -alpha
    T_hat, a_hat, c_hat = fit_power_law(t, y, decades=10.0)
    assert T_hat == pytest.approx(T, rel=1e-6)
    assert a_hat == pytest.approx(alpha, rel=1e-4)


def test_fit_short_series():
    T, a, c = fit_power_law([0.0, 0.1], [1.0, 2.0])
    assert T == 0.1 and math.isnan(a)


def test_summary_keys():
    r = BlowupReport(True, "threshold hit", 0.1, 1e7, 1.0, 10, 0.1001)
    s = r.summary()
    assert s["detected"] is True and s["T_hat"] == 0.1001
    assert "growth_t" not in s
