import math

import numpy as np
import pytest
from scipy import special, stats

from hyvscore.exceptions import InvalidInputError
from hyvscore.special import chi2_sf, gammainc_lower, gammainc_upper


def test_chi2_one_dof_tail_at_two():
    # P(chi2_1 > 2) = erfc(1)
    assert chi2_sf(2.0, 1) == pytest.approx(math.erfc(1.0), rel=1e-12)
    assert chi2_sf(2.0, 1) == pytest.approx(0.15730, abs=5e-6)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 10.0, 75.0])
def test_against_scipy(a):
    for x in np.concatenate([np.linspace(0.01, 3 * a + 10, 60), [1e-6, 200.0]]):
        assert gammainc_lower(a, x) == pytest.approx(special.gammainc(a, x), rel=1e-8, abs=1e-14)
        assert gammainc_upper(a, x) == pytest.approx(special.gammaincc(a, x), rel=1e-8, abs=1e-300)


@pytest.mark.parametrize("df", [1, 2, 3, 7])
def test_chi2_sf_against_scipy(df):
    for x in [0.1, 1.0, 2.0, 5.0, 20.0, 60.0]:
        assert chi2_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), rel=1e-8)


def test_edges():
    assert gammainc_lower(1.0, 0.0) == 0.0
    assert gammainc_upper(1.0, math.inf) == 0.0
    assert chi2_sf(0.0, 1) == 1.0
    with pytest.raises(InvalidInputError):
        gammainc_lower(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        gammainc_upper(1.0, -1.0)
