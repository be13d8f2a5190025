import numpy as np
import pytest

from d2dsim import _kernels_py, kernels

try:
    from d2dsim import _kernels as compiled
except ImportError:
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def _stream(alpha, n_users, n_rep, seed):
    rng = np.random.default_rng(seed)
    new = rng.poisson(alpha / np.arange(1, n_users + 1), size=(n_rep, n_users))
    return new, rng.random(kernels.uniforms_needed(new))


def test_uniforms_needed_counts_existing_contents():
    new = np.array([[2, 1, 0], [0, 0, 3]])
    # replay 0: user 2 sees 2, user 3 sees 3; replay 1: nothing exists before user 3
    assert kernels.uniforms_needed(new) == 5


def test_python_replay_matches_loop_reference():
    new, u = _stream(5.0, 4, 50, 0)
    expected = np.zeros_like(new)
    pos = 0
    for r in range(new.shape[0]):
        counts = []
        for i in range(new.shape[1]):
            for c in range(len(counts)):
                if u[pos] < counts[c] / (i + 1.0):
                    counts[c] += 1
                    expected[r, i] += 1
                pos += 1
            counts += [1] * new[r, i]
    np.testing.assert_array_equal(_kernels_py.ibp_old_counts(new, u), expected)


def test_replay_rejects_short_stream():
    new = np.array([[3, 0]])
    with pytest.raises(ValueError):
        _kernels_py.ibp_old_counts(new, np.zeros(2))


@needs_ext
@pytest.mark.parametrize("alpha,n_users", [(20.0, 4), (3.0, 12), (0.5, 2)])
def test_compiled_replay_bit_identical(alpha, n_users):
    new, u = _stream(alpha, n_users, 2000, 7)
    np.testing.assert_array_equal(compiled.ibp_old_counts(new, u), _kernels_py.ibp_old_counts(new, u))


@needs_ext
@pytest.mark.parametrize("a", [0.01, 0.5, 1.0, 9.0, 150.0, 1e4])
def test_compiled_gamma_matches_python(a):
    for x in (0.0, 0.3 * a, a, a + 1.0, 3 * a + 5):
        assert compiled.gammainc_lower(a, x) == pytest.approx(_kernels_py.gammainc_lower(a, x), abs=1e-11)


@needs_ext
def test_compiled_skellam_matches_python():
    ks = np.arange(-30, 60)
    np.testing.assert_allclose(compiled.skellam_pmf(20.0, 5.0, ks), _kernels_py.skellam_pmf(20.0, 5.0, ks),
                               rtol=1e-12, atol=1e-300)
