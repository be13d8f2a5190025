"""Exit criteria. Each test prints one PASS/FAIL line; a summary is shown at the end of the run."""
import math
import time

import numpy as np
import pytest

from d2dsim import ibp
from d2dsim.cli import main
from d2dsim.engine import SimConfig, aggregate, build_scenario, rate_gain, sweep
from d2dsim.phy import ENB, ChannelParams, rate_cellular, rate_d2d, rate_interference_free
from d2dsim.social import fit_gamma_samples, regularized_lower_incomplete_gamma
from d2dsim.tail import (
    TailParams,
    build_table,
    chernoff_lower,
    chernoff_upper,
    exact_skellam_cdf,
    saddlepoint_cdf,
    saddlepoint_pmf,
    saddlepoint_terms,
)
from oracles import gamma_p_grid, gamma_p_quadrature
from test_phy import random_linkset

ALPHA, N = 20.0, 4


def test_c1_ibp_moments(criterion):
    t0 = time.perf_counter()
    new, old = ibp.replay(ALPHA, N, 100_000, np.random.default_rng(20240401))
    elapsed = time.perf_counter() - t0
    m_h, m_0 = old[:, N - 1].mean(), new[:, N - 1].mean()
    m = m_h + m_0
    ok = abs(m_h - 15) <= 0.2 and abs(m - 20) <= 0.2 and abs(m_0 - 5) <= 0.1 and elapsed < 30
    criterion("1 IBP moments", ok, f"E[m_4^h]={m_h:.4f} E[m_4]={m:.4f} E[m_4^0]={m_0:.4f} in {elapsed:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def fig4c():
    return build_table(ALPHA, N, 10_000, np.random.default_rng(4))


def test_c2_empirical_cdf_within_chernoff(criterion, fig4c):
    slack = 3 / math.sqrt(10_000)
    x, f = fig4c.support, fig4c.empirical_cdf
    mu = fig4c.params.mu
    worst_lo = max(f[i] - chernoff_lower(mu, (mu - xi) / mu) if xi > 0 else f[i] - math.exp(-mu)
                   for i, xi in enumerate(x) if xi < mu)
    worst_hi = max((1 - f[i]) - chernoff_upper(mu, (xi - mu) / mu) for i, xi in enumerate(x) if xi > mu)
    ok = worst_lo <= slack and worst_hi <= slack
    criterion("2a empirical CDF within Chernoff curves", ok,
              f"max excess lower={worst_lo:.4f} upper={worst_hi:.4f} (slack {slack:.3f})")
    assert ok


def test_c2_saddlepoint_close_to_empirical(criterion, fig4c):
    dev = np.abs(fig4c.saddlepoint_cdf - fig4c.empirical_cdf)
    worst = float(dev.max())
    at = int(fig4c.support[int(dev.argmax())])
    ok = worst <= 0.05
    criterion("2b saddlepoint CDF vs empirical CDF", ok, f"max |diff|={worst:.4f} at k={at} (limit 0.05)")
    assert ok


def test_c3_saddlepoint_vs_exact(criterion):
    p = TailParams(20.0, 5.0)
    ks = np.arange(0, 41)
    sp = np.array([saddlepoint_cdf(p, int(k)) for k in ks])
    full = exact_skellam_cdf(p, ks)
    nonneg = exact_skellam_cdf(p, ks, lower=0)
    dev = max(np.abs(sp - full).max(), np.abs(sp - nonneg).max())
    rng = np.random.default_rng(3)
    worst_diff = worst_prod = 0.0
    for _ in range(1000):
        mu1, mu2 = rng.uniform(0.01, 60, size=2)
        k = int(rng.integers(-80, 81))
        c, d = saddlepoint_terms(mu1, mu2, k)
        worst_diff = max(worst_diff, abs((c - d) - k))
        worst_prod = max(worst_prod, abs(c * d - mu1 * mu2) / (mu1 * mu2))
    ok = dev <= 0.02 and worst_diff <= 1e-12 and worst_prod <= 1e-12
    criterion("3 saddlepoint vs exact Skellam", ok,
              f"max CDF dev={dev:.4f}; |C-D-k|<={worst_diff:.1e}; rel|CD-mu1mu2|<={worst_prod:.1e}")
    assert ok


def test_c4_closed_form_spot_checks(criterion):
    lo, up = chernoff_lower(15, 0.2), chernoff_upper(15, 0.2)
    sp = saddlepoint_pmf(TailParams(20.0, 5.0), 15)
    ok = abs(lo - 0.7245) <= 1e-3 and abs(up - 0.7544) <= 1e-3 and abs(sp - 1 / math.sqrt(50 * math.pi)) <= 1e-9
    criterion("4 closed-form spot checks", ok, f"lower={lo:.5f} upper={up:.5f} sp(15)={sp:.9f}")
    assert ok


def test_c5_gamma_fit_and_incomplete_gamma(criterion):
    rng = np.random.default_rng(55)
    worst_fit = 0.0
    for k in (0.5, 2.0, 9.0):
        for theta in (0.1, 10.0):
            p = fit_gamma_samples(rng.gamma(k, theta, size=100_000))
            worst_fit = max(worst_fit, abs(p.shape - k) / k, abs(p.scale - theta) / theta)
    grid = gamma_p_grid()
    worst_p = max(abs(regularized_lower_incomplete_gamma(k, x) - gamma_p_quadrature(k, x)) for k, x in grid)
    ok = worst_fit <= 0.05 and worst_p <= 1e-10 and len(grid) == 100
    criterion("5 Gamma fit + incomplete gamma", ok, f"max rel fit err={worst_fit:.4f}; max |P-oracle|={worst_p:.1e}")
    assert ok


SCENARIO = SimConfig(n_users=27, n_ues=27, seed=2013)


@pytest.mark.slow
def test_c6_distance_sweep_trend(criterion):
    scen = build_scenario(SCENARIO)
    assert len(scen.partition.clusters) == 1 and len(scen.partition.clusters[0]) == 27
    values = [10.0, 20.0, 30.0, 50.0, 80.0]
    t0 = time.perf_counter()
    rows = sweep(SCENARIO, "d_max", values, reps=20)
    elapsed = time.perf_counter() - t0
    enb = [a[1] for a in aggregate(rows)]
    offload = [a[3] for a in aggregate(rows)]
    ok = all(b <= a for a, b in zip(enb, enb[1:])) and elapsed < 60
    criterion("6a eNB sum-rate vs d_max", ok,
              "mean eNB sum-rate " + " > ".join(f"{v:.0f}" for v in enb)
              + f"; offloaded " + ", ".join(f"{v:.2f}" for v in offload) + f"; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_c6_cost_sweep_trend(criterion):
    t0 = time.perf_counter()
    gain = rate_gain(SCENARIO)
    fractions = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    rows = sweep(SCENARIO, "c_c", [f * gain for f in fractions], reps=20)
    elapsed = time.perf_counter() - t0
    util = [a[4] for a in aggregate(rows)]
    ok = gain > 0 and all(b <= a for a, b in zip(util, util[1:])) and elapsed < 60
    criterion("6b offload utility vs C_c", ok,
              f"rate gain {gain:.3f}; mean utility " + " > ".join(f"{v:.2f}" for v in util) + f"; {elapsed:.1f}s")
    assert ok


def test_c7_rate_properties(criterion):
    rng = np.random.default_rng(7)
    p = ChannelParams()
    n_equal = n_strict = 0
    ok = True
    for _ in range(1000):
        topo, links = random_linkset(rng)
        for c in links.cellular:
            r_c = rate_cellular(links, p, topo, c)
            v_c = rate_interference_free(p, topo.gain(ENB, c.rx, p.path_loss_exponent))
            if any(links.beta(c, d) for d in links.d2d):
                ok &= r_c < v_c
                n_strict += 1
            else:
                ok &= r_c == v_c
                n_equal += 1
            ok &= r_c >= 0
        ok &= all(rate_d2d(links, p, topo, d) >= 0 for d in links.d2d)
    criterion("7 rate-formula properties", bool(ok), f"{n_equal} interference-free links, {n_strict} shared links")
    assert ok


def test_c8_cli_determinism(criterion, tmp_path):
    (tmp_path / "trace.csv").write_text("node_a,node_b,start,end\na,b,0,30\na,b,50,120\nb,c,0,70\nb,c,90,100\n")
    (tmp_path / "c.toml").write_text("seed = 8\n[simulation]\nn_users = 8\n[sweep]\nparameter = 'd_max'\n"
                                     "values = [10, 40]\nreps = 2\n")
    runs = {
        "fit": ["fit", "--trace", str(tmp_path / "trace.csv"), "--x-min", "40"],
        "cluster": ["cluster", "--graph", str(tmp_path / "fit-0"), "--w-t", "0.3"],
        "simulate": ["simulate", "--config", str(tmp_path / "c.toml")],
        "tail": ["tail", "--samples", "2000", "--seed", "5"],
    }
    same = {}
    for name, args in runs.items():
        outs = []
        for i in range(2):
            out = tmp_path / f"{name}-{i}"
            assert main(args + ["--out", str(out)]) == 0
            outs.append(out.read_bytes())
        same[name] = outs[0] == outs[1]
    ok = all(same.values())
    criterion("8 CLI determinism", ok, ", ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()))
    assert ok
