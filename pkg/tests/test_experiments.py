import math

import numpy as np
import pytest
from scipy.integrate import quad

from sobolev_lab.errors import ContractError
from sobolev_lab.experiments import (CSV_COLUMNS, bump, bump_derivative, chiron_cauchy_not_convergent,
                                     composite_gauss_legendre, disk_profile, disk_sasaki_limit, excursion,
                                     excursion_derivative, family_cg_vs_sasaki, family_s1_disk,
                                     family_sasaki_vs_embedding, latitude_polygon_competitor,
                                     mean_abs_cos_power, sawtooth, write_family_csv)


def test_gauss_legendre_helper():
    assert composite_gauss_legendre(np.cos, 0.0, math.pi / 2) == pytest.approx(1.0, abs=1e-14)
    assert mean_abs_cos_power(2) == pytest.approx(0.5, abs=1e-15)
    assert mean_abs_cos_power(1) == pytest.approx(2 / math.pi, abs=1e-15)
    assert disk_sasaki_limit(1) == pytest.approx(2 * math.pi, abs=1e-13)


def _family1_sasaki_oracle(lam, p, amp=4.0):
    def f(t):
        s = t / lam
        return (4 * float(bump(s, amp)) ** 2 + 4 * (float(bump_derivative(s, amp)) / lam) ** 2) ** (p / 2)
    return quad(f, -lam, lam, epsabs=1e-12, epsrel=1e-12, limit=200)[0] ** (1 / p)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_family1_against_quad(p):
    rows = family_cg_vs_sasaki(p=p, lambdas=(1.0, 0.1), nodes=2048, path_steps=64)
    for r in rows:
        oracle = _family1_sasaki_oracle(r.parameter, p)
        assert r.extras["sasaki_closed_form"] == pytest.approx(oracle, rel=1e-10)
        assert r.sasaki.value == pytest.approx(oracle, rel=1e-6)
        assert not r.sasaki.is_bound and r.cheeger_gromoll.is_bound
        assert r.cheeger_gromoll.value <= r.sasaki.value
        assert r.cheeger_gromoll.value <= r.closed_form_bound
        assert r.extras["cg_rotation_path"] <= r.extras["cg_integrand_bound"] * (1 + 1e-3)


def test_family1_needs_two_dimensional_fiber():
    with pytest.raises(ContractError):
        family_cg_vs_sasaki(n=1, lambdas=(1.0,), nodes=64)


def test_family2_iota_against_quad():
    rows = family_sasaki_vs_embedding(p=2.0, lambdas=(1.0, 0.1), nodes=2049)
    for r in rows:
        lam = r.parameter

        def f(t):
            s = t / lam
            a = float(excursion(s))
            da = float(excursion_derivative(s)) / lam
            return 4 * math.sin(a) ** 2 + 4 * da * da * math.cos(a) ** 2

        oracle = math.sqrt(quad(f, -lam, lam, epsabs=1e-12, epsrel=1e-12, limit=200)[0])
        assert r.extras["iota_closed_form"] == pytest.approx(oracle, rel=1e-10)
        assert r.iota.value == pytest.approx(oracle, rel=1e-6)
        assert r.sasaki.is_bound
        assert r.sasaki.value <= r.extras["support_bound"]


def test_latitude_polygon_at_equator_matches_holonomy():
    # at c = pi/2 the transported vector lands on the goal, leaving only the length
    colat = np.array([0.3, 1.0])
    d = latitude_polygon_competitor(2, colat, np.array([2.0, -1.0]), latitudes=3, arc_vertices=64)
    assert np.all(d <= 2 * math.pi - 2 * colat + 1e-12)


def test_family2_contracts():
    with pytest.raises(ContractError):
        family_sasaki_vs_embedding(n=1, lambdas=(1.0,), nodes=33)
    with pytest.raises(ContractError):
        family_sasaki_vs_embedding(amplitude=2.0, lambdas=(1.0,), nodes=33)


def _disk_oracles(lam, p):
    # exact flat-target Sasaki and embedded distances of the radial pair
    def phi(r):
        a, b = disk_profile(r, lam, p)
        return float(a), float(b)

    def sasaki(r):
        a, b = phi(r)
        return ((math.pi - 2 * a) ** 2 + 4 * b * b) ** (p / 2) * 2 * math.pi * r

    def iota(r):
        a, b = phi(r)
        return (4 * math.cos(a) ** 2 + 4 * b * b * math.sin(a) ** 2) ** (p / 2) * 2 * math.pi * r

    # split the oscillating core at the zeros of the profile derivative
    kappa = math.pi / (2 * lam ** (1 + 2 / p))
    zeros = lam - (np.arange(int(lam * kappa / math.pi) + 1) + 0.5) * math.pi / kappa
    edges = np.concatenate([[0.0], np.sort(zeros[zeros > 0]), [lam, 2 * lam]])
    out = []
    for g in (sasaki, iota):
        total = sum(quad(g, a, b, epsabs=1e-13, epsrel=1e-12)[0] for a, b in zip(edges[:-1], edges[1:]))
        out.append(total ** (1 / p))
    return out


def test_family3_against_quad():
    rows = family_s1_disk(p=1.0, lambdas=(0.2, 0.1), nodes=16385)
    for r in rows:
        sasaki, iota = _disk_oracles(r.parameter, 1.0)
        assert not r.sasaki.is_bound
        assert r.sasaki.value == pytest.approx(sasaki, rel=1e-3)
        assert r.iota.value == pytest.approx(iota, rel=1e-3)
        assert r.closed_form_bound == pytest.approx(2 * math.pi)


def test_disk_profile_seams():
    for lam in (0.2, 0.05):
        eps = 1e-12
        for seam in (lam, 2 * lam):
            left, _ = disk_profile(seam - eps, lam, 1.0)
            right, _ = disk_profile(seam, lam, 1.0)
            assert abs(float(left) - float(right)) < 1e-9
        assert float(disk_profile(3 * lam, lam, 1.0)[0]) == pytest.approx(math.pi / 2)


def test_family3_contracts():
    with pytest.raises(ContractError):
        family_s1_disk(p=2.0, lambdas=(0.1,), nodes=65)
    with pytest.raises(ContractError):
        family_s1_disk(lambdas=(0.6,), nodes=65)


def test_family3_refinement_is_stable():
    coarse = family_s1_disk(lambdas=(0.1,), nodes=8193)[0]
    fine = family_s1_disk(lambdas=(0.1,), nodes=16385)[0]
    for a, b in ((coarse.sasaki, fine.sasaki), (coarse.iota, fine.iota)):
        assert abs(a.value - b.value) / b.value < 5e-3


def test_sawtooth():
    s, ds = sawtooth(np.array([0.0, 0.1, 0.125, 0.2, 0.25]), 4)
    np.testing.assert_allclose(s, [0.0, 0.1, 0.125, 0.05, 0.0], atol=1e-15)
    assert set(ds.tolist()) <= {-1.0, 1.0}


def test_chiron_family():
    report = chiron_cauchy_not_convergent(p=1.0, ells=(4, 16, 64), nodes=4096)
    np.testing.assert_allclose(report.energies, 1.0, atol=1e-12)
    np.testing.assert_allclose(report.derivative_terms, 0.0, atol=1e-15)
    assert report.cauchy[1, 2] < report.cauchy[0, 1]
    assert report.cauchy[1, 2] < 0.02
    assert report.limit_energy == 0.0
    for row in report.rows:
        assert row.chiron.value <= row.closed_form_bound + 1e-9
        # the derivative modulus never approaches the limit's
        assert row.chiron.value >= 1.0 - 1e-9
    lines = report.cauchy_csv().splitlines()
    assert lines[0].split(",")[:2] == ["ell", "energy"]
    assert len(lines) == 4


def test_chiron_contracts():
    with pytest.raises(ContractError):
        chiron_cauchy_not_convergent(ells=(16, 4), nodes=64)
    with pytest.raises(ContractError):
        chiron_cauchy_not_convergent(arc_length=4.0, nodes=64)


def test_family_csv_schema(tmp_path):
    rows = family_cg_vs_sasaki(lambdas=(0.5,), nodes=256, path_steps=16)
    text = write_family_csv(rows, tmp_path / "r.csv")
    header, line = text.splitlines()
    assert tuple(header.split(",")) == CSV_COLUMNS
    fields = line.split(",")
    assert fields[0] == "cg-sasaki" and fields[4] == "false" and fields[6] == "true"
    assert float(fields[3]) == rows[0].sasaki.value
    assert "\t" in write_family_csv(rows, delimiter="\t")
