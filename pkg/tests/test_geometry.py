import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invkernels import geometry as geo
from invkernels.geometry import DomainSpec, GroupSpec
from invkernels.serialization import read_matrix, read_points, write_matrix, write_points_csv

from oracles import correlation_2d_direct, correlation_direct

GROUPS = [
    (DomainSpec.sphere(12), GroupSpec.trivial(12)),
    (DomainSpec.sphere(12), GroupSpec.cyc1d(12)),
    (DomainSpec.sphere(12), GroupSpec.cyc2d(3, 4)),
    (DomainSpec.sphere(11), GroupSpec.shift_band(11, M=23)),
    (DomainSpec.hypercube(12), GroupSpec.cyc1d(12)),
    (DomainSpec.hypercube(12), GroupSpec.cyc2d(4, 3)),
]


# domains and sampling --------------------------------------------------------------

def test_sphere_norms():
    X = geo.sample_domain(DomainSpec.sphere(30), 500, 0)
    assert np.abs((X**2).sum(1) - 30).max() <= 1e-10


def test_hypercube_entries():
    X = geo.sample_domain(DomainSpec.hypercube(16), 200, 0)
    assert set(np.unique(X)) == {-1.0, 1.0}


def test_sphere_second_moment():
    X = geo.sample_domain(DomainSpec.sphere(100), 10_000, 3)
    assert abs((X[:, 0] ** 2).mean() - 1) <= 0.05


def test_sampling_deterministic_and_errors():
    a = geo.sample_domain(DomainSpec.sphere(5), 4, 7)
    b = geo.sample_domain(DomainSpec.sphere(5), 4, 7)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        geo.sample_domain(DomainSpec.sphere(5), 0, 0)
    with pytest.raises(ValueError):
        DomainSpec.hypercube(0)


def test_dataset_on_domain():
    from invkernels.dataio import TargetSpec

    dom = DomainSpec.sphere(10)
    ds = geo.make_dataset(dom, TargetSpec("quad", 10), 20, noise_sd=0.5, seed=1)
    assert dom.contains(ds.X)
    assert ds.y.shape == (20,)
    clean = geo.make_dataset(dom, TargetSpec("quad", 10), 20, seed=1)
    assert np.array_equal(clean.X, ds.X) and not np.array_equal(clean.y, ds.y)


# group specs -----------------------------------------------------------------------

def test_group_spec_validation():
    with pytest.raises(ValueError):
        GroupSpec("cyc2d", 12, 5, 3)
    with pytest.raises(ValueError):
        GroupSpec.shift_band(10)
    with pytest.raises(ValueError):
        GroupSpec.shift_band(9).check_domain(DomainSpec.hypercube(9))
    with pytest.raises(ValueError):
        GroupSpec.cyc1d(9).check_domain(DomainSpec.sphere(8))
    assert GroupSpec.trivial(5).alpha == 0
    assert {GroupSpec.cyc1d(6).alpha, GroupSpec.cyc2d(2, 3).alpha, GroupSpec.shift_band(7).alpha} == {1}


def test_shift_band_default_nodes():
    assert GroupSpec.shift_band(11, degree=3).M == 3 * 5 + 1
    assert GroupSpec.shift_band(11).M == 44


def test_group_dict_roundtrip():
    for _, g in GROUPS:
        assert GroupSpec.from_dict(g.to_dict()) == g


# actions ------------------------------------------------------------------------------

def test_cyc1d_example():
    g = GroupSpec.cyc1d(3)
    assert np.array_equal(geo.apply_group(1, g, np.array([1.0, 2.0, 3.0])), [2.0, 3.0, 1.0])


@pytest.mark.parametrize("dom,g", GROUPS)
def test_identity_element(dom, g):
    x = geo.sample_domain(dom, 1, 0)[0]
    assert np.array_equal(geo.apply_group(g.elements()[0], g, x), x)


def test_shift_band_quarter_turn():
    g = GroupSpec.shift_band(5)
    x = np.array([0.5, 1.0, 2.0, 3.0, 4.0])
    out = geo.apply_group(0.25, g, x)
    # block (x2, x3) -> (x3, -x2), to round-off in cos(pi/2)
    assert out[0] == 0.5
    assert np.allclose(out[1:3], [2.0, -1.0], atol=1e-15)


def test_out_of_range_indices():
    with pytest.raises(IndexError):
        geo.apply_group(5, GroupSpec.cyc1d(5), np.ones(5))
    with pytest.raises(IndexError):
        geo.apply_group((0, 4), GroupSpec.cyc2d(2, 4), np.ones(8))
    with pytest.raises(IndexError):
        geo.apply_group(1.0, GroupSpec.shift_band(5), np.ones(5))
    with pytest.raises(IndexError):
        geo.apply_group(1, GroupSpec.trivial(5), np.ones(5))


@pytest.mark.parametrize("dom,g", GROUPS)
def test_actions_are_orthogonal(dom, g):
    X = geo.sample_domain(dom, 5, 1)
    for el in g.elements():
        Y = geo.apply_group(el, g, X)
        assert np.abs((Y**2).sum(1) - (X**2).sum(1)).max() <= 1e-9 * dom.d


@pytest.mark.parametrize("g", [GroupSpec.cyc1d(12), GroupSpec.cyc2d(4, 3)])
def test_hypercube_closure(g):
    X = geo.sample_domain(DomainSpec.hypercube(12), 5, 2)
    for el in g.elements():
        assert set(np.unique(geo.apply_group(el, g, X))) <= {-1.0, 1.0}


# inner products -----------------------------------------------------------------------

def test_trivial_single_value():
    x, y = geo.sample_domain(DomainSpec.sphere(7), 2, 0)
    assert np.allclose(geo.group_inner_products(GroupSpec.trivial(7), x, y), [x @ y])


def test_spike_orthogonal_shifts():
    d = 10
    e = np.zeros(d)
    e[0] = np.sqrt(d)
    vals = geo.group_inner_products(GroupSpec.cyc1d(d), e, e)
    expect = np.zeros(d)
    expect[0] = d
    assert np.allclose(vals, expect, atol=1e-12)


@pytest.mark.parametrize("d", [8, 128])
def test_cyc1d_matches_direct_loop(d):
    x, y = geo.sample_domain(DomainSpec.sphere(d), 2, d)
    assert np.allclose(geo.group_inner_products(GroupSpec.cyc1d(d), x, y), correlation_direct(x, y), atol=1e-9)


def test_fft_equals_direct_d128():
    g = GroupSpec.cyc1d(128)
    X = geo.sample_domain(DomainSpec.sphere(128), 6, 0)
    Y = geo.sample_domain(DomainSpec.sphere(128), 5, 1)
    fft = geo.pairwise_group_inner_products(g, X, Y, method="fft")
    direct = geo.pairwise_group_inner_products(g, X, Y, method="direct")
    assert np.abs(fft - direct).max() <= 1e-9 * np.abs(direct).max()


def test_cyc2d_fft_and_direct_match_loop():
    g = GroupSpec.cyc2d(8, 9)
    x, y = geo.sample_domain(DomainSpec.sphere(72), 2, 3)
    ref = correlation_2d_direct(x, y, 8, 9)
    for method in ("fft", "direct"):
        got = geo.pairwise_group_inner_products(g, x[None], y[None], method=method)[0, 0]
        assert np.allclose(got, ref, atol=1e-9)


def test_shift_band_products_match_applied_action():
    g = GroupSpec.shift_band(9, M=13)
    x, y = geo.sample_domain(DomainSpec.sphere(9), 2, 4)
    ref = [x @ geo.apply_group(u, g, y) for u in g.elements()]
    assert np.allclose(geo.group_inner_products(g, x, y), ref, atol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        geo.group_inner_products(GroupSpec.cyc1d(5), np.ones(5), np.ones(4))


# Haar averaging -----------------------------------------------------------------------

def test_haar_constant_and_values():
    assert geo.haar_average(GroupSpec.cyc1d(6), lambda el: 3.5) == pytest.approx(3.5)
    assert geo.haar_average(GroupSpec.cyc1d(4), np.array([4.0, 0, 0, 0])) == 1.0
    with pytest.raises(ValueError):
        geo.haar_average(GroupSpec.cyc1d(4), np.array([]))


def test_shift_band_cosine_exact():
    g = GroupSpec.shift_band(5, M=8)
    assert abs(geo.haar_average(g, lambda u: np.cos(2 * np.pi * u))) <= 1e-12


def test_shift_band_quadrature_exact_for_polynomial_kernel():
    # <x, g_u y>^q is a trig polynomial of degree q * (d // 2); default nodes integrate it exactly
    d, q = 7, 3
    x, y = geo.sample_domain(DomainSpec.sphere(d), 2, 0)
    exact = geo.haar_average(GroupSpec.shift_band(d, M=400), geo.group_inner_products(GroupSpec.shift_band(d, M=400), x, y) ** q)
    g = GroupSpec.shift_band(d, degree=q)
    got = geo.haar_average(g, geo.group_inner_products(g, x, y) ** q)
    assert got == pytest.approx(exact, rel=1e-11, abs=1e-11)


def test_averaging_idempotent():
    g = GroupSpec.cyc1d(6)
    vals = np.arange(6.0)
    avg = geo.haar_average(g, vals)
    assert geo.haar_average(g, np.full(6, avg)) == pytest.approx(vals.mean())


@settings(max_examples=30, deadline=None)
@given(d=st.integers(3, 40), seed=st.integers(0, 10_000), shift=st.integers(0, 1000))
def test_orbit_inner_products_are_shift_covariant(d, seed, shift):
    g = GroupSpec.cyc1d(d)
    x, y = geo.sample_domain(DomainSpec.sphere(d), 2, seed)
    a = geo.group_inner_products(g, x, geo.apply_group(shift % d, g, y))
    b = geo.group_inner_products(g, x, y)
    assert np.allclose(np.sort(a), np.sort(b), atol=1e-9)


# serialization ----------------------------------------------------------------------

def test_point_files_roundtrip(tmp_path):
    X = geo.sample_domain(DomainSpec.sphere(6), 5, 0)
    write_matrix(tmp_path / "p.bin", X)
    raw = (tmp_path / "p.bin").read_bytes()
    assert len(raw) == 16 + 8 * X.size
    assert int.from_bytes(raw[:8], "little") == 6 and int.from_bytes(raw[8:16], "little") == 5
    assert np.array_equal(read_matrix(tmp_path / "p.bin"), X)
    write_points_csv(tmp_path / "p.csv", X)
    assert np.array_equal(read_points(tmp_path / "p.csv"), X)
