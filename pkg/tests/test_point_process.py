import numpy as np
import pytest
from scipy import stats

from rcmlab.geometry import Box, CubeUnion, lam
from rcmlab.point_process import (LazyPoissonField, PointSet, SamplingError, coupled_sample,
                                  sample_homogeneous, sprinkle_decomposition, superpose, thin)
from rcmlab.rng import Stream

REPS = 10_000


def counts(fn, reps=REPS):
    return np.array([len(fn(Stream.root(11).child(r))) for r in range(reps)])


def dispersion_ok(c, mean):
    """Poisson dispersion statistic ``sum (c - mean)^2 / mean`` against chi^2(n)."""
    stat = ((c - mean) ** 2).sum() / mean
    p = stats.chi2.sf(stat, len(c))
    return 1e-4 < p < 1 - 1e-4


def test_zero_intensity():
    assert len(sample_homogeneous(0.0, lam(3, 2), Stream.root(1))) == 0
    assert len(coupled_sample(0.0, lam(3, 2), Stream.root(1))) == 0


def test_errors():
    from rcmlab.geometry import Slab
    with pytest.raises(SamplingError):
        sample_homogeneous(-1, lam(1, 2), Stream.root(0))
    with pytest.raises(SamplingError):
        sample_homogeneous(1, Slab(1.0, 3), Stream.root(0))
    with pytest.raises(SamplingError):
        sprinkle_decomposition(1.0, 1.4)
    with pytest.raises(SamplingError):
        thin(sample_homogeneous(5, lam(1, 2), Stream.root(0)), 1.5, Stream.root(1))
    with pytest.raises(SamplingError):
        superpose(PointSet.from_coords(np.zeros((1, 2))), PointSet.from_coords(np.zeros((1, 3))))


def test_poisson_mean_and_variance():
    s, intensity, d = 1.5, 0.8, 2
    c = counts(lambda st: sample_homogeneous(intensity, lam(s, d), st))
    mean = intensity * (2 * s) ** d
    assert abs(c.mean() - mean) < 4 * np.sqrt(mean / REPS)
    # sample variance has standard error about sqrt((2 mean^2 + mean) / reps)
    assert abs(c.var(ddof=1) - mean) < 5 * np.sqrt((2 * mean ** 2 + mean) / REPS)


def test_locations_uniform_in_region():
    region = lam(2, 2) - lam(1, 2)
    x = sample_homogeneous(50, region, Stream.root(3)).coords
    assert region.contains(x).all()
    assert (np.abs(x).max(axis=1) >= 1).all()
    y = sample_homogeneous(50, Box((-2, 0), (2, 1)), Stream.root(3)).coords
    ks = stats.kstest(y[:, 0], stats.uniform(-2, 4).cdf)
    assert ks.pvalue > 1e-4


def test_determinism():
    a = sample_homogeneous(3, lam(2, 3), Stream.root(5).child(1))
    b = sample_homogeneous(3, lam(2, 3), Stream.root(5).child(1))
    assert np.array_equal(a.coords, b.coords) and np.array_equal(a.ids, b.ids)


def test_superpose():
    x = sample_homogeneous(2, lam(1, 2), Stream.root(1))
    assert superpose(x, PointSet.empty(2)) is x
    y = sample_homogeneous(2, lam(1, 2), Stream.root(2))
    z = superpose(x, y)
    assert len(z) == len(x) + len(y)
    assert len(z.id_set()) == len(z)


def test_superposition_dispersion():
    box = lam(1, 2)
    c = counts(lambda st: superpose(sample_homogeneous(1.0, box, st.child(1)),
                                    sample_homogeneous(0.5, box, st.child(2))))
    assert dispersion_ok(c, 1.5 * 4)


def test_thin():
    x = sample_homogeneous(20, lam(1, 2), Stream.root(4))
    assert len(thin(x, 1.0, Stream.root(9))) == len(x)
    assert len(thin(x, 0.0, Stream.root(9))) == 0
    # coins depend on ids, so smaller retention gives a subset
    small = thin(x, 0.3, Stream.root(9)).id_set()
    big = thin(x, 0.6, Stream.root(9)).id_set()
    assert small <= big
    # order of input points does not matter
    perm = np.random.default_rng(0).permutation(len(x))
    y = PointSet(x.ids[perm], x.coords[perm])
    assert thin(y, 0.6, Stream.root(9)).id_set() == big
    # location-dependent retention
    right = thin(x, lambda c: (c[:, 0] > 0).astype(float), Stream.root(9))
    assert (right.coords[:, 0] > 0).all()


def test_thinning_dispersion():
    box = lam(1, 2)
    c = counts(lambda st: thin(sample_homogeneous(3.0, box, st.child(1)), 0.5, st.child(2)))
    assert dispersion_ok(c, 1.5 * 4)


def test_sprinkle_decomposition():
    assert sprinkle_decomposition(1.0, 1.0).eps1 == 0
    sd = sprinkle_decomposition(1.4, 1.0, 40)
    assert sd.eps1 == pytest.approx(0.01)
    assert sd.mu == pytest.approx(1.4)
    box = lam(1, 2)
    sd = sprinkle_decomposition(2.0, 1.0, 5)

    def full(st):
        x = sample_homogeneous(sd.lam, box, st.child(0))
        for k in range(sd.k):
            x = superpose(x, sample_homogeneous(sd.eps1, box, st.child(k + 1)))
        return x
    assert dispersion_ok(counts(full, 4000), 2.0 * 4)


def test_csv_round_trip(tmp_path):
    x = sample_homogeneous(3, lam(1, 3), Stream.root(8))
    x.to_csv(tmp_path / "p.csv")
    y = PointSet.from_csv(tmp_path / "p.csv")
    assert np.array_equal(x.ids, y.ids)
    assert np.array_equal(x.coords, y.coords)


def test_coupled_sample_nested_and_poisson():
    box = Box((0, 0), (4, 2))
    st = Stream.root(6)
    small = coupled_sample(0.7, box, st)
    big = coupled_sample(1.9, box, st)
    assert small.id_set() <= big.id_set()
    idx = {i: k for k, i in enumerate(big.ids.tolist())}
    for i, x in zip(small.ids.tolist(), small.coords):
        assert np.array_equal(big.coords[idx[i]], x)
    c = counts(lambda s: coupled_sample(1.3, box, s), 4000)
    assert dispersion_ok(c, 1.3 * 8)


def test_lazy_field_consistency():
    f = LazyPoissonField(2.0, 2, Stream.root(3))
    g = LazyPoissonField(2.0, 2, Stream.root(3))
    whole = f.query(Box((0, 0), (4, 4)))
    part = g.query(Box((0, 0), (2, 4)))
    assert part.id_set() <= whole.id_set()
    cube = g.cubes([[1, 1]])
    assert CubeUnion([(1.5, 1.5)]).contains(cube.coords).all()
    c = np.array([len(LazyPoissonField(2.0, 2, Stream.root(r)).cubes([[0, 0], [5, 5]]))
                  for r in range(3000)])
    assert dispersion_ok(c, 4.0)
