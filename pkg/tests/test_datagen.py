import math

import numpy as np
import pytest

from nsdrift.datagen import (
    Gamma,
    Normal,
    PoissonTrivariate,
    StreamKind,
    StreamSpec,
    UniformCube,
    concept_of,
    default_drifts_path,
    format_distribution,
    gen_gamma,
    gen_normal,
    gen_poisson_trivariate,
    gen_uniform_cube,
    generate_stream,
    linear_shift_offset,
    make_rng,
    parse_distribution,
    read_stream_csv,
    write_stream_csv,
)
from nsdrift.errors import DataFormatError, DomainError

N = 100_000


def test_uniform_range_and_mean():
    x = gen_uniform_cube(N, 3, make_rng(1))
    assert x.shape == (N, 3)
    assert x.min() >= 0 and x.max() < 1
    assert np.all(np.abs(x.mean(axis=0) - 0.5) <= 3 * math.sqrt(1 / (12 * N)))


@pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (3.0, 1.0), (-1.0, 2.5)])
def test_normal_moments(mu, sigma):
    x = gen_normal(N, 2, mu, sigma, make_rng(2))
    assert np.all(np.abs(x.mean(axis=0) - mu) <= 3 * sigma / math.sqrt(N))
    assert np.all(np.abs(x.var(axis=0, ddof=1) - sigma**2) <= 3 * sigma**2 * math.sqrt(2 / N))


@pytest.mark.parametrize("alpha,beta", [(2.0, 0.5), (20.0, 1.0)])
def test_gamma_mean_uses_scale(alpha, beta):
    x = gen_gamma(N, 2, alpha, beta, make_rng(3))
    assert x.min() > 0
    sd = math.sqrt(alpha) * beta
    assert np.all(np.abs(x.mean(axis=0) - alpha * beta) <= 3 * sd / math.sqrt(N))


@pytest.mark.parametrize("lam", [10.0, 100.0])
def test_poisson_trivariate_moments(lam):
    x = gen_poisson_trivariate(N, lam, make_rng(4))
    assert np.array_equal(x, np.round(x))
    assert np.all(np.abs(x.mean(axis=0) - lam) <= 3 * math.sqrt(lam / N))
    r = np.corrcoef(x.T)[0, 1]
    # Fisher-z style bound on the correlation estimate.
    assert abs(r - 0.5) <= 3 * (1 - 0.25) / math.sqrt(N)


@pytest.mark.parametrize("dist", [UniformCube(), Normal(3.0, 1.0), Gamma(2.0, 0.5), PoissonTrivariate(10.0)])
def test_seed_determinism(dist):
    a = dist.sample(50, 2, make_rng(9, 3))
    b = dist.sample(50, 2, make_rng(9, 3))
    c = dist.sample(50, 2, make_rng(9, 4))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("text", ["uniform", "normal(3,1)", "gamma(2,0.5)", "poisson(100)"])
def test_distribution_round_trip(text):
    assert format_distribution(parse_distribution(text)) == text


@pytest.mark.parametrize("text", ["cauchy", "normal(1,2,3)", "gamma()", "uniform(2)"])
def test_distribution_parse_errors(text):
    with pytest.raises(ValueError):
        parse_distribution(text)


def test_linear_shift_offset():
    assert linear_shift_offset(2, 0.03) == pytest.approx(math.sqrt(2) * 0.03)
    assert linear_shift_offset(2, 0.03) == pytest.approx(0.04243, abs=1e-5)


def test_linear_shift_labels_follow_concepts():
    spec = StreamSpec("linear-shift", 2, 0.03, 8000, 2000, seed=5)
    s = generate_stream(spec)
    concept = concept_of(spec)
    sums = s.x.sum(axis=1)
    thr = np.where(concept == 1, 1.0 + linear_shift_offset(2, 0.03), 1.0)
    assert np.array_equal(s.y, (sums > thr).astype(int))
    assert s.drift_indices == [2000, 4000, 6000]


def test_drift_count_full_scale():
    spec = StreamSpec("linear-shift", 2, 0.01, 200_000, 2000)
    assert spec.n_drifts == 99
    assert generate_stream(spec).drift_indices == [2000 * i for i in range(1, 100)]


def test_zero_delta_is_stationary():
    spec = StreamSpec("linear-rotate", 2, 0.0, 4000, 1000)
    s = generate_stream(spec)
    assert s.drift_indices == []
    assert np.array_equal(s.y, (s.x[:, 1] > s.x[:, 0]).astype(int))


def test_rotate_concepts():
    s = generate_stream(StreamSpec("linear-rotate", 2, 15.0, 4000, 2000, seed=1))
    slope = math.tan(math.radians(60))
    b = slice(2000, 4000)
    assert np.array_equal(s.y[b], (s.x[b, 1] > s.x[b, 0] * slope).astype(int))
    a = slice(0, 2000)
    assert np.array_equal(s.y[a], (s.x[a, 1] > s.x[a, 0]).astype(int))


@pytest.mark.parametrize("delta", [45.0, 60.0])
def test_rotate_rejects_large_angles(delta):
    with pytest.raises(DomainError):
        StreamSpec("linear-rotate", 2, delta, 4000, 2000)


def test_normal_shift_class_balance_and_means():
    spec = StreamSpec("normal-shift", 2, 0.7, 40_000, 20_000, seed=2, normal_base=2.0)
    s = generate_stream(spec)
    assert abs(s.y.mean() - 0.5) <= 3 * math.sqrt(0.25 / len(s))
    a, b = slice(0, 20_000), slice(20_000, 40_000)
    m_a = s.x[a][s.y[a] == 1].mean(axis=0)
    m_b = s.x[b][s.y[b] == 1].mean(axis=0)
    m_0 = s.x[s.y == 0].mean(axis=0)
    tol = 3 / math.sqrt(9000)
    assert np.all(np.abs(m_a - 2.0) < tol)
    assert np.all(np.abs(m_b - 2.7) < tol)
    assert np.all(np.abs(m_0) < tol)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="linear-shift", dim=2, delta=0.1, length=1000, drift_period=300),
        dict(kind="linear-shift", dim=2, delta=-0.1, length=1000, drift_period=100),
        dict(kind="normal-shift", dim=3, delta=0.1, length=1000, drift_period=100),
        dict(kind="linear-rotate", dim=3, delta=10, length=1000, drift_period=100),
        dict(kind="sine", dim=2, delta=0.1, length=1000, drift_period=100),
    ],
)
def test_stream_spec_validation(kwargs):
    with pytest.raises(ValueError):
        StreamSpec(**kwargs)


@pytest.mark.parametrize("kind,dim,delta", [("linear-shift", 4, 0.03), ("linear-rotate", 2, 10.0), ("normal-shift", 2, 0.5)])
def test_stream_generation_is_reproducible(kind, dim, delta):
    spec = StreamSpec(StreamKind(kind), dim, delta, 2000, 500, seed=42)
    a, b = generate_stream(spec), generate_stream(spec)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_csv_round_trip_is_exact(tmp_path):
    s = generate_stream(StreamSpec("normal-shift", 2, 0.5, 2000, 500, seed=3))
    path = tmp_path / "s.csv"
    write_stream_csv(s, path)
    assert path.read_text().splitlines()[0] == "x0,x1,label"
    assert default_drifts_path(path).read_text().split() == ["500", "1000", "1500"]
    back = read_stream_csv(path)
    assert np.array_equal(back.x, s.x)
    assert np.array_equal(back.y, s.y)
    assert back.drift_indices == s.drift_indices


def test_csv_files_are_byte_identical(tmp_path):
    spec = StreamSpec("linear-shift", 3, 0.02, 1000, 250, seed=8)
    write_stream_csv(generate_stream(spec), tmp_path / "a.csv")
    write_stream_csv(generate_stream(spec), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize(
    "content,line",
    [
        ("", 1),
        ("x0,x1\n0.1,0.2\n", 1),
        ("x0,x1,label\n0.1,0.2,1\n0.3,0.4\n", 3),
        ("x0,x1,label\n0.1,abc,1\n", 2),
        ("x0,x1,label\n0.1,0.2,7\n", 2),
        ("x0,x1,label\n0.1,nan,1\n", 2),
    ],
)
def test_csv_format_errors_report_line(tmp_path, content, line):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(DataFormatError) as info:
        read_stream_csv(path)
    assert info.value.line == line
