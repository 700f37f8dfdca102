import math

import numpy as np
import pytest

from qfuse.data import (
    HEART_FAILURE_COLUMNS,
    Dataset,
    GeneratorSpec,
    gen_gaussian_shift,
    gen_lognormal_shift,
    load_csv,
    null_mixture,
    split_by_label,
    standardize,
    standin_path,
    subsample,
    write_csv,
)
from qfuse.errors import ConfigError, DataError, InsufficientSampleError, ParseError, SchemaError


class TestGenerators:
    def test_gaussian_means(self):
        X, Y = gen_gaussian_shift(GeneratorSpec("gaussian", dims=2, shift=0.5, size=500, seed=3))
        assert X.features.shape == Y.features.shape == (500, 2)
        assert np.all(np.abs(Y.features.mean(axis=0) - 0.5) <= 4 / math.sqrt(500))
        assert np.all(np.abs(X.features.mean(axis=0)) <= 4 / math.sqrt(500))

    def test_deterministic(self):
        spec = GeneratorSpec("gaussian", dims=3, shift=0.2, size=50, seed=11)
        a, b = gen_gaussian_shift(spec), gen_gaussian_shift(spec)
        assert a[0].features.tobytes() == b[0].features.tobytes()
        assert a[1].features.tobytes() == b[1].features.tobytes()
        other = gen_gaussian_shift(GeneratorSpec("gaussian", dims=3, shift=0.2, size=50, seed=12))
        assert other[0].features.tobytes() != a[0].features.tobytes()

    def test_zero_shift_same_law(self):
        X, Y = gen_gaussian_shift(GeneratorSpec("gaussian", shift=0.0, size=2000, seed=1))
        assert abs(X.features.mean() - Y.features.mean()) < 4 * math.sqrt(2 / 4000)
        assert abs(X.features.std() - Y.features.std()) < 0.05

    def test_lognormal(self):
        X, Y = gen_lognormal_shift(GeneratorSpec("lognormal", dims=2, shift=0.5, size=2000, seed=5))
        assert np.all(X.features > 0) and np.all(Y.features > 0)
        # median of exp(N(0,1)) is 1; sample-median sd is about sqrt(pi/2)/sqrt(M) in log space
        tol = 4 * math.sqrt(math.pi / 2) / math.sqrt(2000)
        assert np.all(np.abs(np.log(np.median(X.features, axis=0))) <= tol)
        assert np.all(np.abs(np.log(np.median(Y.features, axis=0)) - 0.5) <= tol)

    def test_family_mismatch_and_validation(self):
        with pytest.raises(ConfigError):
            gen_lognormal_shift(GeneratorSpec("gaussian"))
        with pytest.raises(ConfigError):
            GeneratorSpec("uniform")
        with pytest.raises(ConfigError):
            GeneratorSpec(dims=0)
        with pytest.raises(ConfigError):
            GeneratorSpec(size=1)


class TestDataset:
    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            Dataset(np.array([[1.0, np.inf]]))

    def test_label_length(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((3, 1)), labels=["a", "b"])

    def test_immutable(self):
        ds = Dataset(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0


class TestCsv:
    def test_heart_standin(self):
        ds = load_csv(standin_path("heart_failure"), label_column="DEATH_EVENT")
        assert len(ds) == 299 and ds.dims == 12
        assert list(ds.columns) == HEART_FAILURE_COLUMNS
        X, Y = split_by_label(ds, "1")
        assert (len(X), len(Y)) == (203, 96)

    def test_breast_standin(self):
        ds = load_csv(
            standin_path("breast_cancer"),
            feature_columns=["concavity_mean", "concave points_mean"],
            label_column="diagnosis",
        )
        assert len(ds) == 569 and ds.dims == 2
        X, Y = split_by_label(ds, "M")
        assert (len(X), len(Y)) == (357, 212)

    def test_header_only(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("a,b,label\n")
        with pytest.raises(DataError):
            load_csv(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(DataError):
            load_csv(p)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError, match="'c'"):
            load_csv(p, feature_columns=["a", "c"])
        with pytest.raises(SchemaError):
            load_csv(p, feature_columns=[5])

    def test_parse_error_location(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n3,x\n")
        with pytest.raises(ParseError) as info:
            load_csv(p)
        assert info.value.row == 3 and info.value.column == "b"
        assert "line 3" in str(info.value)

    def test_headerless_and_indices(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text("1.5,2,yes\n3,4.25,no\n")
        ds = load_csv(p, feature_columns=[0, 1], label_column=2)
        assert ds.features.tolist() == [[1.5, 2.0], [3.0, 4.25]]
        assert list(ds.labels) == ["yes", "no"]

    def test_delimiter(self, tmp_path):
        p = tmp_path / "t.tsv"
        p.write_text("a\tb\n1\t2\n")
        assert load_csv(p, delimiter="\t").features.tolist() == [[1.0, 2.0]]

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = Dataset(rng.normal(size=(40, 3)) * 10.0 ** rng.integers(-8, 8, size=(40, 3)),
                     labels=rng.choice(["a", "b"], 40), columns=("u", "v", "w"))
        p = tmp_path / "rt.csv"
        write_csv(ds, p)
        back = load_csv(p, label_column="label")
        assert back.features.tobytes() == ds.features.tobytes()
        assert list(back.labels) == list(ds.labels)
        assert back.columns == ds.columns


class TestGrouping:
    def _ds(self):
        return Dataset(np.arange(20.0).reshape(10, 2), labels=list("aabababbba"))

    def test_split_partition(self):
        ds = self._ds()
        X, Y = split_by_label(ds, "b")
        assert len(X) + len(Y) == len(ds)
        rows = sorted(map(tuple, np.vstack([X.features, Y.features]).tolist()))
        assert rows == sorted(map(tuple, ds.features.tolist()))
        assert set(Y.labels) == {"b"}

    def test_split_missing_label(self):
        with pytest.raises(DataError):
            split_by_label(self._ds(), "z")
        with pytest.raises(DataError):
            split_by_label(Dataset(np.zeros((3, 1))), "a")

    def test_single_label_surfaces_downstream(self):
        ds = Dataset(np.arange(6.0).reshape(3, 2), labels=["a"] * 3)
        X, Y = split_by_label(ds, "a")
        assert len(X) == 0
        with pytest.raises(InsufficientSampleError):
            subsample(X, Y, 1, 0)

    def test_subsample_full_is_permutation(self):
        X = Dataset(np.arange(10.0)[:, None])
        Y = Dataset(np.arange(10.0, 20.0)[:, None])
        Xs, Ys = subsample(X, Y, 10, 4)
        assert sorted(Xs.features[:, 0]) == list(range(10))
        assert sorted(Ys.features[:, 0]) == list(range(10, 20))

    def test_subsample_sizes_and_distinct_seeds(self):
        X = Dataset(np.arange(203.0)[:, None])
        Y = Dataset(np.arange(96.0)[:, None])
        seen = set()
        for seed in range(100):
            Xs, Ys = subsample(X, Y, 10, seed)
            assert (len(Xs), len(Ys)) == (10, 10)
            assert len(set(Xs.features[:, 0])) == 10
            seen.add((tuple(Xs.features[:, 0]), tuple(Ys.features[:, 0])))
        assert len(seen) == 100
        a, b = subsample(X, Y, 10, 7), subsample(X, Y, 10, 7)
        assert a[0].features.tobytes() == b[0].features.tobytes()

    def test_subsample_too_large(self):
        X = Dataset(np.zeros((5, 1)))
        with pytest.raises(InsufficientSampleError):
            subsample(X, X, 6, 0)

    def test_null_mixture_sizes_and_multiset(self):
        X = Dataset(np.arange(7.0)[:, None])
        Y = Dataset(np.arange(7.0, 10.0)[:, None])
        Xm, Ym = null_mixture(X, Y, 3)
        assert (len(Xm), len(Ym)) == (7, 3)
        assert sorted(np.concatenate([Xm.features[:, 0], Ym.features[:, 0]])) == list(range(10))
        same = Dataset(np.arange(4.0)[:, None])
        a, b = null_mixture(same, same, 1)
        assert sorted(np.concatenate([a.features[:, 0], b.features[:, 0]])) == sorted([0, 0, 1, 1, 2, 2, 3, 3])

    def test_null_mixture_frequencies(self):
        nx, ny, trials = 6, 4, 2000
        X = Dataset(np.arange(nx, dtype=float)[:, None])
        Y = Dataset(np.arange(nx, nx + ny, dtype=float)[:, None])
        counts = np.zeros(nx + ny)
        for seed in range(trials):
            Xm, _ = null_mixture(X, Y, seed)
            counts[Xm.features[:, 0].astype(int)] += 1
        p = nx / (nx + ny)
        sigma = math.sqrt(trials * p * (1 - p))
        assert np.all(np.abs(counts - trials * p) <= 3 * sigma)


class TestStandardize:
    def test_two_values(self):
        out = standardize(Dataset(np.array([[0.0], [2.0]])))
        assert out.features[:, 0].tolist() == [-1.0, 1.0]

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        once = standardize(Dataset(rng.normal(size=(50, 3)) * 4 + 2))
        twice = standardize(once)
        assert np.allclose(once.features, twice.features, atol=1e-12, rtol=0)
        assert np.allclose(once.features.mean(axis=0), 0, atol=1e-12)
        assert np.allclose(once.features.std(axis=0), 1, atol=1e-12)

    def test_constant_column(self):
        ds = Dataset(np.array([[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]]), columns=("a", "b"))
        with pytest.warns(UserWarning, match="'b'"):
            out = standardize(ds)
        assert out.features[:, 1].tolist() == [0.0, 0.0, 0.0]
        assert any("'b'" in f for f in out.flags)
