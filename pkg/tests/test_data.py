import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbfonline.data import (PricePanel, SplitSpec, check_csv, compute_returns, load_csv, split,
                            synthesize_ar1, synthesize_coefficient_flip,
                            synthesize_jump_diffusion, write_csv)
from rbfonline.errors import (ConfigError, DomainError, InputFormatError, ValidationError)


def panel(prices, start="2020-01-01"):
    p = np.asarray(prices, dtype=float).reshape(len(prices), -1)
    ts = np.datetime64(start) + np.arange(p.shape[0]).astype("timedelta64[D]")
    return PricePanel(ts, tuple(f"c{i}" for i in range(p.shape[1])), p)


def write(tmp_path, text, name="p.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_three_rows(self, tmp_path):
        p = load_csv(write(tmp_path, "date,a\n2020-01-01,100\n2020-01-02,101\n2020-01-03,99\n"))
        assert p.instruments == ("a",)
        np.testing.assert_array_equal(p.prices[:, 0], [100, 101, 99])
        assert p.timestamps[0] == np.datetime64("2020-01-01")

    def test_duplicate_date(self, tmp_path):
        path = write(tmp_path, "date,a\n2020-01-01,100\n2020-01-01,101\n")
        with pytest.raises(ValidationError, match="duplicate timestamp"):
            load_csv(path)

    def test_gap_is_preserved(self, tmp_path):
        p = load_csv(write(tmp_path, "date,a,b\n2020-01-01,100,5\n2020-01-02,,6\n2020-01-03,99,7\n"))
        assert np.isnan(p.prices[1, 0])
        assert p.prices[1, 1] == 6.0

    def test_bad_number_names_line_and_column(self, tmp_path):
        path = write(tmp_path, "date,a,b\n2020-01-01,100,5\n2020-01-02,1x,6\n")
        with pytest.raises(InputFormatError, match=r"line 3, column 'a'"):
            load_csv(path)

    def test_bad_date(self, tmp_path):
        with pytest.raises(InputFormatError, match="unparseable date"):
            load_csv(write(tmp_path, "date,a\nyesterday,1\n"))

    def test_non_positive_and_order(self, tmp_path):
        path = write(tmp_path, "date,a\n2020-01-02,1\n2020-01-01,-1\n")
        problems = check_csv(path)
        assert any("not increasing" in p for p in problems)
        assert any("non-positive" in p for p in problems)
        with pytest.raises(ValidationError):
            load_csv(path)

    def test_column_selection_keeps_requested_order(self, tmp_path):
        p = load_csv(write(tmp_path, "date,a,b\n2020-01-01,1,2\n"), columns=["b", "a"])
        assert p.instruments == ("b", "a")
        np.testing.assert_array_equal(p.prices, [[2, 1]])

    def test_write_read_round_trip(self, tmp_path):
        src = synthesize_jump_diffusion(50, 3, n_instruments=3, jump_intensity=0.1)
        prices = src.prices.copy()
        prices[4, 1] = np.nan
        src = PricePanel(src.timestamps, src.instruments, prices)
        write_csv(src, tmp_path / "x.csv")
        back = load_csv(tmp_path / "x.csv")
        np.testing.assert_array_equal(back.prices, src.prices)
        np.testing.assert_array_equal(back.timestamps, src.timestamps)
        assert check_csv(tmp_path / "x.csv") == []


class TestReturns:
    def test_constant_price(self):
        np.testing.assert_array_equal(compute_returns(panel([100, 100, 100])).values[:, 0], [0, 0])

    def test_simple(self):
        assert compute_returns(panel([100, 110]), "simple").values[0, 0] == pytest.approx(0.10)

    def test_log_of_e(self):
        assert compute_returns(panel([100, math.e * 100])).values[0, 0] == pytest.approx(1.0, rel=1e-15)

    def test_missing_neighbour(self):
        r = compute_returns(panel([100, np.nan, 102, 103])).values[:, 0]
        assert np.isnan(r[0]) and np.isnan(r[1]) and np.isfinite(r[2])
        assert r.shape == (3,)

    def test_non_positive_is_rejected_by_panel(self):
        with pytest.raises(ValidationError):
            panel([100, 0, 5])

    def test_domain_error_for_log(self):
        # bypass panel validation to reach the return computation itself
        p = object.__new__(PricePanel)
        object.__setattr__(p, "timestamps", np.arange(3).astype("datetime64[D]"))
        object.__setattr__(p, "instruments", ("a",))
        object.__setattr__(p, "prices", np.array([[1.0], [-1.0], [2.0]]))
        with pytest.raises(DomainError):
            compute_returns(p, "log")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            compute_returns(panel([1, 2]), "pct")

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 300))
    def test_cumulative_reconstruction(self, seed, n):
        src = synthesize_jump_diffusion(n, seed, vol=0.02, jump_intensity=0.05, n_instruments=2)
        r = compute_returns(src, "log").values
        rebuilt = src.prices[0] * np.exp(np.vstack([np.zeros((1, 2)), np.cumsum(r, axis=0)]))
        np.testing.assert_allclose(rebuilt, src.prices, rtol=1e-12)


class TestSplit:
    @pytest.mark.parametrize("n,expected", [(1297, (648, 649)), (10, (5, 5)), (11, (5, 6))])
    def test_floor_sizes(self, n, expected):
        r = compute_returns(synthesize_jump_diffusion(n + 1, 0))
        tr, te = split(r, SplitSpec(0.5))
        assert (tr.n_rows, te.n_rows) == expected

    def test_ceil_matches_reported_layout(self):
        r = compute_returns(synthesize_jump_diffusion(1298, 0))
        tr, te = split(r, SplitSpec(0.5, "ceil"))
        assert (tr.n_rows, te.n_rows) == (649, 648)

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.2, 1.5])
    def test_bad_fraction(self, frac):
        with pytest.raises(ConfigError):
            SplitSpec(frac)

    def test_too_short(self):
        with pytest.raises(ValidationError):
            split(compute_returns(synthesize_jump_diffusion(4, 0)))

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(4, 500), frac=st.floats(0.01, 0.99))
    def test_partition(self, n, frac):
        r = compute_returns(synthesize_jump_diffusion(n + 1, n))
        tr, te = split(r, SplitSpec(frac))
        np.testing.assert_array_equal(np.vstack([tr.values, te.values]), r.values)
        np.testing.assert_array_equal(np.concatenate([tr.timestamps, te.timestamps]), r.timestamps)
        assert tr.timestamps[-1] < te.timestamps[0]


class TestGenerators:
    def test_deterministic(self):
        a = synthesize_jump_diffusion(200, 9, jump_intensity=0.1, n_instruments=3)
        b = synthesize_jump_diffusion(200, 9, jump_intensity=0.1, n_instruments=3)
        np.testing.assert_array_equal(a.prices, b.prices)
        assert not np.array_equal(a.prices, synthesize_jump_diffusion(200, 10, n_instruments=3).prices)

    def test_increment_variance(self):
        sigma = 0.013
        r = compute_returns(synthesize_jump_diffusion(10_001, 1, vol=sigma)).values[:, 0]
        n = r.size
        se = sigma**2 * math.sqrt(2.0 / (n - 1))
        assert abs(r.var(ddof=1) - sigma**2) < 3 * se

    def test_jump_variance(self):
        vol, lam, js = 0.01, 0.1, 0.05
        r = compute_returns(synthesize_jump_diffusion(50_001, 2, vol=vol, jump_intensity=lam,
                                                      jump_scale=js)).values[:, 0]
        assert r.var() == pytest.approx(vol**2 + lam * js**2, rel=0.05)

    def _paths(self, sigma=0.01, n_steps=200, n_paths=10_000):
        # random walk in log price, y_0 = 0; one column per independent path
        p = synthesize_jump_diffusion(n_steps + 1, 42, vol=sigma, n_instruments=n_paths)
        return np.log(p.prices / p.prices[0])

    def test_variance_grows_linearly(self):
        sigma = 0.01
        y = self._paths(sigma)
        t = np.arange(y.shape[0])
        slope = np.polyfit(t, y.var(axis=1), 1)[0]
        assert slope == pytest.approx(sigma**2, rel=0.10)

    def test_mean_stays_at_start(self):
        y = self._paths()
        n_paths = y.shape[1]
        for t in (10, 100, 200):
            se = y[t].std(ddof=1) / math.sqrt(n_paths)
            assert abs(y[t].mean() - y[0].mean()) < 3 * se

    def test_autocovariance(self):
        sigma = 0.01
        y = self._paths(sigma)
        for t, lag in ((200, 50), (150, 100)):
            cov = np.mean(y[t] * y[t - lag])
            assert cov == pytest.approx((t - lag) * sigma**2, rel=0.1)

    @pytest.mark.parametrize("kw", [dict(n=1), dict(vol=0.0), dict(jump_intensity=1.5)])
    def test_bad_parameters(self, kw):
        args = dict(n=10, seed=0) | kw
        with pytest.raises(ConfigError):
            synthesize_jump_diffusion(**args)

    def test_ar1_autocorrelation(self):
        r = compute_returns(synthesize_ar1(20_001, 0, coef=0.6, n_instruments=1)).values[:, 0]
        assert np.corrcoef(r[1:], r[:-1])[0, 1] == pytest.approx(0.6, abs=0.03)

    def test_flip_changes_sign(self):
        p = synthesize_coefficient_flip(2001, 0, flip_at=1000, n_distractors=1)
        assert p.instruments == ("x", "y", "z0")
        r = compute_returns(p).values
        x, y = r[:, 0], r[:, 1]
        pre = np.polyfit(x[:999], y[1:1000], 1)[0]
        post = np.polyfit(x[1000:-1], y[1001:], 1)[0]
        assert pre == pytest.approx(1.0, abs=0.05) and post == pytest.approx(-1.0, abs=0.05)
