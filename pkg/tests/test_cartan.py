import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from takiff_toda.cartan import (
    MIN_RANK,
    CartanError,
    CartanMatrix,
    cartan_matrix,
    positive_roots,
    validate_cartan,
)


def weyl_orbit_roots(c):
    """All roots as the Weyl orbit of the simple roots (independent of string closure).

    s_i(beta) = beta - beta(h_i) alpha_i with beta(h_i) = sum_j beta_j c[i][j].
    """
    c = np.asarray(c)
    n = len(c)
    frontier = {tuple(int(v) for v in np.eye(n, dtype=int)[i]) for i in range(n)}
    roots = set(frontier)
    while frontier:
        nxt = set()
        for beta in frontier:
            for i in range(n):
                pairing = sum(beta[j] * c[i][j] for j in range(n))
                img = list(beta)
                img[i] -= pairing
                img = tuple(img)
                if img not in roots:
                    nxt.add(img)
        roots |= nxt
        frontier = nxt
    return {r for r in roots if all(v >= 0 for v in r)}


EXPECTED_COUNT = {"A": lambda n: n * (n + 1) // 2, "B": lambda n: n * n, "C": lambda n: n * n,
                  "D": lambda n: n * (n - 1)}


def expected_exponents(series, n):
    if series == "A":
        return list(range(1, n + 1))
    if series in "BC":
        return list(range(1, 2 * n, 2))
    return sorted(list(range(1, 2 * n - 2, 2)) + [n - 1])


class TestCartanMatrix:
    def test_a1(self):
        assert cartan_matrix("A", 1).entries == ((2,),)

    def test_a2(self):
        assert cartan_matrix("A", 2).entries == ((2, -1), (-1, 2))

    def test_a3(self):
        assert cartan_matrix("A", 3).entries == ((2, -1, 0), (-1, 2, -1), (0, -1, 2))

    def test_b_and_c_are_transposes(self):
        for n in range(2, 6):
            b = cartan_matrix("B", n).array
            c = cartan_matrix("C", n).array
            assert np.array_equal(b, c.T)
            assert not cartan_matrix("B", n).is_symmetric

    def test_d4_branch(self):
        d = cartan_matrix("D", 4).array
        assert np.count_nonzero(d[1] == -1) == 3

    @pytest.mark.parametrize("series,rank", [("A", 0), ("B", 1), ("C", 1), ("D", 3), ("E", 6)])
    def test_invalid_requests(self, series, rank):
        with pytest.raises(CartanError):
            cartan_matrix(series, rank)

    def test_lowercase_series_accepted(self):
        assert cartan_matrix("a", 2) == cartan_matrix("A", 2)


class TestValidateCartan:
    def test_a2_passes(self):
        assert validate_cartan(CartanMatrix(((2, -1), (-1, 2)))).passed

    def test_affine_fails_on_determinant(self):
        rep = validate_cartan(CartanMatrix(((2, -2), (-2, 2))))
        assert not rep.passed
        assert "finite_type" in [c.name for c in rep.failures()]

    def test_positive_off_diagonal_fails(self):
        rep = validate_cartan(CartanMatrix(((2, 1), (1, 2))))
        assert "off_diagonal_nonpositive" in [c.name for c in rep.failures()]

    def test_zero_pattern(self):
        rep = validate_cartan(CartanMatrix(((2, -1), (0, 2))))
        assert "zero_pattern" in [c.name for c in rep.failures()]

    def test_bad_diagonal(self):
        rep = validate_cartan(CartanMatrix(((3, -1), (-1, 2))))
        assert "diagonal" in [c.name for c in rep.failures()]

    def test_non_square_rejected(self):
        assert not validate_cartan([[2, -1]]).passed

    @pytest.mark.parametrize("series", ["A", "B", "C", "D"])
    def test_standard_families_pass(self, series):
        for n in range(MIN_RANK[series], 8):
            assert validate_cartan(cartan_matrix(series, n))


class TestPositiveRoots:
    def test_a1(self):
        rs = positive_roots(cartan_matrix("A", 1))
        assert rs.positive == ((1,),)
        assert rs.J == 1 and rs.exponents == (1,)

    def test_a2(self):
        rs = positive_roots(cartan_matrix("A", 2))
        assert set(rs.positive) == {(1, 0), (0, 1), (1, 1)}
        assert rs.J == 3 and rs.exponents == (1, 2)

    def test_a3(self):
        rs = positive_roots(cartan_matrix("A", 3))
        assert rs.J == 6 and rs.exponents == (1, 2, 3)

    def test_simple_roots_first(self):
        rs = positive_roots(cartan_matrix("B", 3))
        assert sorted(rs.simple) == sorted(tuple(int(v) for v in row) for row in np.eye(3, dtype=int))
        assert rs.heights() == sorted(rs.heights())

    @pytest.mark.parametrize("series", ["A", "B", "C", "D"])
    def test_against_weyl_orbit(self, series):
        for n in range(MIN_RANK[series], 7):
            cm = cartan_matrix(series, n)
            rs = positive_roots(cm)
            assert set(rs.positive) == weyl_orbit_roots(cm.entries)
            assert rs.J == EXPECTED_COUNT[series](n)
            assert sorted(rs.exponents) == expected_exponents(series, n)

    def test_rejects_affine(self):
        with pytest.raises(CartanError):
            positive_roots(CartanMatrix(((2, -2), (-2, 2))))

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(["A", "B", "C", "D"]), st.integers(min_value=1, max_value=7))
    def test_exponents_sum_to_root_count(self, series, n):
        n = max(n, MIN_RANK[series])
        rs = positive_roots(cartan_matrix(series, n))
        assert sum(rs.exponents) == rs.J
        assert len(rs.exponents) == n
