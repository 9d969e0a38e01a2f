import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topoflow import Diagram, LossSpec, PointCloud
from topoflow.losses import (augmentation_loss, box_regularization, pers_k,
                             registration_loss, simplification_loss,
                             topological_loss)


def diagram_from(pairs, dim=1):
    """Plain diagram from (birth, death) pairs, no edge attributions."""
    pairs = list(pairs)
    return Diagram(np.full(len(pairs), dim, np.int32),
                   np.array([b for b, _ in pairs], float),
                   np.array([d for _, d in pairs], float),
                   None, None)


def loss_of(spec, births, deaths, dim=1):
    D = Diagram(np.full(len(births), dim, np.int32),
                np.asarray(births, float), np.asarray(deaths, float), None, None)
    value, _ = topological_loss(D, spec)
    return value


def check_cotangent_fd(spec, D, tol=1e-6, step=1e-5):
    """Central differences of the loss w.r.t. each (b_i, d_i)."""
    value, cot = topological_loss(D, spec)
    births = D.births.copy()
    deaths = D.deaths.copy()
    grad_b = np.zeros(len(D))
    grad_d = np.zeros(len(D))
    grad_b[cot.indices] = cot.d_birth
    grad_d[cot.indices] = cot.d_death
    for i in range(len(D)):
        if not math.isfinite(deaths[i]):
            continue
        for arr, grad in ((births, grad_b), (deaths, grad_d)):
            orig = arr[i]
            arr[i] = orig + step
            up = loss_of_arrays(spec, D, births, deaths)
            arr[i] = orig - step
            down = loss_of_arrays(spec, D, births, deaths)
            arr[i] = orig
            fd = (up - down) / (2 * step)
            assert grad[i] == pytest.approx(fd, abs=tol)


def loss_of_arrays(spec, D, births, deaths):
    Dp = Diagram(D.hom_dims, births, deaths, D.birth_edges, D.death_edges)
    value, _ = topological_loss(Dp, spec)
    return value


class TestLossSpec:
    def test_family_validation(self):
        with pytest.raises(ValueError):
            LossSpec(family="smooth")

    def test_top_k_validation(self):
        with pytest.raises(ValueError):
            LossSpec(top_k=0)

    def test_target_iff_register(self):
        with pytest.raises(ValueError):
            LossSpec(family="register")
        with pytest.raises(ValueError):
            LossSpec(family="simplify", target=diagram_from([(0, 1)]))

    def test_box_validation(self):
        with pytest.raises(ValueError):
            LossSpec(box=([1, 1], [0, 0]))


class TestSimplification:
    def test_single_point(self):
        D = diagram_from([(1.0, 3.0)])
        value, cot = simplification_loss(D, LossSpec(family="simplify"))
        assert value == 4.0
        assert cot.d_birth.tolist() == [-4.0]
        assert cot.d_death.tolist() == [4.0]

    def test_death_variant(self):
        D = diagram_from([(1.0, 2.0), (0.5, 3.0)])
        value, cot = simplification_loss(D, LossSpec(family="simplify-death"))
        assert value == 13.0
        by_idx = dict(zip(cot.indices.tolist(),
                          zip(cot.d_birth.tolist(), cot.d_death.tolist())))
        assert by_idx[0] == (0.0, 4.0)
        assert by_idx[1] == (0.0, 6.0)

    def test_empty_diagram(self):
        value, cot = simplification_loss(Diagram.empty(), LossSpec())
        assert value == 0.0 and len(cot) == 0

    def test_infinite_points_skipped(self):
        D = diagram_from([(0.0, math.inf), (1.0, 2.0)])
        value, cot = simplification_loss(D, LossSpec(family="simplify"))
        assert value == 1.0
        assert cot.indices.tolist() == [1]

    def test_top_k_selection(self):
        D = diagram_from([(0.0, 1.0), (0.0, 5.0), (0.0, 3.0)])
        value, cot = simplification_loss(D, LossSpec(family="simplify", top_k=1))
        assert value == 25.0
        assert cot.indices.tolist() == [1]

    def test_top_k_tie_break_lower_birth_then_index(self):
        D = diagram_from([(1.0, 3.0), (0.0, 2.0), (0.0, 2.0)])
        _, cot = simplification_loss(D, LossSpec(family="simplify", top_k=1))
        assert cot.indices.tolist() == [1]
        D2 = diagram_from([(0.0, 2.0), (0.0, 2.0)])
        _, cot2 = simplification_loss(D2, LossSpec(family="simplify", top_k=1))
        assert cot2.indices.tolist() == [0]

    def test_nonnegative(self, rng):
        for _ in range(20):
            b = rng.uniform(0, 2, 5)
            d = b + rng.uniform(0, 2, 5)
            assert loss_of(LossSpec(family="simplify"), b, d) >= 0.0

    def test_fd(self, rng):
        for family in ("simplify", "simplify-death"):
            b = rng.uniform(0, 1, 6)
            d = b + rng.uniform(0.1, 2, 6)
            D = diagram_from(zip(b, d))
            check_cotangent_fd(LossSpec(family=family), D)
            check_cotangent_fd(LossSpec(family=family, top_k=3), D)


class TestAugmentation:
    def test_single_point(self):
        D = diagram_from([(1.0, 3.0)])
        value, cot = augmentation_loss(D, LossSpec(family="augment", top_k=1))
        assert value == -4.0
        assert cot.d_birth.tolist() == [4.0]
        assert cot.d_death.tolist() == [-4.0]

    def test_top_persistence_selected(self):
        D = diagram_from([(0.0, 1.0), (0.0, 5.0)])
        value, cot = augmentation_loss(D, LossSpec(family="augment", top_k=1))
        assert value == -25.0
        assert cot.indices.tolist() == [1]

    def test_tie_break_deterministic(self):
        D = diagram_from([(0.0, 2.0), (0.0, 2.0)])
        _, cot = augmentation_loss(D, LossSpec(family="augment", top_k=1))
        assert cot.indices.tolist() == [0]

    def test_empty(self):
        value, cot = augmentation_loss(Diagram.empty(), LossSpec(family="augment"))
        assert value == 0.0 and len(cot) == 0

    def test_nonpositive(self, rng):
        b = rng.uniform(0, 2, 5)
        d = b + rng.uniform(0, 2, 5)
        assert loss_of(LossSpec(family="augment"), b, d) <= 0.0

    def test_death_variant_is_negated_death_sum(self):
        D = diagram_from([(0.2, 1.0), (0.1, 2.0)])
        value, cot = augmentation_loss(D, LossSpec(family="augment-death"))
        assert value == -5.0
        assert np.all(cot.d_birth == 0.0)
        assert sorted(cot.d_death.tolist()) == [-4.0, -2.0]

    def test_fd(self, rng):
        for family in ("augment", "augment-death"):
            b = rng.uniform(0, 1, 5)
            d = b + rng.uniform(0.1, 2, 5)
            D = diagram_from(zip(b, d))
            check_cotangent_fd(LossSpec(family=family, top_k=2), D)


def brute_force_matching(A, B):
    """Minimum over all partial matchings; unmatched pay (d-b)^2 / 2."""
    def diag(p):
        return (p[1] - p[0]) ** 2 / 2.0

    best = math.inf
    idx_a = range(len(A))
    for k in range(min(len(A), len(B)) + 1):
        for sub_a in itertools.combinations(idx_a, k):
            for sub_b in itertools.permutations(range(len(B)), k):
                cost = 0.0
                for a, b in zip(sub_a, sub_b):
                    cost += (A[a][0] - B[b][0]) ** 2 + (A[a][1] - B[b][1]) ** 2
                cost += sum(diag(A[a]) for a in idx_a if a not in sub_a)
                cost += sum(diag(B[b]) for b in range(len(B)) if b not in sub_b)
                best = min(best, cost)
    return best


class TestRegistration:
    def spec_for(self, target):
        return LossSpec(family="register", target=target)

    def test_perfect_match(self):
        D = diagram_from([(0.0, 1.0)])
        T = diagram_from([(0.0, 1.0)])
        value, cot = registration_loss(D, T, self.spec_for(T))
        assert value == 0.0
        assert cot.d_birth.tolist() == [0.0]
        assert cot.d_death.tolist() == [0.0]

    def test_empty_target_projects_to_diagonal(self):
        D = diagram_from([(0.0, 2.0)])
        T = Diagram.empty()
        value, cot = registration_loss(D, T, self.spec_for(T))
        assert value == pytest.approx(2.0)
        assert cot.d_birth.tolist() == [-2.0]
        assert cot.d_death.tolist() == [2.0]

    def test_against_brute_force(self, rng):
        for _ in range(25):
            na, nb = int(rng.integers(0, 4)), int(rng.integers(0, 4))
            A = [(b, b + g) for b, g in zip(rng.uniform(0, 2, na),
                                            rng.uniform(0.05, 2, na))]
            B = [(b, b + g) for b, g in zip(rng.uniform(0, 2, nb),
                                            rng.uniform(0.05, 2, nb))]
            D, T = diagram_from(A), diagram_from(B)
            value, _ = registration_loss(D, T, self.spec_for(T))
            assert value == pytest.approx(brute_force_matching(A, B), abs=1e-10)

    def test_symmetry(self, rng):
        A = [(0.1, 0.9), (0.5, 2.0), (1.0, 1.4)]
        B = [(0.2, 0.8), (0.4, 2.2)]
        D, T = diagram_from(A), diagram_from(B)
        ab, _ = registration_loss(D, T, self.spec_for(T))
        ba, _ = registration_loss(T, D, LossSpec(family="register", target=D))
        assert ab == pytest.approx(ba, rel=1e-12)

    def test_zero_iff_equal_multisets(self):
        A = [(0.1, 0.9), (0.5, 2.0)]
        D, T = diagram_from(A), diagram_from(A)
        value, _ = registration_loss(D, T, self.spec_for(T))
        assert value == pytest.approx(0.0, abs=1e-15)
        T2 = diagram_from([(0.1, 0.9), (0.5, 2.1)])
        value2, _ = registration_loss(D, T2, LossSpec(family="register", target=T2))
        assert value2 > 0.0

    def test_matching_is_per_dimension(self):
        D = diagram_from([(0.0, 1.0)], dim=0)
        T = diagram_from([(0.0, 1.0)], dim=1)
        spec = LossSpec(family="register", hom_dims=(0, 1), target=T)
        value, _ = registration_loss(D, T, spec)
        # mismatched dimensions cannot pair: both points pay the diagonal
        assert value == pytest.approx(1.0)

    def test_size_budget(self):
        D = diagram_from([(0.0, 1.0)] * 65)
        T = diagram_from([(0.0, 1.0)])
        with pytest.raises(ValueError, match="budget"):
            registration_loss(D, T, LossSpec(family="register", target=T))

    def test_fd_at_unique_matching(self, rng):
        A = [(0.1, 0.9), (0.6, 2.1)]
        B = [(0.15, 1.0), (0.5, 2.0), (3.0, 3.4)]
        D, T = diagram_from(A), diagram_from(B)
        check_cotangent_fd(LossSpec(family="register", target=T), D)


class TestBoxRegularization:
    BOX = ([-1.0, -1.0], [1.0, 1.0])

    def test_interior_point(self):
        value, grad = box_regularization(PointCloud([[0.0, 0.0]]), self.BOX)
        assert value == 0.0
        assert np.all(grad == 0.0)

    def test_face_distance(self):
        value, grad = box_regularization(PointCloud([[2.0, 0.0]]), self.BOX)
        assert value == 1.0
        assert grad.tolist() == [[2.0, 0.0]]

    def test_corner_distance(self):
        value, grad = box_regularization(PointCloud([[2.0, 2.0]]), self.BOX)
        assert value == 2.0
        assert grad.tolist() == [[2.0, 2.0]]

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_gradient_matches_fd(self, x, y):
        pts = np.array([[x, y]])
        step = 1e-6
        _, grad = box_regularization(PointCloud(pts), self.BOX)
        for c in range(2):
            up = pts.copy()
            up[0, c] += step
            down = pts.copy()
            down[0, c] -= step
            vu, _ = box_regularization(PointCloud(up), self.BOX)
            vd, _ = box_regularization(PointCloud(down), self.BOX)
            assert grad[0, c] == pytest.approx((vu - vd) / (2 * step), abs=1e-5)


class TestPersK:
    def test_examples(self):
        D = diagram_from([(0.0, 1.0), (0.0, 3.0)])
        assert pers_k(D, 1) == 3.0
        assert pers_k(D, 2) == 4.0
        assert pers_k(Diagram.empty(), 3) == 0.0

    def test_more_k_than_points_sums_all(self):
        D = diagram_from([(0.0, 1.0)])
        assert pers_k(D, 10) == 1.0

    def test_infinite_excluded(self):
        D = diagram_from([(0.0, math.inf), (0.0, 2.0)])
        assert pers_k(D, 5) == 2.0

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            pers_k(Diagram.empty(), 0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 5)), max_size=8),
           st.integers(1, 6))
    def test_matches_sorted_sum(self, pairs, k):
        pairs = [(b, b + abs(d)) for b, d in pairs]
        D = diagram_from(pairs)
        gaps = sorted((abs(d - b) for b, d in pairs), reverse=True)
        assert pers_k(D, k) == pytest.approx(sum(gaps[:k]))
