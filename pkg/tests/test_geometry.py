import itertools
import unittest

import numpy as np

from core.errors import DimensionMismatch, EmptyPolytope, UnboundedPolytope
from core.geometry import (
    HPolytope, INFEASIBLE, OPTIMAL, UNBOUNDED, bounding_box, chebyshev_center, chebyshev_radius,
    faces, intersect, intersect_halfspace, irredundant_rows, is_empty, is_fulldim, is_subset,
    order_polygon, remove_redundant, same_set, sample_convex_combinations, sample_uniform,
    solve_lp, vertices, volume,
)
from tests.fixtures import box, square


def random_polytope(rng: np.random.Generator, n: int, rows: int = 8) -> HPolytope:
    """Semiespaços aleatórios em volta da origem, dentro de [-2, 2]^n."""
    C = rng.standard_normal((rows, n))
    d = 0.5 + rng.uniform(size=rows)
    return intersect(HPolytope(C, d), box([-2.0] * n, [2.0] * n))


def cube(n: int, bound: float = 1.0) -> HPolytope:
    return box([-bound] * n, [bound] * n)


class TestHPolytope(unittest.TestCase):

    def test_from_box_row_order(self):
        P = box([0.0, -1.0], [2.0, 3.0])
        np.testing.assert_array_equal(P.C, [[1, 0], [-1, 0], [0, 1], [0, -1]])
        np.testing.assert_array_equal(P.d, [2, 0, 3, 1])

    def test_arrays_are_read_only(self):
        P = square()
        with self.assertRaises(ValueError):
            P.C[0, 0] = 5.0

    def test_mismatched_rows(self):
        with self.assertRaises(DimensionMismatch):
            HPolytope(np.eye(2), [1.0, 2.0, 3.0])

    def test_contains(self):
        P = square()
        self.assertTrue(P.contains([1.0, 1.0]))
        self.assertTrue(P.contains([1.0 + 1e-9, 0.0]))
        self.assertFalse(P.contains([1.1, 0.0]))
        np.testing.assert_array_equal(P.contains_points([[0, 0], [2, 0], [-1, -1]]), [True, False, True])

    def test_closure_drops_open_flag(self):
        O = box([0, 0], [1, 1], open=True)
        self.assertTrue(O.open)
        self.assertFalse(O.closure().open)
        np.testing.assert_array_equal(O.closure().C, O.C)


class TestLinearProgramming(unittest.TestCase):

    def test_is_empty(self):
        self.assertFalse(is_empty(square()))
        P = HPolytope([[1.0], [-1.0]], [0.0, -1.0])  # x <= 0 e x >= 1
        self.assertTrue(is_empty(P))

    def test_solve_lp_min_and_max(self):
        P = box([0.0, 0.0], [2.0, 3.0])
        res = solve_lp([1.0, 1.0], P, "max")
        self.assertEqual(res.status, OPTIMAL)
        self.assertAlmostEqual(res.objective, 5.0, places=9)
        res = solve_lp([1.0, -1.0], P, "min")
        self.assertAlmostEqual(res.objective, -3.0, places=9)

    def test_solve_lp_unbounded_and_infeasible(self):
        half = HPolytope([[1.0, 0.0]], [0.0])
        self.assertEqual(solve_lp([1.0, 0.0], half).status, UNBOUNDED)
        self.assertEqual(solve_lp([-1.0, 0.0], half).status, OPTIMAL)
        empty = HPolytope([[1.0, 0.0], [-1.0, 0.0]], [0.0, -1.0])
        self.assertEqual(solve_lp([1.0, 0.0], empty).status, INFEASIBLE)

    def test_chebyshev_center(self):
        center, radius = chebyshev_center(box([0.0, 0.0], [4.0, 2.0]))
        self.assertAlmostEqual(radius, 1.0, places=8)
        self.assertAlmostEqual(center[1], 1.0, places=8)

    def test_triangle_chebyshev_center(self):
        triangle = HPolytope([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 1.0])
        center, radius = chebyshev_center(triangle)
        r = (2.0 - np.sqrt(2.0)) / 2.0
        self.assertAlmostEqual(radius, r, places=8)
        np.testing.assert_allclose(center, [r, r], atol=1e-8)

    def test_chebyshev_ball_is_inside(self):
        rng = np.random.default_rng(3)
        U = rng.standard_normal((1000, 2))
        U /= np.linalg.norm(U, axis=1)[:, None]
        triangle = HPolytope([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 1.0])
        for P in (triangle, random_polytope(rng, 2)):
            center, radius = chebyshev_center(P)
            X = center + (radius - 1e-9) * U
            self.assertTrue(np.all(X @ P.C.T - P.d <= 1e-9))

    def test_negated_objective_gives_the_same_optimum(self):
        rng = np.random.default_rng(4)
        for n in (2, 3, 4):
            P = random_polytope(rng, n)
            for _ in range(5):
                c = rng.standard_normal(n)
                low = solve_lp(c, P, "min")
                high = solve_lp(-c, P, "max")
                self.assertEqual(low.status, OPTIMAL)
                self.assertAlmostEqual(low.objective, -high.objective, delta=1e-8)

    def test_chebyshev_errors(self):
        with self.assertRaises(EmptyPolytope):
            chebyshev_center(HPolytope([[1.0], [-1.0]], [0.0, -1.0]))
        with self.assertRaises(UnboundedPolytope):
            chebyshev_center(HPolytope([[1.0, 0.0]], [0.0]))
        self.assertEqual(chebyshev_radius(HPolytope([[1.0], [-1.0]], [0.0, -1.0])), -1.0)

    def test_fulldim(self):
        self.assertTrue(is_fulldim(square()))
        segment = intersect_halfspace(square(), [1.0, 0.0], 1.0, ">=")
        self.assertFalse(is_fulldim(segment))


class TestConstruction(unittest.TestCase):

    def test_intersect(self):
        P = intersect(box([0, 0], [2, 2]), box([1, 1], [3, 3]))
        self.assertTrue(same_set(P, box([1, 1], [2, 2])))

    def test_intersect_is_commutative(self):
        rng = np.random.default_rng(6)
        P, Q = random_polytope(rng, 2), random_polytope(rng, 2)
        X = rng.uniform(-3.0, 3.0, size=(2000, 2))
        np.testing.assert_array_equal(
            intersect(P, Q).contains_points(X), intersect(Q, P).contains_points(X)
        )

    def test_intersect_halfspace_side(self):
        P = intersect_halfspace(square(), [1.0, 0.0], 0.0, ">=")
        self.assertTrue(same_set(P, box([0, -1], [1, 1])))
        with self.assertRaises(ValueError):
            intersect_halfspace(square(), [1.0, 0.0], 0.0, "<")

    def test_remove_redundant(self):
        P = intersect_halfspace(square(), [1.0, 0.0], 2.0)
        P = intersect_halfspace(P, [2.0, 0.0], 2.0)  # duplicata de x <= 1
        Q = remove_redundant(P)
        self.assertEqual(Q.m, 4)
        self.assertTrue(same_set(P, Q))
        self.assertEqual(irredundant_rows(P), [0, 1, 2, 3])

    def test_remove_redundant_keeps_open_flag(self):
        O = intersect_halfspace(box([0, 0], [1, 1], open=True), [1.0, 1.0], 5.0)
        self.assertTrue(remove_redundant(O).open)

    def test_faces_of_square(self):
        F = faces(square())
        self.assertEqual(len(F), 4)
        for face in F:
            V = vertices(face.geometry).vertices
            self.assertEqual(V.shape, (2, 2))
            np.testing.assert_allclose(V @ face.normal, face.offset, atol=1e-9)

    def test_faces_skip_empty(self):
        # x <= 1 é redundante e sua face é vazia
        P = HPolytope([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 0]], [0.5, 1, 1, 1, 1])
        self.assertEqual([f.row_index for f in faces(P)], [0, 1, 2, 3])


class TestVertices(unittest.TestCase):

    def test_square(self):
        V = vertices(square()).vertices
        np.testing.assert_allclose(V, [[-1, -1], [-1, 1], [1, -1], [1, 1]], atol=1e-9)

    def test_triangle(self):
        T = HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
        V = vertices(T).vertices
        np.testing.assert_allclose(V, [[0, 0], [0, 1], [1, 0]], atol=1e-9)

    def test_face_of_square_is_segment(self):
        edge = intersect_halfspace(square(), [0.0, 1.0], 1.0, ">=")
        np.testing.assert_allclose(vertices(edge).vertices, [[-1, 1], [1, 1]], atol=1e-9)

    def test_single_point(self):
        corner = intersect_halfspace(intersect_halfspace(square(), [1, 0], 1.0, ">="), [0, 1], 1.0, ">=")
        np.testing.assert_allclose(vertices(corner).vertices, [[1, 1]], atol=1e-9)

    def test_implicit_equality_without_opposite_rows(self):
        # x + y <= 0 com x >= 0 e y >= 0: só a origem, sem par de linhas opostas
        P = HPolytope([[1, 1], [-1, 0], [0, -1]], [0, 0, 0])
        np.testing.assert_allclose(vertices(P).vertices, [[0, 0]], atol=1e-8)

    def test_empty_and_unbounded(self):
        self.assertEqual(len(vertices(HPolytope([[1.0], [-1.0]], [0.0, -1.0]))), 0)
        with self.assertRaises(UnboundedPolytope):
            vertices(HPolytope([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]))
        with self.assertRaises(UnboundedPolytope):
            vertices(HPolytope.universe(2))

    def test_cube_3d_active_set(self):
        V = vertices(cube(3)).vertices
        self.assertEqual(V.shape, (8, 3))
        expected = sorted(itertools.product([-1.0, 1.0], repeat=3))
        np.testing.assert_allclose(V, expected, atol=1e-9)

    def test_cube_5d_qhull(self):
        V = vertices(cube(5)).vertices
        self.assertEqual(V.shape, (32, 5))
        np.testing.assert_allclose(np.abs(V), 1.0, atol=1e-8)

    def test_every_vertex_is_feasible(self):
        rng = np.random.default_rng(3)
        C = rng.standard_normal((9, 2))
        P = HPolytope(C, np.ones(9))
        try:
            V = vertices(P).vertices
        except UnboundedPolytope:
            self.skipTest("sorteio ilimitado")
        self.assertTrue(np.all(P.contains_points(V, tol=1e-7)))
        # cada vértice ativa ao menos duas restrições
        active = np.abs(V @ C.T - 1.0) <= 1e-7
        self.assertTrue(np.all(active.sum(axis=1) >= 2))


class TestHelpers(unittest.TestCase):

    def test_subset(self):
        self.assertTrue(is_subset(box([0, 0], [1, 1]), square(2.0)))
        self.assertFalse(is_subset(square(2.0), box([0, 0], [1, 1])))
        self.assertTrue(is_subset(HPolytope([[1.0], [-1.0]], [0.0, -1.0]), HPolytope([[1.0]], [5.0])))

    def test_bounding_box(self):
        T = HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 2])
        lower, upper = bounding_box(T)
        np.testing.assert_allclose(lower, [0, 0], atol=1e-9)
        np.testing.assert_allclose(upper, [2, 2], atol=1e-9)

    def test_volume(self):
        self.assertAlmostEqual(volume(square()), 4.0, places=9)
        self.assertAlmostEqual(volume(cube(3)), 8.0, places=9)
        self.assertAlmostEqual(volume(box([0.0], [3.0])), 3.0, places=9)
        edge = intersect_halfspace(square(), [0.0, 1.0], 1.0, ">=")
        self.assertEqual(volume(edge), 0.0)

    def test_order_polygon(self):
        V = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)
        ordered = order_polygon(V)
        angles = np.arctan2(ordered[:, 1], ordered[:, 0])
        self.assertTrue(np.all(np.diff(angles) > 0))

    def test_sampling(self):
        rng = np.random.default_rng(0)
        T = HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
        X = sample_uniform(T, 200, rng)
        self.assertEqual(X.shape, (200, 2))
        self.assertTrue(np.all(T.contains_points(X, tol=0.0)))
        Y = sample_convex_combinations(vertices(T).vertices, 50, rng)
        self.assertTrue(np.all(T.contains_points(Y, tol=1e-12)))


if __name__ == "__main__":
    unittest.main()
