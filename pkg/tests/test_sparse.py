"""Tests for the CSR core: triplet assembly, products, and solves."""

import numpy as np
import pytest

from rrsplit import sparse
from rrsplit.sparse import from_triplets, solve_general, solve_spd, spmv


def dense_of(triplets, shape):
    A = np.zeros(shape)
    for i, j, v in triplets:
        A[i, j] += v
    return A


class TestFromTriplets:
    def test_identity(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])
        np.testing.assert_allclose(A.toarray(), np.eye(2))

    def test_duplicates_summed(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0)])
        assert A.nnz == 1
        assert A.entry(0, 0) == pytest.approx(3.0)

    def test_reference_mass_round_trip(self):
        # P1 mass matrix of the reference triangle, against dense assembly
        mass = (np.ones((3, 3)) + np.eye(3)) / 24.0
        trips = [(i, j, mass[i, j]) for i in range(3) for j in range(3)]
        A = from_triplets(3, 3, trips)
        np.testing.assert_allclose(A.toarray(), dense_of(trips, (3, 3)), rtol=1e-15)

    def test_structural_zero_kept(self):
        A = from_triplets(2, 2, [(0, 1, 0.0)])
        assert A.nnz == 1

    def test_out_of_range_rejected(self):
        with pytest.raises(IndexError):
            from_triplets(2, 2, [(2, 0, 1.0)])
        with pytest.raises(IndexError):
            from_triplets(2, 2, [(0, -1, 1.0)])

    def test_csr_invariants(self):
        rng = np.random.default_rng(11)
        trips = [(int(r), int(c), float(v)) for r, c, v in
                 zip(rng.integers(0, 6, 40), rng.integers(0, 5, 40), rng.standard_normal(40))]
        A = from_triplets(6, 5, trips)
        assert A.row_offsets[0] == 0 and A.row_offsets[-1] == A.nnz
        assert np.all(np.diff(A.row_offsets) >= 0)
        for i in range(6):
            cols = A.col_indices[A.row_offsets[i]:A.row_offsets[i + 1]]
            assert np.all(np.diff(cols) > 0)


class TestSpmv:
    def test_identity(self):
        A = from_triplets(3, 3, [(i, i, 1.0) for i in range(3)])
        np.testing.assert_allclose(spmv(A, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_zero_matrix(self):
        A = from_triplets(3, 3, [])
        np.testing.assert_allclose(spmv(A, [1.0, 2.0, 3.0]), np.zeros(3))

    def test_random_against_dense(self):
        rng = np.random.default_rng(5)
        trips = [(int(r), int(c), float(v)) for r, c, v in
                 zip(rng.integers(0, 5, 30), rng.integers(0, 5, 30), rng.standard_normal(30))]
        A = from_triplets(5, 5, trips)
        x = rng.standard_normal(5)
        ref = dense_of(trips, (5, 5)) @ x
        err = np.linalg.norm(spmv(A, x) - ref) / np.linalg.norm(ref)
        assert err < 1e-14

    def test_dimension_mismatch(self):
        A = from_triplets(3, 2, [(0, 0, 1.0)])
        with pytest.raises(ValueError):
            spmv(A, np.ones(3))


class TestSolveSpd:
    def test_identity(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])
        x, rep = solve_spd(A, [4.0, 5.0])
        np.testing.assert_allclose(x, [4.0, 5.0])
        assert rep.converged

    def test_diagonal(self):
        A = from_triplets(2, 2, [(0, 0, 2.0), (1, 1, 4.0)])
        x, rep = solve_spd(A, [2.0, 4.0])
        np.testing.assert_allclose(x, [1.0, 1.0])
        assert rep.converged and rep.residual_norm >= 0.0

    def test_time_step_system_vs_dense(self):
        # (1/dt) M + nu K on a small mesh, against numpy's dense solve
        from rrsplit import fem, meshing

        mesh = meshing.uniform_split_mesh(3)
        dof = fem.build_dofmap(mesh, "f")
        A = sparse.combine([
            (10.0, fem.assemble_mass(mesh, "f", dof)),
            (1.0, fem.assemble_stiffness(mesh, "f", dof)),
        ])
        rng = np.random.default_rng(7)
        b = rng.standard_normal(dof.n_dofs)
        x, rep = solve_spd(A, b)
        ref = np.linalg.solve(A.toarray(), b)
        assert rep.converged
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-10

    def test_solution_reproduces_rhs(self):
        rng = np.random.default_rng(3)
        B = rng.standard_normal((6, 6))
        D = B @ B.T + 6.0 * np.eye(6)
        trips = [(i, j, D[i, j]) for i in range(6) for j in range(6)]
        A = from_triplets(6, 6, trips)
        b = rng.standard_normal(6)
        x, rep = solve_spd(A, b, tol=1e-12)
        assert rep.converged
        assert np.linalg.norm(spmv(A, x) - b) <= 1e-12 * np.linalg.norm(b)

    def test_asymmetric_rejected(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)])
        with pytest.raises(ValueError):
            solve_spd(A, [1.0, 1.0])

    def test_zero_rhs(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])
        x, rep = solve_spd(A, [0.0, 0.0])
        np.testing.assert_allclose(x, 0.0)
        assert rep.converged


class TestSolveGeneral:
    def test_permutation(self):
        A = from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)])
        x, rep = solve_general(A, [1.0, 2.0])
        np.testing.assert_allclose(x, [2.0, 1.0])
        assert rep.converged

    def test_identity(self):
        A = from_triplets(3, 3, [(i, i, 1.0) for i in range(3)])
        b = np.array([0.3, -1.2, 2.0])
        x, _ = solve_general(A, b)
        np.testing.assert_allclose(x, b)

    def test_saddle_vs_dense(self):
        # small symmetric indefinite block system
        rng = np.random.default_rng(9)
        B = rng.standard_normal((4, 4))
        K = B @ B.T + 4.0 * np.eye(4)
        C = rng.standard_normal((2, 4))
        S = np.block([[K, C.T], [C, np.zeros((2, 2))]])
        trips = [(i, j, S[i, j]) for i in range(6) for j in range(6) if S[i, j] != 0.0]
        A = from_triplets(6, 6, trips)
        b = rng.standard_normal(6)
        x, rep = solve_general(A, b)
        ref = np.linalg.solve(S, b)
        assert rep.converged
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-10

    def test_singular_reported(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (1, 0, 1.0)])
        x, rep = solve_general(A, [1.0, 2.0])
        assert not rep.converged

    def test_spd_factorization_failure_reported(self):
        A = from_triplets(2, 2, [(0, 0, 0.0), (1, 1, 0.0)])
        x, rep = solve_spd(A, [1.0, 1.0])
        assert not rep.converged
        np.testing.assert_allclose(x, 0.0)


class TestAssembledAgreement:
    @pytest.mark.parametrize("subdomain", ["f", "s"])
    def test_spmv_matches_dense_small_mesh(self, subdomain):
        from rrsplit import fem, meshing

        mesh = meshing.uniform_split_mesh(4)  # well under 50 nodes per subdomain
        dof = fem.build_dofmap(mesh, subdomain)
        for A in (fem.assemble_mass(mesh, subdomain, dof),
                  fem.assemble_stiffness(mesh, subdomain, dof)):
            rng = np.random.default_rng(1)
            x = rng.standard_normal(A.n_cols)
            ref = A.toarray() @ x
            assert np.linalg.norm(spmv(A, x) - ref) <= 1e-13 * max(np.linalg.norm(ref), 1.0)
