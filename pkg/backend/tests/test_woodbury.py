import numpy as np
import pytest

from app.core.exceptions import CapacitySingularError
from app.core.quadrature import gregory_weights
from app.core.toeplitz import BlockToeplitzSystem
from app.core.woodbury import (
    CountingSolver,
    DenseSolver,
    LowRankCorrection,
    ToeplitzSolver,
    build_correction,
    correction_positions,
    stacked_dense,
    woodbury_solve,
)
from app.models.enums import Dispersion, Sidedness


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.mark.parametrize("rank", [1, 4, 12])
def test_woodbury_matches_direct_solve(rng, rank):
    size = 30
    A = np.eye(size) + 0.05 * random_complex(rng, size, size)
    U = random_complex(rng, size, rank)
    V = 0.01 * random_complex(rng, rank, size)
    b = random_complex(rng, size)

    x = woodbury_solve(DenseSolver(A), LowRankCorrection(U=U, V=V), b)

    assert np.allclose((A - U @ V) @ x, b, atol=1e-10)


def test_single_solver_call_with_rank_plus_one_columns(rng):
    size = 20
    A = np.eye(size) + 0.05 * random_complex(rng, size, size)
    correction = LowRankCorrection.diagonal(size, [0, 3, 19], [0.2, -0.1, 0.3])
    solver = CountingSolver(DenseSolver(A))

    woodbury_solve(solver, correction, random_complex(rng, size))

    assert solver.calls == 1
    assert solver.columns == correction.rank + 1 == 4


def test_diagonal_projection_matches_matrix(rng):
    correction = LowRankCorrection.diagonal(10, [1, 4, 7], [0.5, 0.25, -1.0])
    x = random_complex(rng, 10, 3)
    assert correction.is_diagonal
    assert np.allclose(correction.project(x), correction.V @ x)
    assert np.allclose(correction.project(x[:, 0]), correction.V @ x[:, 0])


@pytest.mark.parametrize(
    "n, sidedness, rank",
    [(1, Sidedness.TWO_SIDED, 4), (3, Sidedness.TWO_SIDED, 12), (6, Sidedness.TWO_SIDED, 24),
     (3, Sidedness.LEFT_SIDED, 6), (6, Sidedness.LEFT_SIDED, 12)],
)
def test_gregory_correction_rank(n, sidedness, rank):
    assert build_correction(gregory_weights(n, 16, sidedness)).rank == rank


def test_correction_positions_follow_reversed_second_component():
    w = gregory_weights(2, 6, Sidedness.LEFT_SIDED)
    positions, values = correction_positions(w)
    # component 0 of block p carries w_p, component 1 of block i carries w_{M-i}
    assert positions.tolist() == [0, 1, 7 + 5, 7 + 6]
    expected = 1.0 - 1.0 / w.weights[[0, 1, 1, 0]]
    assert np.allclose(values, expected)


def test_correction_rejects_wrong_grid():
    with pytest.raises(ValueError):
        build_correction(gregory_weights(2, 8), M=9)


def test_weighted_matrix_is_toeplitz_times_weight_inverse(rng):
    M = 8
    symbol = 0.05 * random_complex(rng, 2 * M + 1)
    system = BlockToeplitzSystem.from_symbol(symbol, Dispersion.ANOMALOUS)
    w = gregory_weights(2, M)
    correction = build_correction(w)

    B = stacked_dense(system) - correction.U @ correction.V
    inverse_weights = np.concatenate([w.inverse, w.inverse[::-1]])
    expected = stacked_dense(system) - np.diag(1.0 - inverse_weights)
    assert np.allclose(B, expected)


def test_toeplitz_solver_matches_stacked_dense(rng):
    M = 10
    system = BlockToeplitzSystem.from_symbol(0.05 * random_complex(rng, 2 * M + 1), Dispersion.NORMAL)
    rhs = random_complex(rng, 2 * (M + 1), 3)
    solution = ToeplitzSolver(system).solve(rhs)
    assert np.allclose(stacked_dense(system) @ solution, rhs, atol=1e-10)


def test_singular_capacity_raises():
    correction = LowRankCorrection.diagonal(3, [1], [1.0])
    with pytest.raises(CapacitySingularError) as exc:
        woodbury_solve(DenseSolver(np.eye(3)), correction, np.ones(3))
    assert exc.value.rank == 1


def test_zero_rank_is_plain_solve(rng):
    A = np.eye(6) + 0.1 * random_complex(rng, 6, 6)
    correction = LowRankCorrection.diagonal(6, [], [])
    b = random_complex(rng, 6)
    assert np.allclose(woodbury_solve(DenseSolver(A), correction, b), np.linalg.solve(A, b))


def test_woodbury_agrees_with_dense_on_random_updates(rng):
    for _ in range(200):
        size = int(rng.integers(10, 41))
        rank = int(rng.integers(1, 9))
        A = np.eye(size) + 0.3 / size * random_complex(rng, size, size)
        U = random_complex(rng, size, rank)
        V = 0.1 / size * random_complex(rng, rank, size)
        b = random_complex(rng, size)

        x = woodbury_solve(DenseSolver(A), LowRankCorrection(U=U, V=V), b)
        expected = np.linalg.solve(A - U @ V, b)
        assert np.linalg.norm(x - expected) <= 1e-9 * np.linalg.norm(expected)


def test_diagonal_woodbury_agrees_with_dense_on_random_positions(rng):
    for _ in range(50):
        size = int(rng.integers(10, 41))
        rank = int(rng.integers(1, 9))
        positions = rng.choice(size, rank, replace=False)
        values = rng.uniform(-0.5, 0.5, rank)
        A = np.eye(size) + 0.3 / size * random_complex(rng, size, size)
        b = random_complex(rng, size)

        correction = LowRankCorrection.diagonal(size, positions, values)
        x = woodbury_solve(DenseSolver(A), correction, b)
        assert np.allclose(x, np.linalg.solve(A - correction.U @ correction.V, b), atol=1e-10)
