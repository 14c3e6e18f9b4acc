import numpy as np
import pytest
from hypothesis import strategies as st

from avimdp import GeneratorSpec, MdpModel, generate_random_mdp


def make_cycle3():
    # costs (1, 3, 2); 0-based targets, state 2 is the recurrent state
    return MdpModel.from_dense(
        [[1.0], [3.0], [2.0]],
        [[[0.5, 0.0, 0.5]], [[0.0, 0.5, 0.5]], [[0.5, 0.5, 0.0]]],
        recurrent_state=2,
    )


def make_lazy3():
    return MdpModel.from_dense(
        [[1.0], [3.0], [2.0]],
        [[[0.5, 0.0, 0.5]], [[0.0, 0.5, 0.5]], [[0.25, 0.25, 0.5]]],
        recurrent_state=2,
    )


@pytest.fixture
def cycle3():
    return make_cycle3()


@pytest.fixture
def lazy3():
    return make_lazy3()


def small_model(n, actions, density, seed):
    return generate_random_mdp(GeneratorSpec(n, actions, density, (0.0, 10.0), seed))


# hypothesis strategy for small random instances drawn from the generator
small_specs = st.builds(
    lambda n, a, d, seed: GeneratorSpec(n, a, d, (0.0, 10.0), seed),
    st.integers(2, 8),
    st.integers(1, 3),
    st.sampled_from([0.4, 0.7, 1.0]),
    st.integers(0, 2**32 - 1),
)


def h_lambda_exact(model, lam, policy):
    """SSP value of a fixed policy by a dense linear solve (independent of the package)."""
    n = model.n_states
    rec = model.recurrent_state
    P = np.array([model.dense_row(i, a) for i, a in enumerate(policy)])
    r = np.array([model.actions[i][a].cost for i, a in enumerate(policy)])
    Q = P.copy()
    Q[:, rec] = 0.0
    return np.linalg.solve(np.eye(n) - Q, r - lam)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
