"""Shared, session-scoped experiment runs.

The full replication grid is expensive, so the acceptance and experiment
tests share one run of each configuration.
"""
import pytest

from catprior.experiment import (ExperimentConfig, SwimSimSpec, aggregate, mixture_setups,
                                 run_experiment, simulate_population)

MASTER_SEED = 20240611
GRID = (100, 200, 400, 800, 1600)

# criterion number -> PASS/FAIL line, filled by the acceptance tests
VERDICTS: dict = {}


def main_config():
    return ExperimentConfig(SwimSimSpec.default(), GRID, replications=250, seed=MASTER_SEED)


def mixture_config():
    return ExperimentConfig(SwimSimSpec.default(), (100,), replications=250,
                            methods=("catalytic",), catalytic=mixture_setups(),
                            seed=MASTER_SEED)


@pytest.fixture(scope="session")
def default_population():
    return simulate_population(SwimSimSpec.default())


@pytest.fixture(scope="session")
def main_run(default_population):
    results, benchmark = run_experiment(main_config(), population=default_population)
    return results, benchmark, aggregate(results, benchmark=benchmark)


@pytest.fixture(scope="session")
def mixture_run(default_population):
    results, benchmark = run_experiment(mixture_config(), population=default_population)
    return results, benchmark, aggregate(results, benchmark=benchmark)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS, key=lambda k: (int(str(k).split()[0]), str(k))):
            terminalreporter.write_line(VERDICTS[k])
