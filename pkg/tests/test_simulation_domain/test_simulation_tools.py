"""
Test suite for the simulation MCP tools.

Tools never raise for bad input; they log and return an ``error`` entry.
"""

from unittest.mock import patch

import pytest

from popsim.simulation_domain.simulation_tools import (
    compile_crn,
    describe_protocol,
    run_simulation,
    sample_endpoint_histogram,
)

REVERSIBLE_SPLIT_CRN = "2A <-> B + C @ 3, 2\nC -> D\n"
MAJORITY_PP = "A B -> U U\nA U -> A A\nB U -> B B\n"


class TestCompileCrnTool:
    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_success(self, mock_logger):
        result = compile_crn(REVERSIBLE_SPLIT_CRN, 10)
        assert result["status"] == "success"
        assert result["m"] == pytest.approx(1.9, rel=1e-12)
        assert result["compiled"] == {"n": 10, "volume": 10.0}
        assert "# n = 10" in result["protocol_text"]
        mock_logger.error.assert_not_called()

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_parse_error(self, mock_logger):
        result = compile_crn("A + B => C", 10)
        assert "error" in result
        assert "line 1" in result["error"]
        mock_logger.error.assert_called_once()

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_population_too_small(self, mock_logger):
        assert "error" in compile_crn(REVERSIBLE_SPLIT_CRN, 1)


class TestRunSimulationTool:
    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_protocol_trajectory(self, mock_logger):
        result = run_simulation(MAJORITY_PP, "A=51,B=49", 2.0, interval=0.5, seed=42)
        assert "error" not in result
        assert result["metadata"]["seed"] == 42
        assert [s["time"] for s in result["snapshots"]] == [0.0, 0.5, 1.0, 1.5, 2.0]
        assert all(sum(s["counts"].values()) == 100 for s in result["snapshots"])

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_seed_reproduces(self, mock_logger):
        first = run_simulation(MAJORITY_PP, "A=51,B=49", 1.0, seed=7)
        second = run_simulation(MAJORITY_PP, "A=51,B=49", 1.0, seed=7)
        assert first == second

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_crn_trajectory(self, mock_logger):
        result = run_simulation(REVERSIBLE_SPLIT_CRN, "A=10", 1.0, kind="crn", n=10, seed=1)
        assert result["metadata"]["time_unit"] == "crn"

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_discrete_time_on_crn(self, mock_logger):
        result = run_simulation(REVERSIBLE_SPLIT_CRN, "A=10", 1.0, kind="crn", n=10, time_model="discrete")
        assert result == {"error": "discrete time unsupported for CRN inputs"}

    @pytest.mark.parametrize(
        "overrides",
        [{"kind": "petri"}, {"method": "fastest"}, {"time_model": "lunar"}, {"init": "A=-1"}, {"time": -1.0}],
    )
    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_invalid_arguments(self, mock_logger, overrides):
        arguments = {"model_text": MAJORITY_PP, "init": "A=5,B=5", "time": 1.0, **overrides}
        result = run_simulation(**arguments)
        assert "error" in result
        mock_logger.error.assert_called_once()


class TestSampleEndpointTool:
    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_single_state_histogram(self, mock_logger):
        result = sample_endpoint_histogram(MAJORITY_PP, "A=6,B=4", 1.0, 30, state="A", seed=3)
        assert result["status"] == "success"
        assert result["seed"] == 3
        assert sum(row["count"] for row in result["histogram"]) == 30
        values = [row["value"] for row in result["histogram"]]
        assert values == sorted(values)

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_configuration_histogram(self, mock_logger):
        result = sample_endpoint_histogram(MAJORITY_PP, "A=6,B=4", 1.0, 10, seed=3)
        assert all(set(row["counts"]) == {"A", "B", "U"} for row in result["histogram"])

    @patch("popsim.simulation_domain.simulation_tools.MAX_HISTOGRAM_ENTRIES", 1)
    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_too_many_outcomes(self, mock_logger):
        result = sample_endpoint_histogram(MAJORITY_PP, "A=30,B=30", 0.5, 50, seed=4)
        assert "error" in result
        assert "suggestion" in result

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_zero_trials(self, mock_logger):
        assert "error" in sample_endpoint_histogram(MAJORITY_PP, "A=6,B=4", 1.0, 0)


class TestDescribeProtocolTool:
    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_summary(self, mock_logger):
        result = describe_protocol(MAJORITY_PP)
        assert result["states"] == ["A", "B", "U"]
        assert result["nonnull_pairs"] == 6

    @patch("popsim.simulation_domain.simulation_tools.logger")
    def test_conflict(self, mock_logger):
        result = describe_protocol("A B => C D\nA B -> D D\n")
        assert "conflicting" in result["error"]
