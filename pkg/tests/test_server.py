"""
Test suite for the popsim MCP server

This module contains unit tests for the MCP server core functionality.
"""

from unittest.mock import patch

import pytest


def test_server_imports():
    """Test that all required modules can be imported."""
    try:
        from popsim import __version__
        from popsim.common.config import config
        from popsim.common.logging import logger
        from popsim.mcp_instance import mcp

        assert __version__ is not None
        assert mcp is not None
        assert logger is not None
        assert config is not None

    except ImportError as e:
        pytest.fail(f"Failed to import required modules: {e}")


def test_mcp_instance_configuration():
    """Test MCP instance is properly configured."""
    from popsim.mcp_instance import mcp

    assert mcp.name == "FastMCP"  # This is the default name for FastMCP instances
    assert mcp.instructions is not None and "population protocols" in mcp.instructions


@pytest.mark.unit
def test_logging_configuration():
    """Test logging goes to the package logger."""
    from popsim.common.logging import get_logger, logger

    assert logger.name == "popsim"
    assert get_logger("popsim.simulation_domain.scheduler").name == "popsim.simulation_domain.scheduler"
    logger.info("Test log message")


@pytest.mark.asyncio
async def test_tools_are_registered():
    """Importing the server registers every simulation tool."""
    import popsim.server  # noqa: F401
    from popsim.mcp_instance import mcp

    names = {tool.name for tool in await mcp.list_tools()}
    assert {"compile_crn", "run_simulation", "sample_endpoint_histogram", "describe_protocol"} <= names


@pytest.mark.asyncio
async def test_prompts_are_registered():
    import popsim.server  # noqa: F401
    from popsim.mcp_instance import mcp

    names = {prompt.name for prompt in await mcp.list_prompts()}
    assert {"protocol_author", "simulate_model"} <= names


def test_prompt_content_loads():
    from popsim.core.core_prompts import _load_prompt_content, simulate_model

    content = _load_prompt_content("protocol_author_prompt.md")
    assert not content.startswith("Error")
    assert "A=51,B=49" in simulate_model("A B -> U U", "A=51,B=49")
    assert _load_prompt_content("missing.md").startswith("Error: Could not find prompt file")


def test_main_server_function():
    """Test the main server function."""
    with patch("popsim.mcp_instance.mcp.run") as mock_run, patch("popsim.server.logger") as mock_logger:
        from popsim.server import main

        main()
        mock_run.assert_called_once_with(transport="stdio")
        mock_logger.error.assert_called()
