from pathlib import Path

from mcp.server.fastmcp.prompts import base

from popsim.mcp_instance import mcp


def _load_prompt_content(prompt_file: str) -> str:
    """
    Load prompt content from markdown files.

    Args:
        prompt_file: Name of the prompt file to load

    Returns:
        Content of the prompt file
    """
    current_dir = Path(__file__).parent
    prompt_path = current_dir / "prompts" / prompt_file

    try:
        with open(prompt_path, encoding="utf-8") as f:
            return f.read()
    except FileNotFoundError:
        return f"Error: Could not find prompt file at {prompt_path}"
    except Exception as e:
        return f"Error loading prompt: {str(e)}"


@mcp.prompt()
def protocol_author() -> list[base.Message]:
    """
    Guide for writing `.crn` and `.pp` models and running them with popsim.
    """
    return [
        base.UserMessage(_load_prompt_content("protocol_author_prompt.md")),
        base.AssistantMessage(
            "I'm ready to help with your model! Here is what I can do:\n\n"
            "**Modeling** (write a reaction network or protocol from a description)\n"
            "**Simulation** (run trajectories and sample endpoint distributions)\n"
            "**Compilation** (turn a CRN into a protocol and explain its time scale)\n\n"
            "Describe the system you want to simulate."
        ),
    ]


@mcp.prompt()
def simulate_model(model_text: str, init: str) -> str:
    """
    Ask for a simulation of a given model and a summary of its outcome.

    Args:
        model_text: Contents of a `.crn` or `.pp` file
        init: Initial counts such as "A=51,B=49"
    """
    prompt_content = _load_prompt_content("protocol_author_prompt.md")
    return (
        f"Simulate the following model from the initial configuration {init} and summarize "
        f"the trajectory:\n\n```\n{model_text}\n```\n\nModel format reference:\n\n{prompt_content}"
    )
