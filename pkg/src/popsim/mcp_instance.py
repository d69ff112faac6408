from mcp.server.fastmcp import FastMCP

# Create the FastMCP server instance
mcp = FastMCP(
    title="popsim-mcp-server",
    instructions=(
        "Exact stochastic simulator for population protocols and chemical reaction networks. "
        "Compile CRNs into protocols, run trajectories and sample endpoint distributions."
    ),
)
