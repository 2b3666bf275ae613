"""Entry point for the censcov MCP server."""

from censcov_surv.server import mcp

if __name__ == "__main__":
    mcp.run()
