# Scheduler, bench and MCP tool tests
