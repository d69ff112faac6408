# Model types, state enumeration, built-in models and MCP prompts
