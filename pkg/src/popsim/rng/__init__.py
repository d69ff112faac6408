"""Random stream and exact samplers."""
