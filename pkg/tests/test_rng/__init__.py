# Sampler tests
