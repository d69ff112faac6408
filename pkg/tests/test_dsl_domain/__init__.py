# Model text format tests
