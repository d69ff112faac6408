# Config, logging and error hierarchy tests
