# Common utilities and shared functionality
