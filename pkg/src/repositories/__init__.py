# src/repositories/ - Data access layer.
# Repositories read and write world, estimator and result files and the
# results database, keeping I/O out of the services.
