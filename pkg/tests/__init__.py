# tests/ - Top-level test package.
# test_pipeline.py runs the whole gen -> train -> evaluate chain on the
# small catalog in fixtures/.
