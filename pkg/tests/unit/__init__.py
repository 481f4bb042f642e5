# tests/unit/ - Unit tests, one module per service or repository.
# Database tests use in-memory SQLite; planner calls are patched with
# unittest.mock where a test needs a timeout or an unsolvable task.
