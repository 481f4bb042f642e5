# src/ - Top-level Python package of the find-action planning toolkit.
