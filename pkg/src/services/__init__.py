# src/services/ - Business logic layer.
# Services hold the rules (world generation, search policies, planning
# encodings, the executive, benchmarks) and never touch the filesystem.
