# src/ui/ - Presentation layer: the command-line interface.
