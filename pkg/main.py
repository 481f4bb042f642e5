"""
Main Entry Point - find-action task planning toolkit

Usage:
    python main.py gen-worlds --count 50 --seed 0 --out worlds/train
    python main.py train --worlds worlds/train --out est.txt
    python main.py plan domain.pddl problem.pddl --timeout 30
    python main.py search-eval --est est.txt --trials 200 --seed 10000 --out search.csv
    python main.py run-trial --scenario Deliver3 --strategy ModelLIOS --seed 10001 --est est.txt
    python main.py bench --trials 100 --seed 10000 --est est.txt --out results/ --db

Environment Setup:
    Copy .env.example to .env to change defaults (log level, planner weight,
    results database URL, ...).  See ``src/config.py``.
"""

import sys

from src.ui.cli import main

if __name__ == "__main__":
    sys.exit(main())
