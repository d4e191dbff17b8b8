"""
Write the synthetic BMI scenario to a directory: a 400-row table, its
description, a three-document corpus, a replay file and a run configuration.

    python tools/make_bmi_scenario.py scenario/
    ragfpy index --kb-dir scenario/corpus --out scenario/kb.json
    ragfpy run --data scenario/data.csv --target overweight \\
        --description scenario/description.txt --kb scenario/kb.json \\
        --config scenario/config.json --replay scenario/replay.txt --out scenario/run
"""
import logging
from argparse import ArgumentParser

from ragfpy.scenarios import write_bmi_scenario

parser = ArgumentParser()

parser.add_argument(dest="directory", help="Output directory for the scenario files")
parser.add_argument(
    "-n",
    "--n_rows",
    type=int,
    default=400,
    help="Number of table rows",
)
parser.add_argument(
    "-seed",
    "--seed",
    type=int,
    default=7,
    help="Seed of the weight and height draws",
)
parser.add_argument(
    "-patience",
    "--patience",
    type=int,
    default=2,
    help="Patience of the run configuration; the replay file scripts this many useless iterations",
)

opts = parser.parse_args()

logging.basicConfig(format="%(levelname)s:%(processName)s@%(module)s\t%(message)s", level=logging.INFO)
paths = write_bmi_scenario(opts.directory, opts.n_rows, opts.seed, opts.patience)
for name, path in paths.items():
    logging.info(f"{name}: {path}")
