#!/usr/bin/env python3

"""
RUN THE FEATURE-COUNT, CENSORING AND WINDOW SWEEPS

To run:

$ scripts/run_sweeps.py

"""

import os
from typing import Dict, List

repetitions: int = 10
output: str = "output/sweeps"

sweeps: List[Dict[str, str]] = [
    {"parameter": "features", "kind": "Linear", "models": "isurvm,isurvq,isurvj,isurvjg,beran"},
    {"parameter": "censoring", "kind": "Interactions", "models": "isurvj,isurvjg,beran"},
    {"parameter": "k", "kind": "Friedman1", "models": "isurvj"},
]

for sweep in sweeps:
    command: str = (
        f"isurv -v sweep --parameter {sweep['parameter']} --kind {sweep['kind']} "
        f"--models {sweep['models']} --repetitions {repetitions} --jobs -1 "
        f"-o {output}/{sweep['parameter']}"
    )
    print(command)
    os.system(command)


### END ###
