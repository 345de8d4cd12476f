#SPDX-License-Identifier: Apache-2.0
#File : __init__.py

from .env import *
from .adapter import Adapter
from .harness import compare_policies, run_env, run_sequence, write_comparison_csv
from .simulation import FrameTrace, RunSettings, SpriteTrace, run_frame, traces_to_dataframe, write_trace_csv
