#SPDX-License-Identifier: Apache-2.0
#File : harness.py

"""Whole-run drivers: one scenario under one config, or under several configs side by side."""

import json
import logging
import threading

import pandas as pd

from render_gym_client.env import RenderGymEnv
from render_gym_scene.errors import ValidationError

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = (
    "label", "policy", "alpha", "mean_expected_cost", "max_expected_cost", "mean_raw_cost",
    "mean_utilization", "rerender_count", "rerender_count_by_group",
)


def run_env(env):
    """Drive ``env`` from reset to its last frame under the configured policy; return the traces."""
    _, info = env.reset()
    traces = [info["trace"]]
    terminated = env.terminated
    while not terminated:
        _, _, terminated, _, info = env.step(None)
        traces.append(info["trace"])
    logger.info("ran %d frames under %s", len(traces), env.settings.policy)
    return traces


def run_sequence(scenario, config_json):
    """Run every frame of ``scenario`` under the configured policy.

    Args:
        scenario (Scenario): the scenario
        config_json (dict): merged configuration

    Returns:
        list: one :class:`FrameTrace` per frame, frame 0 first
    """
    return run_env(RenderGymEnv(scenario, config_json))


def summarize_run(label, config_json, traces):
    """One comparison row for a finished run."""
    by_group = {}
    for trace in traces:
        for row in trace.sprites:
            if row.action == "rerender":
                by_group[row.group] = by_group.get(row.group, 0) + 1
    expected = pd.Series([t.expected_cost for t in traces], dtype=float)
    return {
        "label": label,
        "policy": config_json['regulator']['policy'],
        "alpha": config_json['attention'].get("alpha"),
        "mean_expected_cost": expected.mean(),
        "max_expected_cost": expected.max(),
        "mean_raw_cost": pd.Series([t.raw_cost for t in traces], dtype=float).mean(),
        "mean_utilization": pd.Series([t.utilization for t in traces], dtype=float).mean(),
        "rerender_count": sum(by_group.values()),
        "rerender_count_by_group": json.dumps(by_group, sort_keys=True),
    }


def compare_policies(scenario, configs):
    """Run ``scenario`` under every config, each on its own worker thread.

    Runs share nothing but the read-only scenario. Wandb and terminal
    rendering are turned off for the workers.

    Args:
        scenario (Scenario): the scenario
        configs (list): at least two merged configurations; a config's ``label``
            names its row, defaulting to ``config<i>``

    Returns:
        pd.DataFrame: one row per config, in input order, columns :data:`COMPARISON_COLUMNS`
    """
    configs = list(configs)
    if len(configs) < 2:
        raise ValidationError("compare needs at least 2 configs, got %d" % len(configs))
    configs = [{**c, "enable_wandb": False, "enable_terminal_rendering": False} for c in configs]
    results = [None] * len(configs)
    failures = [None] * len(configs)

    def worker(index):
        try:
            results[index] = run_sequence(scenario, configs[index])
        except Exception as e:
            failures[index] = e

    threads = [threading.Thread(target=worker, args=(i,), name="compare-%d" % i) for i in range(len(configs))]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    for failure in failures:
        if failure is not None:
            raise failure

    rows = []
    for index, (config_json, traces) in enumerate(zip(configs, results)):
        label = config_json.get("label") or "config%d" % index
        rows.append(summarize_run(label, config_json, traces))
    return pd.DataFrame.from_records(rows, columns=list(COMPARISON_COLUMNS))


def write_comparison_csv(table, path):
    table.to_csv(path, index=False, float_format="%.9g")
