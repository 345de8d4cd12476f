#SPDX-License-Identifier: Apache-2.0
#File : cli.py

import argparse
import json
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from render_gym_client.env import RenderGymEnv, available_models, load_config_file
from render_gym_client.harness import compare_policies, run_env, write_comparison_csv
from render_gym_client.simulation import write_trace_csv
from render_gym_regulator.regulator import POLICY_HELP, plan_frame
from render_gym_scene.errors import InfeasibleBudgetError, RenderGymError
from render_gym_scene.generator import generate_synthetic, load_generator_spec
from render_gym_scene.scene import load_scenario, save_scenario

logger = logging.getLogger("render_gym")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3

# flag dest -> (config section, key)
OVERRIDES = {
    "policy": ("regulator", "policy"),
    "budget": ("regulator", "frame_budget"),
    "alpha": ("attention", "alpha"),
    "beta": ("attention", "beta"),
    "w_geo": ("cost_model", "w_geo"),
    "w_res": ("cost_model", "w_res"),
    "w_tex": ("cost_model", "w_tex"),
    "w_geom_lod": ("cost_model", "w_geom_lod"),
    "w_shade": ("cost_model", "w_shade"),
}


def configure_logging(level="WARNING"):
    """Route every render_gym logger through one rich handler."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(show_path=False, rich_tracebacks=False))
    root.setLevel(str(level).upper())


def apply_overrides(config_json, args):
    """Copy the override flags that were given into their config sections."""
    for dest, (section, key) in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            config_json[section] = dict(config_json.get(section) or {})
            config_json[section][key] = value
    return config_json


def load_run_config(path, args):
    config_json = apply_overrides(load_config_file(path, args.model), args)
    if args.log_level is None:
        configure_logging(config_json.get("log_level", "WARNING"))
    return config_json


def simulate(args):
    scenario = load_scenario(args.scenario)
    config_json = load_run_config(args.config, args)
    env = RenderGymEnv(scenario, config_json)
    traces = run_env(env)
    write_trace_csv(traces, args.out)
    logger.info("wrote %d frames to %s", len(traces), args.out)
    if args.summary or config_json["enable_terminal_rendering"]:
        Console().print(env.render(), height=args.summary_height)
    return EXIT_OK


def generate(args):
    overrides = {}
    if args.sprites is not None:
        overrides["sprite_count"] = args.sprites
    if args.frames is not None:
        overrides["frame_count"] = args.frames
    spec = load_generator_spec(args.spec, **overrides)
    save_scenario(generate_synthetic(spec, args.seed), args.out)
    logger.info("wrote generated scenario (seed %d) to %s", args.seed, args.out)
    return EXIT_OK


def compare(args):
    scenario = load_scenario(args.scenario)
    paths = [p for p in args.configs.split(",") if p]
    configs = []
    for path in paths:
        config_json = load_run_config(path, args)
        if not config_json.get("label"):
            config_json["label"] = path
        configs.append(config_json)
    table = compare_policies(scenario, configs)
    write_comparison_csv(table, args.out)
    logger.info("wrote comparison of %d configs to %s", len(configs), args.out)
    return EXIT_OK


def oracle(args):
    scenario = load_scenario(args.scenario)
    config_json = load_run_config(args.config, args)
    env = RenderGymEnv(scenario, config_json)
    sprites, models = env.run_until(args.frame)
    policies = [config_json["regulator"]["policy"]]
    if policies[0] != "oracle":
        policies.append("oracle")

    table = Table(title="frame %d, budget %.6g" % (args.frame, env.budget))
    table.add_column("Policy", justify="left", style="cyan")
    table.add_column("Re-rendered", justify="left")
    table.add_column("Expected cost", justify="right", style="green")
    table.add_column("Spend", justify="right")
    table.add_column("Slack", justify="right")
    for policy in policies:
        plan = plan_frame(sprites, models, env.budget, policy)
        table.add_row(policy, ",".join(plan.rerendered), "%.9g" % plan.expected_cost, "%.9g" % plan.spend, "%.9g" % plan.slack)
    Console().print(table)
    return EXIT_OK


def add_run_flags(parser, config=True):
    if config:
        parser.add_argument('--config', type=str, default=None, help='JSON config file merged over the common and attention-model configs.')
    parser.add_argument('--model', type=str, default=None, choices=available_models(), help='Attention model.')
    parser.add_argument('--policy', type=str, default=None, help='Regulation policy: ' + POLICY_HELP + '.')
    parser.add_argument('--budget', type=float, default=None, help='Frame budget, overriding the scenario.')
    parser.add_argument('--alpha', type=float, default=None, help='Attention factor for unattended sprites.')
    parser.add_argument('--beta', type=float, default=None, help='Gain of the error-history conditioning of attention.')
    for flag in ("w-geo", "w-res", "w-tex", "w-geom-lod", "w-shade"):
        parser.add_argument('--' + flag, type=float, default=None, help='Cost model weight ' + flag.replace("-", "_") + '.')


def arg_parser():
    parser = argparse.ArgumentParser(description='render_gym: attention-aware render regulation')
    parser.add_argument('--log-level', type=str, default=None, help='Logging level (default from the common config, WARNING).')
    commands = parser.add_subparsers(dest='command', required=True)

    sub = commands.add_parser('simulate', help='Run a scenario and write the per-sprite trace CSV.')
    sub.add_argument('--scenario', type=str, required=True)
    sub.add_argument('--out', type=str, required=True)
    sub.add_argument('--summary', action='store_true', help='Print a rich summary table and cost plot.')
    sub.add_argument('--summary-height', type=int, default=30)
    add_run_flags(sub)
    sub.set_defaults(handler=simulate)

    sub = commands.add_parser('generate', help='Generate a synthetic scenario file.')
    sub.add_argument('--spec', type=str, default=None, help='Generator spec JSON, merged over the shipped defaults.')
    sub.add_argument('--seed', type=int, required=True)
    sub.add_argument('--out', type=str, required=True)
    sub.add_argument('--sprites', type=int, default=None)
    sub.add_argument('--frames', type=int, default=None)
    sub.set_defaults(handler=generate)

    sub = commands.add_parser('compare', help='Run a scenario under several configs and write a comparison CSV.')
    sub.add_argument('--scenario', type=str, required=True)
    sub.add_argument('--configs', type=str, required=True, help='Comma-separated config files.')
    sub.add_argument('--out', type=str, required=True)
    add_run_flags(sub, config=False)
    sub.set_defaults(handler=compare)

    sub = commands.add_parser('oracle', help='Compare the configured policy with the exact knapsack on one frame.')
    sub.add_argument('--scenario', type=str, required=True)
    sub.add_argument('--frame', type=int, required=True)
    add_run_flags(sub)
    sub.set_defaults(handler=oracle)
    return parser


def main(argv=None):
    """main function; returns the process exit code"""
    args = arg_parser().parse_args(argv)
    configure_logging(args.log_level or "WARNING")
    try:
        return args.handler(args)
    except InfeasibleBudgetError as e:
        logger.error("[Error] %s", e)
        return EXIT_INFEASIBLE
    except (RenderGymError, json.JSONDecodeError, OSError) as e:
        logger.error("[Error] %s", e)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
