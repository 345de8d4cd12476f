#SPDX-License-Identifier: Apache-2.0
#File : adapter.py

import logging
from pathlib import Path

import numpy as np
import plotext as plt
import wandb
from gymnasium import spaces
from rich.ansi import AnsiDecoder
from rich.console import Group
from rich.jupyter import JupyterMixin
from rich.layout import Layout
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from render_gym_model.attention import (DEFAULT_PRIORS, GroupPriorSpec, attention_from_groups, attention_weight,
                                        condition_on_cost)
from render_gym_model.fiducial import RenderAction, evaluate_fiducial
from render_gym_scene.errors import ConfigError

logger = logging.getLogger(__name__)


class Adapter:
    """The base class for attention-model adapters.

    An adapter sits between the gymnasium environment and the regulator. It
    turns the scene state of a frame (areas, groups, error histories) into the
    active attention model, and it turns frame results into observations,
    rewards, wandb metrics and terminal summaries.
    """
    def __init__(self, config_json):
        """Initialize Adapter.

        Args:
            config_json (dict): the merged configuration
        """
        self.config_json = config_json
        self.wandb_log_buffer = None
        self.wandb = wandb
        self.model = config_json['attention']['model']

        if config_json["enable_wandb"]:
            self.wandb.init(
                name=self.model + "::" + config_json['regulator']['policy'],
                project="render_gym",
                config={"attention": config_json['attention'], "regulator": config_json['regulator'],
                        "cost_model": config_json['cost_model']},
            )

    def check_model(self, adapter_file):
        """Fail unless the adapter in ``adapter_file`` serves the configured attention model."""
        name = Path(adapter_file).resolve().parent.name
        if self.model != name:
            raise ConfigError("wrong attention adapter. Configured model: " + str(self.model) + " != launched adapter: " + name)

    def get_attention_model(self, scenario, sprites, history):
        """Build the attention model of the current frame.

        Args:
            scenario (Scenario): the scenario, for objects and groups
            sprites (dict): sprite id to current-frame :class:`Sprite`
            history (CostHistory): per-sprite error history up to the previous frame

        Returns:
            AttentionModel: the model the regulator prices this frame with
        """
        raise NotImplementedError

    def author_object_model(self, scenario, sprites, history, alpha=0.0):
        """Object-conditioned model from the group priors of the ``attention`` section, conditioned on error history by ``beta``."""
        attention = self.config_json['attention']
        spec = GroupPriorSpec.from_dict({
            "priors": attention.get("group_priors") or DEFAULT_PRIORS,
            "area_exponent": attention.get("area_exponent", 1.0),
            "edge_bonus": attention.get("edge_bonus", 0.5),
            "focus_objects": attention.get("focus_objects") or (),
            "focus_gain": attention.get("focus_gain", 1.0),
        })
        model = attention_from_groups(scenario.objects, sprites, spec, alpha)
        return condition_on_cost(model, history, attention.get("beta", 0.0))

    def get_action_space(self, sprite_count):
        """One bit per sprite (sorted by id): 1 re-renders at finest quality, 0 warps."""
        return spaces.MultiBinary(sprite_count, seed=42)

    def get_observation_space(self, sprite_count):
        """Per sprite: geometric warp error if warped now, area fraction, attention weight."""
        return spaces.Box(low=0.0, high=np.inf, shape=(sprite_count, 3), dtype=np.float64, seed=42)

    def get_observation(self, sprites, attention, forms):
        """Observation of the frame about to be regulated.

        Args:
            sprites (dict): sprite id to current-frame :class:`Sprite`
            attention (AttentionModel): this frame's attention model
            forms (ErrorForms): fiducial forms

        Returns:
            np.ndarray: shape ``(n_sprites, 3)``
        """
        rows = []
        for sprite_id in sorted(sprites):
            sprite = sprites[sprite_id]
            warp = 0.0
            if sprite.rendered:
                warp = evaluate_fiducial(sprite, RenderAction.warp(), forms=forms).geometric_warp_error
            rows.append([warp, sprite.area_fraction, attention_weight(attention, sprite_id)])
        return np.array(rows, dtype=np.float64).reshape(len(rows), 3)

    def get_reward(self, trace):
        """Negative expected perceptual cost of the frame."""
        return -trace.expected_cost

    def wandb_log_buffer_append(self, info):
        """Add to wandb log buffer, the info will be send to wandb later in the :meth:`wandb_log` function

        Args:
            info (dict): information to append to the buffer.
        """
        if info:
            if not self.wandb_log_buffer:
                self.wandb_log_buffer = info
            else:
                self.wandb_log_buffer.update(info)

    def wandb_log(self):
        """Send the log information to WanDB."""
        if self.config_json["enable_wandb"]:
            self.wandb.log(self.wandb_log_buffer)
        self.wandb_log_buffer = None

    def log_frame(self, trace):
        self.wandb_log_buffer_append({
            "frame": trace.frame,
            "expected_cost": trace.expected_cost,
            "raw_cost": trace.raw_cost,
            "utilization": trace.utilization,
            "rerendered": len(trace.rerendered),
        })
        self.wandb_log()

    def generate_table(self, traces):
        """Per-group re-render counts and cost totals of a finished run."""
        table = Table(title="render_gym " + self.model + " run")
        table.add_column("Group", justify="left", style="cyan")
        table.add_column("Sprites", justify="right")
        table.add_column("Re-renders", justify="right", style="magenta")
        table.add_column("Raw cost", justify="right")
        table.add_column("Expected cost", justify="right", style="green")
        groups = {}
        for trace in traces:
            for row in trace.sprites:
                entry = groups.setdefault(row.group, {"sprites": set(), "rerenders": 0, "raw": 0.0, "expected": 0.0})
                entry["sprites"].add(row.sprite_id)
                entry["rerenders"] += row.action == "rerender"
                entry["raw"] += row.perceptual_cost
                entry["expected"] += row.attention_weight * row.perceptual_cost
        for group in sorted(groups):
            entry = groups[group]
            table.add_row(group, str(len(entry["sprites"])), str(entry["rerenders"]),
                          "%.4g" % entry["raw"], "%.4g" % entry["expected"])
        return table

    def cost_plot(self, traces):
        def plot(width, height):
            plt.clf()
            frames = [t.frame for t in traces]
            plt.plot(frames, [t.expected_cost for t in traces], label="expected")
            plt.plot(frames, [t.raw_cost for t in traces], label="raw")
            plt.title("perceptual cost per frame")
            plt.plotsize(width, height)
            plt.theme("clear")
            return plt.build()
        return self.plotextMixin(plot)

    def make_layout(self):
        layout = Layout(name="root")
        layout.split(
            Layout(name="header", size=1),
            Layout(name="main", ratio=1),
        )
        layout["main"].split_row(
            Layout(name="left", ratio=1),
            Layout(name="right", ratio=1),
        )
        return layout

    def render_summary(self, traces):
        """Terminal layout: header, group table on the left, cost curve on the right."""
        layout = self.make_layout()
        policy = traces[0].policy if traces else self.config_json['regulator']['policy']
        title = plt.colorize(policy, "cyan+", "bold") + " regulating " + str(len(traces)) + " frames under the " + plt.colorize(self.model, "cyan+", "bold") + " attention model."
        layout["header"].update(Text.from_ansi(title))
        layout["left"].update(self.generate_table(traces))
        layout["right"].update(Panel(self.cost_plot(traces)))
        return layout

    class plotextMixin(JupyterMixin):
        def __init__(self, plot_function):
            self.decoder = AnsiDecoder()
            self.plot_function = plot_function

        def __rich_console__(self, console, options):
            self.width = options.max_width or console.width
            self.height = options.height or console.height
            canvas = self.plot_function(self.width, self.height)
            self.rich_canvas = Group(*self.decoder.decode(canvas))
            yield self.rich_canvas
