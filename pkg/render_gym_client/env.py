#SPDX-License-Identifier: Apache-2.0
#File : env.py

import importlib
import json
import logging
import os
import pathlib

import gymnasium as gym
import numpy as np

from render_gym_client.simulation import RunSettings, frame_sprites, initial_state, plan_from_selection, run_frame
from render_gym_regulator.regulator import FramePlan, plan_frame
from render_gym_scene.errors import ConfigError, InfeasibleBudgetError, ScenarioFormatError, ValidationError

logger = logging.getLogger(__name__)

FILE_PATH = pathlib.Path(__file__).parent
CONFIG_SECTIONS = ("label", "cost_model", "attention", "compute_model", "regulator", "history", "fiducial",
                   "enable_wandb", "enable_terminal_rendering", "log_level")
DEFAULT_MODEL = "object"


def available_models():
    """Attention models with an adapter directory under ``envs/``."""
    return sorted(name for name in os.listdir(FILE_PATH / 'envs')
                  if (FILE_PATH / 'envs' / name / 'adapter.py').is_file())


def _read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError("cannot parse config '%s': %s" % (path, e))


def merge_config(base, update):
    """Section-by-section merge: dict sections are updated key by key, everything else is replaced."""
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def load_config_file(path=None, model=None):
    """Load the run configuration.

    The common config is merged with the attention model's config and then
    with the user file, if any.

    Args:
        path (str): user JSON config file, optional
        model (str): attention model, e.g. ``object``; defaults to the user file's
            ``attention.model``, else ``object``

    Returns:
        dict: the merged configuration
    """
    user_json = {} if path is None else _read_json(path)
    if not isinstance(user_json, dict):
        raise ConfigError("config '%s' must be a JSON object" % path)
    unknown = sorted(set(user_json) - set(CONFIG_SECTIONS))
    if unknown:
        raise ConfigError("unknown config section(s): " + ", ".join(unknown) + ". Available sections: " + str(list(CONFIG_SECTIONS)))

    model = model or (user_json.get("attention") or {}).get("model") or DEFAULT_MODEL
    model_list = available_models()
    if model not in model_list:
        raise ConfigError("cannot find attention model: '" + str(model) + "'. Available models: " + str(model_list))

    #common_config.json is shared by all attention models
    config_json = _read_json(FILE_PATH / 'common_config.json')
    config_json = merge_config(config_json, _read_json(FILE_PATH / 'envs' / model / 'config.json'))
    config_json = merge_config(config_json, user_json)
    config_json['attention']['model'] = model
    return config_json


class RenderGymEnv(gym.Env):
    """Frame-by-frame render regulation of one scenario, following the gym interface.

    :meth:`reset` runs frame 0 with the configured policy (every sprite is
    re-rendered, as none has an image to warp yet). Each :meth:`step` then
    regulates the next frame, either with the configured policy (``action``
    ``None``), with a ready :class:`FramePlan`, or with a MultiBinary vector
    over the sorted sprite ids.
    """

    def __init__(self, scenario, config_json):
        """Initialize RenderGymEnv.

        Args:
            scenario (Scenario): the scenario to run
            config_json (dict): merged configuration, see :func:`load_config_file`
        """
        super().__init__()
        self.scenario = scenario
        self.config_json = config_json
        self.settings = RunSettings.from_config(config_json)
        self.budget = self.settings.budget(scenario)
        self.sprite_ids = tuple(sorted(scenario.sprites))

        module_path = 'render_gym_client.envs.' + config_json['attention']['model'] + '.adapter'
        module = importlib.import_module(module_path, package=None)
        self.adapter = module.Adapter(config_json)

        self.action_space = self.adapter.get_action_space(len(self.sprite_ids))
        self.observation_space = self.adapter.get_observation_space(len(self.sprite_ids))
        self.state = None
        self.traces = []
        self.upcoming = None

    @property
    def terminated(self):
        return self.state is not None and self.state.frame >= self.scenario.frame_count

    def _frame_inputs(self):
        """Sprites and attention model of the frame about to run, built once per frame."""
        if self.upcoming is None or self.upcoming[0] != self.state.frame:
            sprites = frame_sprites(self.state, self.scenario)
            attention = self.adapter.get_attention_model(self.scenario, sprites, self.state.history)
            self.upcoming = (self.state.frame, sprites, attention)
        return self.upcoming[1], self.upcoming[2]

    def _plan(self, action, sprites, models):
        if action is None:
            return plan_frame(sprites, models, self.budget, self.settings.policy)
        if isinstance(action, FramePlan):
            return action
        action = np.asarray(action)
        if action.shape != self.action_space.shape:
            raise ValidationError("action shape %s does not match the action space %s" % (action.shape, self.action_space.shape))
        selection = [s for s, bit in zip(self.sprite_ids, action) if bit]
        return plan_from_selection(sprites, selection, models, self.budget)

    def _advance(self, action):
        t = self.state.frame
        sprites, attention = self._frame_inputs()
        models = self.settings.models(self.scenario, attention)
        try:
            plan = self._plan(action, sprites, models)
            self.state, trace = run_frame(self.state, self.scenario, plan, models, self.budget)
        except InfeasibleBudgetError as e:
            if e.frame is None:
                raise e.at_frame(t) from e
            raise
        self.traces.append(trace)
        self.adapter.log_frame(trace)
        return trace, plan

    def _observe(self):
        if self.terminated:
            return np.zeros(self.observation_space.shape, dtype=np.float64)
        sprites, attention = self._frame_inputs()
        return self.adapter.get_observation(sprites, attention, self.settings.forms)

    def reset(self, seed=None, options=None):
        """Start the scenario over and run frame 0.

        Args:
            seed (optional int): seeds the spaces' PRNG; the simulation itself is deterministic
            options (optional dict): unused

        Returns:
            observation (np.ndarray): observation of frame 1 (zeros for a one-frame scenario)
            info (dict): ``{"trace": FrameTrace, "plan": FramePlan}`` of frame 0
        """
        super().reset(seed=seed)
        self.state = initial_state(self.settings)
        self.traces = []
        self.upcoming = None
        logger.info("reset: %d frames, %d sprites, budget %.6g, policy %s, attention %s",
                    self.scenario.frame_count, len(self.sprite_ids), self.budget, self.settings.policy,
                    self.config_json['attention']['model'])
        trace, plan = self._advance(None)
        return self._observe(), {"trace": trace, "plan": plan}

    def step(self, action=None):
        """Regulate and run the next frame.

        Args:
            action: ``None`` for the configured policy, a :class:`FramePlan`, or a 0/1 vector
                with one entry per sprite (sorted by id), 1 to re-render at finest quality

        Returns:
            observation (np.ndarray): observation of the next frame, zeros after the last one
            reward (float): minus the expected perceptual cost of the frame just run
            terminated (bool): the last frame of the scenario has run
            truncated (bool): always False
            info (dict): ``{"trace": FrameTrace, "plan": FramePlan}``
        """
        if self.state is None:
            raise ValidationError("call reset() before step()")
        if self.terminated:
            raise ValidationError("the scenario has ended; call reset() to run it again")
        trace, plan = self._advance(action)
        reward = self.adapter.get_reward(trace)
        return self._observe(), reward, self.terminated, False, {"trace": trace, "plan": plan}

    def run_until(self, frame):
        """Run the configured policy up to, not including, ``frame``.

        Returns:
            tuple: ``(sprites, RegulatorModels)`` of ``frame``, ready for :func:`plan_frame`
        """
        if not 0 <= frame < self.scenario.frame_count:
            raise ValidationError("frame %d is outside the scenario (0..%d)" % (frame, self.scenario.frame_count - 1))
        self.state = initial_state(self.settings)
        self.traces = []
        self.upcoming = None
        while self.state.frame < frame:
            self._advance(None)
        sprites, attention = self._frame_inputs()
        return sprites, self.settings.models(self.scenario, attention)

    def render(self):
        """Rich layout summarizing the frames run so far."""
        return self.adapter.render_summary(self.traces)
