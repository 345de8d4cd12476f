#SPDX-License-Identifier: Apache-2.0
#File : adapter.py

import render_gym_client.adapter
from render_gym_model.attention import BinaryAttention, binary_from_groups
from render_gym_scene.errors import AttentionModelError


class Adapter(render_gym_client.adapter.Adapter):
    """binary env adapter: each sprite is attended with a fixed probability.

    Sprites take their group's probability unless ``sprite_probabilities``
    names them.

    Args:
        Adapter (render_gym_client.adapter.Adapter): base class.
    """
    def __init__(self, config_json):
        super().__init__(config_json)
        self.check_model(__file__)
        self.model_cache = None

    def get_attention_model(self, scenario, sprites, history):
        """The binary model does not change between frames, so it is built once per scenario."""
        if self.model_cache is not None and self.model_cache[0] is scenario:
            return self.model_cache[1]
        attention = self.config_json['attention']
        overrides = attention.get("sprite_probabilities") or {}
        unknown = sorted(set(overrides) - set(scenario.sprites))
        if unknown:
            raise AttentionModelError("sprite_probabilities name unknown sprite(s): " + ", ".join(unknown))
        model = binary_from_groups(scenario.objects, attention.get("group_probabilities") or {}, attention.get("alpha", 0.0))
        if overrides:
            model = BinaryAttention({**model.p, **overrides}, model.alpha, model.assumptions)
        self.model_cache = (scenario, model)
        return model
