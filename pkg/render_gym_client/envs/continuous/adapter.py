#SPDX-License-Identifier: Apache-2.0
#File : adapter.py

import render_gym_client.adapter
from render_gym_model.attention import continuous_from_object


class Adapter(render_gym_client.adapter.Adapter):
    """continuous env adapter: attention is a level in [0, 1] with a per-sprite density.

    Densities are Beta mixtures weighted by the object-conditioned attention
    probability. A non-null ``alpha`` selects the ``floor`` attenuation with
    that floor, so ``--alpha`` means the same discount in every model.

    Args:
        Adapter (render_gym_client.adapter.Adapter): base class.
    """
    def __init__(self, config_json):
        super().__init__(config_json)
        self.check_model(__file__)

    def attenuation(self):
        attention = self.config_json['attention']
        if attention.get("alpha") is not None:
            return {"family": "floor", "floor": attention["alpha"]}
        return attention.get("attenuation")

    def get_attention_model(self, scenario, sprites, history):
        attention = self.config_json['attention']
        model = self.author_object_model(scenario, sprites, history)
        return continuous_from_object(model, attention.get("bins", 16), tuple(attention.get("attend_shape", (8.0, 1.0))),
                                      tuple(attention.get("ignore_shape", (1.0, 8.0))), self.attenuation())
