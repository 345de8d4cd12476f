#SPDX-License-Identifier: Apache-2.0
#File : adapter.py

import render_gym_client.adapter


class Adapter(render_gym_client.adapter.Adapter):
    """object env adapter: attention flows from group priors to objects to sprites.

    Args:
        Adapter (render_gym_client.adapter.Adapter): base class.
    """
    def __init__(self, config_json):
        super().__init__(config_json)
        self.check_model(__file__)

    def get_attention_model(self, scenario, sprites, history):
        """Object-conditioned model of this frame, shifted toward persistent artifacts by ``beta``."""
        return self.author_object_model(scenario, sprites, history, self.config_json['attention'].get("alpha", 0.0))
