#SPDX-License-Identifier: Apache-2.0
#File : start_render_gym.py

import sys

from render_gym_client.cli import main

if __name__ == "__main__":
    sys.exit(main())
