#SPDX-License-Identifier: Apache-2.0
#File : __init__.py

from .fiducial import *
from .perceptual_cost import *
from .attention import *
