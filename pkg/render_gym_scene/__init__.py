#SPDX-License-Identifier: Apache-2.0
#File : __init__.py

from .errors import *
from .compute_cost import ComputeCostModel
from .scene import *
