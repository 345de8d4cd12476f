#SPDX-License-Identifier: Apache-2.0
#File : __init__.py

from .adapter import Adapter
