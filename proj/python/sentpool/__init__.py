"""LSTM/BLSTM sentence classifiers with tail, pooled and hybrid heads."""

from ._sentpool import *  # noqa: F401,F403
from ._sentpool import __version__  # noqa: F401
