"""quasidark: charge-qubit storage in a cold-molecule ensemble through a quasi-dark state."""

from .dynamics import Schedule as Schedule
from .dynamics import compare_models as compare_models
from .dynamics import storage_sweep as storage_sweep
from .hilbert import SpaceSpec as SpaceSpec
from .hilbert import StateVector as StateVector

# Export observability helpers
from .observability import logger as logger
from .observability import metrics as metrics
from .params import EffectiveParams as EffectiveParams
from .params import SystemParams as SystemParams
from .params import effective_constants as effective_constants
from .params import solve_resonant_qubit_frequency as solve_resonant_qubit_frequency
from .protocol import StorageTask as StorageTask
from .protocol import run_retrieval as run_retrieval
from .protocol import run_storage as run_storage
from .spectral import quasi_dark_state as quasi_dark_state

__version__ = "0.1.0"
