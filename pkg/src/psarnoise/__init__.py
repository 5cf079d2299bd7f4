"""Noisy probabilistic storage and retrieval of qubit phase gates."""
from ._accel import backend_name
from .channel import KrausChannel, NoiseKind, NoiseModel, kraus_to_choi, noisy_phase_gate, phase_gate_unitary
from .comb import is_deterministic_network, is_probabilistic_network, link_product
from .psar import (
    decompose_retrieved,
    probe_state,
    retrieval_operator,
    retrieve,
    store,
    theorem1_closed_form,
    theorem2_closed_form,
)
from .realizations import vmc_run, vq_run
from .tensor_core import LabeledOperator, SpaceLayout

__version__ = "0.1.0"
