"""Metrological criteria for the separability of local hidden states."""

from .assemblage import (
    Assemblage,
    ConditionalValue,
    MeasurementSetting,
    SettingSearch,
    condition,
    conditional_functional,
    convex,
    negativity,
    qcfi,
    qcv,
)
from .criteria import (
    CriterionReport,
    assisted_entanglement_test,
    lambda_sep_test,
    reduced_sep_test,
    reid_sep_test,
    steering_test,
    wh_sep_test,
)
from .metrology import QfiValue, qfi, qfi_variance_gap, squeezing_ratio
from .partitions import Partition, YoungClass, enumerate_partitions, fmax_wh, parse_partition, young_class
from .quantum_core import (
    HermitianObservable,
    QuantumState,
    QubitLayout,
    block_generator,
    collective_spin,
    eig_hermitian,
    expectation,
    partial_trace,
    tensor,
    variance,
)

__version__ = "0.1.0"
