"""Checkable functionals built on recorded series and snapshots."""
from .checks import (
    CadenceWarning, ResidualSeries, Verdict, check_chebyshev_chain, check_decay_bound, check_decay_series,
    check_interpolation, check_level_dissipation, check_mass_dissipation, check_max_principle,
    criterion_integral, decay_bound, epsilon0, interpolation_constant, level_value, smooth_window,
    time_derivative, truncate,
)
from .degiorgi import DeGiorgiResult, DeGiorgiState, check_recurrence, degiorgi_sequence, recurrence_bound
from .records import SERIES_FIELDS, DiagnosticsRecord, RecordMaker
from .scaling import scaling_pair_test
