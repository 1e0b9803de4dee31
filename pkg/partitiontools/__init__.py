"""
Tools for weighted-perimeter optimal partitions on grids: landscape weights, the
partition energy, local-move optimisation, an exact oracle and regularity diagnostics.
"""
from .grid import (Grid, ScalarField, Partition, InterfaceFace, constant_field, uniform_partition,
                   extract_interface, face_table, phase_volumes, symmetric_difference_distance,
                   connected_components)
from .landscape import WeightSpec, solve_landscape, build_weight, face_weight
from .energy import (BulkTermSpec, EnergySpec, EnergyBreakdown, IncrementalEnergy, interface_energy,
                     bulk_energy, total_energy, energy_delta, verify_holder_bound)
from .optimizer import (PourMove, OptimizerConfig, EnergyTrace, TraceRecord, initialize, apply_pour,
                        propose_pour, icm_sweep, minimize, clean)
from .oracle import OracleBudget, brute_force_min, verify_against
from .diagnostics import (DiagnosticsConfig, RegularityReport, ahlfors_scan, per_phase_ahlfors_scan,
                          condition_b_scan, isoperimetry_scan, junction_scan, gauge_exponent,
                          holder_constant_scan, full_report)
from .parser import (read_field, write_field, read_mask, write_mask, read_labels, write_labels, read_trace,
                     write_trace, write_report, read_report, write_pgm, path_to_lines)
from .load import RunConfig, load_config
from .exceptions import (PartitionToolsError, FormatError, PreconditionError, EmptyInterfaceError,
                         BudgetExceededError, InvariantError, ConvergenceError)
