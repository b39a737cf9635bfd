"""mapcost: analytical cost model for loop-nest mappings on spatial accelerators.

The pipeline: describe a workload (matmul or 2D convolution), an accelerator
memory hierarchy and a per-level tiling/ordering mapping; compile the mapping
into a schedule tree; derive where every array element lives in space and
time; classify the resulting traffic into temporal, spatial, temporal-spatial
and unique volumes; and turn the volumes into utilization, energy and cycle
estimates.  A brute-force trace oracle independently reproduces the volume
counts at desk scale.
"""

from .analysis import (CostReport, VolumeCounts, VolumeReport, cycle_breakdown,
                       energy_breakdown, evaluate, reuse_volumes, utilization,
                       volume_report, volumes_by_class)
from .arch import ArchSpec, HardwareParams, MemoryLevel, arch_from_dict, eyeriss_like, \
    parse_arch, render_arch
from .errors import (BudgetError, ConfigError, LegalityError, MapcostError,
                     ParseError, StructuralError, Violation)
from .intset import (AffineMap, IntRelation, IntSet, Shape, compose, lex_closest_pred,
                     lex_lt, parse_map, parse_set)
from .mapping import (Mapping, ScheduleTree, build_schedule_tree, check_legality,
                      mapping_from_dict, parallelism, parse_mapping)
from .oracle import OracleResult, diff, dump_events, simulate
from .placement import InterLevelPlacement, PlacementSet, SpaceTimeMap, inter_level, \
    space_time_map, theta
from .workload import (AccessFunction, DimSpec, Workload, conv2d, gemm, load_workload,
                       workload_from_dict)

__version__ = "0.1.0"
