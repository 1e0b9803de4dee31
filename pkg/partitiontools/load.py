"""
Config loading: flat ``key = value`` files with dotted sections, checked against the
schema in mappings.py and turned into a validated RunConfig before any work starts.
"""
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .diagnostics import DiagnosticsConfig
from .energy import BulkTermSpec, EnergySpec
from .exceptions import FormatError, PreconditionError
from .grid import Grid, ScalarField, constant_field
from .landscape import WeightSpec
from .mappings import VALID_RANGES, config_mapping
from .optimizer import OptimizerConfig
from .oracle import OracleBudget
from .parser import Line, path_to_lines, read_field, read_h_table, read_mask

logger = logging.getLogger(__name__)

PROCESSES_ENV = "PARTITIONTOOLS_PROCESSES"
_LANDSCAPE = "landscape"


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    n_labels: int
    weight_source: str
    weight_spec: WeightSpec
    weight_field: Optional[str]
    potential: Optional[str]
    solver_tol: float
    solver_max_iter: Optional[int]
    bulk_kind: str
    bulk_lambda: float
    bulk_targets: Optional[Tuple[float, ...]]
    bulk_alpha: float
    bulk_c_alpha: Optional[float]
    h_table: Optional[Tuple[np.ndarray, np.ndarray]]
    q_weight: Optional[str]
    label_weights: Optional[Tuple[float, ...]]
    stencil: str
    optimizer: OptimizerConfig
    diagnostics: DiagnosticsConfig
    budget: OracleBudget
    verify: Optional[str]
    out: str
    seed: int
    export_pgm: bool
    processes: int

    def energy_spec(self, w: Optional[ScalarField] = None) -> EnergySpec:
        """EnergySpec of the run; ``w`` is the landscape function when the bulk weight q is the landscape"""
        q_weight = None
        if self.q_weight == _LANDSCAPE:
            if w is None:
                raise PreconditionError("bulk.q_weight = landscape needs the computed landscape function")
            q_weight = w
        elif self.q_weight is not None:
            q_weight = read_field(self.q_weight, grid=self.grid)
        bulk = BulkTermSpec(kind=self.bulk_kind, lam=self.bulk_lambda, target_volumes=self.bulk_targets,
                            alpha=self.bulk_alpha, c_alpha=self.bulk_c_alpha, h_table=self.h_table,
                            q_weight=q_weight)
        return EnergySpec(bulk=bulk, label_weights=self.label_weights, stencil=self.stencil)


def parse_config_lines(lines: List[Line], path: str = "<config>") -> Dict[str, object]:
    """Parses ``key = value`` lines into typed values

    Args:
        lines (List[Tuple[int, str]]): (byte offset, line) pairs
        path (str, optional): file name used in diagnostics

    Raises:
        FormatError: malformed line, unknown or repeated key, or a value of the wrong type

    Returns:
        Dict[str, object]: typed values of the keys present in the file
    """
    parsed = {}
    for offset, line in lines:
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise FormatError(f"{path}: byte offset {offset}: expected key = value")
        if key not in config_mapping:
            raise FormatError(f"{path}: byte offset {offset}: unknown key {key}")
        if key in parsed:
            raise FormatError(f"{path}: byte offset {offset}: key {key} given twice")
        try:
            parsed[key] = config_mapping[key]["dtype"](value)
        except ValueError as e:
            raise FormatError(f"{path}: byte offset {offset}: bad value for {key}: {e}") from None
    return parsed


def _check_values(values: Dict[str, object]):
    for key, value in values.items():
        if value is None:
            continue
        choices = config_mapping[key].get("choices")
        if choices is not None and value not in choices:
            raise PreconditionError(f"{key} = {value} is not one of {choices}")
        valid_range = VALID_RANGES.get(key)
        if valid_range is None:
            continue
        for item in (value if isinstance(value, tuple) else (value,)):
            if not valid_range["min"] <= item <= valid_range["max"]:
                raise PreconditionError(f"{key} = {item} outside [{valid_range['min']}, {valid_range['max']}]")


def _resolve_paths(values: Dict[str, object], base_dir: str):
    for key, spec in config_mapping.items():
        value = values.get(key)
        if not spec.get("path") or value is None or value == _LANDSCAPE:
            continue
        path = value if os.path.isabs(value) else os.path.join(base_dir, value)
        if not os.path.isfile(path):
            raise FormatError(f"{key}: referenced file {path} does not exist")
        values[key] = path


def _processes() -> int:
    raw = os.environ.get(PROCESSES_ENV, "1")
    try:
        processes = int(raw)
    except ValueError:
        raise FormatError(f"{PROCESSES_ENV}={raw} is not an integer") from None
    if processes < 1:
        raise PreconditionError(f"{PROCESSES_ENV} must be >= 1, got {processes}")
    return processes


def _scaled(values: Optional[Tuple[float, ...]], h: float) -> Optional[Tuple[float, ...]]:
    return tuple(v * h for v in values) if values is not None else None


def build_run_config(parsed: Dict[str, object], base_dir: str = ".",
                     overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """Builds a RunConfig from parsed values, applying defaults, overrides and every validity check"""
    values = {key: spec["default"] for key, spec in config_mapping.items()}
    values.update(parsed)
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    for key in ("grid.nx", "grid.ny", "grid.h"):
        if values[key] is None:
            raise FormatError(f"Missing required key {key}")
    _check_values(values)
    _resolve_paths(values, base_dir)

    mask = read_mask(values["grid.mask"]) if values["grid.mask"] is not None else None
    grid = Grid(values["grid.nx"], values["grid.ny"], values["grid.h"], mask)
    h = grid.h

    if values["weight.source"] == "field" and values["weight.field"] is None:
        raise PreconditionError("weight.source = field needs weight.field")
    if values["bulk.q_weight"] == _LANDSCAPE and values["weight.source"] != "landscape":
        raise PreconditionError("bulk.q_weight = landscape needs weight.source = landscape")
    weight_spec = WeightSpec(delta=values["weight.delta"], cap=values["weight.cap"], source=values["weight.source"],
                             beta=values["weight.beta"], c_beta=values["weight.c_beta"])

    temperature = None
    if values["optimizer.temperature"] is not None:
        temperature = (values["optimizer.temperature"], values["optimizer.decay"])
    optimizer = OptimizerConfig(
        init=values["optimizer.init"],
        seed=values["run.seed"],
        max_sweeps=values["optimizer.max_sweeps"],
        pour_moves_per_sweep=values["optimizer.pour_moves_per_sweep"],
        radius_range=(values["optimizer.radius_min"] * h, values["optimizer.radius_max"] * h),
        temperature=temperature,
        restarts=values["optimizer.restarts"],
        restart_init=values["optimizer.restart_init"],
        clean_min_volume=values["optimizer.clean_min_volume"],
    )
    scaled = {key: values[key] * h if values[key] is not None else None
              for key in ("diagnostics.condition_b_radius", "diagnostics.junction_radius")}
    diagnostics = DiagnosticsConfig(
        ahlfors=values["diagnostics.ahlfors"],
        condition_b=values["diagnostics.condition_b"],
        isoperimetry=values["diagnostics.isoperimetry"],
        junctions=values["diagnostics.junctions"],
        margin=values["diagnostics.margin"],
        scales=_scaled(values["diagnostics.scales"], h),
        condition_b_radius=scaled["diagnostics.condition_b_radius"],
        max_samples=values["diagnostics.max_samples"],
        v0=values["diagnostics.v0"],
        junction_radius=scaled["diagnostics.junction_radius"],
        length=values["diagnostics.length"],
    )

    config = RunConfig(
        grid=grid,
        n_labels=values["partition.n_labels"],
        weight_source=values["weight.source"],
        weight_spec=weight_spec,
        weight_field=values["weight.field"],
        potential=values["weight.potential"],
        solver_tol=values["weight.tol"],
        solver_max_iter=values["weight.max_iter"],
        bulk_kind=values["bulk.kind"],
        bulk_lambda=values["bulk.lambda"],
        bulk_targets=values["bulk.targets"],
        bulk_alpha=values["bulk.alpha"],
        bulk_c_alpha=values["bulk.c_alpha"],
        h_table=read_h_table(values["bulk.h_table"]) if values["bulk.h_table"] is not None else None,
        q_weight=values["bulk.q_weight"],
        label_weights=values["energy.label_weights"],
        stencil=values["energy.stencil"],
        optimizer=optimizer,
        diagnostics=diagnostics,
        budget=OracleBudget(values["oracle.max_assignments"]),
        verify=values["oracle.verify"],
        out=values["run.out"],
        seed=values["run.seed"],
        export_pgm=values["run.export_pgm"],
        processes=_processes(),
    )
    for key, given in (("bulk.targets", config.bulk_targets), ("energy.label_weights", config.label_weights)):
        if given is not None and len(given) != config.n_labels:
            raise PreconditionError(f"{key} has {len(given)} entries for {config.n_labels} labels")
    # the energy spec is only complete once the landscape is known; validate it with a stand-in q
    stand_in = constant_field(grid, 1.0) if config.q_weight == _LANDSCAPE else None
    config.energy_spec(stand_in)
    return config


def load_config(path: str, overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """Reads and validates a config file. Relative file references are resolved against its directory.

    Args:
        path (str): config file
        overrides (Dict[str, object], optional): typed values replacing file values, e.g. {"run.seed": 3}

    Returns:
        RunConfig: validated configuration
    """
    parsed = parse_config_lines(path_to_lines(path), path)
    base_dir = os.path.dirname(os.path.abspath(path))
    config = build_run_config(parsed, base_dir, overrides)
    logger.info(f"Loaded config {path}: {config.grid.nx}x{config.grid.ny} grid, N={config.n_labels}")
    return config

