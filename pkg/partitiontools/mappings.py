"""
Config file schema: every accepted key with its dtype and default, and the valid ranges
checked before any run starts. Lengths marked "in units of h" are multiplied by grid.h
when the RunConfig is built.
"""
from typing import Tuple

_TRUE = ("true", "yes", "1", "on")
_FALSE = ("false", "no", "0", "off")


def _bool(value: str) -> bool:
    if value.lower() in _TRUE:
        return True
    if value.lower() in _FALSE:
        return False
    raise ValueError(f"not a boolean: {value}")


def _float_list(value: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in value.split(",") if v.strip())


def _text(value: str) -> str:
    if not value:
        raise ValueError("empty value")
    return value


config_mapping = {
    # grid
    "grid.nx": {"dtype": int, "default": None},
    "grid.ny": {"dtype": int, "default": None},
    "grid.h": {"dtype": float, "default": None},
    "grid.mask": {"dtype": _text, "default": None, "path": True},
    # interface weight
    "weight.source": {"dtype": _text, "default": "landscape", "choices": ("field", "landscape")},
    "weight.field": {"dtype": _text, "default": None, "path": True},
    "weight.potential": {"dtype": _text, "default": None, "path": True},
    "weight.delta": {"dtype": float, "default": 0.01},
    "weight.cap": {"dtype": float, "default": 1.0},
    "weight.beta": {"dtype": float, "default": None},
    "weight.c_beta": {"dtype": float, "default": None},
    "weight.tol": {"dtype": float, "default": 1e-8},
    "weight.max_iter": {"dtype": int, "default": None},
    # energy
    "partition.n_labels": {"dtype": int, "default": 2},
    "bulk.kind": {"dtype": _text, "default": "volume_quadratic",
                  "choices": ("volume_quadratic", "volume_generic_h", "weighted_volume")},
    "bulk.lambda": {"dtype": float, "default": 0.0},
    "bulk.targets": {"dtype": _float_list, "default": None},
    "bulk.alpha": {"dtype": float, "default": 1.0},
    "bulk.c_alpha": {"dtype": float, "default": None},
    "bulk.h_table": {"dtype": _text, "default": None, "path": True},
    # a field file, or "landscape" for the computed w
    "bulk.q_weight": {"dtype": _text, "default": None, "path": True},
    "energy.label_weights": {"dtype": _float_list, "default": None},
    "energy.stencil": {"dtype": _text, "default": "axis", "choices": ("axis", "crofton8")},
    # optimizer, radii in units of h
    "optimizer.init": {"dtype": _text, "default": "stripes",
                       "choices": ("voronoi_seeds", "random", "stripes", "watershed_minus_w", "sectors")},
    "optimizer.restart_init": {"dtype": _text, "default": "voronoi_seeds",
                               "choices": ("voronoi_seeds", "random", "stripes", "watershed_minus_w", "sectors")},
    "optimizer.max_sweeps": {"dtype": int, "default": 200},
    "optimizer.pour_moves_per_sweep": {"dtype": int, "default": 20},
    "optimizer.radius_min": {"dtype": float, "default": 1.0},
    "optimizer.radius_max": {"dtype": float, "default": 3.0},
    "optimizer.temperature": {"dtype": float, "default": None},
    "optimizer.decay": {"dtype": float, "default": 0.95},
    "optimizer.restarts": {"dtype": int, "default": 1},
    "optimizer.clean_min_volume": {"dtype": float, "default": None},
    # diagnostics, scales and radii in units of h
    "diagnostics.ahlfors": {"dtype": _bool, "default": True},
    "diagnostics.condition_b": {"dtype": _bool, "default": True},
    "diagnostics.isoperimetry": {"dtype": _bool, "default": True},
    "diagnostics.junctions": {"dtype": _bool, "default": True},
    "diagnostics.margin": {"dtype": float, "default": None},
    "diagnostics.scales": {"dtype": _float_list, "default": None},
    "diagnostics.condition_b_radius": {"dtype": float, "default": None},
    "diagnostics.max_samples": {"dtype": int, "default": 2000},
    "diagnostics.v0": {"dtype": float, "default": None},
    "diagnostics.junction_radius": {"dtype": float, "default": None},
    "diagnostics.length": {"dtype": _text, "default": "faces", "choices": ("faces", "crofton")},
    # oracle
    "oracle.max_assignments": {"dtype": int, "default": 10 ** 8},
    "oracle.verify": {"dtype": _text, "default": None, "path": True},
    # run
    "run.seed": {"dtype": int, "default": 0},
    "run.out": {"dtype": _text, "default": "."},
    "run.export_pgm": {"dtype": _bool, "default": False},
}

VALID_RANGES = {
    "grid.nx": {"min": 1, "max": 1 << 16},
    "grid.ny": {"min": 1, "max": 1 << 16},
    "grid.h": {"min": 1e-12, "max": 1e12},
    "weight.delta": {"min": 1e-300, "max": 1e300},
    "weight.cap": {"min": 1e-300, "max": 1e300},
    "weight.beta": {"min": 1e-12, "max": 1.0},
    "weight.c_beta": {"min": 0.0, "max": 1e300},
    "weight.tol": {"min": 1e-300, "max": 1.0},
    "weight.max_iter": {"min": 1, "max": 1 << 40},
    "partition.n_labels": {"min": 1, "max": 1 << 16},
    "bulk.lambda": {"min": 0.0, "max": 1e300},
    "bulk.alpha": {"min": 0.5, "max": 1.0},
    "bulk.c_alpha": {"min": 0.0, "max": 1e300},
    "optimizer.max_sweeps": {"min": 1, "max": 1 << 31},
    "optimizer.pour_moves_per_sweep": {"min": 0, "max": 1 << 31},
    "optimizer.radius_min": {"min": 1.0, "max": 1e12},
    "optimizer.radius_max": {"min": 1.0, "max": 1e12},
    "optimizer.temperature": {"min": 1e-300, "max": 1e300},
    "optimizer.decay": {"min": 1e-12, "max": 1.0 - 1e-12},
    "optimizer.restarts": {"min": 1, "max": 1 << 16},
    "optimizer.clean_min_volume": {"min": 0.0, "max": 1e300},
    "diagnostics.margin": {"min": 0.0, "max": 1e12},
    "diagnostics.condition_b_radius": {"min": 2.0, "max": 1e12},
    "diagnostics.max_samples": {"min": 1, "max": 1 << 31},
    "diagnostics.v0": {"min": 0.0, "max": 1e300},
    "diagnostics.junction_radius": {"min": 1.0, "max": 1e12},
    "oracle.max_assignments": {"min": 1, "max": 1 << 62},
    "run.seed": {"min": 0, "max": (1 << 64) - 1},
}
