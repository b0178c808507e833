"""Run configuration: strict JSON schema with unit-suffixed keys.

Every physical quantity carries an explicit unit in its key name (_hz,
_m, _deg, _v_per_m, or _wavelengths for lengths relative to the RF
carrier). Frequencies named _hz are ordinary frequencies and are scaled
by 2*pi into angular rates internally. Unknown keys are rejected with
their dotted path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigParseError, RydbergDoaError
from .estimation import FIXED_ORDER, SV_THRESHOLD, PronyConfig
from .experiments import SWEEP_AXES, ScenarioConfig, SweepSpec
from .physics import AtomicParams, PlaneWave, RfScene
from .sensing import SensorGeometry

SWEEP_KINDS = ("rmse", "linearization_check", "crlb_length", "sampling_demo")

DEFAULT_KIND_BY_AXIS = {
    "lo_ratio": "rmse",
    "snr_db": "rmse",
    "cell_length": "crlb_length",
    "sampling_interval": "sampling_demo",
    "window_width": "sampling_demo",
}

KINDS_BY_AXIS = {
    "lo_ratio": ("rmse", "linearization_check"),
    "snr_db": ("rmse",),
    "cell_length": ("crlb_length",),
    "sampling_interval": ("sampling_demo",),
    "window_width": ("sampling_demo",),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run settings plus the raw document for manifests."""

    scenario: ScenarioConfig
    sweep_kind: str | None
    output_dir: str
    output_format: str
    verbosity: int
    echo: dict
    absorption_model: str = "exact"


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigParseError(f"missing required key '{path}{key}'")
    return mapping[key]


def _check_keys(mapping, allowed: set[str], path: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigParseError(f"'{path.rstrip('.') or 'config'}' must be "
                               "an object")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigParseError(
            f"unknown key '{path}{unknown[0]}' (allowed: "
            f"{', '.join(sorted(allowed))})")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigParseError(f"'{path}' must be a number")
    if not math.isfinite(value):
        raise ConfigParseError(f"'{path}' must be finite")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigParseError(f"'{path}' must be an integer")
    return value


def _parse_wave(doc: dict, path: str, amplitude: float) -> PlaneWave:
    try:
        return PlaneWave(
            amplitude=amplitude,
            phase=np.deg2rad(_number(doc.get("phase_deg", 0.0),
                                     path + "phase_deg")),
            angle=np.deg2rad(_number(_require(doc, "angle_deg", path),
                                     path + "angle_deg")))
    except ValueError as exc:
        raise ConfigParseError(f"'{path.rstrip('.')}': {exc}") from exc


def _parse_scene(doc: dict) -> RfScene:
    _check_keys(doc, {"carrier_freq_hz", "lo", "signals"}, "scene.")
    carrier = _number(_require(doc, "carrier_freq_hz", "scene."),
                      "scene.carrier_freq_hz")
    lo_doc = _require(doc, "lo", "scene.")
    _check_keys(lo_doc, {"amplitude_v_per_m", "ratio_to_signals",
                         "phase_deg", "angle_deg"}, "scene.lo.")
    signal_docs = doc.get("signals", [])
    if not isinstance(signal_docs, list):
        raise ConfigParseError("'scene.signals' must be a list")
    signals = []
    for i, sig in enumerate(signal_docs):
        sig_path = f"scene.signals[{i}]."
        _check_keys(sig, {"amplitude_v_per_m", "phase_deg", "angle_deg"},
                    sig_path)
        amp = _number(_require(sig, "amplitude_v_per_m", sig_path),
                      sig_path + "amplitude_v_per_m")
        signals.append(_parse_wave(sig, sig_path, amp))
    if "amplitude_v_per_m" in lo_doc and "ratio_to_signals" in lo_doc:
        raise ConfigParseError(
            "'scene.lo' must set exactly one of amplitude_v_per_m and "
            "ratio_to_signals")
    if "amplitude_v_per_m" in lo_doc:
        lo_amp = _number(lo_doc["amplitude_v_per_m"],
                         "scene.lo.amplitude_v_per_m")
    elif "ratio_to_signals" in lo_doc:
        total = sum(s.amplitude for s in signals)
        if total == 0:
            raise ConfigParseError(
                "'scene.lo.ratio_to_signals' needs at least one signal "
                "with nonzero amplitude")
        lo_amp = _number(lo_doc["ratio_to_signals"],
                         "scene.lo.ratio_to_signals") * total
    else:
        raise ConfigParseError(
            "missing required key 'scene.lo.amplitude_v_per_m' (or "
            "'scene.lo.ratio_to_signals')")
    lo = _parse_wave(lo_doc, "scene.lo.", lo_amp)
    try:
        return RfScene(lo=lo, signals=tuple(signals), carrier_freq=carrier)
    except ValueError as exc:
        raise ConfigParseError(f"'scene': {exc}") from exc


_ATOM_KEYS = {
    "atom_density_per_m3": ("atom_density", 1.0),
    "probe_dipole_c_m": ("probe_dipole", 1.0),
    "rf_dipole_c_m": ("rf_dipole", 1.0),
    "decay_21_hz": ("decay_21", 2 * np.pi),
    "coupling_rabi_hz": ("coupling_rabi", 2 * np.pi),
    "probe_detuning_hz": ("probe_detuning", 2 * np.pi),
    "coupling_detuning_hz": ("coupling_detuning", 2 * np.pi),
    "rf_detuning_hz": ("rf_detuning", 2 * np.pi),
    "probe_wavelength_m": ("probe_wavelength", 1.0),
}


def _parse_atoms(doc: dict) -> AtomicParams:
    _check_keys(doc, set(_ATOM_KEYS), "atoms.")
    overrides = {}
    for key, (fieldname, scale) in _ATOM_KEYS.items():
        if key in doc:
            overrides[fieldname] = scale * _number(doc[key], f"atoms.{key}")
    try:
        return AtomicParams(**overrides)
    except (ValueError, RydbergDoaError) as exc:
        raise ConfigParseError(f"'atoms': {exc}") from exc


def _length(doc: dict, stem: str, rf_wavelength: float, path: str,
            default: float | None = None) -> float:
    key_m, key_wl = stem + "_m", stem + "_wavelengths"
    if key_m in doc and key_wl in doc:
        raise ConfigParseError(
            f"'{path}{stem}' must be given in exactly one unit")
    if key_m in doc:
        return _number(doc[key_m], path + key_m)
    if key_wl in doc:
        return _number(doc[key_wl], path + key_wl) * rf_wavelength
    if default is None:
        raise ConfigParseError(f"missing required key '{path}{key_m}' "
                               f"(or '{path}{key_wl}')")
    return default


def _parse_geometry(doc: dict, rf_wavelength: float) -> SensorGeometry:
    allowed = {"cell_length_m", "cell_length_wavelengths",
               "window_width_m", "window_width_wavelengths",
               "spacing_m", "spacing_wavelengths",
               "first_center_m", "channel_count",
               "grid_points_per_rf_wavelength"}
    _check_keys(doc, allowed, "geometry.")
    cell = _length(doc, "cell_length", rf_wavelength, "geometry.")
    width = _length(doc, "window_width", rf_wavelength, "geometry.",
                    default=rf_wavelength / 4)
    spacing = _length(doc, "spacing", rf_wavelength, "geometry.",
                      default=rf_wavelength / 4)
    grid = doc.get("grid_points_per_rf_wavelength", 256)
    grid = _integer(grid, "geometry.grid_points_per_rf_wavelength")
    try:
        if "first_center_m" in doc or "channel_count" in doc:
            first = _number(doc.get("first_center_m", width / 2),
                            "geometry.first_center_m")
            if "channel_count" in doc:
                count = _integer(doc["channel_count"],
                                 "geometry.channel_count")
            else:
                count = int(np.floor((cell - first - width / 2)
                                     / spacing + 1e-9)) + 1
            return SensorGeometry(cell_length=cell, window_width=width,
                                  first_center=first, spacing=spacing,
                                  channel_count=count,
                                  grid_points_per_rf_wavelength=grid)
        return SensorGeometry.from_cell(cell, width, spacing,
                                        grid_points_per_rf_wavelength=grid)
    except ValueError as exc:
        raise ConfigParseError(f"'geometry': {exc}") from exc


def _parse_prony(doc: dict, n_signals: int) -> PronyConfig:
    allowed = {"model_order", "target_count", "unit_circle_tolerance",
               "order_selection", "sv_threshold"}
    _check_keys(doc, allowed, "prony.")
    selection = doc.get("order_selection", FIXED_ORDER)
    if selection not in (FIXED_ORDER, SV_THRESHOLD):
        raise ConfigParseError(
            f"'prony.order_selection' must be '{FIXED_ORDER}' or "
            f"'{SV_THRESHOLD}'")
    target = doc.get("target_count", n_signals if n_signals else None)
    if target is not None:
        target = _integer(target, "prony.target_count")
    if selection == FIXED_ORDER and target is None:
        raise ConfigParseError(
            "missing required key 'prony.target_count' (no scene signals "
            "to infer it from)")
    order = doc.get("model_order")
    if order is None:
        order = 2 * target if target else 2
    else:
        order = _integer(order, "prony.model_order")
    try:
        return PronyConfig(
            model_order=order,
            target_count=target,
            unit_circle_tolerance=_number(
                doc.get("unit_circle_tolerance", 0.2),
                "prony.unit_circle_tolerance"),
            order_selection=selection,
            sv_threshold=_number(doc.get("sv_threshold", 1e-3),
                                 "prony.sv_threshold"))
    except ValueError as exc:
        raise ConfigParseError(f"'prony': {exc}") from exc


def _parse_sweep(doc: dict) -> tuple[SweepSpec, str]:
    _check_keys(doc, {"axis", "values", "kind"}, "sweep.")
    axis = _require(doc, "axis", "sweep.")
    if axis not in SWEEP_AXES:
        raise ConfigParseError(
            f"'sweep.axis' must be one of {', '.join(SWEEP_AXES)}")
    values = _require(doc, "values", "sweep.")
    if not isinstance(values, list) or not values:
        raise ConfigParseError("'sweep.values' must be a nonempty list")
    values = tuple(_number(v, f"sweep.values[{i}]")
                   for i, v in enumerate(values))
    kind = doc.get("kind", DEFAULT_KIND_BY_AXIS[axis])
    if kind not in SWEEP_KINDS:
        raise ConfigParseError(
            f"'sweep.kind' must be one of {', '.join(SWEEP_KINDS)}")
    if kind not in KINDS_BY_AXIS[axis]:
        raise ConfigParseError(
            f"'sweep.kind' {kind!r} does not apply to axis {axis!r} "
            f"(allowed: {', '.join(KINDS_BY_AXIS[axis])})")
    return SweepSpec(axis=axis, values=values), kind


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigParseError("top-level config must be an object")
    _check_keys(doc, {"scene", "atoms", "geometry", "prony", "noise",
                      "run", "sweep"}, "")
    scene = _parse_scene(_require(doc, "scene", ""))
    params = _parse_atoms(doc.get("atoms", {}))
    geometry = _parse_geometry(_require(doc, "geometry", ""),
                               scene.rf_wavelength)
    prony = _parse_prony(doc.get("prony", {}), scene.n_signals)

    noise_doc = doc.get("noise", {})
    _check_keys(noise_doc, {"snr_db"}, "noise.")
    snr_db = noise_doc.get("snr_db")
    if snr_db is not None:
        snr_db = _number(snr_db, "noise.snr_db")

    run_doc = doc.get("run", {})
    _check_keys(run_doc, {"trials", "base_seed", "output_dir", "format",
                          "verbosity", "absorption_model"}, "run.")
    trials = _integer(run_doc.get("trials", 100), "run.trials")
    base_seed = _integer(run_doc.get("base_seed", 0), "run.base_seed")
    fmt = run_doc.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigParseError("'run.format' must be 'csv' or 'json'")
    verbosity = _integer(run_doc.get("verbosity", 1), "run.verbosity")
    output_dir = run_doc.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigParseError("'run.output_dir' must be a nonempty string")
    absorption_model = run_doc.get("absorption_model", "exact")
    if absorption_model not in ("exact", "linearized"):
        raise ConfigParseError(
            "'run.absorption_model' must be 'exact' or 'linearized'")

    sweep, kind = (None, None)
    if "sweep" in doc:
        sweep, kind = _parse_sweep(doc["sweep"])

    try:
        scenario = ScenarioConfig(
            scene=scene, geometry=geometry, prony=prony, params=params,
            snr_db=snr_db, trials=trials, base_seed=base_seed, sweep=sweep)
    except ValueError as exc:
        raise ConfigParseError(str(exc)) from exc
    return RunConfig(scenario=scenario, sweep_kind=kind,
                     output_dir=output_dir,
                     output_format=fmt, verbosity=verbosity, echo=doc,
                     absorption_model=absorption_model)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"{path}: invalid JSON at line {exc.lineno}, column "
            f"{exc.colno}: {exc.msg}") from exc
    return parse_config(doc)
