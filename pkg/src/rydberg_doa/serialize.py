"""File formats: CSV/JSON writers for profiles, measurements, estimation
results, bound reports, and sweep outputs. All writes are atomic
(write-then-rename) and floats carry 17 significant digits so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .crlb import CrlbReport
from .errors import SchemaError
from .estimation import EstimationResult
from .experiments import LinearizationCheck, SamplingDemoResult, SweepResult
from .sensing import FluorescenceProfile, MeasurementVector, SensorGeometry


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_fluorescence_csv(profile: FluorescenceProfile,
                           path: str | Path) -> None:
    rows = ((_fmt(x), _fmt(p), _fmt(f)) for x, p, f in
            zip(profile.positions, profile.probe_power, profile.fluorescence))
    atomic_write_text(path, _csv_text(["x_m", "probe_power", "fluorescence"],
                                      rows))


def write_measurement_csv(measurement: MeasurementVector,
                          path: str | Path) -> None:
    centers = measurement.geometry.centers
    rows = ((str(j + 1), _fmt(x), _fmt(v)) for j, (x, v) in
            enumerate(zip(centers, measurement.values)))
    atomic_write_text(path, _csv_text(["j", "x_j_m", "y_tilde"], rows))


def read_measurement_csv(path: str | Path
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Parse a measurement CSV back into (window centers, values)."""
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["j", "x_j_m", "y_tilde"]:
            raise SchemaError(f"{path}: expected header j,x_j_m,y_tilde")
        centers, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SchemaError(f"{path}: row {lineno} has {len(row)} "
                                  "fields, expected 3")
            try:
                centers.append(float(row[1]))
                values.append(float(row[2]))
            except ValueError as exc:
                raise SchemaError(f"{path}: row {lineno}: {exc}") from None
    if len(values) < 2:
        raise SchemaError(f"{path}: need at least two channels")
    return np.array(centers), np.array(values)


def geometry_from_centers(centers: np.ndarray) -> SensorGeometry:
    """Minimal geometry consistent with a list of window centers.

    Estimation needs only the pitch; the window width is nominal, chosen
    so the supports stay inside the reconstructed cell.
    """
    centers = np.asarray(centers, dtype=float)
    diffs = np.diff(centers)
    spacing = float(diffs.mean())
    if spacing <= 0 or not np.allclose(diffs, spacing,
                                       rtol=1e-6, atol=1e-12 * abs(spacing)):
        raise SchemaError("window centers must be uniformly increasing")
    width = min(spacing, 2 * centers[0]) if centers[0] > 0 else spacing / 2
    first = centers[0] if centers[0] > 0 else width / 2
    return SensorGeometry(
        cell_length=float(centers[-1]) + width / 2,
        window_width=width, first_center=float(first), spacing=spacing,
        channel_count=len(centers))


def estimation_to_dict(result: EstimationResult) -> dict:
    return {
        "spatial_frequencies_rad_per_m": [float(v) for v in
                                          result.spatial_frequencies],
        "doas_rad": [float(v) for v in result.doas],
        "doas_deg": [float(np.rad2deg(v)) for v in result.doas],
        "roots": [[float(z.real), float(z.imag)] for z in result.roots],
        "lpc_coefficients": [float(v) for v in result.lpc_coefficients],
        "lpc_residual_norm": float(result.lpc_residual_norm),
        "clamped_flags": [bool(v) for v in result.clamped_flags],
        "rank_deficient": bool(result.rank_deficient),
    }


def write_estimation_json(result: EstimationResult,
                          path: str | Path) -> None:
    atomic_write_text(path, json.dumps(estimation_to_dict(result),
                                       indent=2) + "\n")


def _matrix_to_dict(matrix: np.ndarray) -> dict:
    matrix = np.asarray(matrix, dtype=float)
    return {"rows": matrix.shape[0], "cols": matrix.shape[1],
            "data_row_major": [float(v) for v in matrix.ravel()]}


def crlb_to_dict(report: CrlbReport) -> dict:
    return {
        "fim": _matrix_to_dict(report.fim),
        "effective_fim_dk": _matrix_to_dict(report.effective_fim_dk),
        "crlb_theta": _matrix_to_dict(report.crlb_theta),
        "per_target_std_rad": [float(v) for v in report.per_target_std],
        "per_target_std_deg": [float(np.rad2deg(v)) for v in
                               report.per_target_std],
        "condition_number": float(report.condition_number),
    }


def write_crlb_json(report: CrlbReport, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(crlb_to_dict(report), indent=2) + "\n")


def write_crlb_csv(report: CrlbReport, thetas_rad: np.ndarray,
                   path: str | Path) -> None:
    rows = ((str(i + 1), _fmt(np.rad2deg(t)), _fmt(np.rad2deg(s)))
            for i, (t, s) in enumerate(zip(thetas_rad,
                                           report.per_target_std)))
    atomic_write_text(path, _csv_text(
        ["target", "theta_deg", "crlb_std_deg"], rows))


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    rows = []
    bounds = result.crlb_std_rad or (None,) * len(result.values)
    for value, rmse, bound, fails in zip(result.values, result.rmse_rad,
                                         bounds, result.failures):
        rmse_txt = "" if np.isnan(rmse) else _fmt(np.rad2deg(rmse))
        bound_txt = "" if bound is None else _fmt(np.rad2deg(bound))
        rows.append((_fmt(value), rmse_txt, bound_txt,
                     str(result.trials), str(fails)))
    atomic_write_text(path, _csv_text(
        ["axis_value", "rmse_deg", "crlb_deg", "trials", "failures"], rows))


def write_linearization_csv(check: LinearizationCheck,
                            path: str | Path) -> None:
    rows = ((_fmt(x), _fmt(ew), _fmt(lw), _fmt(es), _fmt(ls))
            for x, ew, lw, es, ls in zip(
                check.positions, check.exact_weak, check.linear_weak,
                check.exact_strong, check.linear_strong))
    atomic_write_text(path, _csv_text(
        ["x_m", "alpha_exact_weak", "alpha_lin_weak",
         "alpha_exact_strong", "alpha_lin_strong"], rows))


def write_sampling_demo_csv(result: SamplingDemoResult,
                            path: str | Path) -> None:
    header = ["angle_deg"] + [f"power_{c.label}" for c in result.curves]
    columns = [c.power for c in result.curves]
    rows = ([_fmt(a)] + [_fmt(col[i]) for col in columns]
            for i, a in enumerate(result.angles_deg))
    atomic_write_text(path, _csv_text(header, rows))


def write_manifest_json(payload: dict, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True)
                      + "\n")
