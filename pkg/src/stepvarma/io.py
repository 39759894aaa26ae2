"""JSON and CSV serialization for models, partitions, data and fit reports.

SpaceTimeData travels as CSV: a ``t`` column plus one column per site whose
header encodes the coordinates (components joined by ``;``). Floats are
written with ``repr``, so values round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import (
    ArmaSpec,
    AxiallySymmetric,
    AxialStructure,
    DenseCorrelation,
    DenseStructure,
    DiagonalVarmaModel,
    FixedStructure,
    InnovationModel,
    IsotropicMatern,
    MaternStructure,
    ModelSkeleton,
    ParameterPartition,
    PartitionStep,
    SpaceTimeData,
)

__all__ = [
    "DataFormatError",
    "model_to_dict",
    "model_from_dict",
    "skeleton_to_dict",
    "skeleton_from_dict",
    "partition_to_dict",
    "partition_from_dict",
    "save_json",
    "load_json",
    "write_data_csv",
    "read_data_csv",
]


class DataFormatError(ValueError):
    """Malformed input file; the message names the offending row or field."""


# ---------------------------------------------------------------------------
# JSON documents.
# ---------------------------------------------------------------------------


def _innovation_to_dict(inn: InnovationModel) -> dict:
    if isinstance(inn, IsotropicMatern):
        return {"type": "isotropic_matern", "alpha": inn.alpha, "kappa": inn.kappa}
    if isinstance(inn, AxiallySymmetric):
        return {
            "type": "axially_symmetric",
            "alpha_m": list(inn.alpha_m),
            "kappa_m": list(inn.kappa_m),
            "xi": inn.xi,
            "tau": inn.tau,
            "n_lon": inn.n_lon,
            "latitudes": list(inn.latitudes),
        }
    if isinstance(inn, DenseCorrelation):
        return {"type": "dense_correlation", "R": inn.R.tolist()}
    raise TypeError(f"unknown innovation model {type(inn).__name__}")


def _innovation_from_dict(d: dict) -> InnovationModel:
    kind = d.get("type")
    if kind == "isotropic_matern":
        return IsotropicMatern(alpha=float(d["alpha"]), kappa=float(d["kappa"]))
    if kind == "axially_symmetric":
        return AxiallySymmetric(
            alpha_m=tuple(d["alpha_m"]),
            kappa_m=tuple(d["kappa_m"]),
            xi=float(d["xi"]),
            tau=float(d["tau"]),
            n_lon=int(d["n_lon"]),
            latitudes=tuple(d["latitudes"]),
        )
    if kind == "dense_correlation":
        return DenseCorrelation(R=np.asarray(d["R"], dtype=float))
    raise DataFormatError(f"unknown innovation type {kind!r}")


def model_to_dict(model: DiagonalVarmaModel) -> dict:
    return {
        "sites": [list(s) for s in model.sites],
        "arma": [
            {
                "p": sp.p,
                "q": sp.q,
                "mu": sp.mu,
                "beta1": sp.beta1,
                "sigma": sp.sigma,
                "phi": list(sp.phi),
                "pi_ma": list(sp.pi_ma),
            }
            for sp in model.arma
        ],
        "innovation": _innovation_to_dict(model.innovation),
    }


def model_from_dict(d: dict) -> DiagonalVarmaModel:
    try:
        arma = tuple(
            ArmaSpec(
                p=int(a["p"]),
                q=int(a["q"]),
                mu=float(a.get("mu", 0.0)),
                beta1=float(a.get("beta1", 0.0)),
                sigma=float(a["sigma"]),
                phi=tuple(a.get("phi", ())),
                pi_ma=tuple(a.get("pi_ma", ())),
            )
            for a in d["arma"]
        )
        return DiagonalVarmaModel(
            sites=tuple(tuple(s) for s in d["sites"]),
            arma=arma,
            innovation=_innovation_from_dict(d["innovation"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad model document: {exc}") from exc


def skeleton_to_dict(skeleton: ModelSkeleton) -> dict:
    inn = skeleton.innovation
    if isinstance(inn, MaternStructure):
        inn_d: dict = {"type": "isotropic_matern"}
    elif isinstance(inn, AxialStructure):
        inn_d = {
            "type": "axially_symmetric",
            "n_lon": inn.n_lon,
            "latitudes": list(inn.latitudes),
        }
    elif isinstance(inn, DenseStructure):
        inn_d = {"type": "dense"}
    else:
        inn_d = {"type": "fixed", "R": None if inn.R is None else inn.R.tolist()}
    return {
        "sites": [list(s) for s in skeleton.sites],
        "p": list(skeleton.p),
        "q": list(skeleton.q),
        "mean_structure": skeleton.mean_structure,
        "innovation": inn_d,
    }


def skeleton_from_dict(d: dict, sites=None) -> ModelSkeleton:
    """Parse a model-skeleton document; ``sites`` (e.g. from a data CSV) may
    stand in when the document omits them."""
    try:
        doc_sites = d.get("sites", None)
        if doc_sites is None:
            if sites is None:
                raise DataFormatError("skeleton document has no sites and none were supplied")
            doc_sites = sites
        inn_d = d.get("innovation", {"type": "isotropic_matern"})
        kind = inn_d.get("type")
        if kind == "isotropic_matern":
            inn: object = MaternStructure()
        elif kind == "axially_symmetric":
            inn = AxialStructure(
                n_lon=int(inn_d["n_lon"]), latitudes=tuple(inn_d["latitudes"])
            )
        elif kind == "dense":
            inn = DenseStructure()
        elif kind == "fixed":
            r = inn_d.get("R")
            inn = FixedStructure(R=None if r is None else np.asarray(r, dtype=float))
        else:
            raise DataFormatError(f"unknown innovation type {kind!r}")
        p = d["p"]
        q = d["q"]
        return ModelSkeleton(
            sites=tuple(tuple(s) for s in doc_sites),
            p=p if isinstance(p, int) else tuple(int(v) for v in p),
            q=q if isinstance(q, int) else tuple(int(v) for v in q),
            mean_structure=d.get("mean_structure", "constant"),
            innovation=inn,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(f"bad skeleton document: {exc}") from exc


def partition_to_dict(part: ParameterPartition) -> dict:
    return {
        "steps": [
            {
                "theta": list(st.theta),
                "eta": list(st.eta),
                "data_subset": st.data_subset,
                "stage": st.stage,
            }
            for st in part.steps
        ]
    }


def partition_from_dict(d: dict) -> ParameterPartition:
    try:
        return ParameterPartition(
            steps=tuple(
                PartitionStep(
                    theta=tuple(st["theta"]),
                    eta=tuple(st.get("eta", ())),
                    data_subset=st["data_subset"],
                    stage=int(st["stage"]),
                )
                for st in d["steps"]
            )
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad partition document: {exc}") from exc


def save_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc


# ---------------------------------------------------------------------------
# SpaceTimeData CSV.
# ---------------------------------------------------------------------------


def _site_header(site: tuple[float, ...]) -> str:
    return ";".join(repr(c) for c in site)


def _parse_site_header(text: str, col: int) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(";"))
    except ValueError as exc:
        raise DataFormatError(f"header column {col}: bad site coordinates {text!r}") from exc


def write_data_csv(data: SpaceTimeData, path, values=None) -> None:
    """Write the data matrix (or a same-shape override, e.g. recorded
    innovations) with the site-coordinate header."""
    mat = data.values if values is None else np.asarray(values)
    if mat.shape != data.values.shape:
        raise ValueError("override matrix must match the data shape")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [_site_header(s) for s in data.sites])
        for i, t in enumerate(data.times):
            writer.writerow([int(t)] + [repr(float(v)) for v in mat[i]])


def read_data_csv(path) -> SpaceTimeData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if not header or header[0].strip() != "t":
            raise DataFormatError(f"{path}: first header column must be 't'")
        sites = tuple(_parse_site_header(h, i + 1) for i, h in enumerate(header[1:]))
        if not sites:
            raise DataFormatError(f"{path}: no site columns")
        rows: list[list[float]] = []
        t_values: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(sites) + 1:
                raise DataFormatError(
                    f"{path}: row {lineno} has {len(row)} fields, expected {len(sites) + 1}"
                )
            try:
                t_values.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}: row {lineno}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    t0 = t_values[0]
    if t_values != list(range(t0, t0 + len(rows))):
        raise DataFormatError(f"{path}: t column must be consecutive integers")
    return SpaceTimeData(values=np.array(rows), sites=sites, t0=t0)
