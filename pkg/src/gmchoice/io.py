"""Flat-file formats used by the command line.

* dataset CSV: ``t,assortment,choice`` with ``;``-separated 1-based ids
  and choice ``0`` for no purchase;
* features CSV: ``id,f1..fd`` with one row per state, including id 0;
* prices CSV: ``id,price`` for products ``1..n``;
* parameters JSON: ``model``, ``n``, ``d``, ``beta``, ``alpha`` and
  optionally ``U``, ``V``, ``lambda`` (low rank) or ``v`` (explicit
  attractions over states ``0..n``).

Floats in CSV files are written with 17 significant digits; JSON uses the
shortest repr that round-trips.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from gmchoice.estimation import ChoiceDataset, GmnlParams
from gmchoice.gmnl import GmnlModel
from gmchoice.lowrank import LowRankModel

MODELS = ("mnl", "gmnl", "lowrank")


class DataFormatError(ValueError):
    """Malformed input file; the message carries the file and line number."""


def fmt(x: float) -> str:
    return "%.17g" % x


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows(path, header: list[str]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [h.strip() for h in first[: len(header)]] != header:
            raise DataFormatError(f"{path}: line 1: expected header starting with {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            yield reader.line_num, first, row


def _ids(text: str, path, line: int) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(";")]
    except ValueError:
        raise DataFormatError(f"{path}: line {line}: bad id list {text!r}") from None


def read_dataset_csv(path, n: int | None = None, features=None, drop_multi_click: bool = False) -> ChoiceDataset:
    """Parse a dataset file.

    ``n`` defaults to the number of feature rows minus one, or else the
    largest id seen. A choice field listing several ids is a multi-click
    record; it is rejected unless ``drop_multi_click`` is set.
    """
    records = []
    for line, _, row in _rows(path, ["t", "assortment", "choice"]):
        if len(row) != 3:
            raise DataFormatError(f"{path}: line {line}: expected 3 fields, got {len(row)}")
        S = _ids(row[1], path, line)
        if not S:
            raise DataFormatError(f"{path}: line {line}: empty assortment")
        if len(set(S)) != len(S):
            raise DataFormatError(f"{path}: line {line}: repeated product in assortment")
        clicks = _ids(row[2], path, line)
        if len(clicks) != 1:
            if drop_multi_click:
                continue
            raise DataFormatError(f"{path}: line {line}: expected one choice, got {len(clicks)}")
        j = clicks[0]
        if j != 0 and j not in S:
            raise DataFormatError(f"{path}: line {line}: choice {j} not in assortment")
        if min(S) < 1 or j < 0:
            raise DataFormatError(f"{path}: line {line}: ids must be positive (0 only as a choice)")
        records.append((line, S, j))
    if not records:
        raise DataFormatError(f"{path}: no observations")
    if n is None:
        n = np.shape(features)[0] - 1 if features is not None else max(max(S) for _, S, _ in records)
    masks = np.zeros((len(records), n), dtype=bool)
    choices = np.zeros(len(records), dtype=np.int64)
    for t, (line, S, j) in enumerate(records):
        if max(S) > n:
            raise DataFormatError(f"{path}: line {line}: product id {max(S)} exceeds n={n}")
        masks[t, np.asarray(S) - 1] = True
        choices[t] = j
    return ChoiceDataset(masks, choices, features)


def format_dataset_csv(data: ChoiceDataset) -> str:
    out = io.StringIO()
    out.write("t,assortment,choice\n")
    for t, (S, j) in enumerate(data.observations(), start=1):
        out.write(f"{t},{';'.join(map(str, S))},{j}\n")
    return out.getvalue()


def read_features_csv(path) -> NDArray[np.float64]:
    rows: dict[int, list[float]] = {}
    d = None
    for line, header, row in _rows(path, ["id"]):
        if d is None:
            d = len(header) - 1
            if d < 1:
                raise DataFormatError(f"{path}: line 1: need at least one feature column")
        if len(row) != d + 1:
            raise DataFormatError(f"{path}: line {line}: expected {d + 1} fields, got {len(row)}")
        try:
            i = int(row[0])
            vals = [float(x) for x in row[1:]]
        except ValueError:
            raise DataFormatError(f"{path}: line {line}: non-numeric entry") from None
        if i in rows:
            raise DataFormatError(f"{path}: line {line}: duplicate id {i}")
        if not all(np.isfinite(vals)):
            raise DataFormatError(f"{path}: line {line}: non-finite feature")
        rows[i] = vals
    if 0 not in rows:
        raise DataFormatError(f"{path}: features must include id 0 (no purchase)")
    n = max(rows)
    missing = sorted(set(range(n + 1)) - set(rows))
    if missing or min(rows) < 0:
        raise DataFormatError(f"{path}: ids must cover 0..{n} exactly; missing {missing[:5]}")
    return np.array([rows[i] for i in range(n + 1)])


def format_features_csv(X: NDArray[np.float64]) -> str:
    d = X.shape[1]
    lines = ["id," + ",".join(f"f{k + 1}" for k in range(d))]
    lines += [f"{i}," + ",".join(fmt(x) for x in row) for i, row in enumerate(X)]
    return "\n".join(lines) + "\n"


def read_prices_csv(path, n: int | None = None) -> NDArray[np.float64]:
    prices: dict[int, float] = {}
    for line, _, row in _rows(path, ["id", "price"]):
        if len(row) != 2:
            raise DataFormatError(f"{path}: line {line}: expected 2 fields")
        try:
            i, p = int(row[0]), float(row[1])
        except ValueError:
            raise DataFormatError(f"{path}: line {line}: non-numeric entry") from None
        if i < 1 or i in prices:
            raise DataFormatError(f"{path}: line {line}: bad or duplicate product id {i}")
        if not np.isfinite(p) or p <= 0:
            raise DataFormatError(f"{path}: line {line}: price must be positive")
        prices[i] = p
    m = max(prices) if prices else 0
    if n is not None and m != n or sorted(prices) != list(range(1, m + 1)):
        raise DataFormatError(f"{path}: prices must cover products 1..{n if n is not None else m}")
    return np.array([prices[i] for i in range(1, m + 1)])


def format_prices_csv(prices) -> str:
    return "id,price\n" + "".join(f"{i},{fmt(p)}\n" for i, p in enumerate(prices, start=1))


def dump_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def params_document(
    model: str,
    n: int,
    beta=(),
    alpha: float = 0.0,
    **extra: Any,
) -> dict[str, Any]:
    beta = [float(b) for b in np.asarray(beta, dtype=np.float64)]
    doc = {"model": model, "n": int(n), "d": len(beta), "beta": beta, "alpha": float(alpha)}
    for key, val in extra.items():
        if val is not None:
            doc[key] = np.asarray(val, dtype=np.float64).tolist() if key in ("U", "V", "lambda", "v") else val
    return doc


def load_params(path) -> dict[str, Any]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None
    for key in ("model", "n", "d", "beta", "alpha"):
        if key not in doc:
            raise DataFormatError(f"{path}: missing field {key!r}")
    if doc["model"] not in MODELS:
        raise DataFormatError(f"{path}: unknown model {doc['model']!r}")
    if len(doc["beta"]) != doc["d"]:
        raise DataFormatError(f"{path}: beta has {len(doc['beta'])} entries but d={doc['d']}")
    return doc


def params_from_document(doc: dict[str, Any]) -> GmnlParams:
    alpha = 0.0 if doc["model"] == "mnl" else doc["alpha"]
    return GmnlParams(np.array(doc["beta"], dtype=np.float64), alpha)


def model_from_document(doc: dict[str, Any], features=None) -> GmnlModel | LowRankModel:
    """Choice model described by a parameter document.

    ``mnl`` and ``gmnl`` use explicit attractions ``v`` when present and
    ``exp(X beta)`` otherwise; ``mnl`` forces ``alpha = 0``.
    """
    if doc["model"] == "lowrank":
        for key in ("U", "V", "lambda"):
            if key not in doc:
                raise DataFormatError(f"low-rank parameters need {key!r}")
        return LowRankModel(U=np.array(doc["U"]), V=np.array(doc["V"]), lam=np.array(doc["lambda"]), alpha=doc["alpha"])
    alpha = 0.0 if doc["model"] == "mnl" else float(doc["alpha"])
    if "v" in doc:
        w = np.array(doc["v"], dtype=np.float64)
        if w.shape != (doc["n"] + 1,):
            raise DataFormatError(f"'v' must list {doc['n'] + 1} attractions")
        return GmnlModel.from_attractions(w, alpha)
    if features is None:
        raise DataFormatError("these parameters need a features file")
    X = np.asarray(features)
    if X.shape != (doc["n"] + 1, doc["d"]):
        raise DataFormatError(f"features have shape {X.shape}, parameters expect {(doc['n'] + 1, doc['d'])}")
    return GmnlParams(np.array(doc["beta"], dtype=np.float64), alpha).to_model(X)
