import os
import re
import json

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ValidationError

from wnsf.config import ModelDocument
from wnsf.core.canonical import CanonicalStructure
from wnsf.core.dataset import Dataset
from wnsf.core.model import StateSpaceModel
from wnsf.exceptions import SerializationError

_COLUMN = re.compile(r"^([uy])(\d+)$")


class SerializerUtils:

    @staticmethod
    def to_builtin(obj):
        """Numpy scalars and arrays inside nested dicts/lists turned into plain Python values."""
        if isinstance(obj, dict):
            return {str(k): SerializerUtils.to_builtin(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [SerializerUtils.to_builtin(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return SerializerUtils.to_builtin(obj.tolist())
        if isinstance(obj, np.generic):
            return obj.item()
        return obj

    @staticmethod
    def save_json(obj, path):
        try:
            with open(path, "w") as json_file:
                json.dump(SerializerUtils.to_builtin(obj), json_file, indent=4)
        except (TypeError, ValueError) as e:
            raise SerializationError(f"Failed to write {path}: {e}")

    @staticmethod
    def save_yaml(obj, path):
        with open(path, "w") as yaml_file:
            yaml.safe_dump(SerializerUtils.to_builtin(obj), yaml_file, indent=4, sort_keys=False)

    @staticmethod
    def load_document(path, document: type[BaseModel]) -> BaseModel:
        """Reads a JSON (or YAML, by extension) file into a pydantic document."""
        if not os.path.exists(path):
            raise SerializationError(f"{path}: file does not exist")
        with open(path) as handle:
            text = handle.read()
        try:
            if path.endswith((".yaml", ".yml")):
                raw = yaml.safe_load(text)
            else:
                raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise SerializationError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}")
        except yaml.YAMLError as e:
            raise SerializationError(f"{path}: {e}")

        try:
            return document.model_validate(raw)
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(part) for part in first["loc"]) or "<root>"
            raise SerializationError(f"{path}: field '{field}': {first['msg']}")

    @staticmethod
    def save_model(model: StateSpaceModel, path, structure: CanonicalStructure | None = None):
        SerializerUtils.save_json(ModelDocument.from_model(model, structure).model_dump(exclude_none=True), path)

    @staticmethod
    def load_model(path) -> tuple[StateSpaceModel, CanonicalStructure | None]:
        document = SerializerUtils.load_document(path, ModelDocument)
        try:
            return document.to_model(), document.structure()
        except ValueError as e:
            raise SerializationError(f"{path}: {e}")

    @staticmethod
    def save_dataset(dataset: Dataset, path):
        """One row per sample, columns u1..u_nu then y1..y_ny."""
        columns = {f"u{i + 1}": dataset.u[:, i] for i in range(dataset.n_u)}
        columns.update({f"y{i + 1}": dataset.y[:, i] for i in range(dataset.n_y)})
        pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")

    @staticmethod
    def load_dataset(path) -> Dataset:
        if not os.path.exists(path):
            raise SerializationError(f"{path}: file does not exist")
        try:
            frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise SerializationError(f"{path}: {e}")

        channels = {"u": {}, "y": {}}
        for column in frame.columns:
            match = _COLUMN.match(column.strip())
            if match is None:
                raise SerializationError(f"{path}: line 1: unexpected column '{column}' (expected u1.., y1..)")
            channels[match.group(1)][int(match.group(2))] = column
        for kind, found in channels.items():
            if sorted(found) != list(range(1, len(found) + 1)):
                raise SerializationError(f"{path}: line 1: {kind} columns must be numbered 1..{len(found)}")
        if not channels["y"]:
            raise SerializationError(f"{path}: line 1: no output column (y1)")
        if frame.empty:
            raise SerializationError(f"{path}: no samples")

        def numeric(kind):
            names = [channels[kind][i] for i in sorted(channels[kind])]
            values = frame[names].apply(pd.to_numeric, errors="coerce")
            bad = values.isna() | ~np.isfinite(values.fillna(0.0))
            if bad.to_numpy().any():
                row, col = np.argwhere(bad.to_numpy())[0]
                raise SerializationError(
                    f"{path}: line {row + 2}, field '{names[col]}': not a finite number ({frame[names[col]].iloc[row]!r})")
            return values.to_numpy(dtype=float)

        u = numeric("u") if channels["u"] else np.zeros((len(frame), 0))
        return Dataset(u, numeric("y"))
