"""Binary container: one JSON header line + little-endian float32 blocks.

Used for datasets and trained-weight dumps. The header is a single
UTF-8 JSON object terminated by a newline; it declares every block's
name, shape and dtype in file order, so readers never guess offsets.
"""

from __future__ import annotations

import json

import numpy as np

from .pulsegen import Dataset, WindowSet

FORMAT_NAME = "codesign-blocks"
FORMAT_VERSION = 1
_DTYPE = "<f4"


def write_blocks(path: str, meta: dict, blocks: list[tuple[str, np.ndarray]]) -> None:
    """Write named float32 arrays behind a self-describing JSON header."""
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "meta": meta,
        "blocks": [
            {"name": name, "shape": list(arr.shape), "dtype": _DTYPE} for name, arr in blocks
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for _, arr in blocks:
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes())


def read_blocks(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :func:`write_blocks`; returns (meta, name -> array)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file") from exc
        if header.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported container version {header.get('version')}")
        arrays = {}
        for block in header["blocks"]:
            shape = tuple(block["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise ValueError(f"{path}: truncated block {block['name']!r}")
            arrays[block["name"]] = np.frombuffer(raw, dtype=_DTYPE).reshape(shape).copy()
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after declared blocks")
    return header["meta"], arrays


def write_dataset(path: str, dataset: Dataset) -> None:
    meta = {
        "kind": "dataset",
        "provenance": dataset.provenance,
        "split_fractions": list(dataset.split_fractions),
    }
    blocks = []
    for split_name in ("train", "val", "test"):
        ws: WindowSet = getattr(dataset, split_name)
        blocks.append((f"{split_name}.samples", ws.samples))
        blocks.append((f"{split_name}.labels", ws.labels))
        blocks.append((f"{split_name}.toas", ws.toas))
    write_blocks(path, meta, blocks)


def read_dataset(path: str) -> Dataset:
    meta, arrays = read_blocks(path)
    if meta.get("kind") != "dataset":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, expected 'dataset'")
    sets = {}
    for split_name in ("train", "val", "test"):
        sets[split_name] = WindowSet(
            arrays[f"{split_name}.samples"],
            arrays[f"{split_name}.labels"],
            arrays[f"{split_name}.toas"],
        )
    return Dataset(
        train=sets["train"],
        val=sets["val"],
        test=sets["test"],
        split_fractions=tuple(meta["split_fractions"]),
        provenance=meta["provenance"],
    )


def write_weights(path: str, meta: dict, weights: list[tuple[np.ndarray, np.ndarray]]) -> None:
    """Dump trained (W, b) pairs in layer order."""
    blocks = []
    for i, (w, b) in enumerate(weights):
        blocks.append((f"layer{i}.weight", w))
        blocks.append((f"layer{i}.bias", b))
    write_blocks(path, {"kind": "weights", **meta}, blocks)


def read_weights(path: str) -> tuple[dict, list[tuple[np.ndarray, np.ndarray]]]:
    meta, arrays = read_blocks(path)
    if meta.get("kind") != "weights":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, expected 'weights'")
    weights = []
    i = 0
    while f"layer{i}.weight" in arrays:
        weights.append((arrays[f"layer{i}.weight"], arrays[f"layer{i}.bias"]))
        i += 1
    return meta, weights
