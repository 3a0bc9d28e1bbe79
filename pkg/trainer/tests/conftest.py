from __future__ import annotations

import json
from pathlib import Path

import pytest

from driverfx import DEFAULT_MANIFEST, make_rows, write_rows


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    """A default-shaped manifest workspace with small datasets."""
    data = tmp_path / "data"
    write_rows(data / "stage1_mult_add.jsonl",
               make_rows("t1_mult", 8, unlabeled=True)
               + make_rows("t2_add", 14, unlabeled=True))
    write_rows(data / "t3_extract.jsonl", make_rows("t3_extract", 14, 6))
    write_rows(data / "t4_concat.jsonl", make_rows("t4_concat", 14, 6))
    write_rows(data / "global_mult.jsonl", make_rows("global_mult", 18, 2))
    (tmp_path / "manifest.json").write_text(
        json.dumps(DEFAULT_MANIFEST, indent=2) + "\n", encoding="utf-8"
    )
    return tmp_path
