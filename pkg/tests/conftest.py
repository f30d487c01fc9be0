import json

import pytest

from codecomp.concepts import load_lexicons
from codecomp.presets import task_preset


@pytest.fixture(scope="session")
def lexicons():
    return load_lexicons()


@pytest.fixture(scope="session")
def phm_cancer():
    return task_preset("phm-cancer")


@pytest.fixture()
def write_jsonl(tmp_path):
    def _write(records, name="corpus.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record) + "\n")
        return path

    return _write
