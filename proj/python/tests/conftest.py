import json
import os
import subprocess
from pathlib import Path

import pytest

SOURCE = Path(os.environ.get("SPINCAV_SOURCE_DIR", Path(__file__).resolve().parents[2]))
BIN = os.environ.get("SPINCAV_BIN", str(SOURCE / "build" / "spincav"))


def small_grid(**extra):
    cfg = {
        "preset": "ground_state_epr",
        "grid": {
            "drive_hz": {"start": 5.0e9, "stop": 5.04e9, "points": 9},
            "field_t": {"start": 0.0404, "stop": 0.0408, "points": 3},
        },
    }
    cfg.update(extra)
    return cfg


@pytest.fixture
def run(tmp_path):
    def _run(*args, config=None, env=None, out=None):
        cmd = [BIN, *args]
        if config is not None:
            path = tmp_path / "cfg.json"
            path.write_text(config if isinstance(config, str) else json.dumps(config))
            cmd += ["--config", str(path)]
        if out is not None:
            cmd += ["--output-dir", str(out)]
        full_env = dict(os.environ)
        full_env.pop("SPINCAV_OUTPUT_DIR", None)
        full_env.update(env or {})
        return subprocess.run(cmd, capture_output=True, text=True, env=full_env, cwd=tmp_path)

    return _run
