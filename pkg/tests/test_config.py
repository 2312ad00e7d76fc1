import json

import pytest

from stabkit.config import Config, load_config
from stabkit.errors import MatrixParseError


def test_defaults():
    cfg = load_config()
    assert cfg == Config() and cfg.explicit == frozenset()


def test_precedence(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"tol": 1e-6, "seed": 3, "threads": 2}))
    cfg = load_config(p, {"seed": 9, "tol": None})
    assert (cfg.tol, cfg.seed, cfg.threads) == (1e-6, 9, 2)
    assert cfg.explicit == {"tol", "seed", "threads"}
    assert "explicit" not in cfg.to_dict()


@pytest.mark.parametrize("content", ["[1]", "{bad", '{"nope": 1}', '{"tol": -1}',
                                     '{"threads": 0}'])
def test_bad_config(tmp_path, content):
    p = tmp_path / "c.json"
    p.write_text(content)
    with pytest.raises(MatrixParseError):
        load_config(p)
