from __future__ import annotations

import numpy as np
import pytest

from ratecon import (DataError, LinearClassifier, parse_libsvm, read_model,
                     serialize_libsvm, write_model)
from ratecon.config import load_config
from ratecon.errors import ConfigError


def test_parse_basic_line(tmp_path):
    path = tmp_path / "d.libsvm"
    path.write_text("+1 1:0.5 3:1\n")
    labels, ds = parse_libsvm(path)
    assert labels.tolist() == [1]
    assert ds.dim == 3
    row = ds.dense()[0]
    np.testing.assert_allclose(row, [0.5, 0.0, 1.0])


def test_parse_label_variants_and_empty_features(tmp_path):
    path = tmp_path / "d.libsvm"
    path.write_text("-1\n1 2:3.5\n\n+1 1:1\n")
    labels, ds = parse_libsvm(path)
    assert labels.tolist() == [-1, 1, 1]
    assert ds.size == 3
    assert ds.dense()[0].tolist() == [0.0, 0.0]


def test_parse_rejects_bad_label(tmp_path):
    path = tmp_path / "d.libsvm"
    path.write_text("2 1:1\n")
    with pytest.raises(DataError) as info:
        parse_libsvm(path)
    assert "line 1" in str(info.value)


def test_parse_rejects_nonincreasing_indices(tmp_path):
    path = tmp_path / "d.libsvm"
    path.write_text("+1 3:1 2:1\n")
    with pytest.raises(DataError) as info:
        parse_libsvm(path)
    assert "increasing" in str(info.value)


def test_parse_rejects_malformed_token(tmp_path):
    path = tmp_path / "d.libsvm"
    path.write_text("+1 1:abc\n")
    with pytest.raises(DataError) as info:
        parse_libsvm(path)
    assert "line 1" in str(info.value)


def test_parse_rejects_zero_index(tmp_path):
    path = tmp_path / "d.libsvm"
    path.write_text("+1 0:1\n")
    with pytest.raises(DataError):
        parse_libsvm(path)


def test_roundtrip_identity(tmp_path, rng):
    n, d = 20, 7
    rows = []
    labels = []
    for i in range(n):
        labels.append(1 if rng.random() < 0.5 else -1)
        nnz = int(rng.integers(0, d))
        cols = np.sort(rng.choice(d, size=nnz, replace=False))
        rows.append(" ".join(
            [f"{int(c) + 1}:{float(np.round(rng.normal(), 6))!r}" for c in cols]))
    text = "\n".join(f"{'+1' if l == 1 else '-1'} {r}".strip()
                     for l, r in zip(labels, rows)) + "\n"
    p1 = tmp_path / "a.libsvm"
    p1.write_text(text)
    labels1, ds1 = parse_libsvm(p1)
    canonical = serialize_libsvm(labels1, ds1)
    p2 = tmp_path / "b.libsvm"
    p2.write_text(canonical)
    labels2, ds2 = parse_libsvm(p2, dim=ds1.dim)
    assert labels1.tolist() == labels2.tolist()
    assert serialize_libsvm(labels2, ds2) == canonical


def test_model_roundtrip_bit_exact(tmp_path, rng):
    clf = LinearClassifier(rng.normal(size=9) * np.pi, float(rng.normal()))
    path = tmp_path / "model.txt"
    write_model(path, clf, "free")
    loaded, mode = read_model(path)
    assert mode == "free"
    assert loaded.b == clf.b
    assert np.array_equal(loaded.w, clf.w)
    # writing again yields identical bytes
    path2 = tmp_path / "model2.txt"
    write_model(path2, loaded, mode)
    assert path.read_bytes() == path2.read_bytes()


def test_model_rejects_garbage(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text("not a model\n")
    with pytest.raises(DataError):
        read_model(path)


CONFIG = """
[data]
train = train.libsvm

[problem]
objective = error_rate
lambda = 0.25
bias = free

[constraint cov]
kind = coverage
dataset = all
direction = <=
bound = 0.5

[solver]
iterations = 3
eps = 1e-4
seed = 7

[output]
dir = out
"""


def test_config_load_and_validate(tmp_path):
    (tmp_path / "train.libsvm").write_text("+1 1:1\n-1 1:-1\n")
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(CONFIG)
    cfg = load_config(cfg_path)
    assert cfg.lam == 0.25
    assert cfg.seed == 7
    assert cfg.iterations == 3
    assert len(cfg.constraints) == 1
    assert cfg.constraints[0].kind == "coverage"
    assert cfg.out_dir.endswith("out")


def test_config_missing_file_rejected(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(CONFIG)  # train.libsvm absent
    with pytest.raises(ConfigError):
        load_config(cfg_path)


def test_config_bad_metric_rejected(tmp_path):
    (tmp_path / "train.libsvm").write_text("+1 1:1\n")
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(CONFIG.replace("error_rate", "f_measure"))
    with pytest.raises(ConfigError):
        load_config(cfg_path)


def test_config_seed_and_out_overrides(tmp_path):
    (tmp_path / "train.libsvm").write_text("+1 1:1\n")
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(CONFIG)
    cfg = load_config(cfg_path, seed_override=99, out_override=str(tmp_path / "other"))
    assert cfg.seed == 99
    assert cfg.out_dir == str(tmp_path / "other")
