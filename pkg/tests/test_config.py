from pathlib import Path

import pytest

from partialgl.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def sweep_doc(**over):
    doc = {
        "seed": 3,
        "experiment": {"kind": "sweep", "trials": 2},
        "graph": {"model": "er", "nodes": 20, "p": 0.3},
        "filter": {"kind": "heat", "alpha": 1.0},
        "trial": {"M": 20, "lambda": 2.0},
        "sweep": {"n": [10, 20], "values": [1.0, 10.0]},
    }
    for key, value in over.items():
        doc[key] = value
    return doc


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.trials >= 1


def test_sweep_parse(tmp_path):
    cfg = parse_config(sweep_doc(), base_dir=tmp_path)
    assert cfg.trial.seed == 3 and cfg.trial.M == 20 and cfg.trial.lam == 2.0
    assert cfg.n_values == [10, 20] and cfg.param_values == [1.0, 10.0]
    assert cfg.out_dir == tmp_path / "out"


def test_integer_promoted_to_float():
    cfg = parse_config(sweep_doc(filter={"kind": "heat", "alpha": 2}))
    assert cfg.trial.filter.alpha == 2.0


def test_unknown_key_named():
    doc = sweep_doc()
    doc["trial"]["lamda"] = 1.0
    with pytest.raises(ConfigError, match="trial.lamda"):
        parse_config(doc)


def test_all_errors_reported_together():
    doc = sweep_doc(graph={"model": "er", "nodes": 20, "p": 1.5}, bogus={"x": 1})
    doc["experiment"]["trials"] = 0
    doc["sweep"]["f1_target"] = "maybe"
    with pytest.raises(ConfigError) as ei:
        parse_config(doc)
    errs = "\n".join(ei.value.errors)
    for needle in ("graph.p", "[bogus]", "experiment.trials", "sweep.f1_target"):
        assert needle in errs
    assert len(ei.value.errors) >= 4


@pytest.mark.parametrize(
    "change, needle",
    [
        ({"graph": {"model": "er", "nodes": 20}}, "graph.p"),
        ({"graph": {"model": "knn", "nodes": 20, "k": 3, "p": 0.1}}, "graph.p"),
        ({"filter": {"kind": "heat"}}, "filter"),
        ({"sweep": {"n": [10, 40]}}, "sweep.n"),
        ({"trial": {"M": "many"}}, "trial.M"),
        ({"experiment": {"kind": "grid"}}, "experiment.kind"),
    ],
)
def test_specific_errors(change, needle):
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        parse_config(sweep_doc(**change))


def test_missing_sections():
    with pytest.raises(ConfigError, match=r"missing section \[graph\]"):
        parse_config({"experiment": {"kind": "sweep"}, "filter": {"kind": "heat", "alpha": 1.0}, "trial": {}})


def test_real_config(tmp_path):
    doc = {
        "experiment": {"kind": "real", "trials": 3},
        "real": {"dataset": "temperature", "path": "s.csv", "n": [10, 20]},
    }
    cfg = parse_config(doc, base_dir=tmp_path)
    assert cfg.data_path == tmp_path / "s.csv" and cfg.real.n_values == (10, 20) and cfg.real.trials == 3


def test_real_rejects_sweep_sections():
    doc = {"experiment": {"kind": "real"}, "real": {"dataset": "congress", "path": "x"}, "graph": {"model": "er"}}
    with pytest.raises(ConfigError, match="only valid"):
        parse_config(doc)


def test_bad_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("seed = = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)
