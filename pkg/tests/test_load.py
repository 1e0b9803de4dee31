import pytest

from partitiontools.exceptions import FormatError, PreconditionError
from partitiontools.load import PROCESSES_ENV, load_config, parse_config_lines


def _config(tmp_path, text: str, name: str = "run.cfg") -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


BASE = "grid.nx = 16\ngrid.ny = 8\ngrid.h = 0.125\n"


def test_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv(PROCESSES_ENV, raising=False)
    config = load_config(_config(tmp_path, BASE))
    assert config.grid.shape == (8, 16)
    assert config.n_labels == 2
    assert config.weight_source == "landscape"
    assert config.optimizer.init == "stripes"
    assert config.optimizer.radius_range == (0.125, 0.375)
    assert config.budget.max_assignments == 10 ** 8
    assert config.processes == 1
    assert config.stencil == "axis"


def test_comments_and_blank_lines(tmp_path):
    text = "# a run\n\n" + BASE + "partition.n_labels = 3   # three phases\n"
    assert load_config(_config(tmp_path, text)).n_labels == 3


def test_lengths_in_units_of_h(tmp_path):
    text = BASE + "diagnostics.scales = 2, 4\ndiagnostics.condition_b_radius = 8\noptimizer.radius_max = 2\n"
    config = load_config(_config(tmp_path, text))
    assert config.diagnostics.scales == (0.25, 0.5)
    assert config.diagnostics.condition_b_radius == 1.0
    assert config.optimizer.radius_range == (0.125, 0.25)


def test_overrides_replace_file_values(tmp_path):
    config = load_config(_config(tmp_path, BASE + "run.seed = 4\n"), overrides={"run.seed": 9, "run.out": None})
    assert config.seed == 9
    assert config.optimizer.seed == 9
    assert config.out == "."


def test_annealing_schedule(tmp_path):
    config = load_config(_config(tmp_path, BASE + "optimizer.temperature = 2\noptimizer.decay = 0.5\n"))
    assert config.optimizer.temperature == (2.0, 0.5)


def test_energy_spec_from_config(tmp_path):
    text = BASE + "bulk.lambda = 3\nbulk.targets = 1, 1\nenergy.label_weights = 1, 2\nenergy.stencil = crofton8\n"
    spec = load_config(_config(tmp_path, text)).energy_spec()
    assert spec.bulk.lam == 3.0
    assert spec.bulk.target_volumes == (1.0, 1.0)
    assert spec.label_weights == (1.0, 2.0)
    assert spec.stencil == "crofton8"


def test_referenced_files_resolve_against_the_config(tmp_path):
    (tmp_path / "a.field").write_text("FIELD 16 8 0.125\n" + ("1 " * 15 + "1\n") * 8)
    config = load_config(_config(tmp_path, BASE + "weight.source = field\nweight.field = a.field\n"))
    assert config.weight_field == str(tmp_path / "a.field")


def test_landscape_q_weight_needs_the_landscape(tmp_path):
    text = BASE + "bulk.kind = weighted_volume\nbulk.q_weight = landscape\n"
    config = load_config(_config(tmp_path, text))
    with pytest.raises(PreconditionError):
        config.energy_spec()


@pytest.mark.parametrize("line", [
    "grid.depth = 3\n",
    "grid.nx = 4\n",
    "grid.nx\n",
    "partition.n_labels = two\n",
    "diagnostics.ahlfors = maybe\n",
    "weight.field = missing.field\n",
    "bulk.h_table = missing.csv\n",
])
def test_format_errors(tmp_path, line):
    with pytest.raises(FormatError):
        load_config(_config(tmp_path, BASE + line))


@pytest.mark.parametrize("line", [
    "partition.n_labels = 0\n",
    "bulk.lambda = -1\n",
    "bulk.alpha = 0.4\n",
    "weight.source = potential\n",
    "weight.source = field\n",
    "optimizer.decay = 1\n",
    "energy.stencil = hex\n",
    "bulk.targets = 1, 1, 1\n",
    "bulk.kind = volume_generic_h\n",
])
def test_precondition_errors(tmp_path, line):
    with pytest.raises(PreconditionError):
        load_config(_config(tmp_path, BASE + line))


def test_missing_grid_key(tmp_path):
    with pytest.raises(FormatError):
        load_config(_config(tmp_path, "grid.nx = 4\ngrid.ny = 4\n"))


def test_missing_config_file(tmp_path):
    with pytest.raises(FormatError):
        load_config(str(tmp_path / "absent.cfg"))


def test_parse_errors_name_the_offset():
    with pytest.raises(FormatError, match="byte offset 12"):
        parse_config_lines([(0, "grid.nx = 4"), (12, "bogus")])


def test_process_count_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(PROCESSES_ENV, "3")
    assert load_config(_config(tmp_path, BASE)).processes == 3
    monkeypatch.setenv(PROCESSES_ENV, "0")
    with pytest.raises(PreconditionError):
        load_config(_config(tmp_path, BASE))
    monkeypatch.setenv(PROCESSES_ENV, "many")
    with pytest.raises(FormatError):
        load_config(_config(tmp_path, BASE))
