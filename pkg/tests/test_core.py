import json

import numpy as np
import pytest

from lfdkit.core import (DemonstrationError, ModelFormatError, load_demonstration_set,
                         load_model, save_model, read_demonstration, write_demonstration)
from lfdkit.synth import synth_task


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def demo_rows(n_rows, n_dof, offset=0.0):
    return [[0.01 * i] + [offset + i + j for j in range(n_dof)] for i in range(n_rows)]


def header(n):
    return ["t"] + [f"j{i}" for i in range(1, n + 1)]


def test_load_directory_of_three_6dof_files(tmp_path):
    for m in range(3):
        write_csv(tmp_path / f"d{m}.csv", header(6), demo_rows(20 + m, 6, offset=m))
    ds = load_demonstration_set(tmp_path)
    assert len(ds) == 3
    assert ds.dof == 6
    # no rows dropped
    assert [len(d) for d in ds] == [20, 21, 22]
    assert [d.name for d in ds] == ["d0.csv", "d1.csv", "d2.csv"]
    np.testing.assert_array_equal(ds.demos[1].joints[0], [1, 2, 3, 4, 5, 6])


def test_repeated_timestamp_reports_file_and_line(tmp_path):
    rows = demo_rows(5, 2)
    rows[3][0] = rows[2][0]
    write_csv(tmp_path / "bad.csv", header(2), rows)
    with pytest.raises(DemonstrationError, match=r"bad\.csv:5: non-monotone timestamps"):
        read_demonstration(tmp_path / "bad.csv")


def test_inconsistent_dof(tmp_path):
    write_csv(tmp_path / "a.csv", header(6), demo_rows(5, 6))
    write_csv(tmp_path / "b.csv", header(7), demo_rows(5, 7))
    with pytest.raises(DemonstrationError, match="inconsistent DOF"):
        load_demonstration_set(tmp_path)


@pytest.mark.parametrize("head", [["time", "j1"], ["t", "j2"], ["t"], ["t", "j1", "x"]])
def test_malformed_header(tmp_path, head):
    write_csv(tmp_path / "h.csv", head, [[0.0] * len(head), [1.0] * len(head)])
    with pytest.raises(DemonstrationError, match=r"h\.csv:1: malformed header"):
        read_demonstration(tmp_path / "h.csv")


def test_ragged_row(tmp_path):
    rows = demo_rows(4, 2)
    rows[2] = rows[2][:2]
    write_csv(tmp_path / "r.csv", header(2), rows)
    with pytest.raises(DemonstrationError, match=r"r\.csv:4"):
        read_demonstration(tmp_path / "r.csv")


def test_single_demo_rejected(tmp_path):
    write_csv(tmp_path / "a.csv", header(2), demo_rows(5, 2))
    with pytest.raises(DemonstrationError, match="at least 2"):
        load_demonstration_set(tmp_path)


def test_empty_directory(tmp_path):
    with pytest.raises(DemonstrationError):
        load_demonstration_set(tmp_path)


def test_csv_roundtrip_is_exact(tmp_path):
    ds = synth_task(3, 2, seed=4)
    for d in ds:
        write_demonstration(tmp_path / d.name, d)
    back = load_demonstration_set(tmp_path)
    for a, b in zip(ds, back):
        np.testing.assert_array_equal(a.timestamps, b.timestamps)
        np.testing.assert_array_equal(a.joints, b.joints)


def test_file_list_source(tmp_path):
    for m in range(2):
        write_csv(tmp_path / f"x{m}.csv", header(1), demo_rows(3, 1))
    ds = load_demonstration_set([tmp_path / "x1.csv", tmp_path / "x0.csv"])
    assert [d.name for d in ds] == ["x1.csv", "x0.csv"]


# ---------------------------------------------------------------------------
# model persistence


def _assert_models_equal(a, b):
    assert (a.dof, a.kstar, a.n_basis, a.train_seed, a.format_version) == \
        (b.dof, b.kstar, b.n_basis, b.train_seed, b.format_version)
    assert a.alpha_z == b.alpha_z
    assert a.provenance == b.provenance
    np.testing.assert_array_equal(a.gmr.timestamps, b.gmr.timestamps)
    np.testing.assert_array_equal(a.gmr.means, b.gmr.means)
    np.testing.assert_array_equal(a.gmr.variances, b.gmr.variances)
    for ga, gb in zip(a.gmms, b.gmms):
        np.testing.assert_array_equal(ga.priors, gb.priors)
        np.testing.assert_array_equal(ga.means, gb.means)
        np.testing.assert_array_equal(ga.covariances, gb.covariances)
    for sa, sb in zip(a.springs, b.springs):
        assert (sa.tau, sa.alpha_z, sa.beta_z, sa.g, sa.y0, sa.forcing_enabled) == \
            (sb.tau, sb.alpha_z, sb.beta_z, sb.g, sb.y0, sb.forcing_enabled)
        np.testing.assert_array_equal(sa.forcing.weights, sb.forcing.weights)
        np.testing.assert_array_equal(sa.forcing.centers, sb.forcing.centers)
        np.testing.assert_array_equal(sa.forcing.widths, sb.forcing.widths)
        assert sa.forcing.alpha_x == sb.forcing.alpha_x


def test_model_roundtrip(small_model, tmp_path):
    model, _ = small_model
    path = tmp_path / "m.json"
    save_model(model, path)
    _assert_models_equal(model, load_model(path))
    assert json.loads(path.read_text())["format_version"] == 1


def test_unknown_format_version(small_model, tmp_path):
    model, _ = small_model
    path = tmp_path / "m.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 999
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="format_version 999"):
        load_model(path)


@pytest.mark.parametrize("edit, message", [
    (lambda d: d.update(alpha_z=-1), "alpha_z"),
    (lambda d: d["springs"][0].update(beta_z=d["springs"][0]["beta_z"] * 1.5), "beta_z"),
    (lambda d: d.update(n_basis=1), "n_basis"),
    (lambda d: d["springs"].pop(), "spring"),
])
def test_invariant_violation_on_load(small_model, tmp_path, edit, message):
    model, _ = small_model
    path = tmp_path / "m.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    edit(doc)
    path.write_text(json.dumps(doc))
    with pytest.raises((ModelFormatError, ValueError), match=message):
        load_model(path)
