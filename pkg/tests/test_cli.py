"""Command-line surface: CSV contract, exit codes, determinism, verify report."""

import json

import pytest

from maflow import cli
from maflow.cli import main


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def split_csv(text):
    lines = text.strip("\n").split("\n")
    manifest = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    header = body[0].split(",")
    rows = [ln.split(",") for ln in body[1:]]
    return manifest, header, rows


def find_row(header, rows, **coords):
    """Return the first row whose named coordinate cells equal the targets."""
    for row in rows:
        if all(float(row[header.index(k)]) == v for k, v in coords.items()):
            return dict(zip(header, row))
    raise AssertionError(f"no row with {coords}")


# ------------------------------------------------------------------- diagnose

def test_diagnose_grid_matches_reference_values(capsys):
    code, out, _ = run(capsys, [
        "diagnose", "--flow", "moffatt",
        "--grid", "x=-1:1:5,y=-1:1:5", "--fields", "f,R,zeta,class"])
    assert code == 0
    manifest, header, rows = split_csv(out)
    assert header == ["x", "y", "f", "R", "zeta", "class", "flag"]
    assert len(rows) == 25
    row = find_row(header, rows, x=0.0, y=-1.0)
    assert row["f"] == "12.0"
    assert row["R"] == "0.01953125"
    assert row["class"] == "elliptic"
    assert row["flag"] == ""


def test_manifest_lines_carry_sorted_invocation_keys(capsys):
    _, out, _ = run(capsys, [
        "diagnose", "--flow", "moffatt",
        "--grid", "x=0:1:2,y=0:1:2", "--fields", "f"])
    manifest, _, _ = split_csv(out)
    keys = [ln[2:].split("=", 1)[0] for ln in manifest]
    assert keys == sorted(keys)
    joined = "\n".join(manifest)
    assert "# command=diagnose" in joined
    assert "# flow=moffatt" in joined
    assert "# fields=f" in joined
    assert "# version=" in joined


def test_degenerate_cells_hold_nan_and_name_the_error(capsys):
    # moffatt loses Hessian rank on the y=0 line, so R degenerates there
    code, out, _ = run(capsys, [
        "diagnose", "--flow", "moffatt",
        "--grid", "x=0:1:2,y=-1:1:3", "--fields", "f,R,class"])
    assert code == 0
    _, header, rows = split_csv(out)
    bad = find_row(header, rows, x=0.0, y=0.0)
    assert float(bad["f"]) == 0.0
    assert bad["R"] == "nan"
    assert bad["class"] == "parabolic"
    assert bad["flag"] == "DegenerateHessian"
    good = find_row(header, rows, x=0.0, y=1.0)
    assert good["flag"] == ""


def test_unknown_flow_exits_3_and_lists_the_catalog(capsys):
    code, _, err = run(capsys, [
        "diagnose", "--flow", "nosuch",
        "--grid", "x=0:1:2,y=0:1:2", "--fields", "f"])
    assert code == 3
    assert "catalog" in err
    assert "moffatt" in err


def test_unknown_field_exits_3_and_lists_valid_names(capsys):
    code, _, err = run(capsys, [
        "diagnose", "--flow", "moffatt",
        "--grid", "x=0:1:2,y=0:1:2", "--fields", "f,bogus"])
    assert code == 3
    assert "bogus" in err
    assert "fhat" in err
    # planar flow, so the 3D-only field is not offered
    assert "helicity" not in err


def test_dimension_gated_field_is_rejected_for_planar_flows(capsys):
    code, _, err = run(capsys, [
        "diagnose", "--flow", "moffatt",
        "--grid", "x=0:1:2,y=0:1:2", "--fields", "helicity"])
    assert code == 3
    assert "helicity" in err


def test_bad_grids_exit_2(capsys):
    for grid in ["x=0:1:1,y=0:1:2", "x=0:1,y=0:1:2", "x=1:0:3,y=0:1:2"]:
        code, _, err = run(capsys, [
            "diagnose", "--flow", "moffatt",
            "--grid", grid, "--fields", "f"])
        assert code == 2, grid
        assert "grid" in err


def test_grid_point_cap_exits_2(capsys):
    code, _, err = run(capsys, [
        "diagnose", "--flow", "moffatt",
        "--grid", "x=0:1:4000,y=0:1:4000", "--fields", "f"])
    assert code == 2
    assert "cap" in err


def test_missing_required_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["diagnose", "--flow", "moffatt", "--fields", "f"])
    assert exc.value.code == 2


# --------------------------------------------------------------- determinism

def test_identical_invocations_are_byte_identical(tmp_path):
    argv = ["diagnose", "--flow", "taylor-green",
            "--grid", "x=0.3:2.8:4,y=0.3:2.8:4", "--fields", "f,R,E+,E-"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_parallel_rows_match_serial(tmp_path):
    argv = ["diagnose", "--flow", "moffatt",
            "--grid", "x=-1:1:4,y=-1:1:4", "--fields", "f,R"]
    serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
    assert main(argv + ["--jobs", "1", "--out", str(serial)]) == 0
    assert main(argv + ["--jobs", "3", "--out", str(parallel)]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_out_writes_a_manifest_sidecar(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["diagnose", "--flow", "moffatt",
                 "--grid", "x=0:1:2,y=0:1:2", "--fields", "f",
                 "--out", str(out)]) == 0
    sidecar = tmp_path / "sweep.csv.manifest.json"
    assert sidecar.exists()
    meta = json.loads(sidecar.read_text())
    assert meta["command"] == "diagnose"
    assert meta["flow"] == "moffatt"
    assert set(meta) >= {"command", "eps_sing", "fields", "flow", "grid",
                         "params", "t", "timing_seconds", "version"}


# ------------------------------------------------------------------- sample

def test_sample_is_seeded_and_stays_inside_the_box(capsys):
    argv = ["sample", "--flow", "taylor-green",
            "--box", "x=0.3:2.8,y=0.3:2.8", "--n", "7", "--seed", "11",
            "--fields", "f,class"]
    code, out1, _ = run(capsys, argv)
    assert code == 0
    _, header, rows = split_csv(out1)
    assert header == ["x", "y", "f", "class", "flag"]
    assert len(rows) == 7
    for row in rows:
        assert 0.3 <= float(row[0]) <= 2.8
        assert 0.3 <= float(row[1]) <= 2.8
    _, out2, _ = run(capsys, argv)
    assert out1 == out2


def test_sample_rejects_nonpositive_count(capsys):
    code, _, _ = run(capsys, [
        "sample", "--flow", "moffatt", "--box", "x=0:1,y=0:1",
        "--n", "0", "--fields", "f"])
    assert code == 2


# -------------------------------------------------------------------- reduce

def test_reduce_reports_warped_product_fields(capsys):
    code, out, _ = run(capsys, [
        "reduce", "--flow", "hill-interior",
        "--grid", "r=0.5:0.6:2,z=0:0.1:2",
        "--fields", "fhat2+h,Rhat2,R2,E+,E-"])
    assert code == 0
    _, header, rows = split_csv(out)
    assert header == ["r", "z", "fhat2+h", "Rhat2", "R2", "E+", "E-", "flag"]
    row = find_row(header, rows, r=0.5, z=0.0)
    assert row["fhat2+h"] == "2.25"
    assert float(row["Rhat2"]) == pytest.approx(56.0 / 9.0, rel=1e-12)
    assert float(row["R2"]) == pytest.approx(224.0 / 225.0, rel=1e-12)
    assert row["E+"] == "11.25"
    assert row["E-"] == "2.8125"
    assert row["flag"] == ""


def test_reduce_refuses_planar_flows(capsys):
    code, _, err = run(capsys, [
        "reduce", "--flow", "moffatt",
        "--grid", "x=0:1:2,y=0:1:2", "--fields", "fhat2+h"])
    assert code == 3
    assert "reduced" in err


# -------------------------------------------------------------- gauss-bonnet

def test_gauss_bonnet_disc_reports_unit_euler_number(capsys):
    code, out, _ = run(capsys, [
        "gauss-bonnet", "--flow", "psi:0.5*(x^2+y^2)",
        "--disc", "0,0,0.8", "--tol", "1e-5"])
    assert code == 0
    payload = json.loads(out)
    assert payload["chi"] == pytest.approx(1.0, abs=1e-6)
    assert set(payload) >= {"area_term", "boundary_term", "corner_term",
                            "total", "chi", "flow", "tol", "region",
                            "timing_seconds", "version"}


def test_gauss_bonnet_region_flags_are_exclusive(capsys):
    code, _, err = run(capsys, [
        "gauss-bonnet", "--flow", "psi:0.5*(x^2+y^2)",
        "--disc", "0,0,0.8", "--rect", "0,0,1,1"])
    assert code == 2
    assert "exactly one" in err
    code, _, err = run(capsys, [
        "gauss-bonnet", "--flow", "psi:0.5*(x^2+y^2)",
        "--level", "psi=0.1"])
    assert code == 2
    assert "--seed" in err


# ------------------------------------------------------------------ legendre

def test_legendre_table_reports_duals_and_folds(tmp_path, capsys):
    pts = tmp_path / "probes.csv"
    pts.write_text("x,y\n# interior probe\n0.4,0.7\n0.2,0.0\n-0.3,0.5\n")
    code, out, _ = run(capsys, [
        "legendre", "--flow", "moffatt", "--points", str(pts)])
    assert code == 0
    _, header, rows = split_csv(out)
    assert header == ["x", "y", "xi_x", "xi_y", "psi_dual", "sheet",
                      "ma_residual", "round_trip", "flag"]
    assert len(rows) == 3
    good = find_row(header, rows, x=0.4, y=0.7)
    assert good["flag"] == ""
    assert abs(float(good["ma_residual"])) < 1e-9
    assert abs(float(good["round_trip"])) < 1e-9
    fold = find_row(header, rows, x=0.2, y=0.0)
    assert fold["flag"] == "FoldSingularity"
    assert fold["psi_dual"] == "nan"


def test_legendre_rejects_empty_point_files(tmp_path, capsys):
    pts = tmp_path / "empty.csv"
    pts.write_text("# nothing here\n")
    code, _, _ = run(capsys, [
        "legendre", "--flow", "moffatt", "--points", str(pts)])
    assert code == 2


# -------------------------------------------------------------------- verify

def test_verify_reports_pass_and_sample_counts(tmp_path):
    argv = ["verify", "--flow", "larcheveque", "--n", "4", "--seed", "3"]
    a, b = tmp_path / "v1.json", tmp_path / "v2.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["pass"] is True
    flow = report["flows"]["larcheveque"]
    assert flow["pass"] is True
    suites = flow["suites"]
    assert suites["structures"]["samples"]["max"] == 4.0
    assert suites["background"]["samples"]["pass"] is True


def test_verify_covers_reduction_suites_for_warped_flows(capsys):
    code, out, _ = run(capsys, [
        "verify", "--flow", "hill-interior", "--n", "3", "--seed", "1"])
    assert code == 0
    report = json.loads(out)
    suites = report["flows"]["hill-interior"]["suites"]
    assert "reduction" in suites
    assert suites["reduction"]["samples"]["pass"] is True
    assert suites["reduction"]["conformal_match"]["pass"] is True


def test_verify_exits_4_when_a_residual_exceeds_tolerance(monkeypatch, capsys):
    monkeypatch.setattr(cli, "verify_structure",
                        lambda spec, pt, **kw: {"alpha_omega": 1.0})
    code, out, _ = run(capsys, [
        "verify", "--flow", "larcheveque", "--n", "2", "--seed", "0"])
    assert code == 4
    report = json.loads(out)
    assert report["pass"] is False
    entry = report["flows"]["larcheveque"]["suites"]["structures"]
    assert entry["alpha_omega"]["pass"] is False
