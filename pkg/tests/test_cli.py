import io
import json
import subprocess
import sys

import pytest

from fractalgroups import catalog, dynamics
from fractalgroups.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_word_problem_examples():
    assert call("wp", "--group", "grigorchuk", "--word", "adadadad") == (0, "identity\n", "")
    assert call("wp", "--group", "grigorchuk", "--word", "adad")[1] == "nontrivial\n"


def test_hanoi_spectrum_example():
    code, text, _ = call("spectrum", "hanoi3", "--level", "2", "--adjacency")
    rows = text.splitlines()
    assert code == 0 and rows[0] == "value,multiplicity"
    mults = [int(r.split(",")[1]) for r in rows[1:]]
    assert len(mults) == 5 and sum(mults) == 9


def test_walk_fixed_point_example():
    assert call("walk", "fixedpoint") == (0, "4/7 1/7 1/7 1/7\n", "")


def test_walk_k1_prints_rationals():
    assert call("walk", "k1", "--at", "4/7,1/7,1/7,1/7")[1] == "2/7 1/14 1/14 1/14 1/2\n"


def test_schur_derive_example():
    code, text, _ = call("schur", "derive", "--group", "grigorchuk", "--at", "x=1,y=1,z=1,u=1,v=0")
    assert code == 0
    assert text.splitlines()[1].split()[:2] == ["S2", "-2/3"]


def test_exit_codes():
    assert call()[0] == 1
    assert call("bogus")[0] == 1
    assert call("spectrum", "hanoi3", "--level", "2", "--exact")[0] == 1
    assert call("map", "render", "--id", "basilica", "--exact")[0] == 1
    assert call("map", "render", "--id", "basilica", "--window", "1:2")[0] == 1
    code, _, err = call("walk", "k1", "--at", "0,1/2,1/2,0")
    assert code == 2 and "Indeterminate" in err
    assert call("schur", "derive", "--group", "grigorchuk", "--at", "x=1,y=1,z=1,u=1,v=1")[0] == 2
    assert call("walk", "k1hat", "--at", "1,0,0,0")[0] == 2


def test_catalog_listing_covers_all_groups():
    code, text, _ = call("catalog", "list")
    assert code == 0
    assert [line.split("\t")[0] for line in text.splitlines()] == catalog.names()


def test_json_round_trip(tmp_path):
    code, text, _ = call("catalog", "show", "grigorchuk", "--json")
    assert code == 0
    path = tmp_path / "grig.json"
    path.write_text(text)
    for word in ("adadadad", "abab", "bcd", "acab"):
        by_name = call("wp", "--group", "grigorchuk", "--word", word)
        by_file = call("wp", "--machine", str(path), "--word", word)
        assert by_name == by_file
    assert call("act", "--machine", str(path), "--word", "ab", "--vertex", "0110") == \
        call("act", "--group", "grigorchuk", "--word", "ab", "--vertex", "0110")
    again = call("catalog", "show", "grigorchuk", "--json")[1]
    assert json.loads(again) == json.loads(text)


def test_malformed_machine_is_a_domain_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"alphabet": 2, "states": [{"name": "a", "out": [0, 0], "to": ["a", "zz"]}],
                                "generators": ["a"]}))
    assert call("wp", "--machine", str(path), "--word", "a")[0] == 2


def test_act_matches_library():
    spec = catalog.get("grigorchuk")
    from fractalgroups import treeauto

    expected = "".join(map(str, treeauto.apply(spec.word("ab"), (0, 1, 1, 0))))
    assert call("act", "--group", "grigorchuk", "--word", "ab", "--vertex", "0110")[1] == expected + "\n"


def test_growth_csv():
    code, text, _ = call("growth", "--group", "grigorchuk", "--radius", "6")
    rows = [r.split(",") for r in text.splitlines()[1:]]
    assert [int(r[2]) for r in rows] == [1, 5, 11, 23, 40, 68, 108]


def test_schreier_csv_matches_golden():
    from pathlib import Path

    golden = (Path(__file__).parent / "golden" / "grigorchuk_level1.csv").read_text()
    assert call("schreier", "--group", "grigorchuk", "--level", "1", "--format", "csv")[1] == golden


def test_negative_window_values_and_hash(tmp_path):
    path = tmp_path / "b.ppm"
    code, text, _ = call("map", "render", "--id", "basilica", "--window", "-4:4:-4:4", "--res", "64",
                         "--iters", "40", "--out", str(path))
    assert code == 0
    shown, digest = text.split()
    img = dynamics.render("basilica", (-4, 4, -4, 4), 64, 40)
    assert digest == dynamics.image_hash(img)
    assert path.read_bytes() == dynamics.ppm_bytes(img)


def test_render_bytes_are_deterministic_across_processes(tmp_path):
    outputs = []
    for i in range(2):
        path = tmp_path / f"f{i}.ppm"
        cmd = [sys.executable, "-m", "fractalgroups", "map", "render", "--id", "F4", "--window", "-4:4:-4:4",
               "--res", "64", "--iters", "50", "--params", "alpha=1,beta=3,gamma=1.5,delta=2.5",
               "--out", str(path)]
        done = subprocess.run(cmd, capture_output=True, text=True, check=True)
        outputs.append((done.stdout.split()[1], path.read_bytes()))
    assert outputs[0] == outputs[1]


def test_exact_orbit_output():
    code, text, _ = call("map", "orbit", "--id", "F", "--point", "2,0", "--n", "2", "--exact")
    assert code == 0 and text.splitlines()[:3] == ["2 0", "2 0", "2 0"]


def test_walk_iterate_csv():
    code, text, _ = call("walk", "iterate", "--at", "1/4,1/4,1/4,1/4", "--n", "1", "--exact")
    assert text.splitlines() == ["step,x,y,z,u", "0,1/4,1/4,1/4,1/4", "1,10/13,1/13,1/13,1/13"]


def test_subshift_commands():
    assert call("subshift", "eta", "--length", "7")[1] == "acabaca\n"
    code, text, _ = call("subshift", "relators", "--k", "1", "--verify")
    assert code == 0 and all(line.endswith(" identity") for line in text.splitlines())
    periods = call("subshift", "periods", "--length", "256")[1].splitlines()[1:]
    for row in periods:
        if not row.startswith("#"):
            p = int(row.split(",")[0])
            assert p & (p - 1) == 0


def test_dos_cdf_ends_at_one():
    code, text, _ = call("dos", "grigorchuk", "--level", "4")
    last = text.splitlines()[-1].split(",")
    assert code == 0 and float(last[1]) == pytest.approx(1)


def test_float_formatting_is_lossless():
    code, text, _ = call("spectrum", "hanoi3", "--level", "2", "--adjacency")
    for row in text.splitlines()[1:]:
        value = row.split(",")[0]
        assert float(value) == float(repr(float(value)))
        assert format(float(value), ".17g") == value


def test_repeated_text_output_is_identical():
    args = ("spectrum", "grigorchuk", "--level", "5")
    assert call(*args) == call(*args)
