import json

import numpy as np
import pytest

from sheafhist import linalg as la
from sheafhist.cli import COMMANDS, EXIT_OK, EXIT_SCENARIO, EXIT_VERIFY, main, run
from sheafhist.errors import ScenarioError, SheafHistError
from sheafhist.report import Report
from sheafhist.scenario import FIXTURES, eigenprojectors, load_scenario, parse_scenario, spectral_projector

MINIMAL = {
    "name": "mini",
    "dims": [2],
    "kets": {"z+": [1, 0]},
    "projectors": {"Pz+": [[1, 0], [0, 0]]},
    "contexts": {"z": {"generators": ["Pz+"]}},
    "checks": {"truth": [{"state": "z+", "proposition": "Pz+"}]},
}


def _text(d):
    return json.dumps(d, indent=2)


def test_minimal_scenario():
    sc = parse_scenario(_text(MINIMAL))
    assert sc.poset().n == 2
    assert sc.poset().labels == ("trivial", "z")


def test_non_commuting_family_names_the_pair():
    raw = dict(MINIMAL)
    raw["projectors"] = {"Pz+": [[1, 0], [0, 0]], "Px+": [[0.5, 0.5], [0.5, 0.5]]}
    raw["contexts"] = {"bad": {"generators": ["Pz+", "Px+"]}}
    with pytest.raises(SheafHistError) as info:
        parse_scenario(_text(raw))
    msg = str(info.value)
    assert "Pz+" in msg and "Px+" in msg and "bad" in msg


def test_spectral_projector_from_observable():
    assert la.is_close(spectral_projector(la.diag(1, -1), [1]), la.diag(1, 0))
    raw = dict(MINIMAL)
    raw["observables"] = {"Z": [[1, 0], [0, -1]]}
    raw["projectors"] = {"Pz+": {"observable": "Z", "delta": [1]}}
    sc = parse_scenario(_text(raw))
    assert la.is_close(sc.projectors["Pz+"], la.diag(1, 0))
    ex = parse_scenario(_text(raw), exact=True)
    assert la.is_exact(ex.projectors["Pz+"])


def test_eigenprojectors_resolve_identity():
    obs = np.array([[2, 1, 0], [1, 2, 0], [0, 0, 3]], dtype=float)
    ps = eigenprojectors(obs)
    assert len(ps) == 2
    assert la.is_close(sum(la.to_float(p) for p in ps), np.eye(3))


def test_parse_error_reports_position():
    bad = '{\n  "name": "x",\n  "dims": [2],\n  "kets": {,}\n}'
    with pytest.raises(ScenarioError) as info:
        parse_scenario(bad, source="bad.json")
    err = info.value
    assert (err.line, err.column) == (4, 12)
    assert str(err).startswith("bad.json:4:")


@pytest.mark.parametrize("mutate,needle", [
    (lambda r: r["kets"].update({"z+": [1, 1]}), "z+"),
    (lambda r: r["projectors"].update({"Pz+": [[1, 1], [0, 0]]}), "Pz+"),
    (lambda r: r["checks"]["truth"].append({"state": "nope", "proposition": "Pz+"}), "nope"),
    (lambda r: r.update({"surprise": 1}), "surprise"),
])
def test_invariant_violations_name_the_object(mutate, needle):
    raw = json.loads(_text(MINIMAL))
    mutate(raw)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(_text(raw))
    assert needle in str(info.value)


def test_unknown_fixture():
    with pytest.raises(SheafHistError):
        load_scenario("no-such-fixture")


def test_expression_scalars():
    raw = {
        "name": "expr", "dims": [2],
        "kets": {"x+": ["1/sqrt(2)", "1/sqrt(2)"], "y+": [["1/sqrt(2)", 0], [0, "1/sqrt(2)"]]},
        "projectors": {"Pz+": [[1, 0], [0, 0]]},
        "contexts": {"z": {"generators": ["Pz+"]}},
    }
    sc = parse_scenario(_text(raw))
    assert la.is_close(sc.kets["y+"], np.array([1, 1j]) / np.sqrt(2))
    raw["kets"]["evil"] = ["__import__('os')", 0]
    with pytest.raises(ScenarioError):
        parse_scenario(_text(raw))


def test_exact_mode_tracks_inexact_objects():
    sc = load_scenario("two-time-qubit", exact=True)
    assert sc.exact
    assert la.is_exact(sc.projectors["Pz+"])
    assert "H" in " ".join(sc.inexact)


# ---------------------------------------------------------------------------
# commands


def test_truth_command_principal_everywhere(scenarios):
    r = run("truth", scenarios["qubit-z"])
    first = r.results["truth_values"][0]
    assert first["totally_true"]
    assert all(s["annotation"] == "principal" for s in first["sieves"].values())


def test_ks_command(scenarios):
    r = run("ks", scenarios["peres-mermin-dim4"])
    assert r.results["slot 0"]["global sections"] == 0 and r.passed
    assert "global sections: 0" in r.render_text()


def test_verify_tensor_on_z_squared(scenarios):
    r = run("verify-tensor", scenarios["two-time-qubit"])
    assert r.passed
    ex = r.results["tensor"]["notes"]["exhaustive"]
    assert ex["product_subobjects"] == ex["h_images"]


@pytest.mark.parametrize("fixture", FIXTURES)
@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_on_every_fixture(fixture, command, capsys, tmp_path):
    out = tmp_path / "r.json"
    code = main([command, "--scenario", fixture, "--samples", "10", "--out", str(out)])
    text = capsys.readouterr().out
    assert code in (EXIT_OK, EXIT_SCENARIO)
    if command == "decohere" and load_scenario(fixture).density is None:
        assert code == EXIT_SCENARIO
        return
    assert code == EXIT_OK
    # the saved report re-renders to the same text
    assert Report.from_json(out.read_text()).render_text() == text
    assert main(["render", str(out)]) == EXIT_OK
    assert capsys.readouterr().out == text


def test_reports_are_deterministic(scenarios):
    a = run("verify-heyting", scenarios["qubit-zx"]).to_json()
    b = run("verify-heyting", load_scenario("qubit-zx")).to_json()
    assert a == b


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["truth", "--scenario", str(bad)]) == EXIT_SCENARIO
    raw = json.loads(_text(MINIMAL))
    raw["checks"] = {"ks": {"expect": 5}}
    wrong = tmp_path / "wrong.json"
    wrong.write_text(_text(raw), encoding="utf-8")
    assert main(["ks", "--scenario", str(wrong)]) == EXIT_VERIFY
    # a search cap that is too small is an input error, not a verdict
    assert main(["ks", "--scenario", "peres-mermin-dim4", "--max-sections", "3"]) == EXIT_SCENARIO
    assert main(["ks", "--scenario", "qubit-z", "--max-sections", "100"]) == EXIT_OK
    assert main(["render", str(tmp_path / "missing.json")]) == EXIT_SCENARIO
    capsys.readouterr()


def test_json_flag(capsys):
    assert main(["contexts", "--scenario", "qubit-zx", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["command"] == "contexts"
    assert set(data["results"]["slot 0"]["contexts"]) == {"trivial", "z", "x"}


@pytest.mark.parametrize("fixture", FIXTURES)
def test_exact_mode_verdicts_match_float(fixture):
    for command in ("truth", "ks", "history-truth", "daseinize", "demo-entangled"):
        f = run(command, load_scenario(fixture))
        e = run(command, load_scenario(fixture, exact=True))
        assert f.passed == e.passed
        if command in ("truth", "history-truth", "ks"):
            assert f.results == e.results


# ---------------------------------------------------------------------------
# fuzz: generated scenarios never crash a command


def _rotation(rng, dim):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q


def _generated(rng, k):
    slots = [[2], [3], [2, 2], [2, 3]][k % 4]
    dim = slots[0]
    raw = {"name": f"gen-{k}", "dims": slots, "kets": {}, "observables": {}, "projectors": {}, "contexts": {}}
    for i in range(2):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        raw["kets"][f"k{i}"] = {"amplitudes": [[float(z.real), float(z.imag)] for z in v], "normalize": True}
    for i in range(int(rng.integers(1, 4))):
        q = _rotation(rng, dim) if rng.random() < 0.6 else np.eye(dim)
        vals = rng.integers(-1, 2, size=dim).astype(float)
        obs = q @ np.diag(vals) @ q.T
        raw["observables"][f"A{i}"] = obs.tolist()
        raw["contexts"][f"c{i}"] = {"generators": [f"A{i}"], "slot": 0}
        raw["projectors"][f"P{i}"] = {"observable": f"A{i}", "delta": [float(vals[0])]}
    if len(slots) == 2:
        d2 = slots[1]
        q = _rotation(rng, d2)
        raw["observables"]["B"] = (q @ np.diag(np.arange(d2, dtype=float)) @ q.T).tolist()
        raw["contexts"]["b"] = {"generators": ["B"], "slot": 1}
        raw["projectors"]["Q"] = {"observable": "B", "delta": [0]}
        raw["kets"]["r0"] = [1] + [0] * (d2 - 1)
    raw["density"] = {"ket": "k0"}
    raw["evolution"] = "trivial"
    raw["histories"] = {
        "h0": {"times": [0, 1], "projectors": ["P0", "P0"]},
        "h1": {"not": "h0"},
    }
    names = sorted(raw["projectors"])
    raw["checks"] = {
        "daseinize": names[:2],
        "truth": [{"state": "k1", "proposition": "P0"}],
        "decohere": {"families": [["h0", "h1"]]},
        "verify": {"samples": 4, "seed": int(rng.integers(1000))},
    }
    if slots == [2, 2]:
        raw["unitaries"] = {"U": _rotation(rng, 2).tolist()}
        raw["checks"]["history_truth"] = [{"initial": "k0", "evolution": ["U"], "propositions": ["P0", "Q"]}]
    return raw


def test_fuzz_generated_scenarios():
    rng = np.random.default_rng(2024)
    loaded = 0
    for k in range(100):
        raw = _generated(rng, k)
        try:
            sc = parse_scenario(json.dumps(raw))
        except ScenarioError:
            continue
        loaded += 1
        for command in COMMANDS:
            try:
                r = run(command, sc)
            except SheafHistError:
                continue
            if command.startswith("verify"):
                assert r.passed, (k, command, r.results)
            assert Report.from_json(r.to_json()).render_text() == r.render_text()
    assert loaded >= 90
