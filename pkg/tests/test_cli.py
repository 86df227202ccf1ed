import io
import json

import numpy as np
import pytest

from conftest import example_job, group_spec, make_job, swap_group
from reflfactor.cli import EXIT_COMPUTE, EXIT_OK, EXIT_SCHEMA, dumps, main, run
from reflfactor.polyalg import PolyMap, variables
from reflfactor.unigroup import closure


def test_invariants_swap():
    code, report, summary = run(make_job("invariants", group=group_spec(swap_group(2))))
    assert code == EXIT_OK
    res = report["result"]
    assert res["degrees"] == [1, 2]
    assert res["generators_text"] == [str(g) for g in (variables(2)[0] + variables(2)[1], variables(2)[0] * variables(2)[1])]
    assert all(c["passed"] for c in report["checks"].values())
    assert "degrees [1, 2]" in summary


def test_closure_non_unitary_is_schema_error():
    bad = {"dim": 2, "generators": [[[[2, 0], [0, 0]], [[0, 0], [1, 0]]]]}
    code, report, _ = run(make_job("closure", group=bad))
    assert code == EXIT_SCHEMA
    assert "not unitary" in report["error"]


def test_factorize_example():
    code, report, summary = run(example_job("factorize"))
    assert code == EXIT_OK
    assert report["status"] == "found"
    psi = PolyMap.from_json(report["result"]["psi"])
    w1, w2, w3, w4 = variables(4)
    assert psi == PolyMap([w1, w2, w3, w4**2])
    assert report["result"]["residual"] < 1e-9
    assert "found psi" in summary


def test_factorize_not_found_exits_zero():
    code, report, summary = run(example_job("factorize", degree_cap=1))
    assert code == EXIT_OK
    assert report["status"] == "not-found-within-cap"
    assert "inconclusive" in summary


@pytest.mark.parametrize(
    "job",
    [
        {"command": "explode", "payload": {}},
        {"payload": {}},
        make_job("closure"),
        make_job("closure", group={"dim": "two", "generators": []}),
        make_job("factorize", F={"components": []}),
        {"command": "closure", "payload": {"group": {"dim": 2, "generators": []}}, "tolerances": {"bogus": 1}},
        [1, 2, 3],
    ],
)
def test_malformed_jobs_rejected(job):
    code, report, _ = run(job)
    assert code == EXIT_SCHEMA
    assert report["status"] == "schema-error"


def test_dimension_mismatch_rejected():
    job = example_job("factorize")
    job["payload"]["group"] = group_spec(swap_group(2))
    code, report, _ = run(job)
    assert code == EXIT_SCHEMA
    assert "dimension mismatch" in report["error"]


def test_order_cap_exceeded_is_computation_error():
    G = closure([np.diag([1j, 1])])
    code, report, _ = run(make_job("closure", group=group_spec(G), order_cap=3))
    assert code == EXIT_COMPUTE
    assert "not finite within cap" in report["error"]


def test_invariants_non_reflection_group_ok_via_reflection_subgroup():
    # -I has no reflections; the invariants of the trivial reflection part are coordinates
    code, report, _ = run(make_job("invariants", group=group_spec(closure([-np.eye(2)]))))
    assert code == EXIT_OK
    assert report["result"]["degrees"] == [1, 1]


def test_degree_cap_exceeded_is_computation_error():
    G = closure([np.diag([1, np.exp(2j * np.pi / 5)])])
    code, report, _ = run(make_job("invariants", group=group_spec(G), degree_cap=2))
    assert code == EXIT_COMPUTE
    assert "cap exceeded" in report["error"]


def test_report_echoes_input_and_seed():
    job = example_job("multiplicity", seed=11, trials=3)
    code, report, _ = run(job)
    assert code == EXIT_OK
    assert report["seed"] == 11
    assert report["input"]["payload"] == job["payload"]
    assert report["input"]["command"] == "multiplicity"
    assert set(report["tolerances"]) >= {"identity", "match", "newton_residual", "dedup"}
    assert report["result"]["multiplicity"] == 4


def test_top_level_payload_accepted():
    job = {"command": "closure", "group": group_spec(swap_group(2))}
    code, report, _ = run(job)
    assert code == EXIT_OK and report["result"]["order"] == 2


def test_closure_report_contents():
    code, report, _ = run(make_job("closure", group=group_spec(swap_group(4))))
    res = report["result"]
    assert (res["order"], res["reflection_count"], res["reflection_subgroup_order"]) == (2, 1, 2)
    assert len(res["coset_representatives"]) == 1


def test_orbit_check_job():
    code, report, _ = run(example_job("orbit-check", trials=10))
    assert code == EXIT_OK
    assert report["result"]["failures"] == 0


def test_verify_job_wrong_psi():
    w = variables(4)
    job = example_job("verify", psi=PolyMap(list(w)).to_json(), trials=5)
    code, report, summary = run(job)
    assert code == EXIT_OK
    assert not report["checks"]["identity"]["passed"]
    assert "fails at sample 0" in summary


def test_determinism_byte_identical():
    a = dumps(run(example_job("multiplicity", seed=5, trials=4))[1])
    b = dumps(run(example_job("multiplicity", seed=5, trials=4))[1])
    assert a == b


def test_dumps_seventeen_digits_and_order():
    text = dumps({"b": 0.1, "a": [1, 2.5], "c": {"x": None, "y": True}})
    assert text.index('"b"') < text.index('"a"') < text.index('"c"')
    assert "0.10000000000000001" in text
    assert json.loads(text) == {"b": 0.1, "a": [1, 2.5], "c": {"x": None, "y": True}}


def test_main_flags_override_file(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(example_job("factorize", seed=1, degree_cap=4)))
    code = main([str(path), "--seed", "99", "--degree-cap", "1", "--tol", "1e-8"])
    out, err = capsys.readouterr()
    report = json.loads(out)
    assert code == EXIT_OK
    assert report["seed"] == 99
    assert report["input"]["payload"]["degree_cap"] == 1
    assert report["tolerances"]["identity"] == 1e-8
    assert report["status"] == "not-found-within-cap"
    assert "factorize" in err


def test_main_reads_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(make_job("closure", group=group_spec(swap_group(2))))))
    assert main(["-"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["result"]["order"] == 2


def test_main_unreadable_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main([str(path)]) == EXIT_SCHEMA


def test_main_command_flag(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(make_job("invariants", group=group_spec(swap_group(2)))))
    assert main([str(path), "--command", "closure"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["command"] == "closure"
