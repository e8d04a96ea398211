import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

from ldsources.cli import CSV_COLUMNS, EXIT_COMPUTE, EXIT_INVALID, EXIT_OK, main

from conftest import TABLE1

SPECS = Path(__file__).resolve().parents[1] / "specs"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, text, name="x.spec"):
    f = tmp_path / name
    f.write_text(text)
    return str(f)


class TestTable1:
    def test_bundled_example(self, capsys):
        code, out, _ = run(["table1", "--format", "csv"], capsys)
        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(out)))
        assert list(rows[0]) == CSV_COLUMNS
        for row in rows:
            assert abs(float(row["probability"]) - TABLE1[int(row["n"])]) <= 5e-4
            assert len(row["probability"].split(".")[1]) == 6

    def test_text_rows(self, capsys):
        code, out, _ = run(["table1"], capsys)
        assert code == EXIT_OK
        lines = out.strip().splitlines()[2:]
        assert [ln.split()[0] for ln in lines] == ["50", "100", "200", "300"]

    def test_huge_epsilon(self, tmp_path, capsys):
        text = (Path(__file__).resolve().parents[1] / "src/ldsources/data/example.spec").read_text()
        f = write(tmp_path, text.replace('epsilon: "1/10"', 'epsilon: "3"'))
        code, out, _ = run(["table1", "--spec", f, "--format", "csv"], capsys)
        assert code == EXIT_OK
        assert all(r["probability"] == "1.000000" for r in csv.DictReader(io.StringIO(out)))

    def test_schedule_not_multiple(self, tmp_path, capsys):
        text = (Path(__file__).resolve().parents[1] / "src/ldsources/data/example.spec").read_text()
        f = write(tmp_path, text.replace("schedule: {k: [5, 10, 20, 30]}", "schedule: {n: [50, 55]}"))
        code, _, err = run(["table1", "--spec", f], capsys)
        assert code == EXIT_INVALID
        assert "n = k*n0" in err

    def test_half_l1_does_not_reproduce(self, capsys):
        code, out, _ = run(["table1", "--ball", "half-l1", "--format", "csv"], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert any(abs(float(r["probability"]) - TABLE1[int(r["n"])]) > 5e-4 for r in rows)

    def test_types_side(self, capsys):
        code, out, _ = run(["table1", "--spec", str(SPECS / "types_demo.spec"), "--format", "csv"], capsys)
        assert code == EXIT_OK
        probs = [float(r["probability"]) for r in csv.DictReader(io.StringIO(out))]
        assert probs[-1] > 0.95


class TestProject:
    def test_l(self, capsys):
        code, out, _ = run(["project", "--which", "l"], capsys)
        assert code == EXIT_OK
        assert "[0.705, 0.073, 0.039, 0.183]" in out

    def test_i_uniform(self, tmp_path, capsys):
        f = write(tmp_path, 'alphabet: {values: [1, 2, 3, 4]}\nsource: ["1/4", "1/4", "1/4", "1/4"]\nset: {eq: {u: values, a: "17/10"}}\n')
        code, out, _ = run(["project", "--which", "i", "--spec", f, "--format", "csv"], capsys)
        assert code == EXIT_OK
        row = next(csv.DictReader(io.StringIO(out)))
        assert row["kind"] == "i-linear"
        assert float(row["constraint_residual"]) < 1e-10

    @pytest.mark.parametrize("which", ["i", "l"])
    def test_feasible_fixed_point(self, tmp_path, capsys, which):
        f = write(
            tmp_path,
            'alphabet: {values: [1, 2, 3, 4]}\ntype: [4, 3, 2, 1]\nsource: ["2/5", "3/10", "1/5", "1/10"]\n'
            'set: {eq: {u: values, a: "2"}}\n',
        )
        code, out, _ = run(["project", "--which", which, "--spec", f, "--format", "csv"], capsys)
        row = next(csv.DictReader(io.StringIO(out)))
        assert [float(x) for x in row["pmf"].split()] == pytest.approx([0.4, 0.3, 0.2, 0.1], abs=1e-12)
        assert float(row["theta"]) == pytest.approx(0.0, abs=1e-12)

    def test_infeasible_is_computation_failure(self, tmp_path, capsys):
        f = write(tmp_path, 'alphabet: {values: [1, 2]}\ntype: [1, 1]\nset: {eq: {u: values, a: "3"}}\n')
        code, _, err = run(["project", "--spec", f], capsys)
        assert code == EXIT_COMPUTE
        assert "computation failed" in err


class TestSanov:
    def test_sources_side_bounds(self, capsys):
        code, out, _ = run(["sanov", "--format", "csv"], capsys)
        assert code == EXIT_OK
        for r in csv.DictReader(io.StringIO(out)):
            assert float(r["lower"]) <= float(r["rate"]) <= float(r["upper"])

    def test_simplex_rates_zero(self, tmp_path, capsys):
        f = write(tmp_path, "type: [1, 1, 3]\nschedule: {k: [1, 2, 4]}\n")
        code, out, _ = run(["sanov", "--format", "csv", "--spec", f], capsys)
        assert all(float(r["rate"]) == 0.0 for r in csv.DictReader(io.StringIO(out)))

    def test_types_side_gap_shrinks(self, capsys):
        code, out, _ = run(["sanov", "--side", "types", "--format", "csv", "--spec", str(SPECS / "types_demo.spec")], capsys)
        errs = [float(r["abs_error"]) for r in csv.DictReader(io.StringIO(out))]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_log_base_two(self, capsys):
        _, e, _ = run(["sanov", "--format", "csv"], capsys)
        _, b, _ = run(["sanov", "--format", "csv", "--log-base", "2"], capsys)
        re = next(csv.DictReader(io.StringIO(e)))
        rb = next(csv.DictReader(io.StringIO(b)))
        assert float(rb["rate"]) == pytest.approx(float(re["rate"]) / 0.6931471805599453, rel=1e-15)
        assert rb["probability"] == re["probability"]


class TestOtherCommands:
    def test_map(self, capsys):
        code, out, _ = run(["map", "--format", "csv"], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert rows[0]["map_source"] == "35 4 2 9"
        assert all(r["in_set"] == "true" for r in rows)

    def test_enumerate_out(self, tmp_path, capsys):
        out = tmp_path / "types.txt"
        code, _, _ = run(["enumerate", "--out", str(out)], capsys)
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        body = [ln for ln in lines if not ln.startswith("#")]
        assert all(sum(int(x) * v for x, v in zip(ln.split(), (1, 2, 3, 4))) * 10 == 17 * sum(map(int, ln.split())) for ln in body)

    def test_quantize_partitions(self, capsys):
        code, out, _ = run(["quantize", "--spec", str(SPECS / "partition_demo.spec")], capsys)
        assert code == EXIT_OK and "max" in out

    def test_quantize_needs_input(self, capsys):
        code, _, _ = run(["quantize"], capsys)
        assert code == EXIT_INVALID

    def test_bad_spec(self, tmp_path, capsys):
        f = write(tmp_path, "type: [1, 1]\nunknown: 3\n")
        code, _, err = run(["table1", "--spec", f], capsys)
        assert code == EXIT_INVALID and "unknown key" in err

    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["table1", "--jobs", "0"])
        assert exc.value.code == 2


DETERMINISM = [
    ["table1"],
    ["project", "--which", "l"],
    ["sanov"],
    ["map"],
    ["enumerate"],
    ["table1", "--spec", str(SPECS / "types_demo.spec")],
    ["sanov", "--side", "types", "--spec", str(SPECS / "types_demo.spec")],
    ["sanov", "--spec", str(SPECS / "dynamic_demo.spec")],
    ["map", "--spec", str(SPECS / "prior_demo.spec")],
    ["quantize", "--spec", str(SPECS / "prior_demo.spec")],
]


class TestDeterminism:
    @pytest.mark.parametrize("argv", DETERMINISM, ids=lambda a: " ".join(a[:2]))
    def test_jobs_byte_identical(self, argv, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--format", "csv", "--jobs", "1", "--out", str(a)]) == EXIT_OK
        assert main(argv + ["--format", "csv", "--jobs", "4", "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ldsources", "table1"], capture_output=True, text=True, check=True)
    assert "0.867643" in res.stdout
