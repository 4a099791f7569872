import json
import os

from causal_text.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")
REVIEWS = os.path.join(DATA, "reviews_fixture.jsonl")
USERS = os.path.join(DATA, "users_fixture.jsonl")


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_synthetic_md_run(self, tmp_path, capsys):
        out = tmp_path / "run1"
        code = run_cli("run", "--scenario", "md", "--source", "synthetic",
                       "--sizes", "200", "400", "--replicates", "2",
                       "--m-imputations", "3", "--seed", "5", "--out", str(out))
        assert code == 0
        files = sorted(os.listdir(out))
        assert "manifest.json" in files
        assert "md.synthetic.1000.naive.dat" in files
        assert "md.synthetic.1000.full.dat" in files
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5
        assert manifest["sizes"] == [200, 400]
        assert manifest["m_imputations"] == 3
        assert manifest["l2_lambda"] == 1e-4  # default echoed

    def test_byte_identical_reruns(self, tmp_path):
        args = ("run", "--scenario", "me", "--source", "synthetic",
                "--sizes", "300", "--replicates", "2", "--seed", "9")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(*args, "--out", str(out1)) == 0
        assert run_cli(*args, "--out", str(out2)) == 0
        for name in os.listdir(out1):
            b1 = (out1 / name).read_bytes()
            b2 = (out2 / name).read_bytes()
            assert b1 == b2, name

    def test_yelp_source_requires_rows(self, tmp_path, capsys):
        code = run_cli("run", "--scenario", "md", "--source", "yelp",
                       "--sizes", "100", "--replicates", "2",
                       "--out", str(tmp_path / "x"))
        assert code == 2

    def test_bad_sizes_exit_code(self, tmp_path):
        code = run_cli("run", "--scenario", "md", "--source", "synthetic",
                       "--sizes", "400", "200", "--replicates", "2",
                       "--out", str(tmp_path / "x"))
        assert code == 2

    def test_yelp_pipeline_end_to_end(self, tmp_path):
        ingest_out = tmp_path / "ingested"
        assert run_cli("ingest", "--reviews", REVIEWS, "--users", USERS,
                       "--out", str(ingest_out), "--min-count", "1") == 0
        run_out = tmp_path / "run"
        code = run_cli("run", "--scenario", "md", "--source", "yelp",
                       "--sizes", "120", "--replicates", "2",
                       "--m-imputations", "2", "--out", str(run_out),
                       "--rows", str(ingest_out / "rows.tsv"))
        assert code == 0
        assert (run_out / "md.yelp.1000.full.dat").exists()


class TestIngest:
    def test_ingest_fixture(self, tmp_path, capsys):
        out = tmp_path / "ing"
        code = run_cli("ingest", "--reviews", REVIEWS, "--users", USERS,
                       "--out", str(out), "--min-count", "1")
        assert code == 0
        printed = capsys.readouterr().out
        assert "rows=5" in printed
        assert "fraction_positive=0.6000" in printed
        assert (out / "rows.tsv").exists()
        assert (out / "vocab.txt").exists()

    def test_missing_file_is_config_error(self, tmp_path):
        code = run_cli("ingest", "--reviews", str(tmp_path / "nope.jsonl"),
                       "--users", USERS, "--out", str(tmp_path / "o"))
        assert code == 2


class TestVocab:
    def test_vocab_to_stdout(self, capsys):
        code = run_cli("vocab", "--reviews", REVIEWS, "--min-count", "2")
        assert code == 0
        tokens = capsys.readouterr().out.split()
        assert tokens == sorted(tokens)
        assert "food" in tokens

    def test_vocab_to_file(self, tmp_path):
        path = tmp_path / "v.txt"
        code = run_cli("vocab", "--reviews", REVIEWS, "--min-count", "1",
                       "--sample", "3", "--out", str(path))
        assert code == 0
        text = path.read_text()
        assert text.startswith("#min_count=1\n#sample_size=3\n")
