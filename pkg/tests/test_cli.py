import json

from regdecode import (
    MAP_OBJECTIVE,
    SearchConfig,
    beam_search,
    load_ngram_model,
    train_ngram,
)
from regdecode.cli import main

from .conftest import FIXTURES


def run(args):
    return main([str(a) for a in args])


def test_train_ngram_round_trip(tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("a b\nb a a\n\n")
    out = tmp_path / "model.json"
    assert run(["train-ngram", corpus, "--order", "2", "--add-k", "0.5", "--out", out]) == 0
    reloaded = load_ngram_model(out)
    direct = train_ngram([line.split() for line in ["a b", "b a a", ""]], 2, 0.5)
    for ctx in (["<s>"], ["a"], ["b"]):
        for tok in ("a", "b", "</s>"):
            assert reloaded.conditional_prob(ctx, tok) == direct.conditional_prob(ctx, tok)
    assert (tmp_path / "model.json.manifest.json").exists()


def test_train_ngram_order_exceeding_line_length(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("a\n")
    out = tmp_path / "model.json"
    assert run(["train-ngram", corpus, "--order", "5", "--out", out]) == 0
    model = load_ngram_model(out)
    assert model.conditional_prob(["<s>", "<s>", "<s>", "<s>"], "a") > 0


def test_train_ngram_missing_file(tmp_path, capsys):
    code = run(["train-ngram", tmp_path / "nope.txt", "--out", tmp_path / "m.json"])
    assert code == 3
    assert capsys.readouterr().err.strip()


def test_decode_with_trained_ngram_model(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("a b\na b\nb a\n")
    model_path = tmp_path / "lm.json"
    assert run(["train-ngram", corpus, "--order", "2", "--out", model_path]) == 0
    inputs = tmp_path / "in.txt"
    inputs.write_text("x\ny\n")
    out = tmp_path / "out.jsonl"
    assert run(["decode", model_path, inputs, "--decoder", "exact", "--n-max", "8",
                "--out", out]) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 2
    # The model ignores the source, so both records agree.
    assert records[0]["tokens"] == records[1]["tokens"]
    assert all(r["complete"] and r["optimality_certificate"] for r in records)


def test_decode_beam_matches_library(tmp_path, m1):
    inputs = tmp_path / "in.txt"
    inputs.write_text("x1\nx2\n")
    out = tmp_path / "out.jsonl"
    assert run([
        "decode", FIXTURES / "m1.json", inputs,
        "--decoder", "beam", "--k", "5", "--objective", "", "--n-max", "6", "--out", out,
    ]) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 2
    expected = beam_search(m1, ["x1"], MAP_OBJECTIVE, SearchConfig(beam_width=5, n_max=6))
    assert records[0]["tokens"] == list(expected.best.surface)
    assert records[0]["log_prob"] == expected.best.log_prob
    assert records[0]["surprisals"] == list(expected.best.trace)
    assert records[0]["total"] == expected.best.score
    assert records[0]["source"] == "x1"


def test_decode_exact_sets_certificates(tmp_path):
    inputs = tmp_path / "in.txt"
    inputs.write_text("s1\ns2\ns3\n")
    out = tmp_path / "out.jsonl"
    assert run([
        "decode", FIXTURES / "m3.json", inputs,
        "--decoder", "exact", "--objective", "greedy=10", "--n-max", "6", "--out", out,
    ]) == 0
    for line in out.read_text().splitlines():
        assert json.loads(line)["optimality_certificate"] is True


def test_decode_objective_echoed_in_manifest(tmp_path):
    inputs = tmp_path / "in.txt"
    inputs.write_text("x\n")
    out = tmp_path / "out.jsonl"
    assert run([
        "decode", FIXTURES / "m1.json", inputs,
        "--objective", "greedy=5,square=2", "--n-max", "6", "--out", out,
    ]) == 0
    manifest = json.loads((tmp_path / "out.jsonl.manifest.json").read_text())
    assert manifest["config"]["objective"] == "greedy=5,square=2"
    assert manifest["command"] == "decode"
    assert len(manifest["model_digest"]) == 64


def test_decode_bad_objective_is_usage_error(tmp_path, capsys):
    inputs = tmp_path / "in.txt"
    inputs.write_text("x\n")
    code = run([
        "decode", FIXTURES / "m1.json", inputs,
        "--objective", "coverage=1", "--out", tmp_path / "out.jsonl",
    ])
    assert code == 2
    assert "coverage" in capsys.readouterr().err


def test_decode_workers_preserve_input_order(tmp_path):
    inputs = tmp_path / "in.txt"
    inputs.write_text("s1\ns2\ns3\n")
    seq = tmp_path / "seq.jsonl"
    par = tmp_path / "par.jsonl"
    base = ["decode", FIXTURES / "m3.json", inputs, "--decoder", "exact", "--n-max", "6"]
    assert run(base + ["--out", seq]) == 0
    assert run(base + ["--workers", "4", "--out", par]) == 0
    assert seq.read_text() == par.read_text()


def test_sweep_single_lambda_matches_decode(tmp_path, m3):
    out = tmp_path / "rows.csv"
    assert run([
        "sweep", FIXTURES / "m3.json", FIXTURES / "m3.inputs.txt", FIXTURES / "m3.refs.txt",
        "--objective-kind", "greedy", "--lambdas", "0", "--decoder", "exact",
        "--n-max", "6", "--out", out,
    ]) == 0
    header, row = out.read_text().splitlines()
    assert header == "lambda,k,bleu,mean_sigma,mean_len,empty_rate"
    fields = row.split(",")
    assert float(fields[0]) == 0.0
    assert float(fields[5]) == 1.0  # every optimum is the empty string
    assert float(fields[4]) == 0.0


def test_sweep_lambda_extremes_flip_empty_rate(tmp_path):
    out = tmp_path / "rows.csv"
    assert run([
        "sweep", FIXTURES / "m3.json", FIXTURES / "m3.inputs.txt", FIXTURES / "m3.refs.txt",
        "--objective-kind", "greedy", "--lambdas", "0,1e6", "--decoder", "exact",
        "--n-max", "6", "--out", out,
    ]) == 0
    rows = out.read_text().splitlines()[1:]
    rates = [float(r.split(",")[5]) for r in rows]
    assert rates == [1.0, 0.0]


def test_sweep_k_non_increasing_bleu(tmp_path):
    out = tmp_path / "rows.csv"
    assert run([
        "sweep", FIXTURES / "beam_family.json",
        FIXTURES / "beam_family.inputs.txt", FIXTURES / "beam_family.refs.txt",
        "--objective-kind", "none", "--lambdas", "0", "--ks", "1,2,4,8",
        "--decoder", "beam", "--n-max", "8", "--out", out,
    ]) == 0
    rows = out.read_text().splitlines()[1:]
    bleus = [float(r.split(",")[2]) for r in rows]
    assert len(bleus) == 4
    assert all(a >= b for a, b in zip(bleus, bleus[1:]))


def test_sweep_misaligned_refs_rejected(tmp_path, capsys):
    refs = tmp_path / "refs.txt"
    refs.write_text("a b\n")
    code = run([
        "sweep", FIXTURES / "m3.json", FIXTURES / "m3.inputs.txt", refs,
        "--lambdas", "0", "--out", tmp_path / "rows.csv",
    ])
    assert code == 2


def test_verify_bleu_suite(capsys):
    assert run(["verify", "--suite", "bleu"]) == 0
    assert "4/4" in capsys.readouterr().out


def test_verify_exactness_small(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert run(["--seed", "5", "verify", "--suite", "exactness", "--trials", "5",
                "--out", report]) == 0
    payload = json.loads(report.read_text())
    assert payload["passed"] == payload["checks"]
    assert payload["failures"] == []


def test_verify_reports_are_bit_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(["--seed", "11", "verify", "--suite", "thm2", "--trials", "4",
                    "--out", path]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_outputs_are_bit_identical(tmp_path):
    outs = []
    for name in ("r1.csv", "r2.csv"):
        out = tmp_path / name
        assert run([
            "sweep", FIXTURES / "m3.json", FIXTURES / "m3.inputs.txt",
            FIXTURES / "m3.refs.txt", "--objective-kind", "greedy",
            "--lambdas", "0,20,1e6", "--decoder", "exact", "--n-max", "6",
            "--out", out,
        ]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_seed_env_var_default(tmp_path, monkeypatch):
    monkeypatch.setenv("REGDECODE_SEED", "123")
    from regdecode.cli import build_parser

    args = build_parser().parse_args(["verify", "--suite", "bleu"])
    assert args.seed == 123
