import json
import math

import pytest

import lpselect as lp


def test_lp_worked_examples():
    t = lp.Trace("a", [100.0, 40.0, 20.0, 10.0])
    assert lp.lp_exact(t).value == pytest.approx(60 / 90, abs=1e-12)
    assert lp.lp_approx(lp.Trace("b", [100.0, 120.0])).value == pytest.approx(-0.2, abs=1e-12)
    flat = lp.lp_exact(lp.Trace("c", [30.0] * 4))
    assert flat.degenerate and flat.value == 1.0


def test_validation_error_carries_code():
    with pytest.raises(lp.ValidationError) as err:
        lp.lp_exact(lp.Trace("a", [100.0, 40.0]), epoch=2)
    assert err.value.code == "EpochOutOfRange"
    assert isinstance(err.value, ValueError)
    with pytest.raises(OSError):
        lp.load_corpus("/nonexistent/corpus.jsonl")


def test_rank_select_and_compare():
    traces = [lp.Trace(f"s{i}", [100.0, 100.0 - i, 50.0]) for i in range(12)]
    ranking = lp.rank_ascending(lp.score_traces(traces))
    assert ranking[0] == "s0"
    clusters = {f"s{i}": i % 2 for i in range(12)}
    low = lp.select_topk_low(ranking, clusters, 34)
    assert len(low) == 4
    parts = lp.partition_buckets(ranking, clusters)
    assert sorted(parts["low"] + parts["mid"] + parts["high"]) == sorted(ranking)
    rand = lp.select_clust_rand(clusters, 34, seed=3)
    assert len(rand) == len(low)
    assert rand == lp.select_clust_rand(clusters, 34, seed=3)
    assert lp.kendall_tau(ranking, ranking) == 1.0
    assert lp.kendall_tau(ranking, ranking[::-1]) == -1.0
    assert lp.iou(low, low) == 1.0


def test_embed_and_cluster():
    samples, labels = lp.planted_corpus(200, 0.1, 4)
    assert labels.count("hard") == 20
    vecs = lp.embed(samples, dim=64)
    assert all(math.isclose(sum(x * x for x in v), 1.0) for v in vecs)
    r = lp.kmeans([s.id for s in samples], vecs, k=4, seed=1)
    assert len(r["labels"]) == 200 and r["labels"][0] == 0
    hist = r["inertia_history"]
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
    assert lp.auto_cluster_count(15000, 50) == 300


def test_trainer_is_deterministic():
    samples, _ = lp.planted_corpus(40, 0.1, 2)
    a = lp.train_and_trace(samples, hidden_dim=8, epochs=2, seed=1)
    b = lp.train_and_trace(samples, hidden_dim=8, epochs=2, seed=1, threads=3)
    assert a == b
    assert a[0].ppl[0] == pytest.approx(258.0)


def stub_training_loop(path, n_samples, epochs):
    # Writes the trace file a training-loop adapter would emit: one line per
    # sample with perplexity at every epoch boundary. Sample 0 is a stub
    # model whose distribution never changes.
    rows = []
    for i in range(n_samples):
        ppl = [258.0]
        for e in range(1, epochs + 1):
            ppl.append(258.0 if i == 0 else 258.0 / (1 + e * (i + 1)))
        rows.append({"id": f"ex{i}", "ppl": ppl})
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


def test_adapter_trace_file_round_trip(tmp_path):
    path = tmp_path / "traces.jsonl"
    stub_training_loop(path, 5, 3)
    traces = lp.load_traces(str(path))
    assert [t.id for t in traces] == [f"ex{i}" for i in range(5)]
    scores = lp.score_traces(traces)
    assert scores[0].degenerate and scores[0].value == 1.0
    assert not any(s.degenerate for s in scores[1:])

    code, out, err = lp.run_cli(["score", "--traces", str(path)])
    assert code == 0
    assert "1 trace(s) have a degenerate denominator" in err
    lines = [json.loads(x) for x in out.splitlines()]
    assert lines[0]["degenerate"] is True

    lp.write_traces(str(tmp_path / "copy.jsonl"), traces)
    assert lp.load_traces(str(tmp_path / "copy.jsonl")) == traces


def test_cli_exit_codes(tmp_path):
    assert lp.run_cli(["score", "--traces", str(tmp_path / "missing.jsonl")])[0] == 2
    (tmp_path / "bad.jsonl").write_text('{"id":"a","ppl":[1]}\n')
    assert lp.run_cli(["score", "--traces", str(tmp_path / "bad.jsonl")])[0] == 1
