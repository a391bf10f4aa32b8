from vpadjoint.adjoint import account_words
from vpadjoint.bench import bench_cell, bench_instance, format_records, run_bench


def test_counts_repeatable_and_words_match():
    recs1 = run_bench([(30, 6, 4)], ("amgs", "ags", "fd", "blocksys"), repeats=3)
    recs2 = run_bench([(30, 6, 4)], ("amgs", "ags", "fd", "blocksys"), repeats=3)
    for r1, r2 in zip(recs1, recs2):
        assert (r1.flops, r1.words, r1.words_measured) == (r2.flops, r2.words, r2.words_measured)
        assert r1.words == account_words(r1.method, 30, 6, 4)
    amgs, ags, fd, bs = recs1
    assert amgs.words_measured == amgs.words and ags.words_measured == ags.words
    assert bs.status == "skipped" and bs.elapsed_ns is None
    assert not fd.extrapolated and fd.elapsed_ns > 0


def test_fd_extrapolated_beyond_cutoff():
    a, b = bench_instance(100, 10, 10)
    rec = bench_cell("fd", a, b, repeats=1, fd_cutoff=100)
    assert rec.extrapolated and "4000" in rec.note
    amgs = bench_cell("amgs", a, b, repeats=1)
    assert rec.elapsed_ns > amgs.elapsed_ns


def test_amgs_words_n_independent():
    recs = run_bench([(1000, 100, 100), (1000, 10, 100)], ("amgs",), repeats=1)
    assert recs[0].words == recs[1].words == recs[0].words_measured == recs[1].words_measured


def test_errors_are_recorded():
    a, b = bench_instance(6, 2, 2)
    b[:, 1] = b[:, 0]
    rec = bench_cell("amgs", a, b, repeats=1)
    assert rec.status == "error" and "RankDeficient" in rec.note
    assert "error" in format_records([rec], "csv")
