"""Acceptance gate: one test per criterion, each at its stated tolerance.

The terminal summary prints one PASS/FAIL line per criterion (see conftest).
Everything runs offline against the deterministic mock backend; the one
hosted-model check is an operator-run task and is skipped here.
"""

import random
import subprocess
import sys
import time
from dataclasses import replace

import pytest

from ldi.attributes import (
    DependencyConfig,
    GroupPatternSet,
    SamplingConfig,
    detect_group_patterns,
    evaluate_dependency,
    filter_unique_patterns,
    group_sample,
    prune_contained,
    select_attributes,
    selected_attributes,
)
from ldi.backend import BackendConfig
from ldi.metrics import exact_match, rouge1_f1
from ldi.mining import (
    DocumentSet,
    ceil_threshold,
    frequent_substrings,
    longest_common_substring,
)
from ldi.pipeline import PipelineConfig, run_pipeline
from ldi.synth import planted_table
from ldi.table import MISSING, Table, dump_table, mask_cells
from ldi.tuples import select_examples, tuple_similarity
from oracles import diverse_selection_by_scan, dp_lcs_length, enumerate_frequent, lcs_by_scan


def pattern_set(key, patterns):
    return GroupPatternSet(key=key, patterns={p: 2 for p in patterns}, size=3)


def test_criterion_01_frequent_substring_chain(criterion):
    with criterion(1, "worked-example mining chain ends at {aa, ab}"):
        started = time.perf_counter()
        mined = frequent_substrings(DocumentSet(("aab", "aa", "ab")), 0.6)
        assert mined.entries == {"a": 3, "aa": 2, "ab": 2, "b": 2}
        assert set(mined.entries) == {"a", "aa", "ab", "b"}
        # "a" is frequent in a second group, so uniqueness removes it
        other = frequent_substrings(DocumentSet(("a", "ac", "a")), 0.6)
        assert "a" in other.entries
        g1 = GroupPatternSet(key="g1", patterns=mined.entries, size=3)
        g2 = GroupPatternSet(key="g2", patterns=other.entries, size=3)
        unique = filter_unique_patterns([g1, g2])[0]
        assert set(unique.patterns) == {"aa", "ab", "b"}
        final = prune_contained(unique)
        assert set(final.patterns) == {"aa", "ab"}
        assert time.perf_counter() - started < 1.0


def test_criterion_02_dependency_verdicts(criterion):
    with criterion(2, "4-of-5 supporting groups: true at p=0.8, false at p=0.9"):
        sets = [
            pattern_set("g1", {"aa", "ab"}),
            pattern_set("g2", {"cc", "ac"}),
            pattern_set("g3", {"d"}),
            pattern_set("g4", set()),
            pattern_set("g5", {"ee"}),
        ]
        assert evaluate_dependency(sets, 0.8).verdict is True
        assert evaluate_dependency(sets, 0.9).verdict is False


def test_criterion_03_similarity_and_selection(criterion):
    with criterion(3, "worked similarities 0.708/0.500/0.667; k=1 and k=2 picks"):
        t = Table(
            ("A1", "A2", "AT"),
            (
                ("ab", "defg", "X"),
                ("bc", "fg", "Y"),
                ("cab", "ef", "X"),
                ("abc", "def", MISSING),
            ),
        )
        attrs = ["A1", "A2"]
        assert tuple_similarity(t, 3, 0, attrs).value == pytest.approx(0.708, abs=1e-3)
        assert tuple_similarity(t, 3, 1, attrs).value == pytest.approx(0.500, abs=1e-9)
        assert tuple_similarity(t, 3, 2, attrs).value == pytest.approx(0.667, abs=1e-3)
        assert select_examples(t, 3, attrs, "AT", k=1).rows() == [0]
        assert select_examples(t, 3, attrs, "AT", k=2).rows() == [0, 1]


def test_criterion_04_mining_matches_enumeration(criterion):
    with criterion(4, "tree mining == brute-force enumeration on 500 random sets"):
        started = time.perf_counter()
        rng = random.Random(404)
        for _ in range(500):
            n = rng.randint(1, 10)
            alphabet = "abcd"[: rng.randint(1, 4)]
            docs = tuple(
                "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 10)))
                for _ in range(n)
            )
            for q in (0.3, 0.5, 0.9, 1.0):
                got = frequent_substrings(DocumentSet(docs), q).entries
                assert got == enumerate_frequent(docs, q), (docs, q)
        assert time.perf_counter() - started < 30.0


def test_criterion_05_lcs_matches_dp_oracle(criterion):
    with criterion(5, "LCS length == DP oracle on 1000 pairs; tie rule on 50 cases"):
        rng = random.Random(505)
        for _ in range(1000):
            a = "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
            got = longest_common_substring(a, b)
            assert len(got) == dp_lcs_length(a, b), (a, b)
            assert got == lcs_by_scan(a, b), (a, b)
        # constructed ties: two disjoint 2-char candidates, fillers from
        # disjoint alphabets so nothing longer can match
        pairs = [("ab", "ca"), ("bc", "ab"), ("ca", "bc"), ("ab", "bc"), ("cb", "ac")]
        fillers_a = ["u", "vv", "w", "uv"]
        fillers_b = ["x", "yy", "z", "xy"]
        count = 0
        for s1, s2 in pairs:
            for fa in fillers_a:
                for fb in fillers_b:
                    a = fa + s1 + fa + s2 + fa
                    b = fb + s2 + fb + s1 + fb
                    assert dp_lcs_length(a, b) == 2
                    assert longest_common_substring(a, b) == s1  # earliest in a
                    count += 1
        assert count >= 50


def test_criterion_06_diverse_selection_matches_oracle(criterion):
    with criterion(6, "diverse selection == sort-then-dedup oracle on 200 tables"):
        rng = random.Random(606)
        tested = 0
        while tested < 200:
            n = rng.randint(2, 50)
            rows = []
            for _i in range(n):
                rows.append(
                    (
                        "".join(rng.choice("abck") for _ in range(rng.randint(0, 6))),
                        "".join(rng.choice("mn") for _ in range(rng.randint(0, 2))),
                        rng.choice(["p", "q", "r", "s", "t"]),
                    )
                )
            query = rng.randrange(n)
            rows[query] = (rows[query][0], rows[query][1], MISSING)
            t = Table(("A", "B", "T"), tuple(rows))
            if not any(row[2] is not MISSING for row in rows):
                continue
            k = rng.randint(1, 8)
            got = select_examples(t, query, ["A", "B"], "T", k=k)
            want_rows, want_diverse = diverse_selection_by_scan(
                t, query, ["A", "B"], "T", k
            )
            assert got.rows() == want_rows
            assert got.diversity_satisfied == want_diverse
            tested += 1


def _random_fixture(rng):
    n_groups = rng.randint(3, 6)
    rows = []
    for g in range(n_groups):
        token = "".join(rng.choice("mnpq") for _ in range(2))
        for _ in range(rng.randint(4, 8)):
            rows.append(
                (
                    f"g{g}",
                    token + "".join(rng.choice("uvwx") for _ in range(rng.randint(0, 4))),
                    "".join(rng.choice("uvwxyz") for _ in range(rng.randint(0, 6))),
                )
            )
    return Table(("target", "c1", "c2"), tuple(rows))


def test_criterion_07_monotonicity(criterion):
    with criterion(7, "selection shrinks as p grows; patterns shrink as q grows"):
        rng = random.Random(707)
        for _ in range(100):
            t = _random_fixture(rng)
            scfg = SamplingConfig(m=4, n=4, seed=rng.randint(0, 10_000))
            p1, p2 = sorted((rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0)))
            q = rng.choice([0.5, 0.75, 0.9])
            loose = selected_attributes(
                select_attributes(t, "target", scfg, DependencyConfig(p=p1, q=q))
            )
            strict = selected_attributes(
                select_attributes(t, "target", scfg, DependencyConfig(p=p2, q=q))
            )
            assert set(strict) <= set(loose)
        for _ in range(100):
            t = _random_fixture(rng)
            sample, idx = group_sample(
                t, "target", SamplingConfig(m=4, n=4, seed=rng.randint(0, 10_000))
            )
            q1, q2 = sorted((rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0)))
            for col in ("c1", "c2"):
                low = detect_group_patterns(sample, idx, col, q1)
                high = detect_group_patterns(sample, idx, col, q2)
                for lo, hi in zip(low, high):
                    assert set(hi.patterns) <= set(lo.patterns)


def test_criterion_08_pruning_neutrality(criterion):
    with criterion(8, "verdicts identical with containment pruning on and off"):
        rng = random.Random(707)  # the same fixture stream as criterion 7
        for _ in range(100):
            t = _random_fixture(rng)
            scfg = SamplingConfig(m=4, n=4, seed=rng.randint(0, 10_000))
            p = rng.choice([0.5, 0.75, 0.9])
            q = rng.choice([0.5, 0.75, 0.9])
            pruned = select_attributes(
                t, "target", scfg, DependencyConfig(p=p, q=q, prune_contained=True)
            )
            plain = select_attributes(
                t, "target", scfg, DependencyConfig(p=p, q=q, prune_contained=False)
            )
            assert [(a, r.verdict) for a, r in pruned] == [
                (a, r.verdict) for a, r in plain
            ]


def test_criterion_09_end_to_end_planted(criterion):
    with criterion(9, "planted data: localized run perfect, noisy baseline behind"):
        started = time.perf_counter()
        base = planted_table(
            n_groups=10, rows_per_group=100, n_informative=1, n_noise=7,
            noise_len=30, seed=9,
        )
        noisy = planted_table(
            n_groups=10, rows_per_group=100, n_informative=1, n_noise=7,
            noise_len=500, seed=9,
        )
        cfg = PipelineConfig(
            target="city",
            sampling=SamplingConfig(m=10, n=10, seed=1),
            dependency=DependencyConfig(p=0.9, q=0.9),
            k=3,
            tuple_mode="diverse-similarity",
            attr_mode="dependent",
            backend=BackendConfig(kind="mock"),
            seed=1,
        )
        baseline_cfg = replace(cfg, attr_mode="all", tuple_mode="random")
        baseline_behind = 0
        for r in range(10):
            masked, plan = mask_cells(base, "city", 0.1, seed=900 + r)
            noisy_masked, noisy_plan = mask_cells(noisy, "city", 0.1, seed=900 + r)
            assert [m for m, _ in plan.masked] == [m for m, _ in noisy_plan.masked]
            run_cfg = replace(cfg, seed=r, sampling=replace(cfg.sampling, seed=r))
            localized = run_pipeline(masked, run_cfg, mask_plan=plan)
            assert localized.summary.exact_match_accuracy == 1.0
            baseline = run_pipeline(
                noisy_masked,
                replace(baseline_cfg, seed=r),
                mask_plan=noisy_plan,
            )
            if baseline.summary.exact_match_accuracy < 1.0:
                baseline_behind += 1
        assert baseline_behind >= 9
        assert time.perf_counter() - started < 120.0


def test_criterion_10_data_reduction(criterion):
    with criterion(10, "16+1 attribute table: 2 attrs selected, >= 85% fewer chars"):
        t = planted_table(
            n_groups=10, rows_per_group=30, n_informative=2, n_noise=14,
            noise_len=30, seed=10,
        )
        reports = select_attributes(
            t,
            "city",
            SamplingConfig(m=10, n=10, seed=3),
            DependencyConfig(p=0.75, q=0.75),
        )
        assert len(selected_attributes(reports)) == 2
        masked, plan = mask_cells(t, "city", 0.1, seed=31)
        cfg = PipelineConfig(
            target="city",
            sampling=SamplingConfig(m=10, n=10, seed=3),
            dependency=DependencyConfig(p=0.75, q=0.75),
            k=3,
            backend=BackendConfig(kind="mock"),
            seed=3,
        )
        run = run_pipeline(masked, cfg, mask_plan=plan)
        reduction = run.summary.data_reduction
        assert reduction["attributes_used"] == 2
        assert reduction["attributes_all"] == 16
        assert reduction["character_reduction"] >= 0.85


def _scaling_corpus(total_chars, seed):
    rng = random.Random(seed)
    words = [
        "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(3, 9)))
        for _ in range(2000)
    ]
    docs, made = [], 0
    while made < total_chars:
        parts, length = [], 0
        while length < 200:
            w = rng.choice(words)
            parts.append(w)
            length += len(w) + 1
        doc = " ".join(parts)
        docs.append(doc)
        made += len(doc)
    return tuple(docs)


def test_criterion_11_near_linear_scaling(criterion):
    with criterion(11, "mining 2 MB costs at most 4x mining 1 MB"):
        started = time.perf_counter()
        times = {}
        for total in (1_000_000, 2_000_000):
            docs = _scaling_corpus(total, seed=11)
            t0 = time.perf_counter()
            frequent_substrings(DocumentSet(docs), 0.5)
            times[total] = time.perf_counter() - t0
        assert times[2_000_000] / times[1_000_000] <= 4.0
        assert time.perf_counter() - started < 60.0


def test_criterion_12_cli_eval_byte_identical(criterion, tmp_path):
    with criterion(12, "two seeded eval runs write byte-identical reports"):
        t = planted_table(
            n_groups=5, rows_per_group=20, n_informative=1, n_noise=2,
            noise_len=15, seed=12,
        )
        data = tmp_path / "data.csv"
        dump_table(t, str(data))
        payloads = []
        for name in ("one.json", "two.json"):
            report = tmp_path / name
            proc = subprocess.run(
                [
                    sys.executable, "-m", "ldi", "eval",
                    "--input", str(data), "--target", "city",
                    "--mask-rate", "0.1", "--repeats", "2",
                    "--m", "5", "--seed", "17",
                    "--backend", "mock", "--report", str(report),
                ],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            payloads.append(report.read_bytes())
        assert payloads[0] == payloads[1]


def test_criterion_13_metric_units(criterion):
    with criterion(13, "metric goldens and threshold boundary arithmetic"):
        assert rouge1_f1("New York", "New York City") == pytest.approx(0.8, abs=1e-9)
        assert exact_match("LG", "LG Electronics") is False
        assert ceil_threshold(0.9, 10) == 9
        assert ceil_threshold(0.6, 3) == 2


def test_criterion_14_hosted_model_note(criterion):
    with criterion(14, "hosted-model spot check is operator-run (see README)"):
        pytest.skip(
            "needs a hosted model and the restaurant dataset; run manually: "
            "ldi eval --input restaurant.csv --target city --k 10 "
            "--backend remote --model <name> --endpoint <url>"
        )
