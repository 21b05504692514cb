import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldi.errors import DataError
from ldi.table import MISSING, Table
from ldi.tuples import select_examples, tuple_similarity
from oracles import diverse_selection_by_scan, similarity_by_dp


def example_table():
    """Rows t_p, t_q, t_r plus the query row with a missing target."""
    return Table(
        ("A1", "A2", "AT"),
        (
            ("ab", "defg", "X"),
            ("bc", "fg", "Y"),
            ("cab", "ef", "X"),
            ("abc", "def", MISSING),
        ),
    )


def test_similarity_worked_values():
    t = example_table()
    s_p = tuple_similarity(t, 3, 0, ["A1", "A2"])
    s_q = tuple_similarity(t, 3, 1, ["A1", "A2"])
    s_r = tuple_similarity(t, 3, 2, ["A1", "A2"])
    assert s_p.value == pytest.approx((2 / 3 + 3 / 4) / 2, abs=1e-9)
    assert s_q.value == pytest.approx(0.5, abs=1e-9)
    assert s_r.value == pytest.approx(2 / 3, abs=1e-9)
    assert s_p.per_attribute["A1"] == (2, 3, pytest.approx(2 / 3))
    assert s_p.per_attribute["A2"] == (3, 4, pytest.approx(3 / 4))


def test_similarity_self_is_one():
    t = example_table()
    assert tuple_similarity(t, 0, 0, ["A1", "A2"]).value == 1.0


def test_similarity_empty_and_missing_cells():
    t = Table(
        ("A", "B", "T"),
        (
            ("", MISSING, "v"),
            ("", "", "w"),
            ("x", MISSING, MISSING),
        ),
    )
    # both sides empty/missing: identical; one side empty: zero
    assert tuple_similarity(t, 0, 1, ["A"]).value == 1.0
    assert tuple_similarity(t, 0, 1, ["B"]).value == 1.0
    assert tuple_similarity(t, 0, 2, ["A"]).value == 0.0
    assert tuple_similarity(t, 2, 0, ["A"]).value == 0.0


def test_similarity_requires_attributes():
    with pytest.raises(DataError):
        tuple_similarity(example_table(), 0, 1, [])


@st.composite
def random_table_and_rows(draw):
    n_rows = draw(st.integers(2, 8))
    cells = st.one_of(st.just(MISSING), st.text(alphabet="abxy", max_size=6))
    rows = tuple(
        (draw(cells), draw(cells), draw(st.text(alphabet="uv", max_size=2)))
        for _ in range(n_rows)
    )
    t = Table(("A", "B", "T"), rows)
    i = draw(st.integers(0, n_rows - 1))
    j = draw(st.integers(0, n_rows - 1))
    return t, i, j


@given(random_table_and_rows())
@settings(max_examples=150)
def test_similarity_symmetry_bounds_and_oracle(tij):
    t, i, j = tij
    attrs = ["A", "B"]
    forward = tuple_similarity(t, i, j, attrs)
    backward = tuple_similarity(t, j, i, attrs)
    assert forward.value == pytest.approx(backward.value, abs=1e-12)
    assert 0.0 <= forward.value <= 1.0
    assert forward.value == pytest.approx(similarity_by_dp(t, i, j, attrs), abs=1e-12)
    cells_equal = all(t.cell(i, a) == t.cell(j, a) for a in attrs)
    empties = all(
        (t.cell(i, a) is MISSING or t.cell(i, a) == "")
        and (t.cell(j, a) is MISSING or t.cell(j, a) == "")
        for a in attrs
    )
    if forward.value == 1.0:
        assert cells_equal or empties
    if cells_equal:
        assert forward.value == 1.0


# --- example selection ---


def test_selection_worked_example():
    t = example_table()
    one = select_examples(t, 3, ["A1", "A2"], "AT", k=1)
    assert one.rows() == [0]
    two = select_examples(t, 3, ["A1", "A2"], "AT", k=2)
    # t_r is skipped: its target duplicates t_p's "X"
    assert two.rows() == [0, 1]
    assert [v for _r, _s, v in two.examples] == ["X", "Y"]
    assert two.diversity_satisfied


def test_selection_takes_all_when_k_large():
    t = Table(
        ("A", "T"),
        (("aa", "1"), ("ab", "2"), ("ac", "3"), ("aa", MISSING)),
    )
    out = select_examples(t, 3, ["A"], "T", k=10)
    assert sorted(out.rows()) == [0, 1, 2]
    scores = [s.value for _r, s, _v in out.examples]
    assert scores == sorted(scores, reverse=True)


def test_selection_fills_with_duplicates_when_values_run_out():
    t = Table(
        ("A", "T"),
        (("xx", "same"), ("xy", "same"), ("zz", "other"), ("xx", MISSING)),
    )
    out = select_examples(t, 3, ["A"], "T", k=3)
    assert len(out.examples) == 3
    assert not out.diversity_satisfied
    values = [v for _r, _s, v in out.examples]
    assert values.count("same") == 2


def test_selection_dominance_per_value():
    rng = random.Random(4)
    rows = []
    for i in range(100):
        value = f"v{i % 5}"
        rows.append(("".join(rng.choice("abcd") for _ in range(6)), value))
    rows.append(("abcdab", MISSING))
    t = Table(("A", "T"), tuple(rows))
    out = select_examples(t, 100, ["A"], "T", k=5)
    assert len(out.examples) == 5
    assert out.diversity_satisfied
    chosen = {v: s.value for _r, s, v in out.examples}
    assert len(chosen) == 5
    for i in range(100):
        value = t.cell(i, "T")
        score = tuple_similarity(t, 100, i, ["A"]).value
        assert score <= chosen[value] + 1e-12


def test_selection_matches_oracle_on_random_tables():
    rng = random.Random(12)
    for _ in range(60):
        n = rng.randint(2, 50)
        rows = []
        for _i in range(n):
            rows.append(
                (
                    "".join(rng.choice("abck") for _ in range(rng.randint(0, 6))),
                    "".join(rng.choice("mn") for _ in range(rng.randint(0, 2))),
                    rng.choice(["p", "q", "r", "s"]),
                )
            )
        query = rng.randrange(n)
        rows[query] = (rows[query][0], rows[query][1], MISSING)
        t = Table(("A", "B", "T"), tuple(rows))
        complete = [i for i in range(n) if t.cell(i, "T") is not MISSING]
        if not complete:
            continue
        k = rng.randint(1, 8)
        got = select_examples(t, query, ["A", "B"], "T", k=k)
        want_rows, want_diverse = diverse_selection_by_scan(t, query, ["A", "B"], "T", k)
        assert got.rows() == want_rows
        assert got.diversity_satisfied == want_diverse


def test_selection_ignores_columns_outside_s():
    t = Table(
        ("A", "Z", "T"),
        (("ab", "noise1", "1"), ("cd", "noise2", "2"), ("ab", "noise3", MISSING)),
    )
    before = select_examples(t, 2, ["A"], "T", k=2)
    perturbed = t.with_cell(0, "Z", "completely different")
    after = select_examples(perturbed, 2, ["A"], "T", k=2)
    assert before.rows() == after.rows()
    assert [s.value for _r, s, _v in before.examples] == [
        s.value for _r, s, _v in after.examples
    ]


def test_random_mode_is_seeded_and_scoreless():
    t = Table(
        ("A", "T"),
        tuple(((f"a{i}", f"v{i}") for i in range(20))) + (("q", MISSING),),
    )
    one = select_examples(t, 20, ["A"], "T", k=5, mode="random", seed=3)
    two = select_examples(t, 20, ["A"], "T", k=5, mode="random", seed=3)
    assert one == two
    assert len(one.examples) == 5
    assert all(s is None for _r, s, _v in one.examples)
    other = select_examples(t, 20, ["A"], "T", k=5, mode="random", seed=4)
    assert other != one


def test_selection_preconditions():
    t = example_table()
    with pytest.raises(DataError):
        select_examples(t, 3, ["A1"], "AT", k=0)
    with pytest.raises(DataError):
        select_examples(t, 0, ["A1"], "AT", k=1)  # row 0 has a target value
    empty = Table(("A", "T"), (("x", MISSING),))
    with pytest.raises(DataError):
        select_examples(empty, 0, ["A"], "T", k=1)


def test_example_set_json_shape():
    t = example_table()
    out = select_examples(t, 3, ["A1", "A2"], "AT", k=2)
    d = out.to_json_dict()
    assert set(d) == {"query_row", "examples", "diverse"}
    assert d["examples"][0] == {
        "row": 0,
        "score": pytest.approx((2 / 3 + 3 / 4) / 2),
        "target": "X",
    }
