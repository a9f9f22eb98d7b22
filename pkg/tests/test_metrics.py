import csv
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ltswap.errors import InputError
from ltswap.forge import AgreementKind, Distance, Quadruplet, Subtask
from ltswap.ingest import VocabTable
from ltswap.metrics import (
    Cell,
    ScoreMatrix,
    accuracy_drop,
    aggregate_ltswap,
    blimp_rebin,
    combined_cells,
    compute_summary,
    counts_table,
    emit_report,
    load_matrix_csv,
    per_bin_accuracy,
    spearman,
    spread_ratio,
)
from ltswap.morphology import BinScheme, PosTag

SCHEME = BinScheme(9)


def rows_for(model, subtask, bin_label, correct, incorrect):
    return [
        {"model": model, "subtask": subtask, "bin": bin_label, "correct": c}
        for c in [True] * correct + [False] * incorrect
    ]


class TestPerBinAccuracy:
    def test_eighty_of_hundred(self):
        matrix = per_bin_accuracy(rows_for("m", "WORDSWAP", 8, 80, 20))
        cell = matrix.get("m", "WORDSWAP", 8)
        assert cell.accuracy == pytest.approx(0.8)
        assert cell.n == 100
        assert cell.se == pytest.approx(math.sqrt(0.8 * 0.2 / 100))

    def test_zero_of_ten(self):
        cell = per_bin_accuracy(rows_for("m", "WORDSWAP", 1, 0, 10)).get("m", "WORDSWAP", 1)
        assert cell.accuracy == 0.0 and cell.se == 0.0

    def test_hand_tally(self):
        rows = rows_for("m", "WORDSWAP", 1, 3, 1) + rows_for("m", "INFLECTIONSWAP", 0, 1, 3)
        matrix = per_bin_accuracy(rows)
        assert matrix.get("m", "WORDSWAP", 1).accuracy == pytest.approx(0.75)
        assert matrix.get("m", "INFLECTIONSWAP", 0).accuracy == pytest.approx(0.25)
        assert matrix.get("m", "WORDSWAP", 99) is None

    def test_se_identity_everywhere(self):
        rows = rows_for("m", "WORDSWAP", 1, 7, 13) + rows_for("m", "AGREEMENTSWAP", 4, 5, 5)
        for cell in per_bin_accuracy(rows).cells.values():
            p = cell.accuracy
            assert abs(cell.se - math.sqrt(p * (1 - p) / cell.n)) < 1e-12


class TestAggregate:
    def _matrix(self, values):
        cells = {}
        for i, v in enumerate(values):
            cells[("m", "WORDSWAP", 2**i)] = Cell(accuracy=v, n=10, se=0.0)
        return ScoreMatrix(cells=cells)

    def test_all_ones(self):
        assert aggregate_ltswap(self._matrix([1.0] * 5), "m") == 1.0

    def test_two_cells(self):
        assert aggregate_ltswap(self._matrix([0.6, 0.8]), "m") == pytest.approx(0.7)

    def test_empty_is_error(self):
        with pytest.raises(InputError):
            aggregate_ltswap(ScoreMatrix(cells={}), "m")

    def test_synthetic_31_cells_vs_hand_mean(self):
        import random

        rng = random.Random(3)
        cells = {}
        vals = []
        bins = SCHEME.labels
        for subtask in ("WORDSWAP", "INFLECTIONSWAP", "AGREEMENTSWAP"):
            for b in bins:
                if subtask == "WORDSWAP" and b == 0:
                    continue
                v = rng.random()
                vals.append(v)
                cells[("m", subtask, b)] = Cell(accuracy=v, n=50, se=0.0)
        matrix = ScoreMatrix(cells=cells)
        hand = math.fsum(vals) / len(vals)
        assert len(vals) == 32  # WS 10 bins, IS and AS 11 each
        assert abs(aggregate_ltswap(matrix, "m") - hand) < 1e-12

    @given(st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=20))
    def test_permutation_invariant_and_bounded(self, values):
        import random

        a = aggregate_ltswap(self._matrix(values), "m")
        shuffled = list(values)
        random.Random(0).shuffle(shuffled)
        b = aggregate_ltswap(self._matrix(shuffled), "m")
        assert a == pytest.approx(b)
        assert min(values) - 1e-12 <= a <= max(values) + 1e-12


def brute_force_rho(xs, ys):
    """Exhaustive rank-based reference: average-rank ties plus the d^2 formula
    generalized through Pearson on ranks computed by sorting."""

    def ranks(vals):
        out = [0.0] * len(vals)
        ordered = sorted(range(len(vals)), key=lambda i: vals[i])
        i = 0
        while i < len(vals):
            j = i
            while j + 1 < len(vals) and vals[ordered[j + 1]] == vals[ordered[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                out[ordered[k]] = avg
            i = j + 1
        return out

    rx, ry = ranks(xs), ranks(ys)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den if den else 0.0


class TestSpearman:
    def test_increasing_is_one(self):
        bins = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512]
        accs = [0.5 + 0.04 * i for i in range(10)]
        res = spearman(bins, accs)
        assert res.rho == pytest.approx(1.0)
        assert res.p == pytest.approx(0.0, abs=1e-9)

    def test_decreasing_is_minus_one(self):
        bins = [1, 2, 4, 8]
        res = spearman(bins, [0.9, 0.8, 0.7, 0.6])
        assert res.rho == pytest.approx(-1.0)

    def test_known_five_point_case(self):
        # ranks of y are (1,3,2,4,5): sum d^2 = 2, rho = 1 - 12/120 = 0.9
        res = spearman([1, 2, 3, 4, 5], [0.2, 0.5, 0.4, 0.8, 0.9])
        assert res.rho == pytest.approx(0.9)

    def test_matches_brute_force_reference(self):
        import random

        rng = random.Random(11)
        for n in (3, 4, 5, 6, 7, 8):
            xs = list(range(n))
            ys = [rng.random() for _ in range(n)]
            res = spearman(xs, ys)
            assert res.rho == pytest.approx(brute_force_rho(xs, ys), abs=1e-12)

    def test_tie_correction(self):
        xs = [1, 2, 3, 4]
        ys = [0.5, 0.5, 0.7, 0.9]
        assert spearman(xs, ys).rho == pytest.approx(brute_force_rho(xs, ys))

    def test_constant_flagged(self):
        res = spearman([1, 2, 3], [0.5, 0.5, 0.5])
        assert res.undefined and res.rho == 0.0

    def test_exact_permutation_p(self):
        res = spearman([1, 2, 3, 4, 5], [0.1, 0.2, 0.3, 0.4, 0.5], exact_p=True)
        assert res.rho == pytest.approx(1.0)
        assert res.p == pytest.approx(2 / 120)

    def test_exact_p_near_t_approximation(self):
        xs = [1, 2, 3, 4, 5, 6, 7, 8]
        ys = [0.1, 0.3, 0.2, 0.5, 0.4, 0.7, 0.6, 0.9]
        exact = spearman(xs, ys, exact_p=True)
        approx = spearman(xs, ys)
        assert exact.rho == approx.rho
        assert abs(exact.p - approx.p) < 0.05  # different estimators, same ballpark

    def test_exact_p_rejects_large_n(self):
        with pytest.raises(InputError):
            spearman(list(range(9)), list(range(9)), exact_p=True)

    def test_too_few_points(self):
        with pytest.raises(InputError):
            spearman([1, 2], [0.1, 0.2])


def _drop_matrix():
    # two models, combined view; rarest for WORDSWAP is bin 1, others bin 0
    cells = {}
    data = {
        ("a", "WORDSWAP", 1): 0.60,
        ("a", "WORDSWAP", 512): 0.90,
        ("a", "INFLECTIONSWAP", 0): 0.70,
        ("a", "INFLECTIONSWAP", 512): 0.85,
        ("b", "WORDSWAP", 1): 0.50,
        ("b", "WORDSWAP", 512): 0.95,
        ("b", "INFLECTIONSWAP", 0): 0.65,
        ("b", "INFLECTIONSWAP", 512): 0.80,
    }
    for k, v in data.items():
        cells[k] = Cell(accuracy=v, n=100, se=0.0)
    return ScoreMatrix(cells=cells)


class TestDropAndSpread:
    def test_wordswap_drop_hand_value(self):
        # a: 0.60-0.90 = -0.30; b: 0.50-0.95 = -0.45; mean -0.375
        assert accuracy_drop(_drop_matrix(), "WORDSWAP") == pytest.approx(-0.375, abs=1e-12)

    def test_flat_matrix_zero(self):
        cells = {
            (m, "WORDSWAP", b): Cell(accuracy=0.7, n=10, se=0.0)
            for m in ("a", "b")
            for b in (1, 512)
        }
        assert accuracy_drop(ScoreMatrix(cells=cells), "WORDSWAP") == 0.0

    def test_missing_extreme_bin_is_error(self):
        cells = {("a", "WORDSWAP", 512): Cell(accuracy=0.9, n=10, se=0.0)}
        with pytest.raises(InputError):
            accuracy_drop(ScoreMatrix(cells=cells), "WORDSWAP")

    def test_drop_invariant_under_constant_shift(self):
        m1 = _drop_matrix()
        shifted = ScoreMatrix(
            cells={k: Cell(accuracy=c.accuracy + 0.01, n=c.n, se=c.se) for k, c in m1.cells.items()}
        )
        assert accuracy_drop(m1, "WORDSWAP") == pytest.approx(
            accuracy_drop(shifted, "WORDSWAP"), abs=1e-12
        )

    def test_spread_ratio_hand_value(self):
        # rarest spread 0.60-0.50 = 0.10; top spread 0.95-0.90 = 0.05 -> 2.0
        sr = spread_ratio(_drop_matrix(), "WORDSWAP")
        assert not sr.undefined
        assert sr.value == pytest.approx(2.0, abs=1e-12)

    def test_spread_three_models_hand_value(self):
        cells = {}
        for model, lo, hi in (("a", 0.40, 0.90), ("b", 0.55, 0.92), ("c", 0.70, 0.94)):
            cells[(model, "WORDSWAP", 1)] = Cell(accuracy=lo, n=10, se=0.0)
            cells[(model, "WORDSWAP", 512)] = Cell(accuracy=hi, n=10, se=0.0)
        sr = spread_ratio(ScoreMatrix(cells=cells), "WORDSWAP")
        assert sr.value == pytest.approx((0.70 - 0.40) / (0.94 - 0.90), abs=1e-12)

    def test_identical_models_undefined(self):
        cells = {}
        for model in ("a", "b"):
            cells[(model, "WORDSWAP", 1)] = Cell(accuracy=0.5, n=10, se=0.0)
            cells[(model, "WORDSWAP", 512)] = Cell(accuracy=0.9, n=10, se=0.0)
        assert spread_ratio(ScoreMatrix(cells=cells), "WORDSWAP").undefined

    def test_combined_view_bin0_is_partial_average(self):
        matrix = _drop_matrix()
        combined = combined_cells(matrix, "a")
        assert combined[0] == pytest.approx(0.70)  # only InflectionSwap reaches bin 0
        assert combined[512] == pytest.approx((0.90 + 0.85) / 2)


class TestBlimpRebin:
    VOCAB = VocabTable(
        entries={"the": 100, "cat": 300, "oryx": 1, "sat": 40, "on": 90, "mat": 20, "a": 80, "dog": 7, "ran": 33},
        total_tokens=671,
    )

    def test_single_word_difference_takes_rarer(self):
        pairs = [{"sentence_good": "the cat sat", "sentence_bad": "the oryx sat"}]
        out = blimp_rebin(pairs, self.VOCAB, SCHEME)
        assert out[0]["bin"] == 1 and out[0]["rule"] == "single_word"

    def test_multi_word_difference_takes_least_frequent_target(self):
        pairs = [{"sentence_good": "the cat sat", "sentence_bad": "a dog ran"}]
        out = blimp_rebin(pairs, self.VOCAB, SCHEME)
        assert out[0]["bin"] == SCHEME.bin_of(7)
        assert out[0]["rule"] == "least_frequent_target"

    def test_word_order_only_takes_sentence_minimum(self):
        pairs = [{"sentence_good": "the cat sat on mat", "sentence_bad": "on mat the cat sat"}]
        out = blimp_rebin(pairs, self.VOCAB, SCHEME)
        assert out[0]["bin"] == SCHEME.bin_of(20)
        assert out[0]["rule"] == "word_order"

    def test_unknown_word_goes_to_bin_zero(self):
        pairs = [{"sentence_good": "the cat", "sentence_bad": "the zyzzy"}]
        assert blimp_rebin(pairs, self.VOCAB, SCHEME)[0]["bin"] == 0

    def test_malformed_pair_is_input_error(self):
        with pytest.raises(InputError, match="pair 0"):
            blimp_rebin([{"good": "x"}], self.VOCAB, SCHEME)

    def test_bins_partition_input(self):
        pairs = [
            {"sentence_good": "the cat sat", "sentence_bad": "the oryx sat"},
            {"sentence_good": "the dog ran", "sentence_bad": "the cat ran"},
        ]
        out = blimp_rebin(pairs, self.VOCAB, SCHEME)
        assert [o["pair_index"] for o in out] == [0, 1]


def _mini_quads():
    def q(subtask, bin_label, pos, kind=None, dist=None):
        return Quadruplet(
            quadruplet_id=f"{subtask.value}-{bin_label}-{pos.value}-{dist}",
            subtask=subtask,
            bin=bin_label,
            pos=pos,
            s1=("a", "w1", "."),
            s2=("a", "w2", "."),
            s1_star=("a", "w2", "."),
            s2_star=("a", "w1", "."),
            targets=("w1", "w2"),
            positions=(1, 1),
            agreement_kind=kind,
            distance=dist,
        )

    return [
        q(Subtask.WORDSWAP, 8, PosTag.NOUN),
        q(Subtask.WORDSWAP, 8, PosTag.VERB),
        q(Subtask.INFLECTIONSWAP, 0, PosTag.NOUN),
        q(Subtask.INFLECTIONSWAP, 4, PosTag.VERB),
        q(Subtask.AGREEMENTSWAP, 2, PosTag.NOUN, AgreementKind.SUBJ_VERB, Distance.LONG),
        q(Subtask.AGREEMENTSWAP, 2, PosTag.NOUN, AgreementKind.DET_NOUN, Distance.SHORT),
    ]


class TestCountsAndReport:
    def test_counts_layout(self):
        table = counts_table(_mini_quads(), SCHEME)
        assert table[8]["WS-NOUN"] == 1 and table[8]["WS-VERB"] == 1
        assert table[0]["IS-NOUN"] == 1 and table[4]["IS-VERB"] == 1
        assert table[2]["AG-LONG"] == 1 and table[2]["AG-SHORT"] == 1
        assert table[0]["WS-NOUN"] == "NA" and table[0]["WS-VERB"] == "NA"

    def test_emit_and_reload_round_trip(self, tmp_path):
        rows = rows_for("m", "WORDSWAP", 8, 80, 20) + rows_for("m", "WORDSWAP", 512, 95, 5)
        matrix = per_bin_accuracy(rows)
        summary = {"note": "test"}
        emit_report(matrix, summary, counts_table(_mini_quads(), SCHEME), tmp_path)
        reloaded = load_matrix_csv(tmp_path / "matrix.csv")
        assert reloaded.cells == matrix.cells
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "curves.csv").exists()

    def test_counts_csv_header(self, tmp_path):
        emit_report(ScoreMatrix(cells={}), {}, counts_table(_mini_quads(), SCHEME), tmp_path)
        with (tmp_path / "counts.csv").open(newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["bin", "WS-VERB", "WS-NOUN", "IS-VERB", "IS-NOUN", "AG-LONG", "AG-SHORT"]


def test_compute_summary_shape():
    rows = []
    for model in ("a", "b"):
        for subtask in ("WORDSWAP", "INFLECTIONSWAP", "AGREEMENTSWAP"):
            bins = SCHEME.labels if subtask != "WORDSWAP" else SCHEME.labels[1:]
            for i, b in enumerate(bins):
                rows.extend(rows_for(model, subtask, b, 50 + i, 50 - i))
    matrix = per_bin_accuracy(rows)
    summary = compute_summary(matrix, SCHEME)
    assert set(summary["ltswap_score"]) == {"a", "b"}
    assert summary["spearman"]["WORDSWAP"]["average_rho"] == pytest.approx(1.0)
    assert summary["accuracy_drop"]["WORDSWAP"] < 0
    assert summary["metadata"]["rarest_bin"]["WORDSWAP"] == 1
    assert summary["metadata"]["rarest_bin"]["INFLECTIONSWAP"] == 0


@given(
    st.lists(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
        min_size=3,
        max_size=11,
        unique=True,
    )
)
def test_spearman_monotone_property(values):
    xs = list(range(len(values)))
    ascending = sorted(values)
    assert spearman(xs, ascending).rho == pytest.approx(1.0)
    assert spearman(xs, list(reversed(ascending))).rho == pytest.approx(-1.0)
