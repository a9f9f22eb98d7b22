"""Per-bin accuracies, summary statistics, report files, and BLiMP re-binning."""
from __future__ import annotations

import csv
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .errors import InputError
from .forge import Subtask, is_symbol
from .ingest import VocabTable, pad_symbols
from .morphology import BinScheme, NOUN_TAGS

ALL = "all"
RAREST_BIN = {Subtask.WORDSWAP.value: 1}  # every other view bottoms out at bin 0
TOP_BIN = 512


@dataclass(frozen=True)
class Cell:
    accuracy: float
    n: int
    se: float


@dataclass
class ScoreMatrix:
    cells: dict[tuple[str, str, int], Cell]

    def models(self) -> list[str]:
        return sorted({m for m, _, _ in self.cells})

    def subtasks(self) -> list[str]:
        return sorted({s for _, s, _ in self.cells})

    def bins(self, subtask: str) -> list[int]:
        return sorted({b for _, s, b in self.cells if s == subtask})

    def get(self, model: str, subtask: str, bin_label: int) -> Cell | None:
        return self.cells.get((model, subtask, bin_label))


def per_bin_accuracy(rows: list[dict]) -> ScoreMatrix:
    """Rows carry model, subtask, bin, correct; cells with no rows are absent."""
    tallies: dict[tuple[str, str, int], list[int]] = {}
    for row in rows:
        key = (row["model"], row["subtask"], int(row["bin"]))
        tallies.setdefault(key, []).append(1 if row["correct"] else 0)
    cells = {}
    for key, flags in tallies.items():
        n = len(flags)
        p = sum(flags) / n
        cells[key] = Cell(accuracy=p, n=n, se=math.sqrt(p * (1 - p) / n))
    return ScoreMatrix(cells=cells)


def combined_cells(matrix: ScoreMatrix, model: str) -> dict[int, float]:
    """Per-bin mean across the subtasks present at that bin (bin 0 lacks WordSwap)."""
    per_bin: dict[int, list[float]] = {}
    for (m, s, b), cell in matrix.cells.items():
        if m == model and s != ALL:
            per_bin.setdefault(b, []).append(cell.accuracy)
    return {b: sum(v) / len(v) for b, v in per_bin.items()}


def aggregate_ltswap(matrix: ScoreMatrix, model: str) -> float:
    """Unweighted mean over every present (subtask, bin) cell for the model."""
    vals = [cell.accuracy for (m, _, _), cell in matrix.cells.items() if m == model]
    if not vals:
        raise InputError(f"no cells for model {model!r}")
    return sum(vals) / len(vals)


# -- Spearman ------------------------------------------------------------------


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p: float
    undefined: bool = False


def _ranks(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(xs, ys, exact_p: bool = False) -> SpearmanResult:
    """Tie-corrected rank correlation with a two-sided p-value.

    The p-value uses the usual t approximation; `exact_p` switches to an
    exhaustive permutation test (n <= 8 only).
    """
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys) or len(xs) < 3:
        raise InputError("spearman needs at least 3 paired points")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        return SpearmanResult(rho=0.0, p=1.0, undefined=True)
    rho = _rank_pearson(xs, ys)
    if exact_p:
        n = len(xs)
        if n > 8:
            raise InputError("exact permutation p-value is limited to n <= 8")
        hits = 0
        total = 0
        for perm in itertools.permutations(ys):
            total += 1
            if abs(_rank_pearson(xs, list(perm))) >= abs(rho) - 1e-12:
                hits += 1
        return SpearmanResult(rho=rho, p=hits / total)
    return SpearmanResult(rho=rho, p=_t_pvalue(rho, len(xs)))


def _rank_pearson(xs, ys) -> float:
    rx = _ranks(xs)
    ry = _ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float((rx * rx).sum()) * float((ry * ry).sum()))
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


def _t_pvalue(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    df = n - 2
    t2 = rho * rho * df / (1 - rho * rho)
    # two-sided survival of Student's t via the regularized incomplete beta
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


# -- drop and spread -----------------------------------------------------------


def _model_bin_accuracy(matrix: ScoreMatrix, model: str, subtask: str, bin_label: int) -> float | None:
    if subtask == ALL:
        combined = combined_cells(matrix, model)
        return combined.get(bin_label)
    cell = matrix.get(model, subtask, bin_label)
    return cell.accuracy if cell else None


def rarest_bin(subtask: str) -> int:
    return RAREST_BIN.get(subtask, 0)


def accuracy_drop(matrix: ScoreMatrix, subtask: str) -> float:
    """Mean over models of accuracy(rarest bin) - accuracy(top bin)."""
    drops = []
    for model in matrix.models():
        lo = _model_bin_accuracy(matrix, model, subtask, rarest_bin(subtask))
        hi = _model_bin_accuracy(matrix, model, subtask, TOP_BIN)
        if lo is None or hi is None:
            raise InputError(f"model {model!r} is missing an extreme bin for {subtask}")
        drops.append(lo - hi)
    if not drops:
        raise InputError("empty matrix")
    return sum(drops) / len(drops)


@dataclass(frozen=True)
class SpreadRatio:
    value: float
    undefined: bool = False


def spread_ratio(matrix: ScoreMatrix, subtask: str) -> SpreadRatio:
    """(best-worst model accuracy at the rarest bin) / (best-worst at the top bin)."""
    models = matrix.models()
    if len(models) < 2:
        raise InputError("spread ratio needs at least two models")
    low = [_model_bin_accuracy(matrix, m, subtask, rarest_bin(subtask)) for m in models]
    high = [_model_bin_accuracy(matrix, m, subtask, TOP_BIN) for m in models]
    if any(v is None for v in low + high):
        raise InputError(f"missing extreme-bin cells for {subtask}")
    denom = max(high) - min(high)
    if denom == 0:
        return SpreadRatio(value=float("nan"), undefined=True)
    return SpreadRatio(value=(max(low) - min(low)) / denom)


# -- BLiMP re-binning -----------------------------------------------------------


def _content_tokens(text: str) -> list[str]:
    return [t for t in pad_symbols(text).lower().split() if not is_symbol(t)]


def blimp_rebin(pairs: list[dict], vocab: VocabTable, scheme: BinScheme) -> list[dict]:
    """Assign each sentence pair a frequency bin.

    Pairs differing in at least one word take the bin of the least frequent
    differing word; word-order-only pairs take the bin of the least frequent
    word in the whole sentence.
    """
    out = []
    for i, pair in enumerate(pairs):
        try:
            good, bad = pair["sentence_good"], pair["sentence_bad"]
        except (KeyError, TypeError):
            raise InputError(f"pair {i}: expected sentence_good/sentence_bad fields")
        ta, tb = _content_tokens(good), _content_tokens(bad)
        ca, cb = Counter(ta), Counter(tb)
        only_good, only_bad = ca - cb, cb - ca
        differing = sorted(set(only_good) | set(only_bad))
        if differing:
            counts = [vocab.count(w) for w in differing]
            single = sum(only_good.values()) <= 1 and sum(only_bad.values()) <= 1
            rule = "single_word" if single else "least_frequent_target"
        else:
            words = sorted(set(ta) | set(tb))
            if not words:
                raise InputError(f"pair {i}: no words")
            counts = [vocab.count(w) for w in words]
            rule = "word_order"
        out.append({"pair_index": i, "bin": scheme.bin_of(min(counts)), "rule": rule})
    return out


def load_blimp_pairs(path: str | Path) -> list[dict]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            pairs.append(json.loads(line))
        except json.JSONDecodeError as err:
            raise InputError(f"{path}:{lineno}: bad JSON ({err})")
    return pairs


# -- report emission -------------------------------------------------------------

COUNT_COLUMNS = ("WS-VERB", "WS-NOUN", "IS-VERB", "IS-NOUN", "AG-LONG", "AG-SHORT")


def counts_table(quads, scheme: BinScheme) -> dict[int, dict[str, object]]:
    """Pair counts per bin in the WS/IS/AG column layout; WordSwap has no bin 0."""
    table = {b: {c: 0 for c in COUNT_COLUMNS} for b in scheme.labels}
    for quad in quads:
        noun = quad.pos in NOUN_TAGS
        if quad.subtask == Subtask.WORDSWAP:
            col = "WS-NOUN" if noun else "WS-VERB"
        elif quad.subtask == Subtask.INFLECTIONSWAP:
            col = "IS-NOUN" if noun else "IS-VERB"
        else:
            col = "AG-LONG" if quad.distance and quad.distance.value == "LONG" else "AG-SHORT"
        table[quad.bin][col] += 1
    table[0]["WS-VERB"] = "NA"
    table[0]["WS-NOUN"] = "NA"
    return table


def write_counts_csv(table: dict[int, dict[str, object]], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", *COUNT_COLUMNS])
        for b in sorted(table):
            writer.writerow([b, *[table[b][c] for c in COUNT_COLUMNS]])


def compute_summary(matrix: ScoreMatrix, scheme: BinScheme, exact_p: bool = False) -> dict:
    """LT-Swap scores, per-model and averaged Spearman, drops, and spreads."""
    models = matrix.models()
    subtasks = [s.value for s in Subtask] + [ALL]
    summary: dict = {
        "ltswap_score": {m: aggregate_ltswap(matrix, m) for m in models},
        "spearman": {},
        "accuracy_drop": {},
        "spread_ratio": {},
        "metadata": {
            "rarest_bin": {s: rarest_bin(s) for s in subtasks},
            "top_bin": TOP_BIN,
            "p_value": "exact-permutation" if exact_p else "t-approximation",
        },
    }
    for subtask in subtasks:
        per_model = {}
        for model in models:
            if subtask == ALL:
                series = combined_cells(matrix, model)
            else:
                series = {
                    b: matrix.get(model, subtask, b).accuracy
                    for b in matrix.bins(subtask)
                    if matrix.get(model, subtask, b)
                }
            bins = sorted(series)
            if len(bins) >= 3:
                res = spearman(bins, [series[b] for b in bins], exact_p=exact_p and len(bins) <= 8)
                per_model[model] = {"rho": res.rho, "p": res.p, "undefined": res.undefined}
        if per_model:
            rhos = [v["rho"] for v in per_model.values()]
            ps = [v["p"] for v in per_model.values()]
            summary["spearman"][subtask] = {
                "per_model": per_model,
                "average_rho": sum(rhos) / len(rhos),
                "average_p": sum(ps) / len(ps),
            }
        try:
            summary["accuracy_drop"][subtask] = accuracy_drop(matrix, subtask)
        except InputError:
            summary["accuracy_drop"][subtask] = None
        try:
            sr = spread_ratio(matrix, subtask)
            summary["spread_ratio"][subtask] = None if sr.undefined else sr.value
        except InputError:
            summary["spread_ratio"][subtask] = None
    return summary


def emit_report(matrix: ScoreMatrix, summary: dict, counts: dict[int, dict[str, object]], outdir: str | Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = dict(summary)
    report["cells"] = [
        {"model": m, "subtask": s, "bin": b, "accuracy": c.accuracy, "n": c.n, "se": c.se}
        for (m, s, b), c in sorted(matrix.cells.items())
    ]
    (outdir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    with (outdir / "matrix.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "subtask", "bin", "accuracy", "n", "se"])
        for (m, s, b), c in sorted(matrix.cells.items()):
            writer.writerow([m, s, b, c.accuracy, c.n, c.se])
    with (outdir / "curves.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "subtask", "bin", "accuracy", "se"])
        for (m, s, b), c in sorted(matrix.cells.items()):
            writer.writerow([m, s, b, c.accuracy, c.se])
    write_counts_csv(counts, outdir / "counts.csv")


def load_matrix_csv(path: str | Path) -> ScoreMatrix:
    cells = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            cells[(row["model"], row["subtask"], int(row["bin"]))] = Cell(
                accuracy=float(row["accuracy"]), n=int(row["n"]), se=float(row["se"])
            )
    return ScoreMatrix(cells=cells)
