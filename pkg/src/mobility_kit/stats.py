"""Within-subject statistics: percent change, RM-ANOVA, Friedman, post-hoc.

Designs are one-way with complete rows (subjects x conditions). No
sphericity correction is applied to the RM-ANOVA degrees of freedom.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats as sps


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if f <= 0:
        return 1.0
    return float(special.betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f)))


def chi2_sf(x: float, df: float) -> float:
    """Upper tail of the chi-square distribution via the regularized
    upper incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def t_sf_two_sided(t: float, df: float) -> float:
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def percent_change(baseline: float, post: float) -> float:
    if baseline == 0:
        raise ValueError("undefined baseline")
    return 100.0 * (post - baseline) / baseline


@dataclass(frozen=True, eq=False)
class RepeatedMeasures:
    """Complete subjects x conditions matrix."""

    values: np.ndarray
    conditions: tuple[str, ...] = ()
    subjects: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be a subjects x conditions matrix")
        n, k = v.shape
        if n < 2 or k < 2:
            raise ValueError("need at least 2 subjects and 2 conditions")
        if not np.all(np.isfinite(v)):
            raise ValueError("missing or non-finite cells; supply complete rows")
        conds = tuple(self.conditions) or tuple(f"C{j + 1}" for j in range(k))
        subs = tuple(self.subjects) or tuple(f"S{i + 1}" for i in range(n))
        if len(conds) != k or len(subs) != n:
            raise ValueError("label count does not match matrix shape")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "conditions", conds)
        object.__setattr__(self, "subjects", subs)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_long(cls, records: Iterable[tuple[str, str, float]], conditions: Sequence[str] | None = None):
        """Pivot ``(subject, condition, value)`` records.

        Condition order follows ``conditions`` if given, else first
        appearance. Subjects with any missing condition are rejected.
        """
        cells: dict[str, dict[str, float]] = {}
        seen_conds: list[str] = []
        for subj, cond, val in records:
            subj, cond = str(subj), str(cond)
            if cond not in seen_conds:
                seen_conds.append(cond)
            row = cells.setdefault(subj, {})
            if cond in row:
                raise ValueError(f"duplicate cell ({subj}, {cond})")
            row[cond] = float(val)
        conds = list(conditions) if conditions else seen_conds
        missing = [(s, c) for s, row in cells.items() for c in conds if c not in row]
        if missing:
            s, c = missing[0]
            raise ValueError(f"incomplete design: subject {s} lacks condition {c}")
        subjects = list(cells)
        values = np.array([[cells[s][c] for c in conds] for s in subjects])
        return cls(values, tuple(conds), tuple(subjects))


@dataclass(frozen=True)
class StatTestResult:
    test: str
    statistic: float
    df: tuple[float, ...]
    p: float
    effect: float
    effect_name: str

    def summary(self) -> str:
        """One-line report, e.g. ``F(3, 36) = 91.31, p < .001, η²_p = .88``."""
        dfs = ", ".join(_fmt_df(d) for d in self.df)
        sym = "F" if self.test == "rm_anova" else "χ²"
        eff = "η²_p" if self.effect_name == "partial_eta_squared" else "W"
        return f"{sym}({dfs}) = {self.statistic:.2f}, {format_p(self.p)}, {eff} = {_apa(self.effect)}"


def _fmt_df(d):
    return str(int(d)) if float(d).is_integer() else f"{d:.2f}"


def _apa(x: float) -> str:
    s = f"{x:.2f}"
    return s[1:] if s.startswith("0.") else s


def format_p(p: float) -> str:
    if p < 0.001:
        return "p < .001"
    s = f"{p:.3f}"
    return "p = " + (s[1:] if s.startswith("0.") else s)


@dataclass(frozen=True)
class AnovaTable:
    ss_total: float
    ss_subject: float
    ss_condition: float
    ss_error: float


def anova_table(data: RepeatedMeasures) -> AnovaTable:
    x = data.values
    n, k = x.shape
    gm = x.mean()
    ss_total = float(((x - gm) ** 2).sum())
    ss_subj = float(k * ((x.mean(axis=1) - gm) ** 2).sum())
    ss_cond = float(n * ((x.mean(axis=0) - gm) ** 2).sum())
    resid = x - x.mean(axis=1, keepdims=True) - x.mean(axis=0, keepdims=True) + gm
    ss_err = float((resid**2).sum())
    return AnovaTable(ss_total, ss_subj, ss_cond, ss_err)


def rm_anova(data: RepeatedMeasures) -> StatTestResult:
    """One-way repeated-measures ANOVA with partial eta-squared."""
    n, k = data.shape
    tab = anova_table(data)
    scale = max(tab.ss_total, np.finfo(float).tiny)
    if tab.ss_error <= 1e-24 * scale or tab.ss_error == 0:
        raise ValueError("degenerate: zero within-subject variance")
    df1, df2 = k - 1, (n - 1) * (k - 1)
    f = (tab.ss_condition / df1) / (tab.ss_error / df2)
    eta = tab.ss_condition / (tab.ss_condition + tab.ss_error)
    return StatTestResult("rm_anova", f, (df1, df2), f_sf(f, df1, df2), eta, "partial_eta_squared")


def friedman(data: RepeatedMeasures, tie_correction: bool = False) -> StatTestResult:
    """Friedman rank test with Kendall's W.

    Ties get mid-ranks. The tie correction divides the statistic by
    ``1 - sum(t^3 - t) / (n (k^3 - k))``; it is off by default.
    """
    x = data.values
    n, k = x.shape
    ranks = sps.rankdata(x, axis=1)
    rank_sums = ranks.sum(axis=0)
    chi2 = 12.0 / (n * k * (k + 1)) * float(((rank_sums - n * (k + 1) / 2.0) ** 2).sum())
    if tie_correction and chi2 > 0:
        ties = 0.0
        for row in x:
            _, counts = np.unique(row, return_counts=True)
            ties += float((counts**3 - counts).sum())
        chi2 /= 1.0 - ties / (n * (k**3 - k))
    w = chi2 / (n * (k - 1))
    return StatTestResult("friedman", chi2, (k - 1,), chi2_sf(chi2, k - 1), min(w, 1.0), "kendall_w")


@dataclass
class PosthocRow:
    a: str
    b: str
    statistic: float
    p_raw: float
    p_corrected: float
    significant: bool
    flags: list[str] = field(default_factory=list)


POSTHOC_FAMILIES = ("paired_t", "wilcoxon")


def posthoc_bonferroni(data: RepeatedMeasures, family: str = "paired_t", alpha: float = 0.05) -> list[PosthocRow]:
    """All pairwise within-subject comparisons, Bonferroni corrected.

    A pair whose difference vector is constant has no variability to test;
    it is flagged and reported with NaN statistic and p.
    """
    if family not in POSTHOC_FAMILIES:
        raise ValueError(f"unknown post-hoc family {family!r}")
    x = data.values
    k = x.shape[1]
    m = k * (k - 1) // 2
    rows = []
    for i, j in itertools.combinations(range(k), 2):
        d = x[:, i] - x[:, j]
        a, b = data.conditions[i], data.conditions[j]
        if np.ptp(d) == 0:
            rows.append(PosthocRow(a, b, float("nan"), float("nan"), float("nan"), False, ["no variability"]))
            continue
        if family == "paired_t":
            res = sps.ttest_rel(x[:, i], x[:, j])
        else:
            res = sps.wilcoxon(x[:, i], x[:, j])
        p = float(res.pvalue)
        pc = min(1.0, m * p)
        rows.append(PosthocRow(a, b, float(res.statistic), p, pc, pc < alpha))
    return rows


def parse_long_csv(text: str) -> RepeatedMeasures:
    """Read ``subject,condition,value`` CSV into a RepeatedMeasures."""
    reader = csv.DictReader(io.StringIO(text))
    need = {"subject", "condition", "value"}
    if not need <= set(reader.fieldnames or ()):
        raise ValueError("long-format CSV needs columns subject,condition,value")
    recs = []
    for lineno, row in enumerate(reader, start=2):
        try:
            recs.append((row["subject"], row["condition"], float(row["value"])))
        except (TypeError, ValueError):
            raise ValueError(f"bad value at line {lineno}") from None
    return RepeatedMeasures.from_long(recs)
