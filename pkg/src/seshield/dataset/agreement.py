"""Krippendorff's alpha (nominal metric) over per-labeler label files."""

from __future__ import annotations

from collections import Counter

from .metaclusters import LabelFile


class UndefinedAgreementError(Exception):
    """Alpha has no value (e.g. a single category across all ratings)."""


def krippendorff_alpha(label_files: list[LabelFile]) -> float:
    """Nominal-scale Krippendorff alpha across labelers, in [-1, 1].

    Units are metacluster ids; units rated by fewer than two labelers are
    ignored. Raises UndefinedAgreementError when the expected disagreement
    is zero (only one category present), where the ratio has no value.
    """
    if len(label_files) < 2:
        raise ValueError("need at least two labelers")
    units: dict[str, list[str]] = {}
    for lf in label_files:
        for row in lf.rows:
            units.setdefault(row.metacluster_id, []).append(row.label)

    pairable = {u: vals for u, vals in units.items() if len(vals) >= 2}
    if not pairable:
        raise UndefinedAgreementError("no unit was rated by two or more labelers")

    # Coincidence matrix accumulated as per-category totals and the
    # matching-pair mass on its diagonal.
    n_c: Counter[str] = Counter()
    diagonal = 0.0
    total = 0.0
    for vals in pairable.values():
        m = len(vals)
        counts = Counter(vals)
        for cat, k in counts.items():
            n_c[cat] += k
            diagonal += k * (k - 1) / (m - 1)
        total += m

    if len(n_c) < 2:
        raise UndefinedAgreementError("only one category present; alpha is undefined")

    observed_agreement = diagonal / total
    expected_agreement = sum(v * (v - 1) for v in n_c.values()) / (total * (total - 1))
    if expected_agreement >= 1.0:
        raise UndefinedAgreementError("expected disagreement is zero")
    return (observed_agreement - expected_agreement) / (1.0 - expected_agreement)
