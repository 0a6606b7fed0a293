# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Text tables for the terminal."""

from __future__ import annotations

from typing import Sequence


def _cell(x, precision: int) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.{precision}f}"
    return str(x)


def table(rows, header, align, margin=0, precision=3) -> str:
    """Format a table

    >>> print(table([['m2', 0.5712, 15],
    ...              ['symbolic', 0.474, 15]],
    ...             ['model', 'accuracy', 'n'],
    ...             ['<', '>', '>']))
    model    │ accuracy │  n
    ─────────┼──────────┼───
    m2       │    0.571 │ 15
    symbolic │    0.474 │ 15
    ─────────┴──────────┴───

    Parameters
    ----------
    rows : list of lists (or tuples)
        The rows of the table
    header : A list or tuple of strings
        The header of the table
    align : A list of '<', '>', or '^'
        To align the columns to the left, right, or center
    margin : int, optional
        Extra spaces on the left side of the table, by default 0
    precision : int, optional
        Decimals of the floats, by default 3

    Returns
    -------
    str
        A table as a string
    """
    all_rows = [list(header)] + [[_cell(x, precision) for x in row] for row in rows]
    lens = [max(len(x) for x in col) for col in zip(*all_rows)]

    def _(x, width, j):
        if align[j] == "<":
            return x.ljust(width)
        if align[j] == ">":
            return x.rjust(width)
        return x.center(width)

    result = []
    for i, row in enumerate(all_rows):
        result.append(" │ ".join(_(x, width, j) for j, (x, width) in enumerate(zip(row, lens))))
        if i == 0:
            result.append("─┼─".join("─" * width for width in lens))

    result.append("─┴─".join("─" * width for width in lens))

    if margin:
        result = [margin * " " + x for x in result]

    return "\n".join(result)


def report_table(reports: Sequence) -> str:
    """Experiment reports, one line per (model, condition, window)."""
    rows = [
        (
            r.model,
            r.condition,
            f"PW{r.window}",
            f"{r.accuracy_mean:.3f} ± {r.accuracy_std:.3f}",
            f"{r.acc_at_1_mean:.3f} ± {r.acc_at_1_std:.3f}",
            r.deferral_mean,
            r.n,
        )
        for r in reports
    ]
    return table(
        rows,
        ["model", "condition", "window", "accuracy", "accuracy@1", "deferral", "n"],
        ["<", "<", "<", ">", ">", ">", ">"],
    )


def sweep_table(points: Sequence) -> str:
    rows = [
        (
            f"PW{p.window}",
            f"{p.threshold:g}",
            p.deferral_mean,
            p.accepted_accuracy_mean,
            p.bnn_accuracy_mean,
            p.m1_accuracy_mean,
            p.m2_accuracy_mean,
        )
        for p in points
    ]
    return table(
        rows,
        ["window", "threshold", "deferral", "accepted acc.", "bnn", "m1", "m2"],
        ["<", ">", ">", ">", ">", ">", ">"],
    )


def rules_table(rules) -> str:
    rows = [(r.rule_id, r.consequent.label, r.class_distribution.max, r.support, " and ".join(str(c) for c in r.conditions) or "true") for r in rules]
    return table(rows, ["id", "class", "p", "support", "conditions"], ["<", "<", ">", ">", "<"])
