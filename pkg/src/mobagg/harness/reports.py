"""Communication and timing summaries over simulated rounds.

Byte counts come straight from the transport layer's framing, so they are
exact, not sampled. Sizes are reported in both 10^3-byte KB and 1024-byte
KiB because rounded figures in the two conventions differ enough to matter
when comparing against external numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .simulate import RoundReport


@dataclass(frozen=True)
class OverheadRow:
    mode: str
    rounds: int
    skipped: int
    mean_upload_bytes: float
    mean_download_bytes: float
    recovery_rate: float
    mean_duration_s: float

    @property
    def mean_upload_kb(self) -> float:
        return self.mean_upload_bytes / 1e3

    @property
    def mean_upload_kib(self) -> float:
        return self.mean_upload_bytes / 1024.0

    @property
    def mean_download_kb(self) -> float:
        return self.mean_download_bytes / 1e3

    @property
    def mean_download_kib(self) -> float:
        return self.mean_download_bytes / 1024.0


def overhead_report(reports: Sequence[RoundReport]) -> list[OverheadRow]:
    """One row per mode; means cover rounds that actually ran."""
    by_mode: dict[str, list[RoundReport]] = {}
    for rep in reports:
        by_mode.setdefault(rep.mode, []).append(rep)
    rows: list[OverheadRow] = []
    for mode in sorted(by_mode):
        group = by_mode[mode]
        ran = [r for r in group if not r.skipped]
        n = len(ran)
        rows.append(
            OverheadRow(
                mode=mode,
                rounds=n,
                skipped=len(group) - n,
                mean_upload_bytes=sum(r.upload_bytes for r in ran) / n if n else 0.0,
                mean_download_bytes=sum(r.download_bytes for r in ran) / n if n else 0.0,
                recovery_rate=sum(r.recovery_invoked for r in ran) / n if n else 0.0,
                mean_duration_s=sum(r.duration_s for r in ran) / n if n else 0.0,
            )
        )
    return rows


def format_overhead_table(rows: Sequence[OverheadRow]) -> str:
    """Plain-text table for terminal output."""
    header = (
        f"{'mode':<10}{'rounds':>7}{'skipped':>8}{'up KB':>10}{'up KiB':>10}"
        f"{'down KB':>10}{'down KiB':>10}{'recovery':>9}{'mean s':>9}"
    )
    lines = [header]
    for r in rows:
        lines.append(
            f"{r.mode:<10}{r.rounds:>7}{r.skipped:>8}"
            f"{r.mean_upload_kb:>10.3f}{r.mean_upload_kib:>10.3f}"
            f"{r.mean_download_kb:>10.3f}{r.mean_download_kib:>10.3f}"
            f"{r.recovery_rate:>9.2f}{r.mean_duration_s:>9.4f}"
        )
    return "\n".join(lines)


def write_overhead_csv(path: str | Path, rows: Sequence[OverheadRow]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["mode", "rounds", "skipped", "mean_upload_bytes", "mean_download_bytes",
             "mean_upload_kb", "mean_upload_kib", "mean_download_kb",
             "mean_download_kib", "recovery_rate", "mean_duration_s"]
        )
        for r in rows:
            writer.writerow([
                r.mode, r.rounds, r.skipped,
                "%.10g" % r.mean_upload_bytes, "%.10g" % r.mean_download_bytes,
                "%.10g" % r.mean_upload_kb, "%.10g" % r.mean_upload_kib,
                "%.10g" % r.mean_download_kb, "%.10g" % r.mean_download_kib,
                "%.10g" % r.recovery_rate, "%.10g" % r.mean_duration_s,
            ])
    return path


def write_round_reports(path: str | Path, reports: Sequence[RoundReport]) -> Path:
    """Per-round detail CSV, one row per group."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["round_id", "mode", "group", "n_members", "n_online",
             "payload_bytes_per_member", "upload_bytes", "download_bytes",
             "recovery_invoked", "verified", "skipped"]
        )
        for rep in reports:
            if rep.skipped:
                writer.writerow(
                    [rep.round_id, rep.mode, "", "", "", "", 0, 0, 0, "", 1]
                )
                continue
            for g in rep.groups:
                writer.writerow([
                    rep.round_id, rep.mode, g.group_index, g.n_members, g.n_online,
                    g.payload_bytes_per_member, g.upload_bytes, g.download_bytes,
                    int(g.recovery_invoked), int(g.verified), 0,
                ])
    return path
