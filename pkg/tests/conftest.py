"""Prints a one-line verdict per acceptance criterion after the run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows: dict[str, tuple[bool, str]] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.rsplit("::", 1)[-1]
            detail = dict(getattr(report, "user_properties", []) or []).get("detail", "")
            ok = outcome == "passed"
            if name in rows and not rows[name][0]:
                continue  # never let a later report mask a failure
            rows[name] = (ok, detail or rows.get(name, (True, ""))[1])
    if not rows:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(rows):
        ok, detail = rows[name]
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f" | {detail}"
        terminalreporter.write_line(line)
