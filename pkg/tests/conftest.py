import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with the recorded measurements."""
    lines = []
    for outcome in ("passed", "failed", "xfailed", "xpassed", "skipped", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if ACCEPTANCE not in nodeid or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            if rep.when == "setup" and outcome == "passed":
                continue
            props = dict(getattr(rep, "user_properties", []))
            crit = props.get("criterion")
            if crit is None:
                continue
            status = {"passed": "PASS", "xpassed": "PASS"}.get(outcome, "FAIL")
            if outcome == "skipped":
                status = "SKIP"
            lines.append((int(crit), status, props.get("summary", ""), nodeid.split("::")[-1]))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status, summary, name in sorted(lines):
        terminalreporter.write_line(f"C{crit:<2} {status:4}  {name}  {summary}")
