import pytest

# criterion number -> {"passed": bool, "details": {key: text}}; filled by test_acceptance.py
ACCEPTANCE: dict[int, dict] = {}


@pytest.fixture
def record_criterion():
    """Record one check of a criterion; a criterion passes only if every check did.

    Checks sharing ``key`` overwrite each other's detail text (hypothesis runs).
    """

    def record(number: int, passed: bool, detail: str = "", key: str | None = None):
        entry = ACCEPTANCE.setdefault(number, {"passed": True, "details": {}})
        entry["passed"] = entry["passed"] and bool(passed)
        if detail:
            entry["details"][key or detail] = detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        entry = ACCEPTANCE[number]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  " + "; ".join(entry["details"].values()))
