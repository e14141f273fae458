from acceptance import CHECKS, SUITE_ORDER, run_suite


def _check(suite, label):
    return dict(CHECKS[suite])[label]


def test_every_suite_has_checks():
    assert all(CHECKS[suite] for suite in SUITE_ORDER)


def test_determinism_check_passes_quick():
    passed, detail = _check('stats', 'determinism across worker counts')(True, 2)
    assert passed, detail
    assert "[1, 2]" in detail


def test_suite_report_names_checks():
    report = run_suite('surface', quick=True, workers=1)
    assert report.passed
    assert all(c.name.startswith("surface/") for c in report.checks)
