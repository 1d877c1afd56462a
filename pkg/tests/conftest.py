import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    # filled by the acceptance tests: {index: [(part, ok, detail), ...]}
    config.acceptance_results = {}


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "acceptance_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for idx in sorted(results):
        parts = results[idx]
        ok = all(p[1] for p in parts)
        title = parts[0][0]
        detail = "; ".join(p[2] for p in parts)
        terminalreporter.write_line(f"[{idx:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
