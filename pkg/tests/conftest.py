from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from robust_newsvendor.model import ProblemInstance

settings.register_profile(
    "props",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)

caps = st.sampled_from([Fraction(1), Fraction(2), Fraction(3, 2), Fraction(5, 3)])
backorder = st.builds(Fraction, st.integers(1, 9), st.integers(1, 4))


def on_grid(U: Fraction, n: int = 12):
    """Rational points U*k/n, k = 0..n."""
    return st.integers(0, n).map(lambda k: U * Fraction(k, n))


@st.composite
def instances(draw, max_T: int = 6, min_T: int = 1):
    U = draw(caps)
    return ProblemInstance(
        mu=draw(on_grid(U)),
        U=U,
        b=draw(backorder),
        T=draw(st.integers(min_T, max_T)),
        x0=draw(on_grid(U)),
    )


def grid(U: Fraction, n: int) -> list[Fraction]:
    return [U * Fraction(k, n) for k in range(n + 1)]


def convex_at(f, a, m, c) -> bool:
    return (c - a) * f(m) <= (c - m) * f(a) + (m - a) * f(c)


def concave_at(f, a, m, c) -> bool:
    return (c - a) * f(m) >= (c - m) * f(a) + (m - a) * f(c)


def triples(points):
    return zip(points, points[1:], points[2:])


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def report_criterion(number: int, title: str, failures: list[str]) -> None:
    status = "PASS" if not failures else "FAIL"
    line = f"[{status}] criterion {number}: {title}"
    if failures:
        line += " | " + "; ".join(failures)
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert not failures, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
