import numpy as np
import pytest

from psmoa.model import GB, DataObject, Node, Scenario


def make_scenario(sizes, bandwidth, rtt, capacity=None, c1=None, c2=None, popularity=None,
                  regions=None, requests=None, tags=None) -> Scenario:
    """Scenario from plain columns; units are whatever the caller picks."""
    n = len(bandwidth)
    capacity = [1e12] * n if capacity is None else capacity
    c1 = [0.0] * n if c1 is None else c1
    c2 = [0.0] * n if c2 is None else c2
    popularity = [0.0] * n if popularity is None else popularity
    regions = ["r"] * n if regions is None else regions
    requests = [0] * len(sizes) if requests is None else requests
    tags = ["normal"] * len(sizes) if tags is None else tags
    nodes = tuple(Node(j, float(capacity[j]), float(bandwidth[j]), float(rtt[j]), float(c1[j]), float(c2[j]),
                       float(popularity[j]), region=regions[j]) for j in range(n))
    objects = tuple(DataObject(i, float(sizes[i]), tags[i], int(requests[i])) for i in range(len(sizes)))
    return Scenario(nodes, objects)


def tiny_scenario() -> Scenario:
    """Three heterogeneous nodes, two objects: 49 valid plans, all feasible."""
    return make_scenario(
        sizes=[4 * GB, 7 * GB],
        bandwidth=[1.0 * GB, 0.4 * GB, 0.8 * GB],
        rtt=[0.0, 0.050, 0.120],
        capacity=[40 * GB, 60 * GB, 30 * GB],
        c1=[0.010 / GB, 0.006 / GB, 0.015 / GB],
        c2=[0.012 / GB, 0.008 / GB, 0.005 / GB],
        popularity=[0.2, 0.5, 0.3],
        regions=["a", "b", "c"],
        requests=[30, 10],
        tags=["normal", "critical"],
    )


@pytest.fixture
def tiny():
    return tiny_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ----------------------------------------------------------------------------
# acceptance reporting: one line per criterion in the terminal summary

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and rep.passed):
        return
    number, title = marker.args
    detail = dict(rep.user_properties).get("detail", "")
    status = "PASS" if rep.passed else "FAIL"
    if rep.when == "call" or status == "FAIL":
        _criteria[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_criteria):
        title, status, detail = _criteria[number]
        line = f"criterion {number:>2} {status}: {title}"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
