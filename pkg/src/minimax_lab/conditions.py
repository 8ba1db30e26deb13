"""Sampled checks of the nesting and coverage conditions on shift sequences.

For a restriction ``R`` with shift elements ``g_n`` the images ``g_n R`` must
increase with ``n`` and exhaust the full parameter space.  Nesting is tested
on random points of ``R``; coverage by finding, for each probe, the first
``n`` with ``g_n^{-1}(probe)`` in ``R``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ArgumentError

DEFAULT_NESTING_SAMPLES = 1000
DEFAULT_PROBES = 1000

_NESTING_STREAM = 1
_PROBE_STREAM = 2


@dataclass
class ConditionReport:
    restriction: dict
    n_max: int
    nesting: list = field(default_factory=list)  # (n, passed, failures)
    coverage: list = field(default_factory=list)  # (probe coords, first n or None)

    @property
    def nesting_ok(self):
        return all(passed for _, passed, _ in self.nesting)

    @property
    def coverage_ok(self):
        return all(n is not None for _, n in self.coverage)

    @property
    def verdict(self):
        return "pass" if self.nesting_ok and self.coverage_ok else "fail"

    def uncovered(self):
        return [coords for coords, n in self.coverage if n is None]

    def to_dict(self):
        return {
            "restriction": self.restriction,
            "n_range": [1, self.n_max],
            "nesting": [{"n": n, "passed": ok, "failures": k} for n, ok, k in self.nesting],
            "coverage": [
                {"probe": list(map(float, coords)), "n": n if n is not None else f"not covered up to {self.n_max}"}
                for coords, n in self.coverage
            ],
            "nesting_ok": self.nesting_ok,
            "coverage_ok": self.coverage_ok,
            "verdict": self.verdict,
        }


def verify_conditions(restriction, n_max, probes=None, nesting_samples=DEFAULT_NESTING_SAMPLES, seed=0):
    """Check ``g_n R`` nested in ``g_{n+1} R`` for ``n < n_max`` and that every
    probe lies in some ``g_n R`` with ``n <= n_max``.

    ``probes`` is a list of ParameterPoints, an array of flat coordinates, or
    an integer count of random probes drawn from a box of the full space.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ArgumentError("n_max must be a positive integer")
    if nesting_samples < 1:
        raise ArgumentError("nesting_samples must be positive")
    n_max = int(n_max)
    if probes is None:
        probes = DEFAULT_PROBES
    if isinstance(probes, (int, np.integer)):
        coords = restriction.probe_coords(rng.stream_generator(seed, _PROBE_STREAM), int(probes))
    elif len(probes) and hasattr(probes[0], "as_vector"):
        coords = np.array([restriction._coords(t) for t in probes])
    else:
        coords = np.atleast_2d(np.asarray(probes, dtype=float))
        if coords.shape[1] != restriction.dim:
            raise ArgumentError(f"probes need {restriction.dim} coordinates each")

    report = ConditionReport(restriction=restriction.to_dict(), n_max=n_max)
    gen = rng.stream_generator(seed, _NESTING_STREAM)
    elements = [restriction.shift_element(n) for n in range(1, n_max + 1)]
    for n in range(1, n_max):
        inside = restriction.sample_coords(gen, nesting_samples)
        image = elements[n - 1].on_coords(inside)
        back = elements[n].inverse().on_coords(image)
        failures = int(np.count_nonzero(~restriction.contains_coords(back)))
        report.nesting.append((n, failures == 0, failures))

    first = np.full(len(coords), -1)
    for n, g in enumerate(elements, start=1):
        todo = first < 0
        if not todo.any():
            break
        hit = restriction.contains_coords(g.inverse().on_coords(coords[todo]))
        idx = np.flatnonzero(todo)[hit]
        first[idx] = n
    report.coverage = [(c, int(n) if n > 0 else None) for c, n in zip(coords, first)]
    return report
