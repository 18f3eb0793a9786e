"""Oracle-call accounting."""

from dataclasses import dataclass, astuple, fields


@dataclass
class OracleCounters:
    """Running totals of first-order oracle calls within one run."""

    grad_f: int = 0
    apply_A: int = 0
    apply_At: int = 0
    prox_h: int = 0

    def snapshot(self):
        return OracleCounters(*astuple(self))

    def delta(self, earlier):
        return tuple(a - b for a, b in zip(astuple(self), astuple(earlier)))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def add(self, other):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


class Oracles:
    """Counting front-end over the four oracles of a `CompositeProblem`.

    Every solver routes its calls through one of these so that the totals in
    the trace are exact.
    """

    def __init__(self, problem, counters=None):
        self.problem = problem
        self.counters = OracleCounters() if counters is None else counters

    def grad_f(self, x):
        self.counters.grad_f += 1
        return self.problem.f.gradient(x)

    def A(self, x):
        self.counters.apply_A += 1
        return self.problem.A.apply(x)

    def At(self, y):
        self.counters.apply_At += 1
        return self.problem.A.adjoint(y)

    def prox(self, t, z):
        self.counters.prox_h += 1
        return self.problem.h.prox(t, z)
