from __future__ import annotations

from dataclasses import dataclass

from .errors import UsageError

THEN = "then"
ELSE = "else"


@dataclass(frozen=True)
class CoverageReport:
    """Executed lines and branch arms of one or more runs against a program.

    ``executed_lines`` holds ``(function, line)`` pairs of program statements;
    ``branch_outcomes`` holds ``(branch id, "then" | "else")``. For a ``while``
    loop "then" means the body was entered and "else" that the loop exited.
    """

    program_key: str
    executed_lines: frozenset
    branch_outcomes: frozenset
    focal_lines: frozenset
    focal_branches: frozenset
    branch_index: tuple  # ((bid, function, line), ...) for reporting

    @classmethod
    def from_raw(cls, program, sids, arms):
        owner = program.stmt_owner
        lines = program.line_index
        executed = frozenset((owner[s], lines[s]) for s in sids if s in lines)
        outcomes = frozenset((a >> 1, ELSE if a & 1 else THEN) for a in arms
                             if (a >> 1) in program.branch_index)
        return cls(program.key, executed, outcomes, program.focal_lines,
                   program.focal_branches, _branch_table(program))

    @classmethod
    def empty(cls, program):
        return cls.from_raw(program, (), ())

    @property
    def focal_line_total(self) -> int:
        return len(self.focal_lines)

    @property
    def focal_branch_arm_total(self) -> int:
        return 2 * len(self.focal_branches)

    @property
    def covered_focal_lines(self) -> frozenset:
        return self.executed_lines & self.focal_lines

    @property
    def covered_focal_arms(self) -> frozenset:
        return frozenset(o for o in self.branch_outcomes if o[0] in self.focal_branches)

    @property
    def line_percent(self) -> float:
        if not self.focal_lines:
            return 100.0
        return 100.0 * len(self.covered_focal_lines) / len(self.focal_lines)

    @property
    def branch_percent(self) -> float:
        if not self.focal_branches:
            return 100.0
        return 100.0 * len(self.covered_focal_arms) / self.focal_branch_arm_total

    def missed_lines(self):
        """Uncovered focal ``(function, line)`` pairs, sorted."""
        return sorted(self.focal_lines - self.executed_lines)

    def missed_arms(self):
        """Uncovered focal ``(function, line, arm)`` triples, sorted."""
        out = []
        for bid, fn, line in self.branch_index:
            if bid not in self.focal_branches:
                continue
            for arm in (THEN, ELSE):
                if (bid, arm) not in self.branch_outcomes:
                    out.append((fn, line, arm))
        return sorted(out, key=lambda t: (t[0], t[1], t[2] != THEN))


def _branch_table(program):
    cached = program.__dict__.get("_branch_table")
    if cached is None:
        cached = tuple(sorted((bid, program.branch_owner[bid], line)
                              for bid, (line, _arms) in program.branch_index.items()))
        program.__dict__["_branch_table"] = cached
    return cached


def merge_coverage(reports) -> CoverageReport:
    """Union of executed lines and branch outcomes; totals are unchanged."""
    reports = list(reports)
    if not reports:
        raise UsageError("merge_coverage needs at least one report")
    first = reports[0]
    for r in reports[1:]:
        if r.program_key != first.program_key:
            raise UsageError("cannot merge coverage reports of different programs")
    if len(reports) == 1:
        return first
    lines = frozenset().union(*(r.executed_lines for r in reports))
    arms = frozenset().union(*(r.branch_outcomes for r in reports))
    return CoverageReport(first.program_key, lines, arms, first.focal_lines,
                          first.focal_branches, first.branch_index)
