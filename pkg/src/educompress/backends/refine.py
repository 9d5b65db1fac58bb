"""Propose-and-audit refinement of decomposition proposals.

Each round a solver proposes a tree. A deterministic audit (referential
validation, coverage, title checks) always runs; an optional model critic
then scores how faithfully each title reflects its span text. Rejected
rounds feed their findings back to the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from ..segmenter import EDUSequence, retrieve
from ..tree import Diagnostic, StructureTree, coverage, has_errors, validate

# Scores a batch of (query, documents); used here as (title, [span text]).
ScoreFn = Callable[[str, Sequence[str]], Sequence[float]]


class Solver(Protocol):
    def __call__(self, seq: EDUSequence, feedback: Sequence[str]) -> StructureTree: ...


@dataclass(frozen=True)
class AuditConfig:
    min_coverage: float = 0.0
    require_titles: bool = False
    critic_threshold: float = 0.5


@dataclass(frozen=True)
class CritiqueReport:
    """Audit outcome of one round; ``accepted`` implies no error findings."""

    accepted: bool
    deterministic_findings: tuple[Diagnostic, ...] = ()
    model_findings: str | None = None
    coverage: float = 0.0


@dataclass
class RefineOutcome:
    tree: StructureTree
    reports: list[CritiqueReport] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return bool(self.reports) and self.reports[-1].accepted


def solver_critic_refine(
    seq: EDUSequence,
    solver: Solver,
    critic: ScoreFn | None = None,
    max_rounds: int = 3,
    audit: AuditConfig | None = None,
) -> RefineOutcome:
    """Run up to ``max_rounds`` propose/audit cycles.

    Returns the first accepted tree, or the last proposal with its
    rejection reports once rounds are exhausted (exhaustion is an outcome,
    not an error). Solver and critic exceptions propagate.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    audit = audit or AuditConfig()
    feedback: list[str] = []
    reports: list[CritiqueReport] = []
    tree = StructureTree(doc_id=seq.doc_id, n_edus=seq.n)

    for _ in range(max_rounds):
        tree = solver(seq, tuple(feedback))
        findings = list(validate(tree, seq.n))
        covered = coverage(tree, seq.n)
        reasons: list[str] = []
        if has_errors(findings):
            reasons.extend(
                f"{d.code}: {d.message}" for d in findings if d.severity == "error"
            )
        if covered < audit.min_coverage:
            reasons.append(
                f"coverage {covered:.2f} below required {audit.min_coverage:.2f}"
            )
        if audit.require_titles and any(not n.title for n in tree.walk()):
            reasons.append("one or more nodes have empty titles")

        model_findings: str | None = None
        if not reasons and critic is not None:
            nodes = [n for n in tree.walk() if n.title]
            failing: list[str] = []
            for node in nodes:
                span_text = retrieve(seq, node.span)
                score = float(critic(node.title, [span_text])[0])
                if score < audit.critic_threshold:
                    failing.append(
                        f"title {node.title!r} scored {score:.2f} against its span "
                        f"[{node.span.id_start}--{node.span.id_end}]"
                    )
            if failing:
                model_findings = "; ".join(failing)
                reasons.extend(failing)

        accepted = not reasons
        reports.append(
            CritiqueReport(
                accepted=accepted,
                deterministic_findings=tuple(findings),
                model_findings=model_findings,
                coverage=covered,
            )
        )
        if accepted:
            break
        feedback.extend(reasons)

    return RefineOutcome(tree=tree, reports=reports)
