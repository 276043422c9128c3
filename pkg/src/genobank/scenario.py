"""Natural-language scenario interface: a Gherkin-subset parser and runner
with a builtin step vocabulary bound to the HSM coordinator.

Supported grammar: tag lines, Feature with narrative, one optional
Background, one or more Scenarios, Given/When/Then/And/But steps. The
keyword table is data-driven so other languages can be plugged in; only the
English table ships.
"""

from __future__ import annotations

import json
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .hsm import (
    Action,
    HsmAgent,
    HsmCoordinator,
    LocalDirMover,
    MoverError,
)


@dataclass(frozen=True)
class KeywordTable:
    feature: str = "Feature"
    background: str = "Background"
    scenario: str = "Scenario"
    given: str = "Given"
    when: str = "When"
    then: str = "Then"
    conjunctions: tuple[str, ...] = ("And", "But")


ENGLISH = KeywordTable()


class ParseError(Exception):
    def __init__(self, line: int, expected: str):
        super().__init__(f"line {line}: expected {expected}")
        self.line = line
        self.expected = expected


class UnboundStep(Exception):
    pass


class AmbiguousStep(Exception):
    pass


class StepFailure(Exception):
    pass


@dataclass(frozen=True)
class Step:
    keyword: str  # resolved Given/When/Then
    raw_keyword: str  # as written, may be And/But
    text: str
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)


@dataclass(frozen=True)
class ScenarioDoc:
    tags: tuple[str, ...]
    feature: str
    narrative: tuple[str, ...]
    background: tuple[Step, ...]
    scenarios: tuple[tuple[str, tuple[Step, ...]], ...]


def parse_feature(text: str, keywords: KeywordTable = ENGLISH) -> ScenarioDoc:
    tags: list[str] = []
    feature: str | None = None
    narrative: list[str] = []
    background: list[Step] = []
    scenarios: list[tuple[str, list[Step]]] = []
    section: str | None = None  # None | "feature" | "background" | "scenario"
    last_keyword: str | None = None

    step_keywords = {keywords.given, keywords.when, keywords.then}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            if feature is not None:
                raise ParseError(line_no, "tags before the Feature line")
            tags.extend(line.split())
            continue
        if line.startswith(keywords.feature + ":"):
            if feature is not None:
                raise ParseError(line_no, "a single Feature")
            feature = line[len(keywords.feature) + 1 :].strip()
            section = "feature"
            continue
        if line.startswith(keywords.background + ":"):
            if feature is None:
                raise ParseError(line_no, f"{keywords.feature}: before {keywords.background}:")
            if background:
                raise ParseError(line_no, "at most one Background")
            section = "background"
            last_keyword = None
            continue
        if line.startswith(keywords.scenario + ":"):
            if feature is None:
                raise ParseError(line_no, f"{keywords.feature}: before {keywords.scenario}:")
            scenarios.append((line[len(keywords.scenario) + 1 :].strip(), []))
            section = "scenario"
            last_keyword = None
            continue

        word, _, rest = line.partition(" ")
        if word in step_keywords or word in keywords.conjunctions:
            if section not in ("background", "scenario"):
                raise ParseError(line_no, "a Background or Scenario before steps")
            if word in keywords.conjunctions:
                if last_keyword is None:
                    raise ParseError(line_no, f"an explicit keyword before {word}")
                resolved = last_keyword
            else:
                resolved = word
                last_keyword = word
            step = Step(
                keyword=resolved, raw_keyword=word, text=rest.strip(),
                line=line_no, col=len(raw) - len(raw.lstrip()) + 1,
            )
            if section == "background":
                background.append(step)
            else:
                scenarios[-1][1].append(step)
            continue
        if section == "feature":
            narrative.append(line)
            continue
        raise ParseError(line_no, "a step, Background:, or Scenario:")

    if feature is None:
        raise ParseError(1, f"a {keywords.feature}: line")
    if not scenarios:
        raise ParseError(len(text.splitlines()) or 1, "at least one Scenario")
    return ScenarioDoc(
        tags=tuple(tags),
        feature=feature,
        narrative=tuple(narrative),
        background=tuple(background),
        scenarios=tuple((name, tuple(steps)) for name, steps in scenarios),
    )


def render_feature(doc: ScenarioDoc, keywords: KeywordTable = ENGLISH) -> str:
    out = []
    if doc.tags:
        out.append(" ".join(doc.tags))
    out.append(f"{keywords.feature}: {doc.feature}")
    for line in doc.narrative:
        out.append(f"  {line}")
    if doc.background:
        out.append("")
        out.append(f"{keywords.background}:")
        for step in doc.background:
            out.append(f"  {step.raw_keyword} {step.text}")
    for name, steps in doc.scenarios:
        out.append("")
        out.append(f"{keywords.scenario}: {name}")
        for step in steps:
            out.append(f"  {step.raw_keyword} {step.text}")
    return "\n".join(out) + "\n"


# -- bindings and runner -----------------------------------------------------

_PLACEHOLDER = re.compile(r"\\\{(path|name)\\\}")


@dataclass(frozen=True)
class StepBinding:
    pattern: str
    handler: Callable = field(compare=False)

    def regex(self) -> re.Pattern:
        escaped = re.escape(self.pattern)

        def repl(m):
            kind = m.group(1)
            return rf"(?P<{kind}>\S+)" if kind == "path" else rf"(?P<{kind}>\w+)"

        return re.compile("^" + _PLACEHOLDER.sub(repl, escaped) + "$")


@dataclass
class World:
    """Mutable run context for one scenario: a store directory plus the HSM
    machinery the builtin steps drive."""

    root: Path
    user: str | None = None
    fs_ready: bool = False
    coordinator: HsmCoordinator | None = None
    agent: HsmAgent | None = None
    agent_configured: bool = False
    default_backend: str | None = None
    _owns_root: bool = False

    @classmethod
    def from_template(cls, template: Path | None) -> "World":
        root = Path(tempfile.mkdtemp(prefix="scenario-world-"))
        if template is not None and Path(template).exists():
            shutil.copytree(template, root, dirs_exist_ok=True)
        return cls(root=root, _owns_root=True)

    def close(self):
        if self.agent is not None:
            self.agent.stop()
        if self._owns_root:
            shutil.rmtree(self.root, ignore_errors=True)

    def require_coordinator(self) -> HsmCoordinator:
        if self.coordinator is None:
            raise StepFailure("the HSM coordinator is not enabled")
        return self.coordinator

    def run_action(self, action: Action, path: str, backend: str | None = None,
                   force: bool = False):
        coord = self.require_coordinator()
        rid = coord.submit(path, action, backend=backend, force=force)
        if self.agent is not None:
            self.agent.drain()
        else:
            coord.run_pending()
        req = coord.requests[rid]
        if req.status != "Done":
            raise StepFailure(f"{action.value} of {path} failed: {req.reason}")


def _record_or_fail(world: World, path: str):
    try:
        return world.require_coordinator().status(path)
    except MoverError as e:
        raise StepFailure(str(e)) from e
    except Exception as e:
        raise StepFailure(f"no HSM record for {path}: {e}") from e


def builtin_bindings() -> list[StepBinding]:
    def be_root(world: World):
        world.user = "root"  # recorded only; no real privilege change

    def have_fs(world: World):
        world.root.mkdir(parents=True, exist_ok=True)
        world.fs_ready = True

    def enable_coordinator(world: World):
        journal = world.root / ".hsm" / "journal.jsonl"
        journal.parent.mkdir(parents=True, exist_ok=True)
        world.coordinator = HsmCoordinator(world.root, journal)

    def configure_agent(world: World):
        world.require_coordinator()
        world.agent_configured = True

    def configure_mover(world: World, name: str):
        coord = world.require_coordinator()
        coord.registry.register(LocalDirMover(name, world.root / ".backends" / name))
        world.default_backend = name

    def start_agent(world: World):
        if not world.agent_configured:
            raise StepFailure("the HSM Agent is not configured")
        world.agent = HsmAgent(world.require_coordinator(), worker_count=2).start()

    def agent_running(world: World):
        if world.agent is None or not world.agent.running:
            raise StepFailure("the HSM Agent is not running")

    def mover_running(world: World, name: str):
        coord = world.require_coordinator()
        if name not in coord.registry:
            raise StepFailure(f"no {name} data mover configured")

    def do_archive(world: World, path: str):
        world.run_action(Action.ARCHIVE, path, backend=world.default_backend)

    def marked_archived(world: World, path: str):
        if not _record_or_fail(world, path).archived:
            raise StepFailure(f"{path} is not marked as archived")

    def data_archived(world: World, path: str):
        rec = _record_or_fail(world, path)
        if rec.remote_ref is None:
            raise StepFailure(f"{path} has no backend copy")
        coord = world.require_coordinator()
        try:
            remote = coord.registry.get(rec.backend).restore(rec.remote_ref)
        except MoverError as e:
            raise StepFailure(f"backend copy of {path} unavailable: {e}") from e
        import hashlib

        if hashlib.sha256(remote).hexdigest() != rec.archived_checksum:
            raise StepFailure(f"backend copy of {path} does not match its checksum")

    def do_release(world: World, path: str):
        world.run_action(Action.RELEASE, path)

    def marked_released(world: World, path: str):
        if not _record_or_fail(world, path).released:
            raise StepFailure(f"{path} is not marked as released")

    def data_released(world: World, path: str):
        if (world.root / path).exists():
            raise StepFailure(f"{path} still has a local payload")

    def do_restore(world: World, path: str):
        world.run_action(Action.RESTORE, path)

    def marked_restored(world: World, path: str):
        rec = _record_or_fail(world, path)
        if rec.released or not (world.root / path).exists():
            raise StepFailure(f"{path} is not restored")

    def do_remove(world: World, path: str):
        world.run_action(Action.REMOVE, path)

    def marked_removed(world: World, path: str):
        if _record_or_fail(world, path).archived:
            raise StepFailure(f"{path} is still marked as archived")

    return [
        StepBinding("I am the root user", be_root),
        StepBinding("I have a Lustre filesystem", have_fs),
        StepBinding("the HSM coordinator is enabled", enable_coordinator),
        StepBinding("I configure the HSM Agent", configure_agent),
        StepBinding("I configure the {name} data mover", configure_mover),
        StepBinding("I start the HSM Agent", start_agent),
        StepBinding("the HSM Agent should be running", agent_running),
        StepBinding("the {name} data mover should be running", mover_running),
        StepBinding("I archive {path}", do_archive),
        StepBinding("{path} should be marked as archived", marked_archived),
        StepBinding("the data for {path} should be archived", data_archived),
        StepBinding("I release {path}", do_release),
        StepBinding("{path} should be marked as released", marked_released),
        StepBinding("the data for {path} should be released", data_released),
        StepBinding("I restore {path}", do_restore),
        StepBinding("{path} should be marked as restored", marked_restored),
        StepBinding("I remove {path}", do_remove),
        StepBinding("{path} should be marked as removed", marked_removed),
    ]


def resolve_bindings(doc: ScenarioDoc, bindings: list[StepBinding]
                     ) -> dict[str, tuple[StepBinding, dict]]:
    """Match every step to exactly one binding before anything runs."""
    compiled = [(b, b.regex()) for b in bindings]
    resolved: dict[str, tuple[StepBinding, dict]] = {}
    all_steps = list(doc.background)
    for _, steps in doc.scenarios:
        all_steps.extend(steps)
    for step in all_steps:
        if step.text in resolved:
            continue
        matches = [(b, m) for b, rx in compiled if (m := rx.match(step.text))]
        if not matches:
            raise UnboundStep(f"line {step.line}: no binding matches {step.text!r}")
        if len(matches) > 1:
            patterns = ", ".join(repr(b.pattern) for b, _ in matches)
            raise AmbiguousStep(f"line {step.line}: {step.text!r} matches {patterns}")
        binding, m = matches[0]
        resolved[step.text] = (binding, m.groupdict())
    return resolved


@dataclass
class StepResult:
    keyword: str
    text: str
    status: str  # passed | failed | skipped
    message: str | None = None
    line: int = 0


@dataclass
class ScenarioResult:
    name: str
    steps: list[StepResult]

    @property
    def passed(self) -> bool:
        return all(s.status == "passed" for s in self.steps)


@dataclass
class RunReport:
    feature: str
    scenarios: list[ScenarioResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.scenarios)

    def to_json(self) -> dict:
        return {
            "feature": self.feature,
            "passed": self.passed,
            "scenarios": [
                {
                    "name": sc.name,
                    "passed": sc.passed,
                    "steps": [
                        {"keyword": st.keyword, "text": st.text, "status": st.status,
                         "message": st.message, "line": st.line}
                        for st in sc.steps
                    ],
                }
                for sc in self.scenarios
            ],
        }

    def to_text(self) -> str:
        marks = {"passed": "✓", "failed": "✗", "skipped": "-"}
        out = [f"Feature: {self.feature}"]
        for sc in self.scenarios:
            out.append(f"  Scenario: {sc.name}")
            for st in sc.steps:
                line = f"    {marks[st.status]} {st.keyword} {st.text}"
                if st.message:
                    line += f"  ({st.message})"
                out.append(line)
        out.append("PASSED" if self.passed else "FAILED")
        return "\n".join(out)


def run_feature(
    doc: ScenarioDoc,
    bindings: list[StepBinding],
    world_factory: Callable[[], World],
) -> RunReport:
    """Run each scenario against a fresh World: background steps first, then
    scenario steps; the first failure skips the remainder of the scenario."""
    resolved = resolve_bindings(doc, bindings)
    report = RunReport(feature=doc.feature, scenarios=[])
    for name, steps in doc.scenarios:
        world = world_factory()
        results: list[StepResult] = []
        failed = False
        try:
            for step in list(doc.background) + list(steps):
                if failed:
                    results.append(StepResult(step.keyword, step.text, "skipped",
                                              line=step.line))
                    continue
                binding, params = resolved[step.text]
                try:
                    binding.handler(world, **params)
                    results.append(StepResult(step.keyword, step.text, "passed",
                                              line=step.line))
                except StepFailure as e:
                    failed = True
                    results.append(StepResult(step.keyword, step.text, "failed",
                                              message=str(e), line=step.line))
                except Exception as e:  # binding bug or environment problem
                    failed = True
                    results.append(StepResult(step.keyword, step.text, "failed",
                                              message=f"{type(e).__name__}: {e}",
                                              line=step.line))
        finally:
            world.close()
        report.scenarios.append(ScenarioResult(name=name, steps=results))
    return report


def run_feature_file(path, report_format: str = "text",
                     workdir: Path | None = None) -> tuple[str, bool]:
    doc = parse_feature(Path(path).read_text(encoding="utf-8"))
    factory = lambda: World.from_template(workdir)
    report = run_feature(doc, builtin_bindings(), factory)
    if report_format == "json":
        return json.dumps(report.to_json(), indent=1), report.passed
    return report.to_text(), report.passed
