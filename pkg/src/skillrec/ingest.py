"""Load, validate, and persist course corpora from disk.

Expected layout under the corpus root:

    schedule.json        {"<year>": {"weeks": [{"week", "lecture_topics",
                          "lab_problems", "homework_pool"}, ...]}}
    problems/<id>.json   {"id", "role", "week", "skills", "statement",
                          "reference_solution"}
    submissions.jsonl    one object per line: student_id, year, lab, problem,
                          attempt, correct, time_s, seq, source

Validation is strict-fail: the first problem aborts with its location.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .domain import (
    TOPICS,
    CourseSchedule,
    Problem,
    SkillTopic,
    SkillVector,
    Submission,
    SubmissionSequence,
    WeekPlan,
    topic_index,
)
from .errors import (
    DanglingReference,
    MissingFile,
    OrderViolation,
    SchemaViolation,
    UnknownStudent,
)

_SUBMISSION_FIELDS = {
    "student_id": str,
    "year": int,
    "lab": int,
    "problem": str,
    "attempt": int,
    "correct": bool,
    "time_s": (int, float, type(None)),
    "seq": int,
    "source": str,
}

_TOPIC_NAMES = {t.value for t in TOPICS}


@dataclass(frozen=True)
class Corpus:
    """A fully validated course corpus; immutable after load."""

    schedules: dict[int, CourseSchedule]
    problems: dict[str, Problem]
    sequences: dict[tuple[int, str], SubmissionSequence]

    def submissions(self):
        """Iterate submissions in (offering_year, student_id, submitted_at) order."""
        for (year, student) in sorted(self.sequences):
            yield from self.sequences[(year, student)].submissions

    def students(self, offering_year: int) -> list[str]:
        return sorted(s for (y, s) in self.sequences if y == offering_year)

    @property
    def n_submissions(self) -> int:
        return sum(len(seq) for seq in self.sequences.values())


def _check_int(value, where: str, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(f"{where}: {what} must be an integer, got {value!r}")
    return value


def _parse_schedule(path: Path) -> dict[int, CourseSchedule]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: invalid JSON ({e})") from e
    if not isinstance(raw, dict) or not raw:
        raise SchemaViolation(f"{path}: expected a non-empty object keyed by year")
    schedules: dict[int, CourseSchedule] = {}
    for year_key, body in raw.items():
        try:
            year = int(year_key)
        except ValueError:
            raise SchemaViolation(f"{path}: year key {year_key!r} is not an integer")
        weeks_raw = body.get("weeks") if isinstance(body, dict) else None
        if not isinstance(weeks_raw, list) or not weeks_raw:
            raise SchemaViolation(f"{path}: year {year} needs a non-empty 'weeks' list")
        weeks = []
        for i, w in enumerate(weeks_raw):
            where = f"{path}: year {year} week entry {i}"
            if not isinstance(w, dict):
                raise SchemaViolation(f"{where}: expected an object")
            week_no = _check_int(w.get("week"), where, "'week'")
            topics = []
            for name in w.get("lecture_topics", []):
                if name not in _TOPIC_NAMES:
                    raise SchemaViolation(f"{where}: unknown topic {name!r}")
                topics.append(SkillTopic(name))
            labs = w.get("lab_problems", [])
            pool = w.get("homework_pool", [])
            if not all(isinstance(p, str) for p in labs + pool):
                raise SchemaViolation(f"{where}: problem ids must be strings")
            weeks.append(WeekPlan(week_no, tuple(topics), tuple(labs), tuple(pool)))
        try:
            schedules[year] = CourseSchedule(tuple(sorted(weeks, key=lambda wp: wp.week)))
        except ValueError as e:
            raise SchemaViolation(f"{path}: year {year}: {e}") from e
    return schedules


def _parse_problem(path: Path) -> Problem:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: invalid JSON ({e})") from e
    for key in ("id", "role", "week", "skills", "reference_solution"):
        if key not in raw:
            raise SchemaViolation(f"{path}: missing field {key!r}")
    if raw["id"] != path.stem:
        raise SchemaViolation(f"{path}: id {raw['id']!r} does not match filename")
    skills_raw = raw["skills"]
    if not isinstance(skills_raw, dict):
        raise SchemaViolation(f"{path}: 'skills' must be an object")
    try:
        skills = SkillVector.from_mapping(skills_raw)
    except ValueError as e:
        raise SchemaViolation(f"{path}: {e}") from e
    statement = raw.get("statement")
    if statement is not None and not isinstance(statement, str):
        raise SchemaViolation(f"{path}: 'statement' must be a string or null")
    try:
        return Problem(
            problem_id=raw["id"],
            reference_solution=raw["reference_solution"],
            skills=skills,
            role=raw["role"],
            week=_check_int(raw["week"], str(path), "'week'"),
            statement=statement,
        )
    except ValueError as e:
        raise SchemaViolation(f"{path}: {e}") from e


def _parse_submission_line(line: str, where: str) -> dict:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{where}: invalid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise SchemaViolation(f"{where}: expected an object")
    extra = set(raw) - set(_SUBMISSION_FIELDS)
    if extra:
        raise SchemaViolation(f"{where}: unknown fields {sorted(extra)}")
    for name, types in _SUBMISSION_FIELDS.items():
        if name not in raw:
            raise SchemaViolation(f"{where}: missing field {name!r}")
        value = raw[name]
        if types is int:
            _check_int(value, where, f"{name!r}")
        elif types is bool:
            if not isinstance(value, bool):
                raise SchemaViolation(f"{where}: {name!r} must be a boolean")
        elif types is str:
            if not isinstance(value, str):
                raise SchemaViolation(f"{where}: {name!r} must be a string")
        else:  # time_s: number or null
            if isinstance(value, bool) or not isinstance(value, types):
                raise SchemaViolation(f"{where}: {name!r} must be a number or null")
    return raw


def _validate_cross_references(schedules, problems):
    for year, schedule in schedules.items():
        for wp in schedule.weeks:
            for pid in wp.lab_problems:
                p = problems.get(pid)
                if p is None:
                    raise DanglingReference(f"schedule {year} week {wp.week}: unknown lab problem {pid!r}")
                if p.role != "lab":
                    raise SchemaViolation(
                        f"schedule {year} week {wp.week}: problem {pid!r} has role {p.role!r}, expected lab"
                    )
            for pid in wp.homework_pool:
                p = problems.get(pid)
                if p is None:
                    raise DanglingReference(f"schedule {year} week {wp.week}: unknown homework problem {pid!r}")
                if p.role != "homework":
                    raise SchemaViolation(
                        f"schedule {year} week {wp.week}: problem {pid!r} has role {p.role!r}, expected homework"
                    )
        # Lab problems may only require topics already introduced by their week.
        introduced: set[SkillTopic] = set()
        for wp in schedule.weeks:
            introduced.update(wp.lecture_topics)
            for pid in wp.lab_problems:
                late = problems[pid].skills.required_topics() - introduced
                if late:
                    names = sorted(t.value for t in late)
                    raise SchemaViolation(
                        f"schedule {year} week {wp.week}: lab problem {pid!r} requires "
                        f"topics not yet introduced: {names}"
                    )


def load_corpus(root_path: str | Path) -> Corpus:
    """Load and validate a corpus directory."""
    root = Path(root_path)
    schedule_path = root / "schedule.json"
    problems_dir = root / "problems"
    submissions_path = root / "submissions.jsonl"
    for p in (schedule_path, problems_dir, submissions_path):
        if not p.exists():
            raise MissingFile(f"missing {p}")

    schedules = _parse_schedule(schedule_path)
    problems: dict[str, Problem] = {}
    for path in sorted(problems_dir.glob("*.json")):
        problem = _parse_problem(path)
        problems[problem.problem_id] = problem
    _validate_cross_references(schedules, problems)

    grouped: dict[tuple[int, str], list[Submission]] = {}
    with submissions_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{submissions_path}:{lineno}"
            raw = _parse_submission_line(line, where)
            if raw["problem"] not in problems:
                raise DanglingReference(f"{where}: unknown problem {raw['problem']!r}")
            if raw["year"] not in schedules:
                raise SchemaViolation(f"{where}: year {raw['year']} has no schedule")
            n_labs = schedules[raw["year"]].n_labs
            if not 1 <= raw["lab"] <= n_labs:
                raise SchemaViolation(f"{where}: lab {raw['lab']} outside 1..{n_labs}")
            try:
                sub = Submission(
                    student_id=raw["student_id"],
                    offering_year=raw["year"],
                    lab_index=raw["lab"],
                    problem_id=raw["problem"],
                    attempt_index=raw["attempt"],
                    source=raw["source"],
                    correct=raw["correct"],
                    solution_time_s=None if raw["time_s"] is None else float(raw["time_s"]),
                    submitted_at=raw["seq"],
                )
            except ValueError as e:
                raise SchemaViolation(f"{where}: {e}") from e
            grouped.setdefault((sub.offering_year, sub.student_id), []).append(sub)

    sequences: dict[tuple[int, str], SubmissionSequence] = {}
    for key, subs in grouped.items():
        year, student = key
        subs.sort(key=lambda s: s.submitted_at)
        seen_seq: set[int] = set()
        attempts: dict[str, int] = {}
        for s in subs:
            if s.submitted_at in seen_seq:
                raise OrderViolation(
                    f"student {student!r} year {year}: duplicate seq {s.submitted_at}"
                )
            seen_seq.add(s.submitted_at)
            expected = attempts.get(s.problem_id, 0) + 1
            if s.attempt_index != expected:
                raise OrderViolation(
                    f"student {student!r} year {year} problem {s.problem_id!r}: "
                    f"attempt {s.attempt_index} where {expected} was expected"
                )
            attempts[s.problem_id] = s.attempt_index
        sequences[key] = SubmissionSequence(student, year, tuple(subs))

    return Corpus(schedules=schedules, problems=problems, sequences=sequences)


def save_corpus(corpus: Corpus, root_path: str | Path) -> None:
    """Write a corpus back to disk in canonical, byte-stable form."""
    root = Path(root_path)
    (root / "problems").mkdir(parents=True, exist_ok=True)

    schedule_doc = {
        str(year): {
            "weeks": [
                {
                    "week": wp.week,
                    "lecture_topics": [t.value for t in wp.lecture_topics],
                    "lab_problems": list(wp.lab_problems),
                    "homework_pool": list(wp.homework_pool),
                }
                for wp in schedule.weeks
            ]
        }
        for year, schedule in sorted(corpus.schedules.items())
    }
    _write_json(root / "schedule.json", schedule_doc)

    for pid in sorted(corpus.problems):
        p = corpus.problems[pid]
        doc = {
            "id": p.problem_id,
            "role": p.role,
            "week": p.week,
            "skills": p.skills.to_mapping(),
            "statement": p.statement,
            "reference_solution": p.reference_solution,
        }
        _write_json(root / "problems" / f"{pid}.json", doc)

    lines = []
    for sub in corpus.submissions():
        lines.append(
            json.dumps(
                {
                    "student_id": sub.student_id,
                    "year": sub.offering_year,
                    "lab": sub.lab_index,
                    "problem": sub.problem_id,
                    "attempt": sub.attempt_index,
                    "correct": sub.correct,
                    "time_s": sub.solution_time_s,
                    "seq": sub.submitted_at,
                    "source": sub.source,
                },
                ensure_ascii=False,
            )
        )
    (root / "submissions.jsonl").write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def correct_submissions(
    corpus: Corpus,
    upto_offering: int | None = None,
    upto_lab: int | None = None,
) -> list[tuple[Submission, SkillVector]]:
    """Correct lab submissions up to a temporal bound, with their problems' labels.

    Keeps submissions with offering_year < upto_offering, plus those of
    upto_offering itself with lab_index <= upto_lab.  No bound keeps all.
    """
    if upto_lab is not None and upto_offering is None:
        raise ValueError("upto_lab requires upto_offering")
    out = []
    for sub in corpus.submissions():
        if not sub.correct:
            continue
        problem = corpus.problems[sub.problem_id]
        if problem.role != "lab":
            continue
        if upto_offering is not None:
            if sub.offering_year > upto_offering:
                continue
            if sub.offering_year == upto_offering:
                bound = upto_lab if upto_lab is not None else corpus.schedules[upto_offering].n_labs
                if sub.lab_index > bound:
                    continue
        out.append((sub, problem.skills))
    return out


def student_sequence(
    corpus: Corpus, student_id: str, offering_year: int, upto_lab: int
) -> SubmissionSequence:
    """A student's sequence truncated to lab_index <= upto_lab."""
    seq = corpus.sequences.get((offering_year, student_id))
    if seq is None:
        raise UnknownStudent(f"no submissions for student {student_id!r} in {offering_year}")
    kept = tuple(s for s in seq.submissions if s.lab_index <= upto_lab)
    return SubmissionSequence(student_id, offering_year, kept)
