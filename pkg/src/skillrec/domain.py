"""Core value types: topics, skill levels, submissions, problems, schedules.

Everything here is an immutable value object with no I/O and no learning
logic; construction validates the invariants once and instances can be
shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum


class SkillTopic(Enum):
    """The eight programming topics, in canonical order."""

    MATH = "math"
    CONDITIONAL = "conditional"
    REPETITION = "repetition"
    ARRAY = "array"
    MATRIX = "matrix"
    FUNCTION = "function"
    STRING = "string"
    STRUCT = "struct"


TOPICS: tuple[SkillTopic, ...] = tuple(SkillTopic)
N_TOPICS = len(TOPICS)

_TOPIC_INDEX = {topic: i for i, topic in enumerate(TOPICS)}


def topic_index(topic: SkillTopic) -> int:
    """Canonical position of a topic: MATH -> 0 ... STRUCT -> 7."""
    return _TOPIC_INDEX[topic]


class SkillLevel(IntEnum):
    """Ordinal difficulty: 0 = topic not covered, 1 = easy, 2 = medium, 3 = hard."""

    NOT_COVERED = 0
    EASY = 1
    MEDIUM = 2
    HARD = 3


@dataclass(frozen=True)
class SkillVector:
    """One SkillLevel per topic, ordered canonically (length 8)."""

    levels: tuple[SkillLevel, ...]

    def __post_init__(self):
        if len(self.levels) != N_TOPICS:
            raise ValueError(f"skill vector needs {N_TOPICS} levels, got {len(self.levels)}")
        # Coerce plain ints; SkillLevel() rejects anything outside 0..3.
        object.__setattr__(self, "levels", tuple(SkillLevel(v) for v in self.levels))

    @classmethod
    def zero(cls) -> "SkillVector":
        return cls(tuple(SkillLevel.NOT_COVERED for _ in TOPICS))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SkillVector":
        missing = [t.value for t in TOPICS if t.value not in mapping]
        if missing:
            raise ValueError(f"skill mapping missing topics: {missing}")
        extra = set(mapping) - {t.value for t in TOPICS}
        if extra:
            raise ValueError(f"skill mapping has unknown topics: {sorted(extra)}")
        return cls(tuple(SkillLevel(mapping[t.value]) for t in TOPICS))

    def to_mapping(self) -> dict[str, int]:
        return {t.value: int(v) for t, v in zip(TOPICS, self.levels)}

    def __getitem__(self, topic: SkillTopic) -> SkillLevel:
        return self.levels[topic_index(topic)]

    def required_topics(self) -> set[SkillTopic]:
        """Topics this vector requires at level >= 1."""
        return {t for t, v in zip(TOPICS, self.levels) if v > 0}


def skill_vector_as_reals(v: SkillVector) -> list[float]:
    """Embed the ordinal levels into reals as their integer values."""
    return [float(level) for level in v.levels]


@dataclass(frozen=True)
class Submission:
    """One student's one attempt on one problem."""

    student_id: str
    offering_year: int
    lab_index: int
    problem_id: str
    attempt_index: int
    source: str
    correct: bool
    solution_time_s: float | None
    submitted_at: int

    def __post_init__(self):
        if self.lab_index < 1:
            raise ValueError(f"lab_index must be >= 1, got {self.lab_index}")
        if self.attempt_index < 1:
            raise ValueError(f"attempt_index must be >= 1, got {self.attempt_index}")
        if self.solution_time_s is not None and self.solution_time_s < 0:
            raise ValueError(f"solution_time_s must be >= 0, got {self.solution_time_s}")


@dataclass(frozen=True)
class SubmissionSequence:
    """All submissions of one student within one offering, in submission order."""

    student_id: str
    offering_year: int
    submissions: tuple[Submission, ...]

    def __post_init__(self):
        prev = None
        for s in self.submissions:
            if s.student_id != self.student_id or s.offering_year != self.offering_year:
                raise ValueError("sequence entries must share student_id and offering_year")
            if prev is not None and s.submitted_at <= prev:
                raise ValueError("sequence must be strictly ordered by submitted_at")
            prev = s.submitted_at

    def __len__(self) -> int:
        return len(self.submissions)


PROBLEM_ROLES = ("lab", "homework")


@dataclass(frozen=True)
class Problem:
    """A programming problem with its instructor-assigned skill labels."""

    problem_id: str
    reference_solution: str
    skills: SkillVector
    role: str  # "lab" | "homework"
    week: int
    statement: str | None = None

    def __post_init__(self):
        if not self.reference_solution:
            raise ValueError(f"problem {self.problem_id}: reference_solution must be non-empty")
        if self.role not in PROBLEM_ROLES:
            raise ValueError(f"problem {self.problem_id}: role must be one of {PROBLEM_ROLES}")


@dataclass(frozen=True)
class WeekPlan:
    """One course week: lecture topics, lab problems, homework pool."""

    week: int
    lecture_topics: tuple[SkillTopic, ...]
    lab_problems: tuple[str, ...]
    homework_pool: tuple[str, ...]


@dataclass(frozen=True)
class CourseSchedule:
    """Ordered weeks of one course offering."""

    weeks: tuple[WeekPlan, ...]

    def __post_init__(self):
        if not self.weeks:
            raise ValueError("schedule needs at least one week")
        prev = None
        for wp in self.weeks:
            if wp.week < 1:
                raise ValueError(f"week numbers must be >= 1, got {wp.week}")
            if prev is not None and wp.week <= prev:
                raise ValueError("weeks must be strictly increasing")
            prev = wp.week
        seen: dict[SkillTopic, int] = {}
        for wp in self.weeks:
            for t in wp.lecture_topics:
                if t in seen:
                    raise ValueError(f"topic {t.value} introduced twice (weeks {seen[t]} and {wp.week})")
                seen[t] = wp.week

    @property
    def first_week(self) -> int:
        return self.weeks[0].week

    @property
    def last_week(self) -> int:
        return self.weeks[-1].week

    def lab_weeks(self) -> tuple[WeekPlan, ...]:
        """Weeks holding a lab session, in order; their 1-based position is the lab index."""
        return tuple(wp for wp in self.weeks if wp.lab_problems)

    @property
    def n_labs(self) -> int:
        return len(self.lab_weeks())

    def week_of_lab(self, lab_index: int) -> int:
        labs = self.lab_weeks()
        if not 1 <= lab_index <= len(labs):
            raise ValueError(f"lab index {lab_index} outside 1..{len(labs)}")
        return labs[lab_index - 1].week

    def introduced_in(self, week: int) -> set[SkillTopic]:
        for wp in self.weeks:
            if wp.week == week:
                return set(wp.lecture_topics)
        return set()


def topics_introduced_between(
    schedule: CourseSchedule, after_week: int, upto_week: int
) -> set[SkillTopic]:
    """Union of lecture topics of weeks w with after_week < w <= upto_week."""
    if after_week > upto_week:
        raise ValueError(f"after_week {after_week} > upto_week {upto_week}")
    if after_week < 0:
        raise ValueError(f"after_week must be >= 0, got {after_week}")
    if upto_week > schedule.last_week:
        raise ValueError(f"upto_week {upto_week} beyond schedule end {schedule.last_week}")
    out: set[SkillTopic] = set()
    for wp in schedule.weeks:
        if after_week < wp.week <= upto_week:
            out.update(wp.lecture_topics)
    return out
