"""Shared fixture builders: synthetic corpora written through the real file formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from skillrec.domain import TOPICS
from skillrec.embed import source_digest

TOPIC_NAMES = [t.value for t in TOPICS]


def skills_map(*levels: int) -> dict[str, int]:
    """Skill mapping from up-to-8 leading levels; the rest are 0."""
    full = list(levels) + [0] * (8 - len(levels))
    return dict(zip(TOPIC_NAMES, full))


def problem_doc(pid, role, week, skills, reference=None, statement=None):
    return {
        "id": pid,
        "role": role,
        "week": week,
        "skills": skills,
        "statement": statement,
        "reference_solution": reference or f"// reference {pid}\nint main() {{ return 0; }}\n",
    }


def submission(student, year, lab, problem, attempt, correct, time_s, seq, source=None):
    return {
        "student_id": student,
        "year": year,
        "lab": lab,
        "problem": problem,
        "attempt": attempt,
        "correct": correct,
        "time_s": time_s,
        "seq": seq,
        "source": source or f"// {problem} by {student} attempt {attempt} y{year}\nint main() {{}}\n",
    }


def write_corpus(root: Path, schedule: dict, problems: list[dict], submissions: list[dict]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    (root / "problems").mkdir(exist_ok=True)
    (root / "schedule.json").write_text(json.dumps(schedule, indent=2) + "\n", encoding="utf-8")
    for doc in problems:
        (root / "problems" / f"{doc['id']}.json").write_text(
            json.dumps(doc, indent=2) + "\n", encoding="utf-8"
        )
    lines = [json.dumps(s) for s in submissions]
    (root / "submissions.jsonl").write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return root


def write_embeddings_file(path: Path, vectors: dict[str, np.ndarray], provider="oracle", dim=8):
    """Write a digest-keyed embedding cache file (the precomputed format)."""
    lines = [json.dumps({"provider": provider, "dim": dim})]
    for digest, values in vectors.items():
        lines.append(json.dumps({"digest": digest, "values": [float(v) for v in values]}))
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Demo course: weeks 2-4 introduce math, conditionals, repetition; 9 lab
# problems, 6 homework problems, 2 students
# ---------------------------------------------------------------------------

DEMO_LABELS = {
    "P1": skills_map(1),
    "P2": skills_map(2),
    "P3": skills_map(1, 1),
    "P4": skills_map(2, 2),
    "P5": skills_map(3, 1),
    "P6": skills_map(1, 1, 1),
    "P7": skills_map(1, 2, 2),
    "P8": skills_map(3, 3, 1),
    "P9": skills_map(2, 3, 3),
    "P51": skills_map(2),
    "P52": skills_map(3),
    "P53": skills_map(2, 2),
    "P54": skills_map(3, 3),
    "P57": skills_map(2, 3, 2),
    "P58": skills_map(3, 2, 3),
}

DEMO_WEEKS = [
    {"week": 2, "lecture_topics": ["math"], "lab_problems": ["P1", "P2"], "homework_pool": ["P51", "P52"]},
    {"week": 3, "lecture_topics": ["conditional"], "lab_problems": ["P3", "P4", "P5"], "homework_pool": ["P53", "P54"]},
    {"week": 4, "lecture_topics": ["repetition"], "lab_problems": ["P6", "P7", "P8", "P9"], "homework_pool": ["P57", "P58"]},
]

_HW_WEEK = {"P51": 2, "P52": 2, "P53": 3, "P54": 3, "P57": 4, "P58": 4}


def demo_problems() -> list[dict]:
    docs = []
    for pid, skills in DEMO_LABELS.items():
        if pid in _HW_WEEK:
            docs.append(problem_doc(pid, "homework", _HW_WEEK[pid], skills))
        else:
            week = 2 if pid in ("P1", "P2") else 3 if pid in ("P3", "P4", "P5") else 4
            docs.append(problem_doc(pid, "lab", week, skills))
    return docs


def demo_submissions(year=2025) -> list[dict]:
    rows = [
        # ana: retry on P1, a time-less incorrect P4 attempt
        submission("s-ana", year, 1, "P1", 1, False, 120.0, 1),
        submission("s-ana", year, 1, "P1", 2, True, 300.0, 2),
        submission("s-ana", year, 1, "P2", 1, True, 600.0, 3),
        submission("s-ana", year, 2, "P3", 1, True, 240.0, 4),
        submission("s-ana", year, 2, "P4", 1, False, None, 5),
        submission("s-ana", year, 2, "P4", 2, True, 420.0, 6),
        submission("s-ana", year, 2, "P5", 1, True, 900.0, 7),
        submission("s-ana", year, 3, "P6", 1, True, 180.0, 8),
        submission("s-ana", year, 3, "P7", 1, True, 760.0, 9),
        # bob: interleaves P5 before P4 within lab 2
        submission("s-bob", year, 1, "P1", 1, True, 150.0, 1),
        submission("s-bob", year, 1, "P2", 1, False, 200.0, 2),
        submission("s-bob", year, 1, "P2", 2, True, 450.0, 3),
        submission("s-bob", year, 2, "P3", 1, True, 300.0, 4),
        submission("s-bob", year, 2, "P5", 1, True, 660.0, 5),
        submission("s-bob", year, 2, "P4", 1, True, 510.0, 6),
        submission("s-bob", year, 3, "P8", 1, True, 1200.0, 7),
        submission("s-bob", year, 3, "P9", 1, False, 1500.0, 8),
    ]
    return rows


def build_demo_corpus(root: Path, years=(2025,)) -> Path:
    schedule = {str(y): {"weeks": DEMO_WEEKS} for y in years}
    submissions = []
    for y in years:
        submissions.extend(demo_submissions(year=y))
    return write_corpus(root, schedule, demo_problems(), submissions)


# ---------------------------------------------------------------------------
# Experiment-1 oracle corpus: embeddings = scaled labels + Gaussian noise
# ---------------------------------------------------------------------------

EXP1_SCALE = 12.0
EXP1_NOISE = 0.05  # sigma as a fraction of one level step (the signal unit)


def _balanced_label_matrix(n_problems: int, rng) -> np.ndarray:
    """Per-topic columns each hold every level equally often (balanced classes)."""
    assert n_problems % 4 == 0
    cols = []
    for _ in range(8):
        col = np.repeat(np.arange(4), n_problems // 4)
        rng.shuffle(col)
        cols.append(col)
    return np.stack(cols, axis=1)


def build_exp1_corpus(root: Path, noise_seed=2024, random_labels=False):
    """Two offerings of a 4-lab course over 32 problems; returns (root, emb_path).

    Embeddings live in a precomputed cache file: scaled label vectors plus
    sigma = EXP1_NOISE * EXP1_SCALE Gaussian noise per submission, or pure
    noise vectors when random_labels is set (labels independent of inputs).
    """
    rng = np.random.default_rng(noise_seed)
    labels = _balanced_label_matrix(32, rng)

    weeks = []
    problems = []
    for w in range(1, 5):
        ids = [f"L{w}-{i}" for i in range(8)]
        weeks.append(
            {
                "week": w,
                # all topics introduced up front so labels are unconstrained
                "lecture_topics": TOPIC_NAMES if w == 1 else [],
                "lab_problems": ids,
                "homework_pool": [],
            }
        )
        for i, pid in enumerate(ids):
            row = labels[(w - 1) * 8 + i]
            problems.append(problem_doc(pid, "lab", w, dict(zip(TOPIC_NAMES, map(int, row)))))

    label_of = {doc["id"]: np.array([doc["skills"][t] for t in TOPIC_NAMES], float) for doc in problems}

    schedule = {"2024": {"weeks": weeks}, "2025": {"weeks": weeks}}
    students = {2024: [f"t{i}" for i in range(6)], 2025: [f"e{i}" for i in range(4)]}
    submissions = []
    vectors = {}
    for year, roster in students.items():
        for student in roster:
            seq = 0
            for w in range(1, 5):
                for i in range(8):
                    pid = f"L{w}-{i}"
                    seq += 1
                    sub = submission(student, year, w, pid, 1, True, 120.0, seq)
                    submissions.append(sub)
                    if random_labels:
                        vec = rng.normal(0.0, EXP1_SCALE, 8)
                    else:
                        vec = label_of[pid] * EXP1_SCALE + rng.normal(0, EXP1_NOISE * EXP1_SCALE, 8)
                    vectors[source_digest(sub["source"])] = vec

    for doc in problems:  # reference solutions get clean label embeddings
        ref_vec = (
            rng.normal(0.0, EXP1_SCALE, 8) if random_labels else label_of[doc["id"]] * EXP1_SCALE
        )
        vectors[source_digest(doc["reference_solution"])] = ref_vec

    write_corpus(root, schedule, problems, submissions)
    emb_path = write_embeddings_file(root / "embeddings.jsonl", vectors)
    return root, emb_path


# ---------------------------------------------------------------------------
# Experiment-2 oracle corpus: skills metric provably wins, baselines chase
# difficulty (no signal about the suitability interval)
# ---------------------------------------------------------------------------

EXP2_SCALE = 12.0


def _exp2_label(kind: str, w: int) -> np.ndarray:
    """Integer label vectors for the 5-week ramp course."""
    vec = np.zeros(8)
    if kind == "L":  # lab, level-2 frontier problem
        vec[: w - 1] = 1
        vec[w - 1] = 2
    elif kind == "Lv1":  # lab, level-1 variant
        vec[: w - 1] = 1
        vec[w - 1] = 1
    elif kind == "H":  # homework: prior signature + level-2 previous + level-2 new
        vec[: w - 2] = 1
        vec[w - 2] = 2
        vec[w - 1] = 2
    return vec


def build_exp2_corpus(root: Path, test_students=("eli", "fay", "gus")):
    """5-week test offering plus a short 2-week prior offering.

    Training students (2024, labs 1-2 only) solve both lab variants; one of
    them fails anything needing more than two skill points, which gives the
    correctness model its difficulty signal.  Test students (2025) attend
    labs 2-5 with frontier submissions only, so evaluation runs at labs 3-5;
    one of them needs two attempts from lab 3 on (same source embedding),
    keeping later lab patterns below a perfect predicted correctness.
    Solution times grow with required-skill mass.

    Homework pool: H2..H5; at lab l exactly H_l is suitable.  A homework
    problem's reference embedding is the previous week's frontier lab
    pattern (the skills it practices), so at lab l the candidate H_l is
    predicted exactly colinear with every student profile while stale and
    future candidates score strictly lower or lose the problem-id tiebreak.
    Embeddings are exact scaled vectors (no noise).
    """
    problems = []
    label_of = {}
    embedding_pattern = {}
    for w in range(1, 6):
        for kind, pid in (("L", f"L{w}"), ("Lv1", f"L{w}v1")):
            vec = _exp2_label(kind, w)
            label_of[pid] = vec
            embedding_pattern[pid] = vec
            problems.append(problem_doc(pid, "lab", w, dict(zip(TOPIC_NAMES, map(int, vec)))))
    for w in range(2, 6):
        vec = _exp2_label("H", w)
        pid = f"H{w}"
        label_of[pid] = vec
        embedding_pattern[pid] = _exp2_label("L", w - 1)
        problems.append(problem_doc(pid, "homework", w, dict(zip(TOPIC_NAMES, map(int, vec)))))

    def weeks_for(n_weeks: int) -> list[dict]:
        out = []
        for w in range(1, n_weeks + 1):
            out.append(
                {
                    "week": w,
                    "lecture_topics": [TOPIC_NAMES[w - 1]],
                    "lab_problems": [f"L{w}", f"L{w}v1"],
                    "homework_pool": [f"H{w}"] if w >= 2 else [],
                }
            )
        return out

    schedule = {"2024": {"weeks": weeks_for(2)}, "2025": {"weeks": weeks_for(5)}}

    def solve_time(pid: str) -> float:
        return 60.0 + 30.0 * float(label_of[pid].sum())

    submissions = []
    # 2024: four students over labs 1-2, both variants; "dan" fails heavy problems
    for student in ("alba", "bert", "cleo", "dan"):
        seq = 0
        for w in (1, 2):
            for pid in (f"L{w}", f"L{w}v1"):
                seq += 1
                heavy = label_of[pid].sum() > 2
                correct = not (student == "dan" and heavy)
                submissions.append(
                    submission(student, 2024, w, pid, 1, correct, solve_time(pid), seq)
                )
    # 2025: students attend labs 2-5, frontier problem only; gus retries labs 3-5
    for student in test_students:
        seq = 0
        for w in (2, 3, 4, 5):
            pid = f"L{w}"
            if student == "gus" and w >= 3:
                seq += 1
                submissions.append(submission(student, 2025, w, pid, 1, False, None, seq))
                seq += 1
                submissions.append(submission(student, 2025, w, pid, 2, True, solve_time(pid), seq))
            else:
                seq += 1
                submissions.append(submission(student, 2025, w, pid, 1, True, solve_time(pid), seq))

    vectors = {}
    for sub in submissions:
        # both attempts on a problem carry the same code shape, hence one vector
        vectors[source_digest(sub["source"])] = embedding_pattern[sub["problem"]] * EXP2_SCALE
    for doc in problems:
        vectors[source_digest(doc["reference_solution"])] = embedding_pattern[doc["id"]] * EXP2_SCALE

    write_corpus(root, schedule, problems, submissions)
    emb_path = write_embeddings_file(root / "embeddings.jsonl", vectors)
    return root, emb_path
