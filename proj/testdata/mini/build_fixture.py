#!/usr/bin/env python3
"""Regenerates the mini benchmark: corpus, transcriptions and mock judge.

Every grade the mock judge returns is listed in SCORES below, keyed by the
text being graded. Run from any directory; files are written next to this
script.
"""

import hashlib
import json
import os
import struct
import zlib

HERE = os.path.dirname(os.path.abspath(__file__))
COMPONENTS = ["formula_identification", "boundary_conditions", "calc_early",
              "calc_late", "final_answer"]
FULL = [20, 20, 20, 20, 20]


def field_hash(*fields):
    buf = b""
    for f in fields:
        data = f.encode("utf-8")
        buf += str(len(data)).encode() + b":" + data + b";"
    return hashlib.sha256(buf).hexdigest()


def grade_key(problem, reference, candidate):
    return field_hash("grade", problem, reference, candidate)


def label_key(gt, ocr):
    return field_hash("label", gt, ocr)


# sample_id -> (problem, reference, ground truth, oracle scores, is_clean)
SAMPLES = {
    "s01": (
        "Find the area of the region enclosed by y = x^2 and y = 2x.",
        "The curves meet at x = 0 and x = 2.\n"
        "A = \\int_0^2 (2x - x^2) dx = [x^2 - x^3/3]_0^2 = 4 - 8/3 = 4/3",
        "x^2 = 2x gives x = 0 or x = 2\n"
        "A = \\int_0^2 (2x - x^2) dx\n"
        "= [x^2 - x^3/3]_0^2\n"
        "= 4 - 8/3 = 2/3\n"
        "A = 2/3",
        [20, 20, 20, 5, 5], False),
    "s02": (
        "Differentiate f(x) = x^2 sin x.",
        "By the product rule f'(x) = 2x sin x + x^2 cos x.",
        "product rule: (uv)' = u'v + uv'\n"
        "f'(x) = 2x sin x - x^2 cos x",
        [20, 20, 8, 10, 6], False),
    "s03": (
        "Evaluate \\int_0^1 3x^2 dx.",
        "\\int_0^1 3x^2 dx = [x^3]_0^1 = 1 - 0 = 1",
        "\\int 3x^2 dx = x^3\n"
        "[x^3]_0^1 = 1 - 1\n"
        "= 0",
        [20, 8, 20, 12, 4], False),
    "s04": (
        "Compute \\lim_{x \\to 0} sin(3x) / x.",
        "sin(3x)/x = 3 sin(3x)/(3x) -> 3 as x -> 0, so the limit is 3.",
        "\\lim_{x \\to 0} sin(x)/x = 1\n"
        "so \\lim_{x \\to 0} sin(3x)/x = 1",
        [6, 20, 12, 12, 4], False),
    "s05": (
        "Solve x^2 - 5x + 6 = 0.",
        "x^2 - 5x + 6 = (x - 2)(x - 3) = 0, so x = 2 or x = 3.",
        "x^2 - 5x + 6 = (x - 2)(x - 3)\n"
        "(x - 2)(x - 3) = 0\n"
        "x = 2 or x = -3",
        [20, 20, 20, 16, 8], False),
    "s06": (
        "Differentiate g(x) = e^{2x}.",
        "By the chain rule g'(x) = 2 e^{2x}.",
        "chain rule\n"
        "g'(x) = e^{2x}",
        [14, 20, 10, 10, 6], False),
    "s07": (
        "Compute \\sum_{n=1}^{10} n.",
        "\\sum_{n=1}^{10} n = 10 * 11 / 2 = 55",
        "\\sum_{n=1}^{N} n = N(N + 1)/2\n"
        "= 10 * 11 / 2\n"
        "= 50",
        [20, 20, 20, 8, 6], False),
    "s08": (
        "Evaluate \\int x e^x dx.",
        "Parts with u = x, dv = e^x dx: x e^x - \\int e^x dx = x e^x - e^x + C",
        "u = x, dv = e^x dx\n"
        "\\int x e^x dx = x e^x - \\int e^x dx\n"
        "= x e^x + e^x + C",
        [20, 20, 14, 8, 8], False),
    "s09": (
        "Find the tangent line to y = x^3 at x = 1.",
        "y' = 3x^2 = 3 at x = 1 and y(1) = 1, so y - 1 = 3(x - 1), i.e. y = 3x - 2.",
        "y' = 3x^2, y'(1) = 3\n"
        "y - 1 = 3(x - 1)\n"
        "y = 3x - 4",
        [20, 20, 20, 10, 6], False),
    "s10": (
        "Find the average value of f(x) = x on [0, 4].",
        "(1/4) \\int_0^4 x dx = (1/4)(16/2) = 2",
        "avg = 1/4 \\int_0^4 x dx\n"
        "= 1/4 * 16\n"
        "= 4",
        [20, 20, 10, 10, 4], False),
    "s11": (
        "Differentiate h(x) = ln(x^2) for x > 0.",
        "h(x) = 2 ln x, so h'(x) = 2/x.",
        "h(x) = 2 ln x\n"
        "h'(x) = 2/x",
        FULL, True),
    "s12": (
        "Evaluate \\int_1^e 1/x dx.",
        "\\int_1^e 1/x dx = ln e - ln 1 = 1",
        "\\int_1^e 1/x dx = [ln x]_1^e\n"
        "= 1 - 0 = 1",
        FULL, True),
}


def reformat(text):
    """Markup-only rewrite: same mathematics, different LaTeX spelling."""
    out = text.replace("x^2", "x^{2}").replace("x^3", "x^{3}")
    out = out.replace(" * ", " \\cdot ").replace("/3", "/{3}")
    out = out.replace("sin", "\\sin").replace("cos", "\\cos").replace("ln", "\\ln")
    if out == text:
        out = text.replace(" = ", "=")
    assert out != text
    return out


def edit(sample_id, *pairs):
    text = SAMPLES[sample_id][2]
    for old, new in pairs:
        assert old in text, (sample_id, old)
        text = text.replace(old, new)
    return text


# Corrections a model silently applies to a student's mistake.
FIXES = {
    "s01": (("4 - 8/3 = 2/3\nA = 2/3", "4 - 8/3 = 4/3\nA = 4/3"),),
    "s02": (("2x sin x - x^2", "2x sin x + x^2"),),
    "s03": (("1 - 1\n= 0", "1 - 0\n= 1"),),
    "s04": (("so \\lim_{x \\to 0} sin(3x)/x = 1", "so \\lim_{x \\to 0} sin(3x)/x = 3"),),
    "s05": (("x = -3", "x = 3"),),
    "s06": (("g'(x) = e^{2x}", "g'(x) = 2e^{2x}"),),
    "s07": (("= 50", "= 55"),),
    "s08": (("x e^x + e^x", "x e^x - e^x"),),
    "s09": (("3x - 4", "3x - 2"),),
    "s10": (("1/4 * 16\n= 4", "1/4 * 16/2\n= 2"),),
}

# Scores the judge gives once a correction is applied.
FIXED_SCORES = {
    "s01": FULL,
    "s02": FULL,
    "s03": [20, 20, 20, 20, 20],
    "s04": [6, 20, 12, 12, 20],
    "s05": [20, 20, 20, 20, 20],
    "s06": [14, 20, 10, 20, 20],
    "s07": [20, 20, 20, 20, 20],
    "s08": [20, 20, 20, 20, 20],
    "s09": [20, 20, 20, 20, 20],
    "s10": [20, 20, 20, 20, 20],
}

# Misreads: content lost in transcription, scored below the oracle.
MISREADS = {
    "s03": ((("[x^3]_0^1 = 1 - 1", "[x^3]_0^1 = 1"),), [20, 6, 20, 10, 4]),
    "s07": ((("10 * 11 / 2", "10 * 1 / 2"),), [20, 20, 14, 8, 6]),
}

PARTIAL_FIXED = ("s02", "s05", "s09")


def build():
    corpus = [{"corpus_meta": {"name": "mini", "version": "1",
                               "source": "hand-written fixture",
                               "rubric_components": 5,
                               "component_names": COMPONENTS}}]
    for sid, (problem, reference, gt, _, clean) in SAMPLES.items():
        row = {"sample_id": sid, "problem_id": "p" + sid[1:], "problem_text": problem,
               "reference_solution": reference, "gt_transcription": gt, "is_clean": clean}
        if sid == "s01":
            row["image_ref"] = "images/s01.png"
        if not clean:
            row["perturbation_tag"] = "student_error"
        corpus.append(row)

    grades = {}
    labels = {}

    def grade(sid, text, scores):
        problem, reference = SAMPLES[sid][0], SAMPLES[sid][1]
        key = grade_key(problem, reference, text)
        if key in grades:
            assert grades[key]["components"] == scores, (sid, text)
            return
        grades[key] = {"components": scores,
                       "justifications": [
                           "full marks" if s == 20 else "deduction for the written work"
                           for s in scores]}

    def label(sid, text, cls):
        gt = SAMPLES[sid][2]
        if text == gt:
            return
        key = label_key(gt, text)
        assert labels.get(key, cls) == cls
        labels[key] = cls

    standard, mitigated = [], []

    def emit(rows, sid, model, variant, text, scores, cls):
        rows.append({"sample_id": sid, "model_id": model, "prompt_variant": variant,
                     "text": text})
        grade(sid, text, scores)
        label(sid, text, cls)

    for sid, (_, _, gt, oracle, _) in SAMPLES.items():
        grade(sid, gt, oracle)
        # Faithful to the content, free with the markup.
        emit(standard, sid, "faithful-ocr", "standard", reformat(gt), oracle,
             "formatting_only")
        # Silently repairs every student error.
        if sid in FIXES:
            emit(standard, sid, "fixer-ocr", "standard", edit(sid, *FIXES[sid]),
                 FIXED_SCORES[sid], "semantic_only")
        else:
            emit(standard, sid, "fixer-ocr", "standard", gt, oracle, None)
        # Mostly verbatim; repairs three samples and misreads two.
        if sid in PARTIAL_FIXED:
            emit(standard, sid, "partial-ocr", "standard", edit(sid, *FIXES[sid]),
                 FIXED_SCORES[sid], "semantic_only")
        elif sid in MISREADS:
            pairs, scores = MISREADS[sid]
            emit(standard, sid, "partial-ocr", "standard", edit(sid, *pairs), scores,
                 "semantic_only")
        else:
            emit(standard, sid, "partial-ocr", "standard", gt, oracle, None)

        # Mitigated prompt: the fixer stops repairing the first six samples
        # but drops the final line of s11; the partial model keeps only s09.
        if sid in FIXES and sid in ("s07", "s08", "s09", "s10"):
            emit(mitigated, sid, "fixer-ocr", "mitigated", edit(sid, *FIXES[sid]),
                 FIXED_SCORES[sid], "semantic_only")
        elif sid == "s11":
            emit(mitigated, sid, "fixer-ocr", "mitigated", "h(x) = 2 ln x",
                 [20, 20, 20, 6, 0], "semantic_only")
        else:
            emit(mitigated, sid, "fixer-ocr", "mitigated", gt, oracle, None)
        if sid == "s09":
            emit(mitigated, sid, "partial-ocr", "mitigated", edit(sid, *FIXES[sid]),
                 FIXED_SCORES[sid], "semantic_only")
        else:
            emit(mitigated, sid, "partial-ocr", "mitigated", gt, oracle, None)
        emit(mitigated, sid, "faithful-ocr", "mitigated", reformat(gt), oracle,
             "formatting_only")

    # A markup change mixed with a repair.
    mixed = reformat(edit("s04", *FIXES["s04"]))
    grade("s04", mixed, FIXED_SCORES["s04"])
    label("s04", mixed, "includes_formatting")

    def write_jsonl(name, rows):
        with open(os.path.join(HERE, name), "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")

    write_jsonl("corpus.jsonl", corpus)
    write_jsonl("transcriptions.jsonl", standard)
    write_jsonl("transcriptions_mitigated.jsonl", mitigated)
    with open(os.path.join(HERE, "mock_judge.json"), "w", encoding="utf-8") as f:
        json.dump({"grades": dict(sorted(grades.items())),
                   "labels": dict(sorted(labels.items()))}, f, indent=1,
                  ensure_ascii=False)
        f.write("\n")
    write_png(os.path.join(HERE, "images", "s01.png"))


def write_png(path):
    def chunk(tag, data):
        return (struct.pack(">I", len(data)) + tag + data +
                struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))
    raw = b"\x00\xff"
    png = (b"\x89PNG\r\n\x1a\n" +
           chunk(b"IHDR", struct.pack(">IIBBBBB", 1, 1, 8, 0, 0, 0, 0)) +
           chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b""))
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "wb") as f:
        f.write(png)


if __name__ == "__main__":
    build()
