#!/usr/bin/env python3
"""Regenerates tests/golden/*.txt from templates/ and tests/fixtures/.

Plain string substitution, independent of the C++ renderer.
"""
import json
from pathlib import Path

root = Path(__file__).resolve().parent.parent
tpl_dir = root / "templates"
fx = root / "tests" / "fixtures"
out = root / "tests" / "golden"

item = json.loads((fx / "prompt_item.json").read_text(encoding="utf-8"))
judges = json.loads((fx / "prompt_judges.json").read_text(encoding="utf-8"))


def fill(text, spaced):
    for key in ("question", "answer_a", "answer_b"):
        token = "{{ %s }}" % key if spaced else "{{%s}}" % key
        text = text.replace(token, item[key])
    return text


def pct(c):
    v = c * 100
    return int(round(v)) if abs(v - round(v)) < 1e-9 else v


for name in ("sc", "mp"):
    tpl = (tpl_dir / f"{name}_prompt.txt").read_text(encoding="utf-8")
    (out / f"{name}_prompt_rendered.txt").write_text(fill(tpl, False), encoding="utf-8")

tpl = (tpl_dir / "fuser_prompt.txt").read_text(encoding="utf-8")
loop = "{\n  - JSON Output {{ loop.index }}: {{ output }}\n{\n"
assert tpl.count(loop) == 1
lines = []
for j in (j for j in judges if j["valid"]):
    obj = {"selected_output": j["selected_output"], "confidence_score": pct(j["confidence"]),
           "explanation": j["explanation"]}
    lines.append("  - JSON Output %d: %s\n" % (len(lines) + 1,
                 json.dumps(obj, ensure_ascii=False, separators=(",", ":"))))
head, tail = tpl.split(loop)
(out / "fuser_prompt_rendered.txt").write_text(fill(head, True) + "".join(lines) + fill(tail, True),
                                               encoding="utf-8")
