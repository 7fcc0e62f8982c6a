#!/usr/bin/env python3
"""Regenerates include/judgecal/prompt_assets.hpp from templates/*.txt."""
import pathlib

root = pathlib.Path(__file__).resolve().parent.parent
names = [("kScPromptTemplate", "sc_prompt.txt"),
         ("kMpPromptTemplate", "mp_prompt.txt"),
         ("kFuserPromptTemplate", "fuser_prompt.txt")]
out = ["#pragma once", "",
       "// Generated by scripts/embed_templates.py from templates/*.txt. Do not edit.", "",
       "#include <string_view>", "", "namespace judgecal {", ""]
for ident, fname in names:
    body = (root / "templates" / fname).read_text(encoding="utf-8")
    assert ")TPL\"" not in body
    out.append(f'inline constexpr std::string_view {ident} = R"TPL({body})TPL";')
    out.append("")
out.append("}  // namespace judgecal")
(root / "include" / "judgecal" / "prompt_assets.hpp").write_text("\n".join(out) + "\n", encoding="utf-8")
