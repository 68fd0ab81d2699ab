"""Model-response parsing and thinking-mode format validation.

Three response templates exist, keyed by how the user turn ended:

* suppressed — no suffix; think tags are forbidden, the answer is a bare
  fenced SQL block;
* fast — "/no_think"; think tags must be present and empty;
* slow — "/think"; think tags must be present with non-empty reasoning.

All modes require the SQL wrapped in a ``` sql fenced block. Parsing never
raises: absences are recorded and judged by validate_format.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class ThinkingMode(Enum):
    SUPPRESSED = "suppressed"
    FAST = "fast"
    SLOW = "slow"

    @classmethod
    def from_string(cls, value: str) -> "ThinkingMode":
        key = value.strip().lower()
        aliases = {
            "suppressed": cls.SUPPRESSED,
            "none": cls.SUPPRESSED,
            "fast": cls.FAST,
            "no_think": cls.FAST,
            "slow": cls.SLOW,
            "think": cls.SLOW,
        }
        if key not in aliases:
            raise ValueError(f"unknown thinking mode: {value!r}")
        return aliases[key]


class Violation(Enum):
    MISSING_THINK_TAGS = "MissingThinkTags"
    FORBIDDEN_THINK_TAGS = "ForbiddenThinkTags"
    NON_EMPTY_FAST_THINK = "NonEmptyFastThink"
    EMPTY_SLOW_THINK = "EmptySlowThink"
    MISSING_SQL_FENCE = "MissingSqlFence"
    MALFORMED_FENCE = "MalformedFence"


@dataclass(frozen=True)
class ParsedResponse:
    db_id: str
    source: str
    mode: ThinkingMode
    think: Optional[str]  # None when no matched tag pair
    sql: str
    raw: str = ""


@dataclass(frozen=True)
class FormatVerdict:
    valid: bool
    violations: tuple[Violation, ...]


_THINK_RE = re.compile(r"<think>(.*?)</think>", re.S)
_FENCE_RE = re.compile(r"```sql[ \t]*\r?\n(.*?)```", re.S)


def parse_response(raw: str, db_id: str, source: str, mode: ThinkingMode) -> ParsedResponse:
    """Decompose a raw assistant message.

    think is the stripped content of the first matched tag pair (None when no
    pair matches); sql is the stripped body of the first ``` sql fence.
    Total for arbitrary input: anything unparseable simply yields empty fields.
    """
    raw = raw if isinstance(raw, str) else str(raw)
    think_match = _THINK_RE.search(raw)
    think = think_match.group(1).strip() if think_match else None
    fence_match = _FENCE_RE.search(raw)
    sql = fence_match.group(1).strip() if fence_match else ""
    return ParsedResponse(
        db_id=db_id, source=source, mode=mode, think=think, sql=sql, raw=raw,
    )


def validate_format(resp: ParsedResponse, strict: bool = False) -> FormatVerdict:
    """Check a parsed response against its mode's template constraints.

    ``strict`` additionally flags extra think-tag pairs beyond the first.
    """
    violations: list[Violation] = []
    opens = resp.raw.count("<think>")
    closes = resp.raw.count("</think>")
    has_pair = resp.think is not None

    if resp.mode is ThinkingMode.SUPPRESSED:
        if opens or closes:
            violations.append(Violation.FORBIDDEN_THINK_TAGS)
    elif resp.mode is ThinkingMode.FAST:
        if not has_pair:
            violations.append(Violation.MISSING_THINK_TAGS)
        elif resp.think:
            violations.append(Violation.NON_EMPTY_FAST_THINK)
    else:  # SLOW
        if not has_pair:
            violations.append(Violation.MISSING_THINK_TAGS)
        elif not resp.think:
            violations.append(Violation.EMPTY_SLOW_THINK)

    if "```sql" not in resp.raw:
        violations.append(Violation.MISSING_SQL_FENCE)
    elif not resp.sql:
        violations.append(Violation.MALFORMED_FENCE)

    if strict and has_pair and (opens > 1 or closes > 1):
        violations.append(Violation.MALFORMED_FENCE)

    return FormatVerdict(valid=not violations, violations=tuple(violations))


def render_response(resp: ParsedResponse) -> str:
    """Render back into the template for the response's mode.

    Tag names and the fence language tag are emitted exactly as the templates
    require; re-parsing a rendered valid response reproduces its fields.
    """
    fenced = f"```sql\n{resp.sql}\n```"
    if resp.mode is ThinkingMode.SUPPRESSED:
        return fenced
    if resp.mode is ThinkingMode.FAST:
        return f"<think>\n\n</think>\n\n{fenced}"
    return f"<think>{resp.think or ''}</think>\n\n{fenced}"
