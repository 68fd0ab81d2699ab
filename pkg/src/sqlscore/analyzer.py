"""SQL structural analysis: tokenizer, skeletons, schema elements, clauses.

A single-pass lexer over a fixed keyword list feeds three derived views of a
statement:

* skeletons — identifiers and literals replaced by ``[col]``/``[tab]``/
  ``[str]``/``[val]`` placeholders, optionally with keyword weighting
  (WHERE tripled, JOIN and GROUP BY doubled);
* schema elements — the sets of table and column names the statement touches;
* clause decomposition — normalized per-clause item sets plus operator,
  function and literal multisets, used by exact-set-match and the error
  classifier.

Full SQL parsing/validation is out of scope; positional context is enough to
separate table from column references in the SELECT dialect used by the
Text-to-SQL benchmarks.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import EmptySqlError, UnterminatedLiteral

# ANSI core plus the SQLite/MySQL extensions that appear in the BIRD and
# Spider corpora. Function-like names (SUM, COUNT, CAST, IIF, STRFTIME, ...)
# are deliberately absent: an identifier directly followed by "(" is lexed as
# a function name and survives skeletonization verbatim.
SQL_KEYWORDS: frozenset[str] = frozenset({
    "all", "alter", "and", "any", "as", "asc", "between", "by", "case",
    "collate", "create", "cross", "current_date", "current_time",
    "current_timestamp", "default", "delete", "desc", "distinct", "drop",
    "else", "end", "escape", "except", "exists", "false", "from", "full",
    "glob", "group", "having", "in", "index", "inner", "insert", "intersect",
    "into", "is", "join", "left", "like", "limit", "natural", "not", "null",
    "offset", "on", "or", "order", "outer", "recursive", "regexp", "right",
    "select", "set", "some", "table", "then", "true", "union", "unique",
    "update", "using", "values", "view", "when", "where", "with",
})

# Keywords that also act as logical/comparison operators for clause analysis.
WORD_OPERATORS: frozenset[str] = frozenset({
    "and", "or", "not", "in", "like", "between", "is", "exists", "glob",
    "regexp",
})

# Identifier directly after one of these (comma-continued for FROM lists)
# is a table reference.
_TABLE_INTRO = frozenset({"from", "join", "into", "update"})

_MULTI_CHAR_OPS = ("<>", "!=", "<=", ">=", "||", "==")
_SINGLE_CHAR_OPS = frozenset("=<>+-/%~")

PLACEHOLDER_COLUMN = "[col]"
PLACEHOLDER_TABLE = "[tab]"
PLACEHOLDER_STRING = "[str]"
PLACEHOLDER_VALUE = "[val]"


class TokenKind(Enum):
    KEYWORD = "keyword"
    COLUMN_REF = "column_ref"
    TABLE_REF = "table_ref"
    STRING_LIT = "string_lit"
    NUMERIC_LIT = "numeric_lit"
    OPERATOR = "operator"
    FUNCTION_NAME = "function_name"
    PUNCT = "punct"
    STAR = "star"


@dataclass(frozen=True)
class SqlToken:
    """One lexeme. Keyword/identifier text is lowercase-normalized;
    string and numeric literals keep their original text (quotes included)."""

    kind: TokenKind
    text: str


@dataclass(frozen=True)
class SqlSkeleton:
    """Placeholder form of a statement used for structural comparison."""

    tokens: tuple[str, ...]
    rendered: str
    weighted: bool = False

    def token_set(self) -> frozenset[str]:
        return frozenset(self.tokens)


@dataclass(frozen=True)
class SchemaElements:
    tables: frozenset[str]
    columns: frozenset[str]


@dataclass
class ClauseDecomposition:
    """Normalized clause buckets of one statement, subqueries merged in."""

    select_items: set[str] = field(default_factory=set)
    from_tables: set[str] = field(default_factory=set)
    where_predicates: set[str] = field(default_factory=set)
    group_by_items: set[str] = field(default_factory=set)
    having_predicates: set[str] = field(default_factory=set)
    order_by_items: set[str] = field(default_factory=set)
    limit_value: Optional[object] = None
    subquery_count: int = 0
    operators: Counter = field(default_factory=Counter)
    functions: Counter = field(default_factory=Counter)
    literals: Counter = field(default_factory=Counter)
    # Predicates with operators/literals masked; lets the error classifier
    # tell pure operator/value substitutions apart from condition changes.
    where_shapes: set[str] = field(default_factory=set)


_WORD_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_CHARS = _WORD_START | frozenset("0123456789$")
_DIGITS = frozenset("0123456789")

# Tokens after which a bare "*" is a wildcard rather than multiplication.
_STAR_CONTEXT_KEYWORDS = frozenset({"select", "distinct", "all"})


def _read_quoted(sql: str, pos: int, quote: str, closer: str) -> tuple[str, int]:
    """Read a quoted chunk starting at ``pos`` (on the opening quote).
    Returns (inner_text, next_pos). Doubled closers escape themselves."""
    i = pos + 1
    out = []
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch == closer:
            if i + 1 < n and sql[i + 1] == closer:
                out.append(closer)
                i += 2
                continue
            return "".join(out), i + 1
        out.append(ch)
        i += 1
    raise UnterminatedLiteral(f"unterminated {quote!r} at offset {pos}")


def _read_number(sql: str, pos: int) -> tuple[str, int]:
    i = pos
    n = len(sql)
    while i < n and sql[i] in _DIGITS:
        i += 1
    if i < n and sql[i] == ".":
        i += 1
        while i < n and sql[i] in _DIGITS:
            i += 1
    if i < n and sql[i] in "eE":
        j = i + 1
        if j < n and sql[j] in "+-":
            j += 1
        if j < n and sql[j] in _DIGITS:
            i = j
            while i < n and sql[i] in _DIGITS:
                i += 1
    return sql[pos:i], i


def _read_word(sql: str, pos: int) -> tuple[str, int]:
    i = pos
    n = len(sql)
    while i < n and sql[i] in _WORD_CHARS:
        i += 1
    return sql[pos:i], i


def tokenize(sql: str) -> list[SqlToken]:
    """Lex SQL into classified tokens.

    Comments are stripped; backtick/double-quote/bracket identifiers are
    unwrapped; an identifier is a TableRef iff it directly follows
    FROM/JOIN/INTO/UPDATE (comma-continued within a FROM list), otherwise a
    ColumnRef. Raises UnterminatedLiteral for an unclosed quote and
    EmptySqlError for blank input.
    """
    if sql is None or not sql.strip():
        raise EmptySqlError("empty SQL text")

    raw: list[tuple[str, str]] = []  # (tag, text); tag pre-classification
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "-" and sql.startswith("--", i):
            nl = sql.find("\n", i)
            i = n if nl < 0 else nl + 1
            continue
        if ch == "/" and sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            i = n if end < 0 else end + 2
            continue
        if ch == "'":
            inner, i = _read_quoted(sql, i, "'", "'")
            raw.append(("str", "'" + inner + "'"))
            continue
        if ch in "`\"":
            inner, i = _read_quoted(sql, i, ch, ch)
            name, i = _continue_dotted(sql, i, inner.lower())
            raw.append(("ident", name))
            continue
        if ch == "[":
            for ph in (PLACEHOLDER_COLUMN, PLACEHOLDER_TABLE,
                       PLACEHOLDER_STRING, PLACEHOLDER_VALUE):
                if sql.startswith(ph, i):
                    raw.append(("placeholder", ph))
                    i += len(ph)
                    break
            else:
                inner, i = _read_quoted(sql, i, "[", "]")
                name, i = _continue_dotted(sql, i, inner.lower())
                raw.append(("ident", name))
            continue
        if ch in _DIGITS or (ch == "." and i + 1 < n and sql[i + 1] in _DIGITS):
            text, i = _read_number(sql, i)
            raw.append(("num", text))
            continue
        if ch in _WORD_START:
            word, i = _read_word(sql, i)
            lowered = word.lower()
            if lowered in SQL_KEYWORDS:
                raw.append(("word", lowered))
            else:
                name, i = _continue_dotted(sql, i, lowered)
                raw.append(("ident", name))
            continue
        two = sql[i:i + 2]
        if two in _MULTI_CHAR_OPS:
            raw.append(("op", two))
            i += 2
            continue
        if ch == "*":
            raw.append(("starlike", "*"))
            i += 1
            continue
        if ch in _SINGLE_CHAR_OPS:
            raw.append(("op", ch))
            i += 1
            continue
        if ch in "(),;.":
            raw.append(("punct", ch))
            i += 1
            continue
        # Unknown byte: keep it visible as punctuation rather than dying.
        raw.append(("punct", ch))
        i += 1

    return _classify(raw)


def _continue_dotted(sql: str, pos: int, head: str) -> tuple[str, int]:
    """Extend an identifier over '.' chains: t1.x, `a`.`b`, db.t.c, t.*."""
    name = head
    i = pos
    n = len(sql)
    while i < n and sql[i] == ".":
        j = i + 1
        if j < n and sql[j] in "`\"":
            inner, j = _read_quoted(sql, j, sql[j], sql[j])
            name += "." + inner.lower()
            i = j
        elif j < n and sql[j] == "*":
            name += ".*"
            i = j + 1
            break
        elif j < n and sql[j] in _WORD_START:
            part, j = _read_word(sql, j)
            name += "." + part.lower()
            i = j
        else:
            break
    return name, i


def _classify(raw: list[tuple[str, str]]) -> list[SqlToken]:
    tokens: list[SqlToken] = []
    in_from_list = False
    expect_table = False
    for idx, (tag, text) in enumerate(raw):
        nxt = raw[idx + 1] if idx + 1 < len(raw) else None
        prev = raw[idx - 1] if idx > 0 else None

        if tag == "word":
            if text in _TABLE_INTRO:
                expect_table = True
                in_from_list = text == "from"
            elif text == "as":
                pass  # stays inside a FROM list
            else:
                expect_table = False
                in_from_list = False
            tokens.append(SqlToken(TokenKind.KEYWORD, text))
            continue

        if tag == "punct":
            if text == "," and in_from_list:
                expect_table = True
            tokens.append(SqlToken(TokenKind.PUNCT, text))
            continue

        if tag == "op":
            tokens.append(SqlToken(TokenKind.OPERATOR, text))
            continue

        if tag == "str":
            tokens.append(SqlToken(TokenKind.STRING_LIT, text))
            continue

        if tag == "num":
            tokens.append(SqlToken(TokenKind.NUMERIC_LIT, text))
            continue

        if tag == "starlike":
            is_wildcard = prev is None or (
                prev[0] == "word" and prev[1] in _STAR_CONTEXT_KEYWORDS
            ) or (prev[0] == "punct" and prev[1] in "(,")
            kind = TokenKind.STAR if is_wildcard else TokenKind.OPERATOR
            tokens.append(SqlToken(kind, "*"))
            continue

        if tag == "placeholder":
            kind = {
                PLACEHOLDER_COLUMN: TokenKind.COLUMN_REF,
                PLACEHOLDER_TABLE: TokenKind.TABLE_REF,
                PLACEHOLDER_STRING: TokenKind.STRING_LIT,
                PLACEHOLDER_VALUE: TokenKind.NUMERIC_LIT,
            }[text]
            if kind is TokenKind.TABLE_REF or (
                kind is TokenKind.COLUMN_REF and expect_table
            ):
                expect_table = False
            tokens.append(SqlToken(kind, text))
            continue

        # tag == "ident"
        if text.endswith(".*"):
            tokens.append(SqlToken(TokenKind.STAR, "*"))
            continue
        if nxt is not None and nxt == ("punct", "("):
            tokens.append(SqlToken(TokenKind.FUNCTION_NAME, text))
            expect_table = False
            continue
        if expect_table:
            tokens.append(SqlToken(TokenKind.TABLE_REF, text))
            expect_table = False
            continue
        tokens.append(SqlToken(TokenKind.COLUMN_REF, text))
    return tokens


# --- skeleton extraction ---------------------------------------------------

_NO_SPACE_BEFORE = frozenset({")", ",", ";"})
_NO_SPACE_AFTER = frozenset({"("})

_WEIGHT_TRIPLE = "where"
_WEIGHT_DOUBLE = ("join", "group by")


def _render(lexemes: Iterable[tuple[str, TokenKind]]) -> str:
    """Join lexemes with single spaces, keeping function calls tight:
    no space around call parens, none before ')' ',' ';'."""
    out: list[str] = []
    prev_text: Optional[str] = None
    prev_kind: Optional[TokenKind] = None
    for text, kind in lexemes:
        if not out:
            out.append(text)
        elif text in _NO_SPACE_BEFORE or prev_text in _NO_SPACE_AFTER or (
            text == "(" and prev_kind is TokenKind.FUNCTION_NAME
        ):
            out.append(text)
        else:
            out.append(" " + text)
        prev_text, prev_kind = text, kind
    return "".join(out)


def _skeleton_lexeme(tok: SqlToken) -> str:
    if tok.kind is TokenKind.COLUMN_REF:
        return PLACEHOLDER_COLUMN
    if tok.kind is TokenKind.TABLE_REF:
        return PLACEHOLDER_TABLE
    if tok.kind is TokenKind.STRING_LIT:
        return "'" + PLACEHOLDER_STRING + "'"
    if tok.kind is TokenKind.NUMERIC_LIT:
        return PLACEHOLDER_VALUE
    return tok.text


def extract_skeleton(sql: str, weighted: bool = False) -> SqlSkeleton:
    """Skeletonize a statement.

    Every column reference becomes ``[col]``, table reference ``[tab]``,
    string literal ``'[str]'`` and numeric literal ``[val]``; keywords,
    operators, punctuation and function names survive. With ``weighted`` the
    WHERE keyword is emitted three times and JOIN / GROUP BY twice, amplifying
    their contribution to downstream similarity.
    """
    tokens = tokenize(sql)
    lexemes: list[tuple[str, TokenKind]] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if (
            tok.kind is TokenKind.KEYWORD
            and tok.text == "group"
            and i + 1 < len(tokens)
            and tokens[i + 1].kind is TokenKind.KEYWORD
            and tokens[i + 1].text == "by"
        ):
            reps = 2 if weighted else 1
            lexemes.extend([("group by", TokenKind.KEYWORD)] * reps)
            i += 2
            continue
        lexeme = _skeleton_lexeme(tok)
        reps = 1
        if weighted and tok.kind is TokenKind.KEYWORD:
            if tok.text == _WEIGHT_TRIPLE:
                reps = 3
            elif tok.text == "join":
                reps = 2
        lexemes.extend([(lexeme, tok.kind)] * reps)
        i += 1
    return SqlSkeleton(
        tokens=tuple(text for text, _ in lexemes),
        rendered=_render(lexemes),
        weighted=weighted,
    )


# --- schema elements -------------------------------------------------------


def extract_schema_elements(sql: str) -> SchemaElements:
    """Collect the table and column name sets a statement references.

    Qualifier prefixes are stripped ("T1.id" contributes "id") and AS-bound
    alias names are dropped; everything is lowercase and deduplicated.
    """
    tokens = tokenize(sql)
    tables: set[str] = set()
    columns: set[str] = set()
    for idx, tok in enumerate(tokens):
        if tok.kind is TokenKind.TABLE_REF:
            if tok.text not in (PLACEHOLDER_TABLE,):
                tables.add(tok.text.split(".")[-1])
        elif tok.kind is TokenKind.COLUMN_REF:
            if tok.text in (PLACEHOLDER_COLUMN,):
                continue
            prev = tokens[idx - 1] if idx > 0 else None
            if prev is not None and prev.kind is TokenKind.KEYWORD and prev.text == "as":
                continue  # alias binding, presentation artifact
            columns.add(tok.text.split(".")[-1])
    return SchemaElements(tables=frozenset(tables), columns=frozenset(columns))


# --- clause decomposition --------------------------------------------------

_CLAUSE_STARTERS = frozenset({
    "select", "from", "where", "group", "having", "order", "limit",
})
_SET_OPS = frozenset({"union", "intersect", "except"})


def _text_lexeme(tok: SqlToken) -> str:
    return tok.text.lower()


def _render_items(tokens: list[SqlToken], masked: bool = False) -> str:
    lexemes = []
    for tok in tokens:
        if masked and tok.kind is TokenKind.OPERATOR:
            lexemes.append(("<op>", tok.kind))
        elif masked and tok.kind in (TokenKind.STRING_LIT, TokenKind.NUMERIC_LIT):
            lexemes.append(("<lit>", tok.kind))
        else:
            lexemes.append((_text_lexeme(tok), tok.kind))
    return _render(lexemes)


def _split_on(tokens: list[SqlToken], is_separator) -> list[list[SqlToken]]:
    """Split at depth-0 separator tokens; parenthesized groups stay intact."""
    parts: list[list[SqlToken]] = []
    depth = 0
    current: list[SqlToken] = []
    pending_between = 0
    for tok in tokens:
        if tok.kind is TokenKind.PUNCT and tok.text == "(":
            depth += 1
        elif tok.kind is TokenKind.PUNCT and tok.text == ")":
            depth -= 1
        if depth == 0:
            if tok.kind is TokenKind.KEYWORD and tok.text == "between":
                pending_between += 1
            if is_separator(tok):
                if tok.kind is TokenKind.KEYWORD and tok.text == "and" and pending_between:
                    pending_between -= 1
                else:
                    if current:
                        parts.append(current)
                    current = []
                    continue
        current.append(tok)
    if current:
        parts.append(current)
    return parts


def _is_comma(tok: SqlToken) -> bool:
    return tok.kind is TokenKind.PUNCT and tok.text == ","


def _is_and_or(tok: SqlToken) -> bool:
    return tok.kind is TokenKind.KEYWORD and tok.text in ("and", "or")


def _clause_segments(tokens: list[SqlToken]) -> list[tuple[str, list[SqlToken]]]:
    segments: list[tuple[str, list[SqlToken]]] = []
    depth = 0
    name: Optional[str] = None
    buf: list[SqlToken] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind is TokenKind.PUNCT and tok.text == "(":
            depth += 1
        elif tok.kind is TokenKind.PUNCT and tok.text == ")":
            depth -= 1
        if depth == 0 and tok.kind is TokenKind.KEYWORD and tok.text in _CLAUSE_STARTERS:
            if name is not None:
                segments.append((name, buf))
            name = tok.text
            buf = []
            if tok.text in ("group", "order") and i + 1 < len(tokens) \
                    and tokens[i + 1].kind is TokenKind.KEYWORD \
                    and tokens[i + 1].text == "by":
                name = tok.text + " by"
                i += 1
            i += 1
            continue
        buf.append(tok)
        i += 1
    if name is not None:
        segments.append((name, buf))
    return segments


def _merge(parent: ClauseDecomposition, child: ClauseDecomposition,
           take_limit: bool = False) -> None:
    parent.select_items |= child.select_items
    parent.from_tables |= child.from_tables
    parent.where_predicates |= child.where_predicates
    parent.group_by_items |= child.group_by_items
    parent.having_predicates |= child.having_predicates
    parent.order_by_items |= child.order_by_items
    parent.where_shapes |= child.where_shapes
    parent.subquery_count += child.subquery_count
    if take_limit and parent.limit_value is None:
        parent.limit_value = child.limit_value


def _paren_groups(tokens: list[SqlToken]):
    """Yield (start, end) index pairs of depth-1 parenthesized groups."""
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind is TokenKind.PUNCT and tok.text == "(":
            j = i + 1
            depth = 1
            while j < len(tokens) and depth:
                if tokens[j].kind is TokenKind.PUNCT and tokens[j].text == "(":
                    depth += 1
                elif tokens[j].kind is TokenKind.PUNCT and tokens[j].text == ")":
                    depth -= 1
                j += 1
            yield i + 1, j - 1
            i = j
            continue
        i += 1


def _collect_subqueries(tokens: list[SqlToken], decomp: ClauseDecomposition) -> None:
    """Count nested SELECTs at any depth and merge their buckets upward."""
    for start, end in _paren_groups(tokens):
        inner = tokens[start:end]
        if inner and inner[0].kind is TokenKind.KEYWORD and inner[0].text == "select":
            child = _decompose_tokens(inner, top=False)
            decomp.subquery_count += 1 + child.subquery_count
            child.subquery_count = 0
            _merge(decomp, child)
        else:
            _collect_subqueries(inner, decomp)


def _decompose_tokens(tokens: list[SqlToken], top: bool) -> ClauseDecomposition:
    decomp = ClauseDecomposition()

    if top:
        for tok in tokens:
            if tok.kind is TokenKind.OPERATOR:
                decomp.operators[tok.text] += 1
            elif tok.kind is TokenKind.KEYWORD and tok.text in WORD_OPERATORS:
                decomp.operators[tok.text] += 1
            elif tok.kind is TokenKind.FUNCTION_NAME:
                decomp.functions[tok.text] += 1
            elif tok.kind in (TokenKind.STRING_LIT, TokenKind.NUMERIC_LIT):
                decomp.literals[tok.text] += 1

    # Set operations chain full statements together; decompose each side.
    sides = _split_on(
        tokens,
        lambda t: t.kind is TokenKind.KEYWORD and t.text in _SET_OPS,
    )
    if len(sides) > 1:
        for side in sides:
            _merge(decomp, _decompose_tokens(side, top=False), take_limit=True)
        return decomp

    _collect_subqueries(tokens, decomp)

    for name, body in _clause_segments(tokens):
        if name == "select":
            for item in _split_on(body, _is_comma):
                decomp.select_items.add(_render_items(item))
        elif name == "from":
            depth = 0
            for tok in body:
                if tok.kind is TokenKind.PUNCT and tok.text == "(":
                    depth += 1
                elif tok.kind is TokenKind.PUNCT and tok.text == ")":
                    depth -= 1
                elif depth == 0 and tok.kind is TokenKind.TABLE_REF:
                    decomp.from_tables.add(tok.text.split(".")[-1])
        elif name == "where":
            for pred in _split_on(body, _is_and_or):
                decomp.where_predicates.add(_render_items(pred))
                decomp.where_shapes.add(_render_items(pred, masked=True))
        elif name == "group by":
            for item in _split_on(body, _is_comma):
                decomp.group_by_items.add(_render_items(item))
        elif name == "having":
            for pred in _split_on(body, _is_and_or):
                decomp.having_predicates.add(_render_items(pred))
        elif name == "order by":
            for item in _split_on(body, _is_comma):
                decomp.order_by_items.add(_render_items(item))
        elif name == "limit":
            if len(body) == 1 and body[0].kind is TokenKind.NUMERIC_LIT:
                try:
                    decomp.limit_value = int(body[0].text)
                except ValueError:
                    decomp.limit_value = body[0].text
            elif body:
                decomp.limit_value = _render_items(body)
    return decomp


def decompose_clauses(sql: str) -> ClauseDecomposition:
    """Bucket a statement into normalized clause sets.

    Deterministic for identical input; nested subqueries are counted and their
    elements merged into the parent buckets.
    """
    return _decompose_tokens(tokenize(sql), top=True)
