"""SMT-LIB2 script front end.

Extracts the nullary declarations a projection can name, resolves the
projection set, and renders hash constraints / blocking clauses as
SMT-LIB2 assertions over pure QF_BV operators.  Input scripts are never
rewritten: downstream code works with verbatim top-level form slices.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

from .errors import MalformedScript, NonDiscreteProjection, UnknownVariable

if TYPE_CHECKING:  # only for annotations; rendering dispatches on attributes
    from .hashing import HashConstraint


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>;[^\n]*)
      | (?P<lp>\()
      | (?P<rp>\))
      | (?P<string>"(?:[^"]|"")*")
      | (?P<quoted>\|[^|]*\|)
      | (?P<atom>[^\s()";|]+)
    """,
    re.VERBOSE,
)

# SMT-LIB simple symbols need no |...| quoting
_SIMPLE_SYMBOL_RE = re.compile(r"[a-zA-Z~!@$%^&*_+=<>.?/-][a-zA-Z0-9~!@$%^&*_+=<>.?/-]*\Z")

_PROJECTED_VARS_RE = re.compile(r"^\s*;+\s*projected-vars:\s*(.*?)\s*$", re.MULTILINE)


def tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    """Yield (kind, value, line) with kind in {lp, rp, atom, string}.

    Comments and whitespace are skipped; quoted symbols are returned as
    atoms with their pipes kept.  Raises MalformedScript on characters
    that cannot start a token (e.g. an unterminated string).
    """
    newlines = [m.start() for m in re.finditer("\n", text)]

    def line_of(pos: int) -> int:
        return bisect_right(newlines, pos) + 1

    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MalformedScript(
                f"unreadable input near {text[pos:pos + 20]!r}", line_of(pos)
            )
        pos = m.end()
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        value = m.group()
        if kind == "quoted":
            kind = "atom"
        yield kind, value, line_of(m.start())


@dataclass(frozen=True)
class Form:
    """One top-level command: its verbatim text slice, head symbol, line."""

    text: str
    head: str | None
    line: int


def iter_top_forms(text: str) -> Iterator[tuple[object, Form]]:
    """Yield (nested_sexpr, Form) for each top-level form.

    The nested representation is lists of atom strings.  Raises
    MalformedScript on unbalanced parentheses.
    """
    stack: list[list] = []
    start = 0
    open_line = 0
    offsets: list[int] = []
    # re-scan offsets alongside tokens: track via a parallel tokenizer pass
    newlines = [m.start() for m in re.finditer("\n", text)]

    def line_of(pos: int) -> int:
        return bisect_right(newlines, pos) + 1

    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MalformedScript(
                f"unreadable input near {text[pos:pos + 20]!r}", line_of(pos)
            )
        tok_start, pos = m.start(), m.end()
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        value = m.group()
        if kind == "lp":
            if not stack:
                start = tok_start
                open_line = line_of(tok_start)
            stack.append([])
        elif kind == "rp":
            if not stack:
                raise MalformedScript("unmatched ')'", line_of(tok_start))
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                head = done[0] if done and isinstance(done[0], str) else None
                yield done, Form(text[start:pos], head, open_line)
        else:
            if stack:
                stack[-1].append(value)
            else:
                # stray top-level atom (legal SMT-LIB rejects it; be strict)
                raise MalformedScript(f"unexpected atom {value!r}", line_of(tok_start))
    if stack:
        raise MalformedScript("unbalanced '(' (unclosed form)", open_line)


@dataclass(frozen=True)
class SortedVar:
    """A declared nullary symbol: name plus sort text, width for bitvectors."""

    name: str
    sort: str
    width: int | None

    @property
    def is_bitvector(self) -> bool:
        return self.width is not None


@dataclass(frozen=True)
class SmtScript:
    text: str
    declarations: tuple[SortedVar, ...]
    logic: str | None
    forms: tuple[Form, ...]

    def lookup(self, name: str) -> SortedVar | None:
        return self._by_name.get(name)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {v.name: v for v in self.declarations})


@dataclass(frozen=True)
class ProjectionSet:
    """Bitvector variables to count over, in caller order."""

    variables: tuple[SortedVar, ...]

    @property
    def total_width(self) -> int:
        return sum(v.width for v in self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class BlockingClause:
    """Negation of one projected model: (name, width, value) per variable."""

    assignments: tuple[tuple[str, int, int], ...]

    @classmethod
    def from_model(cls, projection: ProjectionSet, model: dict[str, int]) -> "BlockingClause":
        return cls(tuple((v.name, v.width, model[v.name]) for v in projection.variables))


def unquote_symbol(token: str) -> str:
    if len(token) >= 2 and token[0] == "|" and token[-1] == "|":
        return token[1:-1]
    return token


def quote_symbol(name: str) -> str:
    if _SIMPLE_SYMBOL_RE.match(name):
        return name
    if "|" in name or "\\" in name:
        raise MalformedScript(f"symbol {name!r} cannot be quoted")
    return f"|{name}|"


def _parse_sort(sexpr, raw_hint: str, line: int) -> tuple[str, int | None]:
    """Return (sort_text, width) for a declaration's sort expression."""
    if isinstance(sexpr, str):
        return sexpr, None
    if (
        len(sexpr) == 3
        and sexpr[0] == "_"
        and sexpr[1] == "BitVec"
        and isinstance(sexpr[2], str)
    ):
        try:
            width = int(sexpr[2])
        except ValueError:
            raise MalformedScript(f"non-integer bitvector width {sexpr[2]!r}", line)
        if width < 1:
            raise MalformedScript(f"bitvector width must be >= 1, got {width}", line)
        return f"(_ BitVec {width})", width
    return _render_sexpr(sexpr), None


def _render_sexpr(sexpr) -> str:
    if isinstance(sexpr, str):
        return sexpr
    return "(" + " ".join(_render_sexpr(x) for x in sexpr) + ")"


def parse_declarations(text: str) -> SmtScript:
    """Parse a script's top level: declarations, logic, verbatim forms."""
    declarations: list[SortedVar] = []
    seen: set[str] = set()
    logic: str | None = None
    forms: list[Form] = []
    for sexpr, form in iter_top_forms(text):
        forms.append(form)
        head = form.head
        if head == "set-logic" and logic is None and len(sexpr) == 2:
            logic = unquote_symbol(sexpr[1])
            continue
        if head not in ("declare-const", "declare-fun"):
            continue
        if head == "declare-const":
            if len(sexpr) != 3 or not isinstance(sexpr[1], str):
                raise MalformedScript("malformed declare-const", form.line)
            name_tok, sort_expr = sexpr[1], sexpr[2]
        else:
            if len(sexpr) != 4 or not isinstance(sexpr[1], str):
                raise MalformedScript("malformed declare-fun", form.line)
            if sexpr[2] != []:  # non-nullary: not projection-eligible
                continue
            name_tok, sort_expr = sexpr[1], sexpr[3]
        name = unquote_symbol(name_tok)
        if name in seen:
            raise MalformedScript(f"duplicate declaration of {name!r}", form.line)
        seen.add(name)
        sort_text, width = _parse_sort(sort_expr, form.text, form.line)
        declarations.append(SortedVar(name, sort_text, width))
    return SmtScript(text, tuple(declarations), logic, tuple(forms))


def resolve_projection(script: SmtScript, names: Iterable[str]) -> ProjectionSet:
    """Map projection names onto declared bitvector variables, keeping order."""
    variables: list[SortedVar] = []
    taken: set[str] = set()
    for raw in names:
        name = unquote_symbol(raw)
        if name in taken:
            continue
        var = script.lookup(name)
        if var is None:
            raise UnknownVariable(f"projection variable {name!r} is not declared")
        if not var.is_bitvector:
            raise NonDiscreteProjection(
                f"projection variable {name!r} has sort {var.sort}, not a bitvector"
            )
        variables.append(var)
        taken.add(name)
    return ProjectionSet(tuple(variables))


def projection_comment_names(text: str) -> list[str] | None:
    """Collect names from `; projected-vars: x y z` comment lines, if any."""
    names: list[str] = []
    for m in _PROJECTED_VARS_RE.finditer(text):
        names.extend(m.group(1).split())
    return names or None


def read_projection_file(path) -> list[str]:
    """Sidecar format: one variable name per line, # comments allowed."""
    names: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                names.append(line)
    return names


# ---------------------------------------------------------------------------
# rendering


def _bits(value: int, width: int) -> str:
    return "#b" + format(value, f"0{width}b")


def _slice_term(sl) -> str:
    name = quote_symbol(sl.var)
    if sl.lo == 0 and sl.hi == sl.parent_width:
        return name
    return f"((_ extract {sl.hi - 1} {sl.lo}) {name})"


def _extended(term: str, from_width: int, to_width: int) -> str:
    if from_width == to_width:
        return term
    return f"((_ zero_extend {to_width - from_width}) {term})"


def _render_linear_sum(constraint: "HashConstraint") -> str:
    """(bvadd (bvmul a_i x_i') ... b) at the widened width."""
    width = constraint.widened_width
    parts = [
        f"(bvmul {_bits(coeff, width)} {_extended(_slice_term(sl), sl.hi - sl.lo, width)})"
        for coeff, sl in zip(constraint.coeffs, constraint.slices)
    ]
    parts.append(_bits(constraint.offset, width))
    if len(parts) == 1:
        return parts[0]
    return "(bvadd " + " ".join(parts) + ")"


def render_assertion(constraint) -> str:
    """Render a hash constraint or blocking clause as one `(assert ...)`.

    Uses only QF_BV operators (bvmul, bvadd, bvurem, extract, bvxor,
    zero_extend, =, not, and) and binary literals.
    """
    if isinstance(constraint, BlockingClause):
        eqs = [
            f"(= {quote_symbol(name)} {_bits(value, width)})"
            for name, width, value in constraint.assignments
        ]
        body = eqs[0] if len(eqs) == 1 else "(and " + " ".join(eqs) + ")"
        return f"(assert (not {body}))"

    from .hashing import Family  # deferred: hashing imports this module's types

    family = constraint.family
    if family is Family.XOR:
        bits = [
            _slice_term(sl)
            for coeff, sl in zip(constraint.coeffs, constraint.slices)
            if coeff
        ]
        if not bits:
            return "(assert true)" if constraint.target == 0 else "(assert false)"
        lhs = bits[0] if len(bits) == 1 else "(bvxor " + " ".join(bits) + ")"
        return f"(assert (= {lhs} {_bits(constraint.target, 1)}))"

    width = constraint.widened_width
    total = _render_linear_sum(constraint)
    if family is Family.PRIME:
        lhs = f"(bvurem {total} {_bits(constraint.range_size, width)})"
        return f"(assert (= {lhs} {_bits(constraint.target, width)}))"
    if family is Family.SHIFT:
        lhs = f"((_ extract {width - 1} {width - constraint.ell}) {total})"
        return f"(assert (= {lhs} {_bits(constraint.target, constraint.ell)}))"
    raise ValueError(f"unknown hash family {family!r}")
