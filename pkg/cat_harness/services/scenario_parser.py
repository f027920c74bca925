"""
シナリオ記述言語（.scn）のパーサーとシリアライザー

正規表現によるトークナイザーと再帰下降パーサーで functional シナリオと
パラメータ範囲（logical シナリオ）を読み込みます。文法は docs/scenario_language.md を参照。
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..models.data_models import (
    ActorKind,
    ActorSpec,
    FunctionalScenario,
    LogicalScenario,
    ManeuverSpec,
    ParameterRange,
    SourcePosition,
)
from .error_handling import ScenarioSyntaxError, UnknownToken
from .vocabulary import Vocabulary, load_vocabulary


TOKEN_SPEC = [
    ("COMMENT", r"#[^\n]*"),
    ("NEWLINE", r"\n"),
    ("SPACE", r"[ \t\r]+"),
    ("STRING", r'"[^"\n]*"'),
    ("NUMBER", r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("PUNCT", r"[{}();:,]"),
    ("MISMATCH", r"."),
]
TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))

# パラメータ名の末尾から単位を決める
PARAMETER_UNITS = {
    "speed": "m/s",
    "decel": "m/s^2",
    "trigger_ttc": "s",
    "onset": "s",
    "lateral_offset": "m",
}
ACTOR_PARAMETERS = ("speed", "decel", "lateral_offset")
STIMULUS_PARAMETERS = ("trigger_ttc", "onset")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


def tokenize(text: str, source: str = "<string>") -> List[Token]:
    """ソースをトークン列に分解（コメントと空白は捨てる）"""
    tokens: List[Token] = []
    line, line_start = 1, 0
    for match in TOKEN_RE.finditer(text):
        kind, value = match.lastgroup, match.group()
        column = match.start() - line_start + 1
        if kind == "NEWLINE":
            line, line_start = line + 1, match.end()
            continue
        if kind in ("SPACE", "COMMENT"):
            continue
        if kind == "MISMATCH":
            raise ScenarioSyntaxError(f"unexpected character {value!r}", source, line, column)
        tokens.append(Token(kind, value, line, column))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1))
    return tokens


class ScenarioParser:
    """再帰下降パーサー"""

    def __init__(self, vocabulary: Optional[Vocabulary] = None):
        self.vocabulary = vocabulary or load_vocabulary()
        self._tokens: List[Token] = []
        self._index = 0
        self._source = "<string>"

    # -- トークン操作 -------------------------------------------------------

    def _peek(self) -> Token:
        return self._tokens[self._index]

    def _advance(self) -> Token:
        token = self._tokens[self._index]
        self._index = min(self._index + 1, len(self._tokens) - 1)
        return token

    def _error(self, message: str, token: Optional[Token] = None) -> ScenarioSyntaxError:
        token = token or self._peek()
        found = "end of input" if token.kind == "EOF" else repr(token.value)
        return ScenarioSyntaxError(f"{message}, found {found}", self._source, token.line, token.column)

    def _expect(self, value: str) -> Token:
        token = self._peek()
        if token.value != value or token.kind not in ("PUNCT", "IDENT"):
            raise self._error(f"expected '{value}'")
        return self._advance()

    def _expect_kind(self, kind: str, what: str) -> Token:
        token = self._peek()
        if token.kind != kind:
            raise self._error(f"expected {what}")
        return self._advance()

    def _position(self, token: Token) -> SourcePosition:
        return SourcePosition(self._source, token.line, token.column)

    def _vocab_token(self, category: str) -> Tuple[str, Token]:
        token = self._expect_kind("IDENT", category)
        self.vocabulary.check(category, token.value, self._position(token))
        return token.value, token

    # -- 文法 ---------------------------------------------------------------

    def parse(self, text: str, source: str = "<string>") -> List[LogicalScenario]:
        """ソース中の全シナリオを解析"""
        self._source = source
        self._tokens = tokenize(text, source)
        self._index = 0
        scenarios = []
        while self._peek().kind != "EOF":
            scenarios.append(self._scenario())
        if not scenarios:
            raise self._error("expected 'scenario'")
        return scenarios

    def _scenario(self) -> LogicalScenario:
        start = self._expect("scenario")
        name = self._expect_kind("STRING", "scenario id string").value[1:-1]
        if not name:
            raise self._error("scenario id must not be empty", start)
        self._expect("{")

        ranges: Dict[str, ParameterRange] = {}
        positions: Dict[str, SourcePosition] = {"scenario": self._position(start)}

        ego_token = self._expect("ego")
        ego_maneuver = self._movement_block("ego", ranges, positions)
        if ego_maneuver.maneuver not in self.vocabulary.ego_maneuvers:
            raise UnknownToken(ego_maneuver.maneuver, "ego maneuver", self._source,
                               ego_token.line, ego_token.column)

        actors: List[ActorSpec] = []
        while self._peek().value == "actor":
            actor_token = self._advance()
            kind_token = self._expect_kind("IDENT", "actor kind")
            try:
                kind = ActorKind(kind_token.value)
            except ValueError:
                raise UnknownToken(kind_token.value, "actor kind", self._source,
                                   kind_token.line, kind_token.column) from None
            prefix = f"actor{len(actors) + 1}"
            positions[prefix] = self._position(actor_token)
            actors.append(ActorSpec(kind, self._movement_block(prefix, ranges, positions)))
        if not actors:
            raise self._error("expected at least one 'actor' block")

        self._expect("layout")
        layout, _ = self._vocab_token("layout")
        self._expect(";")

        salient: List[str] = []
        if self._peek().value == "salient":
            self._advance()
            self._expect("{")
            while self._peek().value != "}":
                factor, _ = self._vocab_token("salient factor")
                salient.append(factor)
                self._expect(";")
            self._expect("}")

        self._expect("stimulus")
        self._expect("{")
        while self._peek().value != "}":
            key = self._expect_kind("IDENT", "stimulus parameter")
            if key.value not in STIMULUS_PARAMETERS:
                raise self._error(f"unknown stimulus parameter '{key.value}'", key)
            self._parameter(f"stimulus.{key.value}", key, ranges, positions)
        self._expect("}")

        self._expect("group")
        conflict_type, _ = self._vocab_token("conflict type")
        self._expect(";")
        self._expect("}")

        functional = FunctionalScenario(
            id=name,
            ego_maneuver=ego_maneuver,
            actors=tuple(actors),
            layout_class=layout,
            salient_factors=frozenset(salient),
            conflict_type=conflict_type,
        )
        return LogicalScenario(functional, ranges, positions)

    def _movement_block(self, prefix: str, ranges: Dict[str, ParameterRange],
                        positions: Dict[str, SourcePosition]) -> ManeuverSpec:
        self._expect("{")
        maneuver: Optional[str] = None
        locations: Dict[str, str] = {}
        while self._peek().value != "}":
            token = self._peek()
            if token.value == "maneuver":
                self._advance()
                maneuver, _ = self._vocab_token("maneuver")
                self._expect(";")
            elif token.value in ("from", "to"):
                self._advance()
                location, _ = self._vocab_token("location")
                locations[token.value] = location
                self._expect(";")
            elif token.kind == "IDENT" and token.value in ACTOR_PARAMETERS:
                self._advance()
                self._parameter(f"{prefix}.{token.value}", token, ranges, positions)
            else:
                raise self._error("expected 'maneuver', 'from', 'to' or a parameter")
        close = self._expect("}")
        if maneuver is None:
            raise self._error(f"{prefix} block has no maneuver", close)
        if "from" in locations or "to" in locations:
            start = locations.get("from", "within_lane")
            end = locations.get("to", start)
        else:
            start, end = self.vocabulary.placements_for(maneuver)[0]
        return ManeuverSpec(maneuver, start, end)

    def _parameter(self, name: str, key: Token, ranges: Dict[str, ParameterRange],
                   positions: Dict[str, SourcePosition]) -> None:
        if name in ranges:
            raise self._error(f"parameter '{name}' is defined twice", key)
        self._expect(":")
        unit = PARAMETER_UNITS.get(name.split(".", 1)[1], "")
        if self._peek().value == "range":
            self._advance()
            self._expect("(")
            minimum = self._number()
            self._expect(",")
            maximum = self._number()
            self._expect(",")
            self._expect("step")
            step = self._number()
            self._expect(")")
            ranges[name] = ParameterRange(minimum, maximum, step, unit)
        else:
            value = self._number()
            ranges[name] = ParameterRange(value, value, 1.0, unit)
        self._expect(";")
        positions[name] = self._position(key)

    def _number(self) -> float:
        return float(self._expect_kind("NUMBER", "number").value)


def parse_functional(text: str, source: str = "<string>",
                     vocabulary: Optional[Vocabulary] = None) -> LogicalScenario:
    """単一シナリオのソースを解析して LogicalScenario（functional を含む）を返す"""
    scenarios = ScenarioParser(vocabulary).parse(text, source)
    if len(scenarios) != 1:
        second = scenarios[1].positions.get("scenario", SourcePosition(source))
        raise ScenarioSyntaxError("expected exactly one scenario", source, second.line, second.column)
    return scenarios[0]


def parse_file(path: str, vocabulary: Optional[Vocabulary] = None) -> List[LogicalScenario]:
    """.scn ファイルを解析"""
    text = Path(path).read_text(encoding="utf-8")
    return ScenarioParser(vocabulary).parse(text, str(path))


def _format_number(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def _format_parameter(name: str, parameter: ParameterRange) -> str:
    if parameter.is_point and parameter.step == 1.0:
        return f"{name}: {_format_number(parameter.minimum)};"
    return (f"{name}: range({_format_number(parameter.minimum)}, {_format_number(parameter.maximum)}, "
            f"step {_format_number(parameter.step)});")


def serialize_logical(logical: LogicalScenario) -> str:
    """LogicalScenario を .scn テキストに変換（parse_functional と往復可能）"""
    functional = logical.functional
    ranges = logical.parameter_ranges
    lines = [f'scenario "{functional.id}" {{']

    def movement(header: str, prefix: str, spec: ManeuverSpec, parameters) -> None:
        lines.append(f"  {header} {{")
        lines.append(f"    maneuver {spec.maneuver};")
        lines.append(f"    from {spec.start_location};")
        lines.append(f"    to {spec.end_location};")
        for key in parameters:
            name = f"{prefix}.{key}"
            if name in ranges:
                lines.append(f"    {_format_parameter(key, ranges[name])}")
        lines.append("  }")

    movement("ego", "ego", functional.ego_maneuver, ACTOR_PARAMETERS)
    for index, actor in enumerate(functional.actors, start=1):
        movement(f"actor {actor.kind.value}", f"actor{index}", actor.maneuver, ACTOR_PARAMETERS)
    lines.append(f"  layout {functional.layout_class};")
    if functional.salient_factors:
        lines.append("  salient {")
        lines.extend(f"    {factor};" for factor in sorted(functional.salient_factors))
        lines.append("  }")
    lines.append("  stimulus {")
    for key in STIMULUS_PARAMETERS:
        name = f"stimulus.{key}"
        if name in ranges:
            lines.append(f"    {_format_parameter(key, ranges[name])}")
    lines.append("  }")
    lines.append(f"  group {functional.conflict_type};")
    lines.append("}")
    return "\n".join(lines) + "\n"
