import random

import pytest
from hypothesis import given, settings, strategies as st

from tablebot.dsl import (
    BinOp,
    Call,
    CallExpr,
    Comment,
    Index,
    Let,
    Num,
    Program,
    Str,
    Var,
    Vec,
    canonical_source,
    parse,
    parse_expression,
)
from tablebot.errors import InterpError

PICK_AND_PLACE = """pos = get_obj_position(object_name)
dims = get_obj_dimensions(object_name)
movep((pos[0], pos[1], pos[2] + dims[2]))
movep((pos[0], pos[1], pos[2]))
close_gripper()
movep((pos[0], pos[1], BOUNDS_MAX[2]))
movep((destination[0], destination[1], BOUNDS_MAX[2]))
movep((destination[0], destination[1], destination[2]))
open_gripper()
go_home()"""


def random_expr(rng: random.Random, depth: int) -> object:
    choices = ["num", "str", "var"]
    if depth > 0:
        choices += ["vec", "index", "binop", "call"]
    kind = rng.choice(choices)
    if kind == "num":
        return Num(round(rng.uniform(-100, 100), 6))
    if kind == "str":
        return Str(rng.choice(["purple block", "cup", "a b c", "it's", 'say "hi"']))
    if kind == "var":
        return Var(rng.choice(["pos", "dims", "target_2", "BOUNDS_MIN", "_tmp"]))
    if kind == "vec":
        return Vec(*(random_expr(rng, depth - 1) for _ in range(3)))
    if kind == "index":
        return Index(random_expr(rng, depth - 1), rng.randint(0, 2))
    if kind == "binop":
        return BinOp(
            rng.choice("+-*/"), random_expr(rng, depth - 1), random_expr(rng, depth - 1)
        )
    return CallExpr(
        rng.choice(["get_obj_position", "dist", "helper_fn"]),
        tuple(random_expr(rng, depth - 1) for _ in range(rng.randint(0, 3))),
    )


def random_program(rng: random.Random, max_statements: int = 8) -> Program:
    statements = []
    for _ in range(rng.randint(0, max_statements)):
        kind = rng.random()
        if kind < 0.15:
            statements.append(Comment(rng.choice(["step one", "lift it", ""])))
        elif kind < 0.6:
            statements.append(
                Let(rng.choice(["a", "b_2", "pos", "w"]), random_expr(rng, 3))
            )
        else:
            statements.append(
                Call(
                    rng.choice(["movep", "go_home", "stack_blocks"]),
                    tuple(random_expr(rng, 2) for _ in range(rng.randint(0, 3))),
                )
            )
    return Program(tuple(statements))


class TestRoundTrip:
    def test_pick_and_place_fixture_is_ten_statements(self):
        program = parse(PICK_AND_PLACE)
        assert len(program.statements) == 10

    def test_fixture_roundtrip_fixpoint(self):
        p1 = parse(PICK_AND_PLACE)
        s1 = canonical_source(p1)
        p2 = parse(s1)
        assert p2 == p1
        assert canonical_source(p2) == s1

    @pytest.mark.parametrize("seed", range(40))
    def test_random_ast_fixpoint(self, seed):
        rng = random.Random(seed)
        program = random_program(rng)
        s1 = canonical_source(program)
        p1 = parse(s1)
        assert p1 == program
        assert canonical_source(p1) == s1

    def test_shipped_library_fixture_roundtrips(self, blocks_library):
        for skill in blocks_library.skills.values():
            src = canonical_source(skill.body)
            assert parse(src) == skill.body

    def test_comment_statements_preserved(self):
        program = parse("# approach from above\nmovep((0.5, 0, 0.1))")
        assert program.statements[0] == Comment("approach from above")
        assert parse(canonical_source(program)) == program

    def test_number_formatting_six_digits(self):
        program = parse("a = 0.1234567890")
        src = canonical_source(program)
        assert src == "a = 0.123457"
        assert parse(src) == parse(src)  # stable thereafter


class TestParseErrors:
    @pytest.mark.parametrize(
        "text",
        [
            "movep((0.5, 0.0,",
            "movep(0.5))",
            "x = ",
            "x + 2",  # expressions are not statements
            "movep((1, 2))",  # two-component tuple is neither vec nor grouping
            "name with space = 2",
            'a = "unterminated',
            "a = 3 # trailing comments are not allowed",
            "a = [1, 2, 3]",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(InterpError) as e:
            parse(text)
        assert e.value.kind == "Parse"
        assert e.value.line >= 1

    def test_error_location_points_at_truncation(self):
        with pytest.raises(InterpError) as e:
            parse("movep((0.5, 0.0,")
        assert e.value.line == 1
        assert e.value.column >= 10

    def test_unknown_callee_parses(self):
        # Name resolution is validation's job, not the parser's.
        program = parse('lift_it("cup")')
        assert isinstance(program.statements[0], Call)


class TestExpressions:
    def test_precedence(self):
        e = parse_expression("1 + 2 * 3")
        assert e == BinOp("+", Num(1), BinOp("*", Num(2), Num(3)))

    def test_left_associativity(self):
        e = parse_expression("8 - 2 - 1")
        assert e == BinOp("-", BinOp("-", Num(8), Num(2)), Num(1))

    def test_grouping_vs_vector(self):
        assert parse_expression("(1 + 2) * 3") == BinOp(
            "*", BinOp("+", Num(1), Num(2)), Num(3)
        )
        assert parse_expression("(1, 2, 3)") == Vec(Num(1), Num(2), Num(3))

    def test_negative_literals(self):
        assert parse_expression("-0.5") == Num(-0.5)
        assert parse_expression("3 - -2") == BinOp("-", Num(3), Num(-2))

    def test_index_on_call(self):
        e = parse_expression('get_obj_dimensions("cup")[2] / 2')
        assert e == BinOp("/", Index(CallExpr("get_obj_dimensions", (Str("cup"),)), 2), Num(2))

    def test_string_quoting_both_styles(self):
        assert parse_expression("'purple block'") == parse_expression('"purple block"')


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10_000_000))
def test_roundtrip_property(seed):
    rng = random.Random(seed)
    program = random_program(rng, max_statements=5)
    assert parse(canonical_source(program)) == program
