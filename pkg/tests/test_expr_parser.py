import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.errors import (
    EvaluationDomainError,
    ExprError,
    ExprLexError,
    ExprSyntaxError,
    TargetProbeError,
    UnknownFunctionError,
)
from src.metrics.weighted_norm import estimate_alpha
from src.parsing.expr_parser import (
    MAX_NESTING,
    Binary,
    Unary,
    Variable,
    eval_ast,
    parse,
    parse_target,
    to_source,
    tokenize,
)


def value(src, x=0.0):
    return eval_ast(parse(src), x)


@pytest.mark.parametrize(
    "src, x, expected",
    [
        ("1+2*3", 5.0, 7.0),
        ("-x^2", 3.0, -9.0),
        ("2^3^2", 0.0, 512.0),
        ("2^-1", 0.0, 0.5),
        ("1-2-3", 0.0, -4.0),
        ("8/4/2", 0.0, 1.0),
        ("(1+2)*3", 0.0, 9.0),
        ("--x", 2.0, 2.0),
        ("2*-x", 3.0, -6.0),
        ("  x   *  2 ", 1.5, 3.0),
    ],
)
def test_precedence_and_associativity(src, x, expected):
    assert value(src, x) == expected


def test_unary_minus_binds_looser_than_power():
    assert parse("-x^2") == Unary("neg", Binary("^", Variable(), parse("2")))


@pytest.mark.parametrize(
    "src, x, expected",
    [
        ("relu(x) - relu(x-1)", 0.5, 0.5),
        ("sqrt(1+x^2)", 0.0, 1.0),
        ("abs(x)", -3.0, 3.0),
        ("x*arctan(x)", 1.0, math.pi / 4),
        ("sin(pi/2)", 0.0, 1.0),
        ("cos(0)", 0.0, 1.0),
        ("exp_neg_sq(x)", 2.0, math.exp(-4.0)),
        ("relu(-x)", 2.0, 0.0),
        ("1.5e2 + .5", 0.0, 150.5),
    ],
)
def test_function_values(src, x, expected):
    assert value(src, x) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "src, error, position",
    [
        ("1 + $", ExprLexError, 4),
        ("foo(x)", UnknownFunctionError, 0),
        ("2*exp(x)", UnknownFunctionError, 2),
        ("x + y", UnknownFunctionError, 4),
        ("(x", ExprSyntaxError, 2),
        ("", ExprSyntaxError, 0),
        ("   ", ExprSyntaxError, 0),
        ("x y", ExprSyntaxError, 2),
        ("x +", ExprSyntaxError, 3),
        ("sin x", ExprSyntaxError, 4),
        (")", ExprSyntaxError, 0),
        ("1e400", ExprLexError, 0),
        ("x . 2", ExprLexError, 2),
    ],
)
def test_errors_are_positioned(src, error, position):
    with pytest.raises(error) as info:
        parse(src)
    assert info.value.position == position
    assert f"position {position}" in str(info.value)


def test_unknown_function_message_names_it():
    with pytest.raises(UnknownFunctionError, match="unknown function 'foo'"):
        parse("foo(x)")
    with pytest.raises(UnknownFunctionError, match="unknown name 'e'"):
        parse("e")


def test_tokens_carry_positions():
    kinds = [(t.kind, t.text, t.pos) for t in tokenize("sin(x)^2")]
    assert kinds == [
        ("name", "sin", 0), ("(", "(", 3), ("name", "x", 4), (")", ")", 5),
        ("op", "^", 6), ("num", "2", 7), ("end", "", 8),
    ]


def test_nesting_guard():
    ok = "(" * MAX_NESTING + "x" + ")" * MAX_NESTING
    assert value(ok, 2.0) == 2.0
    with pytest.raises(ExprSyntaxError, match="nested deeper") as info:
        parse("(" * (MAX_NESTING + 1) + "x" + ")" * (MAX_NESTING + 1))
    assert info.value.position == MAX_NESTING
    with pytest.raises(ExprSyntaxError):
        parse("sin(" * 100 + "x" + ")" * 100)
    with pytest.raises(ExprSyntaxError):
        parse("x" + "^x" * 100)


@pytest.mark.parametrize(
    "src, x, expected",
    [
        ("+".join(["x"] * 300), 2.0, 600.0),
        ("+".join(["x"] * 2048), 0.5, 1024.0),
        ("*".join(["x"] * 1000), 1.0, 1.0),
        ("-" * 3000 + "x", 1.5, 1.5),
        ("-" * 3001 + "x", 1.5, -1.5),
        ("1" + "-1" * 1500, 0.0, -1499.0),
    ],
)
def test_long_flat_chains_parse_and_evaluate(src, x, expected):
    assert len(src) <= 4096
    ast = parse(src)
    assert value(src, x) == expected
    np.testing.assert_array_equal(eval_ast(ast, np.array([x, x])), [expected, expected])
    printed = to_source(ast)
    assert "(" not in printed
    assert eval_ast(parse(printed), x) == expected


@pytest.mark.parametrize(
    "src, x, op",
    [
        ("sqrt(x)", -4.0, "sqrt"),
        ("1/x", 0.0, "/"),
        ("x^-1", 0.0, "^"),
        ("x^0.5", -1.0, "^"),
    ],
)
def test_domain_errors_carry_x(src, x, op):
    with pytest.raises(EvaluationDomainError) as info:
        value(src, x)
    assert info.value.op == op
    assert info.value.x == x


def test_domain_error_reports_first_offending_array_point():
    with pytest.raises(EvaluationDomainError) as info:
        eval_ast(parse("1/(x-1)"), np.array([-1.0, 0.0, 1.0, 2.0]))
    assert info.value.x == 1.0
    assert info.value.value == 0.0


def test_negative_base_with_integer_exponent_is_fine():
    assert value("x^3", -2.0) == -8.0
    assert value("0^0") == 1.0


@pytest.mark.parametrize(
    "src",
    ["x", "pi", "sqrt(1+x^2)", "relu(x) - relu(x-1)", "x*arctan(x)*2/pi", "sin(x)/(1+abs(x))", "-x^2 + 3"],
)
def test_vectorised_matches_scalar(src):
    ast = parse(src)
    x = np.linspace(-5.0, 5.0, 101)
    vec = eval_ast(ast, x)
    assert vec.shape == x.shape
    np.testing.assert_allclose(vec, [eval_ast(ast, float(xi)) for xi in x], rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize(
    "src",
    ["x", "-x^2", "2^3^2", "(-x)^2", "1-(2-x)", "sqrt(1+x^2)", "relu(x)-relu(x-1)", "x*arctan(x)*2/pi",
     "exp_neg_sq(x/3)+1e-3*cos(pi*x)", "--x", "1e20*x/1e20"],
)
def test_printed_source_parses_back(src):
    ast = parse(src)
    again = parse(to_source(ast))
    assert again == ast
    x = np.linspace(-10.0, 10.0, 1000)
    np.testing.assert_allclose(eval_ast(again, x), eval_ast(ast, x), rtol=1e-12, atol=1e-12)


FUZZ_ALPHABET = list("x0123456789.+-*/^() \t$,e") + ["sin", "sqrt", "abs", "relu", "pi", "exp_neg_sq", "foo"]


def _check_total(src):
    try:
        ast = parse(src)
    except ExprError as exc:
        assert 0 <= exc.position <= len(src)
        return
    try:
        eval_ast(ast, np.array([-1.5, 0.0, 0.7]))
    except EvaluationDomainError:
        pass


@pytest.mark.slow
def test_fuzz_random_token_strings(rng):
    for _ in range(10_000):
        length = int(rng.integers(0, 4097)) if rng.random() < 0.1 else int(rng.integers(0, 60))
        pieces = rng.choice(FUZZ_ALPHABET, size=length)
        src = "".join(pieces)[:4096]
        _check_total(src)


@settings(max_examples=500, deadline=None)
@given(st.lists(st.sampled_from(FUZZ_ALPHABET), max_size=200).map("".join))
def test_parser_is_total_on_token_soup(src):
    _check_total(src)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=300))
def test_parser_is_total_on_arbitrary_text(src):
    _check_total(src)


def _random_expression(rng, depth):
    roll = rng.random()
    if depth == 0 or roll < 0.25:
        return "x" if rng.random() < 0.4 else f"{int(rng.integers(1, 10))}.0"
    if roll < 0.35:
        return f"({_random_expression(rng, depth - 1)})"
    if roll < 0.45:
        return f"-{_random_expression(rng, depth - 1)}"
    if roll < 0.55:
        exponent = rng.choice(["1.0", "2.0", "3.0", "-1.0"])
        return f"{_random_expression(rng, depth - 1)} ^ {exponent}"
    op = rng.choice(["+", "-", "*", "/"])
    return f"{_random_expression(rng, depth - 1)} {op} {_random_expression(rng, depth - 1)}"


def test_precedence_matches_python_reference(rng):
    compared = 0
    while compared < 200:
        src = _random_expression(rng, 4)
        try:
            expected = eval(src.replace("^", "**"), {"__builtins__": {}}, {"x": 0.7})
        except (ZeroDivisionError, OverflowError):
            continue
        if isinstance(expected, complex) or not math.isfinite(expected) or abs(expected) > 1e12:
            continue
        assert value(src, 0.7) == pytest.approx(expected, rel=1e-12, abs=1e-12), src
        compared += 1


def test_parse_target_wraps_expression():
    target = parse_target("  sqrt(1+x^2) ")
    assert target.label == "sqrt(1+x^2)"
    assert target.alpha_plus is None and target.alpha_minus is None
    np.testing.assert_allclose(target.evaluate(np.array([0.0, 3.0])), [1.0, math.sqrt(10.0)])


def test_parse_target_alphas_are_estimated_at_use_time():
    identity = parse_target("x")
    assert estimate_alpha(identity, "+") == 1.0
    assert estimate_alpha(identity, "-") == -1.0
    assert estimate_alpha(parse_target("sin(x)"), "+") == 0.0


def test_declared_alphas_are_kept():
    target = parse_target("abs(x)", alpha_plus=1.0, alpha_minus=1.0)
    assert (target.alpha_plus, target.alpha_minus) == (1.0, 1.0)


@pytest.mark.parametrize("src", ["9^x", "sqrt(x)", "1/(x-1048576)", "x^x"])
def test_probe_rejects_targets_broken_at_large_x(src):
    with pytest.raises(TargetProbeError, match="target not evaluable at large"):
        parse_target(src)
