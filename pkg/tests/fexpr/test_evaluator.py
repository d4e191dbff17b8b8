import pytest
import numpy as np

from ragfpy import errors
from ragfpy.fexpr import evaluate, parse
from ragfpy.tabular import Dataset, FeatureMeta


@pytest.fixture
def gci_f():
    """five countries with the columns the socio-economic formulas use"""
    columns = {
        "Population": [38.0e6, 67.0e6, 5.4e6, 126.0e6, 2.1e6],
        "Land Area (Km2)": [9.98e6, 5.49e5, 3.38e5, 3.78e5, 2.0e4],
        "Agricultural Land (%)": [6.9, 52.4, 7.5, 12.1, 30.2],
        "Forested Area (%)": [38.7, 31.2, 73.7, 68.4, 62.0],
        "Gross Primary Enrollment (%)": [100.9, 102.5, 100.2, 98.8, 101.0],
        "Gross Tertiary Enrollment (%)": [68.9, 65.6, 88.2, 63.2, 79.0],
        "CO2 Emissions": [544894.0, 303276.0, 45871.0, 1135886.0, 12705.0],
        "GDP": [1.736e12, 2.716e12, 2.69e11, 5.08e12, 5.4e10],
    }
    cols = [(FeatureMeta(name), np.array(v)) for name, v in columns.items()]
    return Dataset(cols, np.array([0, 1, 0, 1, 0]), ("low", "high"))


GCI_FORMULAS = [
    "Population / `Land Area (Km2)`",
    "(`Agricultural Land (%)` + `Forested Area (%)`) / 100",
    "(`Gross Primary Enrollment (%)` + `Gross Tertiary Enrollment (%)`) / 2",
    "`CO2 Emissions` / (`Forested Area (%)` / 100 * `Land Area (Km2)`)",
    "GDP / Population",
]


@pytest.mark.parametrize("formula", GCI_FORMULAS)
def test_gci_formulas_evaluate(gci_f, formula):
    values = evaluate(parse(formula), gci_f)
    assert values.shape == (5,)
    assert values.dtype == np.float64
    assert np.all(np.isfinite(values))


def test_population_load_ratio_values(gci_f):
    values = evaluate(parse(GCI_FORMULAS[0]), gci_f)
    expected = gci_f.column("Population") / gci_f.column("Land Area (Km2)")
    assert np.array_equal(values, expected)


def test_arithmetic_and_functions(make_dataset_f):
    d = make_dataset_f({"a": [1.0, 4.0, 9.0], "b": [2.0, -1.0, 3.0]}, [0, 1, 0])
    assert evaluate(parse("sqrt(a) + abs(b)"), d).tolist() == [3.0, 3.0, 6.0]
    assert evaluate(parse("min(a, b, 2)"), d).tolist() == [1.0, -1.0, 2.0]
    assert evaluate(parse("max(a, b)"), d).tolist() == [2.0, 4.0, 9.0]
    assert evaluate(parse("-a * 2"), d).tolist() == [-2.0, -8.0, -18.0]
    assert np.allclose(evaluate(parse("exp(log(a))"), d), [1.0, 4.0, 9.0])


def test_judgment_gives_zero_one(make_dataset_f):
    d = make_dataset_f({"a": [1.0, 4.0, 9.0], "b": [2.0, -1.0, 3.0]}, [0, 1, 0])
    out = evaluate(parse("a > 2 and b > 0 or a == 1"), d)
    assert out.tolist() == [1.0, 0.0, 1.0]
    assert out.dtype == np.float64


def test_non_finite_rows(make_dataset_f):
    d = make_dataset_f({"a": [1.0, 2.0, 3.0], "b": [1.0, 0.0, 2.0]}, [0, 1, 0])
    with pytest.raises(errors.NonFiniteResult) as info:
        evaluate(parse("a / b"), d)
    assert info.value.row == 1
    with pytest.raises(errors.NonFiniteResult) as info:
        evaluate(parse("log(b - 1)"), d)
    assert info.value.row == 0
    with pytest.raises(errors.NonFiniteResult):
        evaluate(parse("exp(a * 1000)"), d)


def test_conditional_masks_untaken_branch(make_dataset_f):
    d = make_dataset_f({"a": [1.0, 2.0, 3.0], "b": [1.0, 0.0, 2.0]}, [0, 1, 0])
    out = evaluate(parse("if b != 0 then a / b else 0"), d)
    assert out.tolist() == [1.0, 0.0, 1.5]


def test_evaluate_validates(make_dataset_f):
    d = make_dataset_f({"a": [1.0, 2.0]}, [0, 1])
    with pytest.raises(errors.UnknownColumn):
        evaluate(parse("a + c"), d)
