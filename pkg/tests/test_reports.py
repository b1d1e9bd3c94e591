"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for report encoding and rendering
"""

import pytest
import json
import os
import sys
from fractions import Fraction

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from reports import ExperimentReport, encode_value, render, reports_to_frame, write_report
from validators import ValidationError

# === FIXTURES ===

@pytest.fixture
def statistical():
    return ExperimentReport(
        experiment='perc.crossing',
        params={'p': Fraction(1, 2), 'rect': [0, 0, 6, 5]},
        estimate=0.5, se=0.01, samples=1000, seed=3,
        values={'crossings': 500},
        wall_time=1.25,
    )

@pytest.fixture
def exact():
    return ExperimentReport(
        experiment='rc.exact',
        params={'p': Fraction(1, 2), 'q': 2},
        exact=True,
        values={'partition_function': Fraction(41, 8)},
    )

# === ENCODING TESTS ===

def test_encode_value():
    """Test rationals, big integers, numpy and complex values"""
    assert encode_value(Fraction(14, 41)) == "14/41"
    assert encode_value(2 ** 60) == str(2 ** 60)
    assert encode_value(12) == 12
    assert encode_value(np.int64(7)) == 7
    assert encode_value(np.float32(0.5)) == 0.5
    assert encode_value(float('nan')) == 'nan'
    assert encode_value(1 + 2j) == [1.0, 2.0]
    assert encode_value({'a': (Fraction(1, 3), np.array([1, 2]))}) == {'a': ["1/3", [1, 2]]}
    assert encode_value(True) is True

# === REPORT TESTS ===

def test_exact_report_has_no_se():
    """Test exact reports reject a standard error"""
    with pytest.raises(ValidationError, match="cannot carry a standard error"):
        ExperimentReport('rc.exact', {}, estimate=0.5, se=0.1, exact=True)

def test_interval(statistical, exact):
    """Test the three-sigma interval"""
    low, high = statistical.interval
    assert low == pytest.approx(0.47)
    assert high == pytest.approx(0.53)
    with pytest.raises(ValidationError, match="no statistical estimate"):
        exact.interval

def test_to_dict(statistical, exact):
    """Test encoded fields and optional keys"""
    data = statistical.to_dict()
    assert data['params'] == {'p': "1/2", 'rect': [0, 0, 6, 5]}
    assert data['se'] == 0.01
    assert 'wall_time' not in data
    assert statistical.to_dict(include_timing=True)['wall_time'] == 1.25

    data = exact.to_dict()
    assert data['exact'] is True
    assert 'se' not in data
    assert data['values'] == {'partition_function': "41/8"}

def test_json_is_deterministic(statistical):
    """Test equal reports render to identical text"""
    text = render(statistical, 'json')
    assert text == render(statistical, 'json')
    assert json.loads(text)['experiment'] == 'perc.crossing'

def test_csv_rendering(statistical):
    """Test scalar params and values become columns"""
    text = render(statistical, 'csv')
    header, row = text.strip().splitlines()
    assert header.split(',') == ['experiment', 'p', 'estimate', 'se', 'samples', 'crossings']
    assert row.startswith('perc.crossing,1/2,0.5,0.01,1000,500')

def test_render_unknown_format(statistical):
    """Test format validation"""
    with pytest.raises(ValidationError, match="Unsupported format"):
        render(statistical, 'xml')

def test_rows_table():
    """Test reports with rows render one line per row"""
    report = ExperimentReport('perc.radius', {}, rows=[{'r': 1, 'survival': 0.5}, {'r': 2, 'survival': 0.25}])
    frame = report.to_frame()
    assert list(frame.columns) == ['r', 'survival']
    assert len(frame) == 2

def test_reports_to_frame(statistical, exact):
    """Test the union of columns across reports"""
    frame = reports_to_frame([statistical, exact])
    assert len(frame) == 2
    assert 'partition_function' in frame.columns
    assert 'crossings' in frame.columns
    assert reports_to_frame([]).empty

# === OUTPUT TESTS ===

def test_write_report(tmp_path, capsys):
    """Test file output and stdout"""
    path = tmp_path / "report.json"
    assert write_report("{}", path) == (True, "")
    assert path.read_text(encoding='utf-8') == "{}\n"

    assert write_report("hello") == (True, "")
    assert capsys.readouterr().out == "hello\n"

    success, error = write_report("{}", tmp_path / "missing" / "report.json")
    assert not success
    assert error

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
