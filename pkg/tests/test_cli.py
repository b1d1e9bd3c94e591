"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for the command line: dispatch, sweeps, spec files and exit codes
"""

import pytest
import json
import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import cli
import config
from spec_manager import ExperimentSpec
from validators import InvariantError, ValidationError

# === FIXTURES ===

@pytest.fixture
def edge_graph(tmp_path):
    """Graph file with a single edge"""
    path = tmp_path / "edge.json"
    path.write_text(json.dumps({
        'vertices': [{'id': 0, 'axial': [0, 0]}, {'id': 1, 'axial': [1, 0]}],
        'edges': [{'u': 0, 'v': 1}],
    }), encoding='utf-8')
    return str(path)

def run_main(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out

# === RANGE TESTS ===

def test_parse_range():
    """Test inclusive ranges and value lists"""
    assert cli.parse_range("1:3:1") == ["1", "2", "3"]
    assert cli.parse_range("0.1:0.3:0.1") == ["0.1", "0.2", "0.3"]
    assert cli.parse_range("1/2, 2/3") == ["1/2", "2/3"]

    with pytest.raises(ValidationError, match="a:b:step"):
        cli.parse_range("1:2")
    with pytest.raises(ValidationError, match="Empty range"):
        cli.parse_range("3:1:1")
    with pytest.raises(ValidationError, match="positive"):
        cli.parse_range("0:1:0")

def test_swept_parameter():
    """Test range detection skips list-valued options"""
    spec = ExperimentSpec('perc', 'arms', {'colours': '1,0', 'p': '0.4,0.6'})
    assert cli.swept_parameter(spec) == ('p', ['0.4', '0.6'])
    assert cli.swept_parameter(ExperimentSpec('saw', 'count', {'nmax': '5'})) is None

    with pytest.raises(ValidationError, match="Only one parameter"):
        cli.swept_parameter(ExperimentSpec('rc', 'exact', {'p': '0:1:1/2', 'q': '1,2'}))

# === COMMAND TESTS ===

def test_saw_count(capsys):
    """Test exact counts are printed as decimal strings"""
    code, out = run_main(capsys, 'saw', 'count', '--family', 'hex', '--nmax', '6', '--oracle')
    assert code == config.EXIT_OK
    report = json.loads(out)
    assert report['experiment'] == 'saw.count'
    assert report['exact'] is True
    assert report['values']['counts'] == ["3", "6", "12", "24", "48", "90"]
    assert report['values']['oracle_agrees'] is True
    assert report['params']['spec']['params'] == {'family': 'hex', 'nmax': '6', 'oracle': True}

def test_rc_exact_rationals(capsys, edge_graph):
    """Test exact laws come out as rational strings"""
    code, out = run_main(capsys, 'rc', 'exact', '--graph', edge_graph, '--p', '1/2', '--q', '2')
    assert code == config.EXIT_OK
    values = json.loads(out)['values']
    assert values['partition_function'] == "3"
    assert values['edge_marginals'] == ["1/3"]
    assert values['total_probability'] == "1"
    assert values['probabilities'] == {'0': "2/3", '1': "1/3"}

def test_perc_duality(capsys):
    """Test the duality check runs alongside the estimate"""
    code, out = run_main(capsys, 'perc', 'duality', '--n', '3', '--samples', '50', '--seed', '2')
    assert code == config.EXIT_OK
    report = json.loads(out)
    assert report['samples'] == 50
    assert report['seed'] == 2

def test_same_spec_same_output(capsys):
    """Test identical invocations print identical text"""
    argv = ('perc', 'crossing', '--p', '0.5', '--rect', '5x4', '--samples', '200', '--seed', '7')
    _, first = run_main(capsys, *argv)
    _, second = run_main(capsys, *argv, '--workers', '1')
    first_report, second_report = json.loads(first), json.loads(second)
    assert first_report['estimate'] == second_report['estimate']
    assert 'wall_time' not in first_report

def test_timing_flag(capsys):
    """Test wall time only appears on request"""
    _, out = run_main(capsys, 'rc', 'self-dual', '--q', '4', '--timing')
    report = json.loads(out)
    assert 'wall_time' in report
    assert report['values']['p_sd'] == "2/3"

def test_csv_format(capsys):
    """Test CSV output of a single run"""
    code, out = run_main(capsys, 'rc', 'self-dual', '--q', '4', '--format', 'csv')
    assert code == config.EXIT_OK
    assert out.splitlines()[0].startswith('experiment,q')

# === SWEEP TESTS ===

def test_sweep_writes_csv(capsys):
    """Test one row per swept value with the parameter first"""
    code, out = run_main(capsys, 'rc', 'self-dual', '--q', '1,4')
    assert code == config.EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith('q,experiment')
    assert lines[1].startswith('1,rc.self-dual,1/2,0.5')
    assert lines[2].startswith('4,rc.self-dual,2/3')
    assert len(lines) == 3

# === SPEC FILE TESTS ===

def test_save_and_replay_spec(capsys, tmp_path):
    """Test a saved spec reproduces the run byte for byte"""
    spec_path = str(tmp_path / "spec.json")
    code, first = run_main(capsys, 'saw', 'fisher', '--save-spec', spec_path)
    assert code == config.EXIT_OK
    assert os.path.exists(spec_path)
    code, second = run_main(capsys, '--spec', spec_path)
    assert code == config.EXIT_OK
    assert first == second

def test_out_file(capsys, tmp_path):
    """Test --out writes the report instead of printing it"""
    path = tmp_path / "report.json"
    code, out = run_main(capsys, 'saw', 'fisher', '--out', str(path))
    assert code == config.EXIT_OK
    assert out == ""
    assert json.loads(path.read_text(encoding='utf-8'))['experiment'] == 'saw.fisher'

# === EXIT CODE TESTS ===

def test_missing_command(capsys):
    """Test no command is a validation error"""
    code, out = run_main(capsys)
    assert code == config.EXIT_VALIDATION
    assert json.loads(out)['error']['exit_code'] == config.EXIT_VALIDATION

def test_usage_error(capsys):
    """Test argparse errors map to exit 2"""
    code, out = run_main(capsys, 'saw', 'count', '--nmax', '3', '--bogus', '1')
    assert code == config.EXIT_VALIDATION
    assert json.loads(out)['error']['type'] == 'ValidationError'

def test_missing_parameter(capsys):
    """Test handler parameter checks"""
    code, out = run_main(capsys, 'perc', 'crossing', '--p', '0.5', '--samples', '10')
    assert code == config.EXIT_VALIDATION
    assert '--rect' in json.loads(out)['error']['message']

def test_invalid_probability(capsys):
    """Test out-of-range probabilities"""
    code, _ = run_main(capsys, 'rc', 'exact', '--p', '3/2', '--q', '2')
    assert code == config.EXIT_VALIDATION

def test_budget_exceeded(capsys):
    """Test enumeration budget maps to exit 3"""
    code, out = run_main(capsys, 'saw', 'count', '--nmax', '10', '--budget', '50')
    assert code == config.EXIT_BUDGET
    assert json.loads(out)['error']['type'] == 'BudgetExceededError'

def test_invariant_violation(capsys, monkeypatch):
    """Test violated invariants map to exit 4"""
    def broken(params, spec):
        raise InvariantError("duality broken")

    monkeypatch.setitem(cli.COMMANDS, ('saw', 'fisher'), broken)
    code, out = run_main(capsys, 'saw', 'fisher')
    assert code == config.EXIT_INVARIANT
    assert json.loads(out)['error']['message'] == "duality broken"

def test_unexpected_failure(capsys, monkeypatch):
    """Test unexpected exceptions also exit 4"""
    def crash(params, spec):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, ('saw', 'fisher'), crash)
    code, out = run_main(capsys, 'saw', 'fisher')
    assert code == config.EXIT_INVARIANT
    assert json.loads(out)['error']['type'] == 'RuntimeError'

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
