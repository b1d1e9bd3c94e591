"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for graph file import/export
"""

import pytest
import json
import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import config
from graph_io import export_patch_json, import_patch_json, load_patch, save_patch
from lattice_core import build_lattice_patch
from validators import ValidationError

# === FIXTURES ===

@pytest.fixture
def path_graph_json():
    """Three vertices on a line, no embedding given"""
    return json.dumps({
        'vertices': [{'id': 10, 'axial': [0, 0]}, {'id': 11, 'axial': [1, 0]}, {'id': 12, 'axial': [2, 0]}],
        'edges': [{'u': 11, 'v': 10}, {'u': 11, 'v': 12, 'class': 1}],
    })

# === EXPORT / IMPORT TESTS ===

def test_export_is_deterministic():
    """Test equal patches serialize to identical text"""
    a = build_lattice_patch('tri', 2, 2)
    b = build_lattice_patch('triangular', 2, 2)
    assert export_patch_json(a) == export_patch_json(b)

def test_import_restores_patch():
    """Test a hexagonal patch survives export and import"""
    patch = build_lattice_patch('hex', 2, 2)
    restored = import_patch_json(export_patch_json(patch))
    assert restored.family == config.HEXAGONAL
    assert restored.vertices == patch.vertices
    assert restored.edges == patch.edges
    assert restored.embedding == patch.embedding

def test_import_custom_graph(path_graph_json):
    """Test default family, id remapping and default embedding"""
    patch = import_patch_json(path_graph_json)
    assert patch.family == config.CUSTOM
    assert patch.n_vertices == 3
    assert patch.edges == ((0, 1, 0), (1, 2, 1))
    assert patch.n_classes == 2
    assert tuple(patch.float_embedding[2]) == pytest.approx((2.0, 0.0))

# === VALIDATION TESTS ===

def test_import_rejects_bad_json():
    """Test malformed input"""
    with pytest.raises(ValidationError, match="Invalid graph JSON"):
        import_patch_json("{not json")

    with pytest.raises(ValidationError, match="'vertices' and 'edges'"):
        import_patch_json(json.dumps({'vertices': []}))

def test_import_rejects_dangling_edge():
    """Test edge to a missing vertex"""
    text = json.dumps({
        'vertices': [{'id': 0, 'axial': [0, 0]}, {'id': 1, 'axial': [1, 0]}],
        'edges': [{'u': 0, 'v': 7}],
    })
    with pytest.raises(ValidationError, match="unknown vertex"):
        import_patch_json(text)

def test_import_rejects_self_loop():
    """Test self-loop detection"""
    text = json.dumps({
        'vertices': [{'id': 0, 'axial': [0, 0]}, {'id': 1, 'axial': [1, 0]}],
        'edges': [{'u': 0, 'v': 1}, {'u': 1, 'v': 1}],
    })
    with pytest.raises(ValidationError, match="Self-loop"):
        import_patch_json(text)

def test_import_rejects_disconnected():
    """Test disconnected graphs"""
    text = json.dumps({
        'vertices': [{'id': i, 'axial': [i, 0]} for i in range(4)],
        'edges': [{'u': 0, 'v': 1}, {'u': 2, 'v': 3}],
    })
    with pytest.raises(ValidationError, match="disconnected"):
        import_patch_json(text)

def test_import_rejects_unknown_family():
    """Test family check"""
    text = json.dumps({'family': 'kagome', 'vertices': [], 'edges': []})
    with pytest.raises(ValidationError, match="Unknown lattice family"):
        import_patch_json(text)

# === FILE TESTS ===

def test_save_and_load(tmp_path):
    """Test writing a patch to disk and reading it back"""
    patch = build_lattice_patch('square', 3, 2)
    path = tmp_path / "g.json"
    success, error = save_patch(patch, path)
    assert success
    assert error == ""
    assert load_patch(path).edges == patch.edges

def test_save_to_missing_directory(tmp_path):
    """Test save failure is reported, not raised"""
    success, error = save_patch(build_lattice_patch('square', 1, 1), tmp_path / "missing" / "g.json")
    assert not success
    assert error

def test_load_missing_file(tmp_path):
    """Test missing file raises ValidationError"""
    with pytest.raises(ValidationError, match="Cannot read graph file"):
        load_patch(tmp_path / "absent.json")

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
