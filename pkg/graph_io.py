"""
Latticeworks v1.0 - Graph File Module
======================================
JSON export/import of lattice patches.

Format: {version, family, n_classes, periodic,
         vertices: [{id, axial: [x, y], embed: [[a, b], [a, b]]}],
         edges: [{u, v, class}]}
Vertices are written in lexicographic axial order.
"""

import json
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import config
from lattice_core import LatticePatch, is_connected
from logger import get_logger
from validators import ValidationError

logger = get_logger(__name__)

KNOWN_FAMILIES = set(config.LATTICE_FAMILIES) | {config.DUAL, config.CUSTOM}


def export_patch_json(patch: LatticePatch) -> str:
    """Serialize a patch; output is byte-identical for equal patches"""
    data = {
        'version': config.GRAPH_FILE_VERSION,
        'family': patch.family,
        'n_classes': patch.n_classes,
        'periodic': patch.periodic,
        'vertices': [
            {'id': i, 'axial': list(axial), 'embed': [list(patch.embedding[i][0]), list(patch.embedding[i][1])]}
            for i, axial in enumerate(patch.vertices)
        ],
        'edges': [{'u': u, 'v': v, 'class': c} for u, v, c in patch.edges],
    }
    return json.dumps(data, indent=4, ensure_ascii=False)


def _parse_vertex(item: Dict[str, Any]) -> Tuple[int, Tuple[int, int], Tuple[Tuple[int, int], Tuple[int, int]]]:
    vid = item['id']
    axial = tuple(int(c) for c in item['axial'])
    if len(axial) != 2:
        raise ValidationError(f"Vertex {vid}: axial must have 2 coordinates")
    if 'embed' in item:
        (xa, xb), (ya, yb) = item['embed']
        embed = ((int(xa), int(xb)), (int(ya), int(yb)))
    else:
        embed = ((2 * axial[0], 0), (2 * axial[1], 0))
    return vid, axial, embed


def import_patch_json(text: str) -> LatticePatch:
    """
    Parse a patch from JSON

    Raises:
        ValidationError: Malformed JSON, dangling edge, self-loop,
            duplicate vertex or disconnected graph
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Invalid graph JSON: {e}")

    if not isinstance(data, dict) or 'vertices' not in data or 'edges' not in data:
        raise ValidationError("Graph JSON needs 'vertices' and 'edges'")

    family = data.get('family', config.CUSTOM)
    if family not in KNOWN_FAMILIES:
        raise ValidationError(f"Unknown lattice family in graph file: {family}")

    version = data.get('version', config.GRAPH_FILE_VERSION)
    if version > config.GRAPH_FILE_VERSION:
        logger.warning(f"Graph file version {version} is newer than supported {config.GRAPH_FILE_VERSION}")

    try:
        parsed = [_parse_vertex(item) for item in data['vertices']]
        raw_edges = [(item['u'], item['v'], int(item.get('class', 0))) for item in data['edges']]
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed graph entry: {e}")

    parsed.sort(key=lambda item: item[1])
    ids = [vid for vid, _, _ in parsed]
    if len(set(ids)) != len(ids):
        raise ValidationError("Duplicate vertex ids in graph file")
    axials = [axial for _, axial, _ in parsed]
    if len(set(axials)) != len(axials):
        raise ValidationError("Duplicate axial coordinates in graph file")
    remap = {vid: i for i, vid in enumerate(ids)}

    edges = []
    seen = set()
    for u, v, cls in raw_edges:
        if u not in remap or v not in remap:
            raise ValidationError(f"Edge ({u}, {v}) references an unknown vertex")
        a, b = sorted((remap[u], remap[v]))
        if a == b:
            raise ValidationError(f"Self-loop at vertex {u}")
        if (a, b) in seen:
            raise ValidationError(f"Parallel edge ({u}, {v})")
        seen.add((a, b))
        edges.append((a, b, cls))
    edges.sort()

    n_classes = int(data.get('n_classes', max((c for _, _, c in edges), default=0) + 1))
    patch = LatticePatch(
        family=family,
        vertices=tuple(axials),
        edges=tuple(edges),
        embedding=tuple(embed for _, _, embed in parsed),
        n_classes=n_classes,
        periodic=bool(data.get('periodic', False)),
    )
    if not is_connected(patch):
        raise ValidationError("Graph is disconnected")

    logger.debug(f"Imported {family} graph: {patch.n_vertices} vertices, {patch.n_edges} edges")
    return patch


def save_patch(patch: LatticePatch, path: Union[str, Path]) -> Tuple[bool, str]:
    """
    Write a patch to disk

    Returns:
        (success, error message)
    """
    try:
        Path(path).write_text(export_patch_json(patch), encoding='utf-8')
        logger.info(f"Graph saved: {path}")
        return True, ""
    except OSError as e:
        logger.error(f"Failed to save graph {path}: {e}")
        return False, str(e)


def load_patch(path: Union[str, Path]) -> LatticePatch:
    """
    Read a patch from disk

    Raises:
        ValidationError: Missing file or invalid content
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        logger.error(f"Failed to read graph {path}: {e}")
        raise ValidationError(f"Cannot read graph file {path}: {e}")
    return import_patch_json(text)
