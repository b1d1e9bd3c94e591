"""
Latticeworks v1.0 - Command Line Module
========================================
Batch front-end: parse an experiment spec, dispatch it, print or write
the report.

    python cli.py saw count --family hex --nmax 12
    python cli.py perc crossing --family square --p 0.5 --rect 17x16 --samples 100000 --seed 7
    python cli.py rc exact --graph g.json --p 1/2 --q 2

A parameter given as "a:b:step" (inclusive) or "v1,v2,..." is swept:
one report row per value, written as CSV.
"""

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

import config
from graph_io import load_patch
from lattice_core import LatticePatch, MixedLayout, build_lattice_patch, build_region
from logger import LatticeLogger, get_logger
from percolation import (
    ArmSpec, estimate_arm_prob, estimate_crossing_prob,
    estimate_russo_derivative, estimate_russo_finite_difference, homogeneous,
    radius_distribution,
)
from random_cluster import (
    RcParams, annulus_event_estimate, boundary_condition,
    dual_parameter, estimate_crossing_at_sd, exact_distribution, sample_rc,
    self_dual_point, verify_duality_exact,
)
from replica_engine import batch_means_se
from reports import ExperimentReport, render, reports_to_frame, write_report
from saw import (
    CHI, CRITICAL_SIGMA, KAPPA_HEX, bridge_decompose, check_submultiplicativity,
    count_saws, count_saws_oracle, enumerate_saws, estimate_connective_constant,
    fisher_lattice_constant, parafermionic_observable, patch_for_walks,
    reconstruct,
)
from spec_manager import ExperimentSpec, load_spec, save_spec
from star_triangle import (
    EdgeTriple, estimate_universality, exact_step_law, solve_triangle_triple,
    star_triangle_law, verify_coupling,
)
from validators import (
    BudgetExceededError, InvariantError, ValidationError, parse_probability,
    parse_rectangle, validate_family,
)

logger = get_logger(__name__)

# Параметри зі значеннями-списками, які не є діапазонами
NON_SWEEPABLE = {'colours', 'class_probs', 'rect', 'graph', 'out'}
MAX_LISTED_CONFIGS = 10


# === PARAMETER PARSING ===

def _number(value: Any) -> Any:
    """Exact rational for "a/b" or decimal strings, ints stay ints"""
    if isinstance(value, str):
        try:
            parsed = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"Invalid number: {value!r}")
        return int(parsed) if parsed.denominator == 1 else parsed
    return value


def _real(value: Any) -> float:
    return float(_number(value))


def _int(name: str, value: Any) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be an integer, got: {value!r}")


def _probability(value: Any) -> Any:
    return parse_probability(value)


def _require(params: Dict[str, Any], *names: str) -> None:
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ValidationError(f"Missing parameter(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def parse_range(text: str) -> List[str]:
    """
    "a:b:step" (inclusive) or "v1,v2,..." → list of value strings

    Raises:
        ValidationError: Empty or malformed range
    """
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ValidationError(f"Range must be a:b:step, got {text!r}")
        try:
            lo, hi, step = (Fraction(p.strip()) for p in parts)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"Invalid range: {text!r}")
        if step <= 0:
            raise ValidationError(f"Range step must be positive: {text!r}")
        values = []
        current = lo
        while current <= hi:
            values.append(str(current.numerator) if current.denominator == 1 else repr(float(current)))
            current += step
    else:
        values = [v.strip() for v in text.split(',') if v.strip()]
    if not values:
        raise ValidationError(f"Empty range: {text!r}")
    return values


def swept_parameter(spec: ExperimentSpec) -> Optional[Tuple[str, List[str]]]:
    """
    The single range-valued parameter of a spec, if any

    Raises:
        ValidationError: More than one range
    """
    ranged = [
        name for name, value in spec.params.items()
        if name not in NON_SWEEPABLE and isinstance(value, str) and (':' in value or ',' in value)
    ]
    if len(ranged) > 1:
        raise ValidationError(f"Only one parameter may carry a range, got: {', '.join(sorted(ranged))}")
    if not ranged:
        return None
    return ranged[0], parse_range(spec.params[ranged[0]])


# === SAW COMMANDS ===

def _saw_count(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'nmax')
    family = validate_family(params.get('family') or config.HEXAGONAL)
    n_max = _int('nmax', params['nmax'])
    patch = patch_for_walks(family, n_max)
    counts = count_saws(patch, n_max, workers=spec.workers, budget=spec.budget)
    # decimal strings: counts outgrow float precision
    values: Dict[str, Any] = {'counts': [str(c) for c in counts]}
    if params.get('oracle'):
        oracle = count_saws_oracle(patch, n_max)
        if oracle != counts:
            raise InvariantError(f"Walk counters disagree: {counts} vs {oracle}")
        values['oracle_agrees'] = True
    ok, witness = check_submultiplicativity(counts)
    values['submultiplicative'] = ok
    if witness is not None:
        values['violation'] = list(witness)
    if len(counts) >= 3:
        estimate = estimate_connective_constant(counts, family)
        values['ratios'] = list(estimate.ratios)
        values['roots'] = list(estimate.roots)
        values['ratios_within_bounds'] = estimate.ratios_within_bounds
    return ExperimentReport('saw.count', {'family': family, 'nmax': n_max, 'seedless': bool(params.get('seedless'))}, exact=True, values=values)


def _saw_observable(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'h', 'v')
    h, v = _int('h', params['h']), _int('v', params['v'])
    sigma = _real(params['sigma']) if params.get('sigma') is not None else CRITICAL_SIGMA
    x = _real(params['x']) if params.get('x') is not None else CHI
    region = build_region(h, v)
    report = parafermionic_observable(region, sigma, x, spec.budget)
    sums = report.sums
    return ExperimentReport(
        'saw.observable',
        {'h': h, 'v': v, 'sigma': sigma, 'x': x},
        exact=True,
        values={
            'max_residual': report.max_residual,
            'lambda': sums.lam,
            'tau_plus': sums.tau_plus,
            'tau_minus': sums.tau_minus,
            'upsilon': sums.upsilon,
            'identity_value': sums.identity_value,
            'identity_error': sums.identity_error,
            'unsimplified': report.unsimplified,
            'exits': {'bottom': len(region.bottom), 'left': len(region.left),
                      'right': len(region.right), 'top': len(region.top)},
        },
    )


def _saw_bridge(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'n')
    n = _int('n', params['n'])
    patch = patch_for_walks(config.HEXAGONAL, n)
    walks = enumerate_saws(patch, n)
    histogram: Dict[int, int] = {}
    for path in walks:
        decomposition = bridge_decompose(path, patch)
        if reconstruct(decomposition).vertices != path.vertices:
            raise InvariantError(f"Bridge decomposition does not reassemble walk {path.vertices}")
        histogram[decomposition.n_bridges] = histogram.get(decomposition.n_bridges, 0) + 1
    return ExperimentReport(
        'saw.bridge', {'family': config.HEXAGONAL, 'n': n}, exact=True,
        values={'walks': len(walks), 'round_trips': len(walks), 'bridges': dict(sorted(histogram.items()))},
    )


def _saw_fisher(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    kappa_hex = _real(params['kappa_hex']) if params.get('kappa_hex') is not None else KAPPA_HEX
    return ExperimentReport(
        'saw.fisher', {'kappa_hex': kappa_hex}, exact=True,
        values={'kappa_fisher': fisher_lattice_constant(kappa_hex)},
    )


# === PERCOLATION COMMANDS ===

def _window(params: Dict[str, Any]) -> Tuple[LatticePatch, Tuple[float, float, float, float]]:
    """Patch for a WxH rectangle and the rectangle spanned by its vertices"""
    _require(params, 'rect')
    family = validate_family(params.get('family') or config.SQUARE)
    _, _, width, height = parse_rectangle(params['rect'])
    patch = build_lattice_patch(family, width, height)
    pos = patch.float_embedding
    rect = (float(pos[:, 0].min()), float(pos[:, 1].min()), float(pos[:, 0].max()), float(pos[:, 1].max()))
    return patch, tuple(round(c, 9) for c in rect)


def _class_probs(params: Dict[str, Any], patch: LatticePatch) -> Tuple[Any, ...]:
    if params.get('class_probs'):
        return tuple(_probability(p) for p in str(params['class_probs']).split(','))
    _require(params, 'p')
    return homogeneous(patch, _probability(params['p']))


def _perc_crossing(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'samples')
    patch, rect = _window(params)
    return estimate_crossing_prob(
        patch, _class_probs(params, patch), rect, _int('samples', params['samples']),
        seed=spec.seed, orientation=params.get('orientation'), workers=spec.workers,
    )


def _perc_duality(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'n', 'samples')
    n = _int('n', params['n'])
    patch = build_lattice_patch(config.SQUARE, n + 1, n)
    p = _probability(params.get('p') or '1/2')
    return estimate_crossing_prob(
        patch, homogeneous(patch, p), (0, 0, n + 1, n), _int('samples', params['samples']),
        seed=spec.seed, workers=spec.workers, check_duality=True,
    )


def _triple(params: Dict[str, Any]) -> EdgeTriple:
    _require(params, 'p0', 'p1')
    p0, p1 = _probability(params['p0']), _probability(params['p1'])
    if params.get('p2') is None:
        return solve_triangle_triple(p0, p1)
    return EdgeTriple(p0, p1, _probability(params['p2']))


def _perc_star_triangle(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    p = _triple(params)
    off_surface = bool(params.get('off_surface'))
    law = star_triangle_law(p)
    values: Dict[str, Any] = {
        'kappa': law.kappa,
        'triangle_law': law.triangle,
        'star_law': law.star,
        'law_tv': law.tv_distance,
    }
    if off_surface or p.on_surface():
        coupling = verify_coupling(p, allow_off_surface=off_surface)
        values.update({
            'coupling_tv_T': coupling.tv_T,
            'coupling_tv_S': coupling.tv_S,
            'partitions_preserved': coupling.partitions_preserved,
        })
    if params.get('width') is not None and p.on_surface():
        layout = MixedLayout(params.get('word') or 'ST', _int('width', params['width']), True)
        step = exact_step_law(layout, p)
        values.update({'step_tv': step.tv_distance, 'step_influencing': len(step.influencing),
                       'step_produced': len(step.produced)})
    return ExperimentReport(
        'perc.star-triangle', {'p': list(p.as_tuple()), 'off_surface': off_surface},
        exact=p.exact, values=values,
    )


def _perc_universality(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'samples')
    return estimate_universality(
        _triple(params),
        width=_int('width', params.get('width') or 8),
        steps=_int('steps', params.get('steps') or 8),
        samples=_int('samples', params['samples']),
        seed=spec.seed, workers=spec.workers,
    )


def _perc_arms(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'colours', 'inner', 'outer', 'samples')
    try:
        colours = tuple(int(c) for c in str(params['colours']).split(','))
    except ValueError:
        raise ValidationError(f"Colours must be a comma list of 0/1, got {params['colours']!r}")
    arms = ArmSpec(colours, _int('inner', params['inner']), _int('outer', params['outer']))
    return estimate_arm_prob(
        arms, _probability(params.get('p') or '1/2'), _int('samples', params['samples']),
        seed=spec.seed, workers=spec.workers,
    )


def _perc_russo(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'p', 'samples')
    patch, rect = _window(params)
    p = _probability(params['p'])
    samples = _int('samples', params['samples'])
    if (params.get('method') or 'pivotal') == 'pivotal':
        return estimate_russo_derivative(patch, p, rect, samples, spec.seed, params.get('orientation'), spec.workers)
    delta = _real(params.get('delta') or '0.01')
    return estimate_russo_finite_difference(patch, p, rect, samples, delta, spec.seed, params.get('orientation'), spec.workers)


def _perc_radius(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'size', 'p', 'samples')
    family = validate_family(params.get('family') or config.SQUARE)
    size = _int('size', params['size'])
    patch = build_lattice_patch(family, size, size)
    return radius_distribution(
        patch, homogeneous(patch, _probability(params['p'])), _int('samples', params['samples']),
        seed=spec.seed, workers=spec.workers,
    )


# === RANDOM-CLUSTER COMMANDS ===

def _rc_patch(params: Dict[str, Any]) -> LatticePatch:
    if params.get('graph'):
        return load_patch(params['graph'])
    family = validate_family(params.get('family') or config.SQUARE)
    return build_lattice_patch(family, _int('width', params.get('width') or 1), _int('height', params.get('height') or 1))


def _rc_params(params: Dict[str, Any]) -> RcParams:
    _require(params, 'p', 'q')
    return RcParams(_probability(params['p']), _number(params['q']))


def _rc_exact(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    patch = _rc_patch(params)
    rc = _rc_params(params)
    bc = boundary_condition(patch, params.get('bc') or 'free')
    dist = exact_distribution(patch, rc, bc, workers=spec.workers)
    values: Dict[str, Any] = {
        'partition_function': dist.partition_function,
        'edge_marginals': dist.edge_marginals(),
        'total_probability': dist.total_probability(),
    }
    if patch.n_edges <= MAX_LISTED_CONFIGS:
        values['probabilities'] = {
            format(m, f'0{patch.n_edges}b')[::-1]: dist.probability(m) for m in range(dist.n_configs)
        }
    return ExperimentReport(
        'rc.exact',
        {'p': rc.p, 'q': rc.q, 'bc': bc.kind, 'edges': patch.n_edges, 'vertices': patch.n_vertices},
        exact=rc.exact, values=values,
    )


def _rc_dual(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    patch = _rc_patch(params)
    rc = _rc_params(params)
    tv = verify_duality_exact(patch, rc.p, rc.q, workers=spec.workers)
    return ExperimentReport(
        'rc.dual', {'p': rc.p, 'q': rc.q, 'edges': patch.n_edges}, exact=True,
        values={'p_dual': dual_parameter(rc.p, rc.q), 'tv_distance': tv},
    )


def _rc_self_dual(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'q')
    q = _number(params['q'])
    p_sd = self_dual_point(q)
    return ExperimentReport(
        'rc.self-dual', {'q': q}, exact=True,
        values={'p_sd': p_sd, 'p_sd_float': float(p_sd), 'dual_of_p_sd': dual_parameter(p_sd, q)},
    )


def _rc_sample(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'sweeps')
    patch = _rc_patch(params)
    rc = _rc_params(params)
    kind = params.get('bc') or ('periodic' if patch.periodic else 'free')
    bc = boundary_condition(patch, kind)
    sweeps = _int('sweeps', params['sweeps'])
    chain = sample_rc(
        patch, rc, bc, sweeps,
        burn_in=_int('burn_in', params.get('burn_in') if params.get('burn_in') is not None else config.DEFAULT_BURN_IN),
        seed=spec.seed,
        thinning=_int('thinning', params.get('thinning') or config.DEFAULT_THINNING),
        random_scan=bool(params.get('random_scan')),
    )
    marginals = chain.edge_marginals()
    open_fraction, open_se = batch_means_se(chain.samples.mean(axis=1))
    return ExperimentReport(
        'rc.sample',
        {'p': rc.p, 'q': rc.q, 'bc': bc.kind, 'edges': patch.n_edges, 'random_scan': chain.random_scan},
        estimate=float(open_fraction), se=float(open_se),
        samples=chain.n_samples, seed=spec.seed,
        values={'edge_marginals': [m for m, _ in marginals], 'edge_se': [s for _, s in marginals]},
    )


def _rc_crossing(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'n', 'q', 'sweeps')
    return estimate_crossing_at_sd(
        _int('n', params['n']), _number(params['q']), _int('sweeps', params['sweeps']),
        seed=spec.seed,
        m=_int('m', params['m']) if params.get('m') is not None else None,
        p=_probability(params['p']) if params.get('p') is not None else None,
        rotated=bool(params.get('rotated')),
        burn_in=_int('burn_in', params.get('burn_in') if params.get('burn_in') is not None else config.DEFAULT_BURN_IN),
        chains=_int('chains', params.get('chains') or 1),
        workers=spec.workers,
    )


def _rc_annulus(params: Dict[str, Any], spec: ExperimentSpec) -> ExperimentReport:
    _require(params, 'k', 'p', 'q', 'sweeps')
    return annulus_event_estimate(
        _int('k', params['k']), _probability(params['p']), _number(params['q']),
        _int('sweeps', params['sweeps']), seed=spec.seed,
        burn_in=_int('burn_in', params.get('burn_in') if params.get('burn_in') is not None else config.DEFAULT_BURN_IN),
    )


COMMANDS: Dict[Tuple[str, str], Callable[[Dict[str, Any], ExperimentSpec], ExperimentReport]] = {
    ('saw', 'count'): _saw_count,
    ('saw', 'observable'): _saw_observable,
    ('saw', 'bridge'): _saw_bridge,
    ('saw', 'fisher'): _saw_fisher,
    ('perc', 'crossing'): _perc_crossing,
    ('perc', 'duality'): _perc_duality,
    ('perc', 'star-triangle'): _perc_star_triangle,
    ('perc', 'universality'): _perc_universality,
    ('perc', 'arms'): _perc_arms,
    ('perc', 'russo'): _perc_russo,
    ('perc', 'radius'): _perc_radius,
    ('rc', 'exact'): _rc_exact,
    ('rc', 'dual'): _rc_dual,
    ('rc', 'self-dual'): _rc_self_dual,
    ('rc', 'sample'): _rc_sample,
    ('rc', 'crossing'): _rc_crossing,
    ('rc', 'annulus'): _rc_annulus,
}


# === RUN / SWEEP ===

def run(spec: ExperimentSpec) -> ExperimentReport:
    """
    Execute one spec; the report echoes the spec

    Raises:
        ValidationError: Unknown command or bad parameters
    """
    handler = COMMANDS.get((spec.group, spec.action))
    if handler is None:
        raise ValidationError(f"Unknown command: {spec.command}")
    logger.info(f"Running {spec.command} (seed={spec.seed})")
    started = time.perf_counter()
    report = handler(spec.params, spec)
    report.wall_time = time.perf_counter() - started
    report.params = dict(report.params)
    report.params['spec'] = spec.to_dict()
    return report


def sweep(spec: ExperimentSpec) -> pd.DataFrame:
    """
    One row per value of the single ranged parameter

    Raises:
        ValidationError: No range, several ranges, or an empty range
    """
    found = swept_parameter(spec)
    if found is None:
        raise ValidationError("Sweep needs one parameter with a range (a:b:step or v1,v2,...)")
    name, values = found
    logger.info(f"Sweeping {name} over {len(values)} values")
    reports = [run(spec.with_params(**{name: value})) for value in values]
    table = reports_to_frame(reports)
    # стовпець параметра завжди перший
    table = table.drop(columns=[name], errors='ignore')
    table.insert(0, name, values)
    return table


def execute(spec: ExperimentSpec, include_timing: bool = False) -> str:
    """Run or sweep a spec and render the output text"""
    if swept_parameter(spec) is not None:
        return sweep(spec).to_csv(index=False, float_format='%.12g')
    return render(run(spec), spec.format, include_timing)


# === ARGUMENT PARSER ===

class _Parser(argparse.ArgumentParser):
    """Usage errors become ValidationError (exit 2 with an error object)"""

    def error(self, message: str):
        raise ValidationError(message)


def _options(parser: argparse.ArgumentParser, *names: str, flags: Sequence[str] = ()) -> None:
    for name in names:
        parser.add_argument(f"--{name}", dest=name.replace('-', '_'), default=None)
    for name in flags:
        parser.add_argument(f"--{name}", dest=name.replace('-', '_'), action='store_true')


def _global_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--seed', type=int, default=config.DEFAULT_SEED)
    common.add_argument('--format', choices=config.SUPPORTED_FORMATS, default=config.DEFAULT_FORMAT)
    common.add_argument('--out', default=None)
    common.add_argument('--workers', type=int, default=config.DEFAULT_WORKERS)
    common.add_argument('--budget', type=int, default=config.ENUMERATION_BUDGET)
    common.add_argument('--spec', default=None, help="Run a saved experiment spec")
    common.add_argument('--save-spec', dest='save_spec', default=None)
    common.add_argument('--timing', action='store_true')
    common.add_argument('--log-level', dest='log_level', default=None,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return common


PARSER_LAYOUT = {
    'saw': {
        'count': (('family', 'nmax'), ('oracle', 'seedless')),
        'observable': (('h', 'v', 'sigma', 'x'), ()),
        'bridge': (('n',), ()),
        'fisher': (('kappa-hex',), ()),
    },
    'perc': {
        'crossing': (('family', 'p', 'class-probs', 'rect', 'samples', 'orientation'), ()),
        'duality': (('n', 'p', 'samples'), ()),
        'star-triangle': (('p0', 'p1', 'p2', 'width', 'word'), ('off-surface',)),
        'universality': (('p0', 'p1', 'p2', 'width', 'steps', 'samples'), ()),
        'arms': (('colours', 'inner', 'outer', 'p', 'samples'), ()),
        'russo': (('family', 'p', 'rect', 'samples', 'orientation', 'method', 'delta'), ()),
        'radius': (('family', 'size', 'p', 'samples'), ()),
    },
    'rc': {
        'exact': (('graph', 'family', 'width', 'height', 'p', 'q', 'bc'), ()),
        'dual': (('graph', 'family', 'width', 'height', 'p', 'q'), ()),
        'self-dual': (('q',), ()),
        'sample': (('graph', 'family', 'width', 'height', 'p', 'q', 'bc', 'sweeps', 'burn-in', 'thinning'),
                   ('random-scan',)),
        'crossing': (('n', 'q', 'm', 'p', 'sweeps', 'burn-in', 'chains'), ('rotated',)),
        'annulus': (('k', 'p', 'q', 'sweeps', 'burn-in'), ()),
    },
}


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = _Parser(prog='latticeworks', description=f"{config.APP_NAME} v{config.APP_VERSION}", parents=[common])
    groups = parser.add_subparsers(dest='group')
    for group, actions in PARSER_LAYOUT.items():
        group_parser = groups.add_parser(group)
        sub = group_parser.add_subparsers(dest='action')
        for action, (names, flags) in actions.items():
            leaf = sub.add_parser(action, parents=[common])
            _options(leaf, *names, flags=flags)
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """
    Raises:
        ValidationError: No command given
    """
    if args.spec:
        return load_spec(args.spec)
    if not args.group or not getattr(args, 'action', None):
        raise ValidationError("Command required: saw|perc|rc <action>")
    names, flags = PARSER_LAYOUT[args.group][args.action]
    params: Dict[str, Any] = {}
    for name in names:
        value = getattr(args, name.replace('-', '_'))
        if value is not None:
            params[name.replace('-', '_')] = value
    for name in flags:
        if getattr(args, name.replace('-', '_')):
            params[name.replace('-', '_')] = True
    return ExperimentSpec(
        group=args.group, action=args.action, params=params, seed=args.seed,
        format=args.format, workers=args.workers, budget=args.budget, out=args.out,
    )


# === ENTRY POINT ===

def _fail(error: Exception, code: int) -> int:
    print(render_error(error, code))
    return code


def render_error(error: Exception, code: int) -> str:
    return json.dumps(
        {'error': {'type': type(error).__name__, 'message': str(error), 'exit_code': code}},
        indent=4, ensure_ascii=False,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, run, write; returns the process exit code"""
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            LatticeLogger.set_level(args.log_level)
        spec = spec_from_args(args)
        if args.save_spec:
            ok, err = save_spec(spec, args.save_spec)
            if not ok:
                raise ValidationError(err)
        text = execute(spec, include_timing=args.timing)
        ok, err = write_report(text, spec.out)
        if not ok:
            raise ValidationError(f"Cannot write output: {err}")
        return config.EXIT_OK
    except ValidationError as e:
        logger.error(f"Validation failed: {e}")
        return _fail(e, config.EXIT_VALIDATION)
    except BudgetExceededError as e:
        logger.error(f"Budget exceeded: {e}")
        return _fail(e, config.EXIT_BUDGET)
    except InvariantError as e:
        logger.error(f"Invariant violated: {e}")
        return _fail(e, config.EXIT_INVARIANT)
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        return _fail(e, config.EXIT_INVARIANT)


if __name__ == '__main__':
    sys.exit(main())
