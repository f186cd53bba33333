"""Finite measure-preserving systems and their excursion identities.

A system is a finite point set carrying nonnegative weights and a
self-map.  Everything observable about hitting times, occupation counts
and excursion (cycle) measures on such a system is exactly computable,
so identities that hold only almost everywhere in general become finite
checks here: each one is exposed as a residual that must vanish.

Weights are either float64 or ``fractions.Fraction`` objects; in the
rational case every residual is computed exactly and equality means
equality, not closeness.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import (
    InternalInconsistencyError,
    InvariantError,
    PreconditionError,
    UnsupportedOperationError,
)

FORWARD = "forward"
BACKWARD = "backward"
RESTRICTION = "restriction"

_DIRECTIONS = (FORWARD, BACKWARD)
_KINDS = (FORWARD, BACKWARD, RESTRICTION)

# mass defect tolerated before probability statements (Kac, pre-capacity)
# refuse to normalise silently
_MASS_TOL = 1e-9


def event_mask(size, members):
    """Normalise a point selection to a boolean mask of length ``size``.

    ``members`` may be a boolean mask, an iterable of point indices, or
    None for the empty set.
    """
    mask = np.zeros(size, dtype=bool)
    if members is None:
        return mask
    if isinstance(members, (set, frozenset)):
        members = sorted(members)
    members = np.asarray(members)
    if members.dtype == bool:
        if members.shape != (size,):
            raise InvariantError("boolean mask has wrong length", field="members")
        return members.copy()
    if members.size == 0:
        return mask
    idx = members.astype(np.int64, casting="unsafe")
    if not np.array_equal(idx, members):
        raise InvariantError("point indices must be integers", field="members")
    if idx.min() < 0 or idx.max() >= size:
        raise InvariantError("point index out of range", field="members")
    mask[idx] = True
    return mask


def _indices(mask):
    return tuple(int(i) for i in np.flatnonzero(mask))


@dataclass(eq=False)
class FiniteSystem:
    """A weighted finite point set with a self-map.

    Parameters
    ----------
    mapping : array of int
        mapping[i] is the index the i-th point is sent to.
    weights : array of float or Fraction
        Nonnegative mass of each point.  An object array of Fractions
        switches every computation on this system to exact arithmetic.
    invertible : bool
        Declares the map a permutation; backward-time operations demand
        it.  The declaration is checked.
    points : list, optional
        Point labels, defaults to 0..m-1.  Labels are carried through
        restriction and reporting but never interpreted.
    """

    mapping: np.ndarray
    weights: np.ndarray
    invertible: bool = True
    points: list = None

    def __post_init__(self):
        mapping = np.asarray(self.mapping, dtype=np.int64)
        if mapping.ndim != 1 or mapping.size == 0:
            raise InvariantError("mapping must be a nonempty 1-d array",
                                 field="mapping")
        m = mapping.shape[0]
        if mapping.min() < 0 or mapping.max() >= m:
            raise InvariantError("mapping sends a point out of range",
                                 field="mapping")
        self.mapping = mapping

        weights = np.asarray(self.weights)
        if weights.shape != (m,):
            raise InvariantError("weights length does not match mapping",
                                 field="weights")
        if weights.dtype == object:
            weights = np.array(
                [w if isinstance(w, Fraction) else Fraction(w) for w in weights],
                dtype=object,
            )
            if any(w < 0 for w in weights):
                raise InvariantError("weights must be nonnegative", field="weights")
        else:
            weights = weights.astype(np.float64)
            if not np.all(np.isfinite(weights)):
                raise InvariantError("weights must be finite", field="weights")
            if weights.min() < 0:
                raise InvariantError("weights must be nonnegative", field="weights")
        total = weights.sum()
        if not total > 0:
            raise InvariantError("total mass must be positive", field="weights")
        self.weights = weights

        if self.invertible and np.bincount(mapping, minlength=m).max() > 1:
            raise InvariantError(
                "system declared invertible but the map is not a permutation",
                field="invertible",
            )
        if self.points is None:
            self.points = list(range(m))
        elif len(self.points) != m:
            raise InvariantError("points length does not match mapping",
                                 field="points")

    @classmethod
    def from_rational(cls, mapping, numerators, denominators, invertible=True,
                      points=None):
        """Build a system with exact Fraction weights."""
        numerators = list(numerators)
        denominators = list(denominators)
        if len(numerators) != len(denominators):
            raise InvariantError("numerators and denominators differ in length",
                                 field="weights")
        weights = np.array(
            [Fraction(int(n), int(d)) for n, d in zip(numerators, denominators)],
            dtype=object,
        )
        return cls(mapping, weights, invertible=invertible, points=points)

    @property
    def size(self):
        return self.mapping.shape[0]

    @property
    def exact(self):
        """True when weights are Fractions and residuals are exact."""
        return self.weights.dtype == object

    @property
    def total_mass(self):
        return self.weights.sum()

    @property
    def inverse_mapping(self):
        if not self.invertible:
            raise UnsupportedOperationError(
                "backward iteration needs an invertible system")
        inv = getattr(self, "_inverse", None)
        if inv is None:
            inv = np.empty_like(self.mapping)
            inv[self.mapping] = np.arange(self.size)
            self._inverse = inv
        return inv

    def mask(self, members):
        return event_mask(self.size, members)

    def normalized(self):
        """The same system with total mass scaled to one (exactly, in
        rational mode)."""
        total = self.total_mass
        if self.exact:
            if total == 1:
                return self
            weights = np.array([w / total for w in self.weights], dtype=object)
        else:
            if total == 1.0:
                return self
            weights = self.weights / total
        return FiniteSystem(self.mapping, weights, invertible=self.invertible,
                            points=list(self.points))

    def mass(self, members):
        """Total weight of a point selection."""
        mask = self.mask(members)
        if self.exact:
            return sum((w for w in self.weights[mask]), Fraction(0))
        return float(self.weights[mask].sum())


class PreservationReport(NamedTuple):
    preserving: bool
    max_violation: object  # float, or Fraction in rational mode


def check_preserving(system, tol=1e-12):
    """Compare the mass of every preimage point with the point itself.

    Returns the largest single-point violation of measure preservation;
    ``preserving`` is True when it does not exceed ``tol`` (exceed zero,
    in rational mode).
    """
    m = system.size
    if system.exact:
        pushed = [Fraction(0)] * m
        for i in range(m):
            pushed[system.mapping[i]] += system.weights[i]
        worst = max(abs(pushed[i] - system.weights[i]) for i in range(m))
        return PreservationReport(worst == 0, worst)
    pushed = np.bincount(system.mapping, weights=system.weights, minlength=m)
    worst = float(np.abs(pushed - system.weights).max())
    return PreservationReport(worst <= tol, worst)


@dataclass
class HittingProfile:
    """First entry times into a set along forward or backward orbits.

    times[i] is the least n >= 1 with the n-th iterate of point i in the
    set, or -1 when the orbit never enters it; entry[i] is the point
    first entered (i itself when times[i] = -1).
    """

    direction: str
    times: np.ndarray
    entry: np.ndarray
    finite: np.ndarray = field(init=False)

    def __post_init__(self):
        self.finite = self.times > 0

    @property
    def times_or_inf(self):
        out = self.times.astype(np.float64)
        out[~self.finite] = np.inf
        return out


def _step_map(system, direction):
    if direction == FORWARD:
        return system.mapping
    if direction == BACKWARD:
        return system.inverse_mapping
    raise PreconditionError("direction must be forward or backward",
                            field="direction")


def hitting_profile(system, members, direction=FORWARD):
    """First entry times of every point into ``members``.

    The count starts at one step, so a point inside the set reports its
    return time, not zero.
    """
    mask = system.mask(members)
    step = _step_map(system, direction)
    times, entry = _kernels.hitting_times(step, mask)
    return HittingProfile(direction, times, entry)


def occupation_count(system, a_members, b_members, start, direction=FORWARD):
    """Number of visits to A strictly before the orbit of ``start`` first
    enters B (time zero included, the entry step excluded).

    Returns ``math.inf`` when the orbit never enters B yet keeps visiting
    A; the walk detects its own loop, so the call always terminates.
    """
    a_mask = system.mask(a_members)
    b_mask = system.mask(b_members)
    step = _step_map(system, direction)
    if not 0 <= start < system.size:
        raise PreconditionError("start point out of range", field="start")
    first_seen = {}
    x = int(start)
    n = 0
    count = 0
    while True:
        if n >= 1 and b_mask[x]:
            return count
        if x in first_seen:
            loop_start = first_seen[x]
            loop = [p for p, t in first_seen.items() if t >= loop_start]
            if any(a_mask[p] for p in loop):
                return math.inf
            return count
        first_seen[x] = n
        if a_mask[x]:
            count += 1
        x = int(step[x])
        n += 1


@dataclass
class CycleMeasure:
    """A measure produced by spreading set mass along excursions.

    kind "forward" spreads each point of the base set over its forward
    orbit until the first return; "backward" does the same along inverse
    orbits; "restriction" keeps the original weights on the points whose
    forward orbit eventually enters the base set.
    """

    kind: str
    base: tuple
    values: np.ndarray

    @property
    def exact(self):
        return self.values.dtype == object

    def mass(self, members):
        mask = event_mask(self.values.shape[0], members)
        if self.exact:
            return sum((v for v in self.values[mask]), Fraction(0))
        return float(self.values[mask].sum())

    @property
    def total(self):
        return self.mass(np.ones(self.values.shape[0], dtype=bool))


def _excursion_values(system, b_mask, direction):
    """Excursion mass vector; exact loop for Fraction weights, kernel
    otherwise.  Positive-weight points of the base set must return."""
    step = _step_map(system, direction)
    if system.exact:
        m = system.size
        values = np.array([Fraction(0)] * m, dtype=object)
        for b in np.flatnonzero(b_mask):
            w = system.weights[b]
            if w == 0:
                continue
            x = int(b)
            for _ in range(m + 1):
                values[x] += w
                x = int(step[x])
                if b_mask[x]:
                    break
            else:
                raise InternalInconsistencyError(
                    "a positive-weight point of the base set never returns; "
                    "the system cannot be measure-preserving")
        return values
    start = np.flatnonzero(b_mask & (system.weights > 0)).astype(np.int64)
    values, status = _kernels.excursion_mass(step, b_mask, start,
                                             system.weights[start])
    if status != 0:
        raise InternalInconsistencyError(
            "a positive-weight point of the base set never returns; "
            "the system cannot be measure-preserving")
    return values


def cycle_measure(system, members, kind=FORWARD):
    """Excursion measure over the base set ``members``.

    kind "forward" needs nothing extra, "backward" needs invertibility,
    and "restriction" restricts the weights to points whose forward
    orbit enters the base set.
    """
    if kind not in _KINDS:
        raise PreconditionError("unknown cycle measure kind %r" % (kind,),
                                field="kind")
    b_mask = system.mask(members)
    if kind == RESTRICTION:
        finite = hitting_profile(system, b_mask, FORWARD).finite
        if system.exact:
            values = np.array(
                [w if f else Fraction(0) for w, f in zip(system.weights, finite)],
                dtype=object,
            )
        else:
            values = np.where(finite, system.weights, 0.0)
        return CycleMeasure(kind, _indices(b_mask), values)
    values = _excursion_values(system, b_mask, kind)
    return CycleMeasure(kind, _indices(b_mask), values)


class ResidualPair(NamedTuple):
    forward: object
    backward: object


def excursion_identity_residual(system, a_members, b_members):
    """Check that the excursion measure of A over base set B has exactly
    the mass of A carried by points whose opposite-direction orbit
    enters B.

    Returns the forward and backward residuals; exact zeros in rational
    mode, tiny floats otherwise.  Needs an invertible system.
    """
    a_mask = system.mask(a_members)
    b_mask = system.mask(b_members)
    fwd = cycle_measure(system, b_mask, FORWARD).mass(a_mask)
    bwd = cycle_measure(system, b_mask, BACKWARD).mass(a_mask)
    back_fin = hitting_profile(system, b_mask, BACKWARD).finite
    fwd_fin = hitting_profile(system, b_mask, FORWARD).finite
    lhs_f = system.mass(a_mask & back_fin)
    lhs_b = system.mass(a_mask & fwd_fin)
    return ResidualPair(abs(fwd - lhs_f), abs(bwd - lhs_b))


def entrance_invariance_residual(system, a_members, b_members):
    """Check that stopping the map at the first entry into B preserves
    the measure on B: mass of {omega in B : entry point in A} must equal
    the mass of A inside B.  Forward and backward versions."""
    a_mask = system.mask(a_members)
    b_mask = system.mask(b_members)
    out = []
    for direction in _DIRECTIONS:
        prof = hitting_profile(system, b_mask, direction)
        sel = b_mask & _positive_mask(system.weights)
        if not np.all(prof.finite[sel]):
            raise InternalInconsistencyError(
                "a positive-weight point of the base set never returns; "
                "the system cannot be measure-preserving")
        if system.exact:
            lhs = sum((system.weights[i] for i in np.flatnonzero(sel)
                       if a_mask[prof.entry[i]]), Fraction(0))
        else:
            lhs = float(system.weights[sel][a_mask[prof.entry[sel]]].sum())
        rhs = system.mass(a_mask & b_mask)
        out.append(abs(lhs - rhs))
    return ResidualPair(*out)


def _positive_mask(weights):
    if weights.dtype == object:
        return np.array([w > 0 for w in weights], dtype=bool)
    return weights > 0


def _pushforward(system, values):
    m = values.shape[0]
    if values.dtype == object:
        out = np.array([Fraction(0)] * m, dtype=object)
        for i in range(m):
            out[system.mapping[i]] += values[i]
        return out
    return np.bincount(system.mapping, weights=values, minlength=m)


def shift_invariance_residual(system, b_members, a_members, kind=FORWARD):
    """Invariance defect of an excursion measure under the map.

    Excursion kinds check m(preimage of A) = m(A); the restriction kind
    checks it on image sets, nu(map(A)) = nu(A), which is the form that
    actually holds for it.  Invertible systems only: on a general
    endomorphism the restriction measure is not image-invariant (see
    ``image_invariance_residual`` for quantifying that), so the check
    refuses rather than mislead."""
    if not system.invertible:
        raise UnsupportedOperationError(
            "excursion measures of a non-invertible map need not be "
            "shift-invariant; this check requires a permutation")
    a_mask = system.mask(a_members)
    cm = cycle_measure(system, b_members, kind)
    if kind == RESTRICTION:
        image = np.zeros(system.size, dtype=bool)
        image[system.mapping[a_mask]] = True
        return abs(cm.mass(image) - cm.mass(a_mask))
    pushed = _pushforward(system, cm.values)
    if system.exact:
        lhs = sum((pushed[i] for i in np.flatnonzero(a_mask)), Fraction(0))
    else:
        lhs = float(pushed[a_mask].sum())
    return abs(lhs - cm.mass(a_mask))


def image_invariance_residual(system, b_members, a_members, kind=RESTRICTION):
    """Residual of m(image of A) = m(A) for the excursion measure m of
    the given kind over base set B.

    On a permutation this coincides with the preimage form.  On a
    general endomorphism it can genuinely fail even though the preimage
    form holds: restricting the weights to the hitting set commutes
    with taking preimages but not with taking images.  This function
    exists to quantify that failure, so a nonzero value here is a fact
    about the map, not a bug.
    """
    a_mask = system.mask(a_members)
    cm = cycle_measure(system, b_members, kind)
    image = np.zeros(system.size, dtype=bool)
    image[system.mapping[a_mask]] = True
    return abs(cm.mass(image) - cm.mass(a_mask))


class KacReport(NamedTuple):
    mass: object
    expected_return: object
    conditional_hit: object
    product_residual: object
    integral_residual_forward: object
    integral_residual_backward: object


def _require_probability(system):
    total = system.total_mass
    if system.exact:
        if total != 1:
            raise PreconditionError(
                "this check is a probability statement; normalise the "
                "system first (total mass is %s)" % total)
        return
    if abs(float(total) - 1.0) > _MASS_TOL:
        raise PreconditionError(
            "this check is a probability statement; normalise the system "
            "first (total mass is %r)" % float(total))


def kac_check(system, members):
    """Return-time identity on a positive-mass base set B of a
    probability system: the return time integrated over B equals the
    mass of the backward hitting set, and conditionally
    E(return | B) * P(B | backward orbit hits B) = 1.
    """
    if not system.invertible:
        raise UnsupportedOperationError(
            "the return-time identity pairs forward returns with backward "
            "hitting; it requires a permutation")
    _require_probability(system)
    b_mask = system.mask(members)
    mass_b = system.mass(b_mask)
    if not mass_b > 0:
        raise PreconditionError("base set has zero mass", field="members")
    fwd = hitting_profile(system, b_mask, FORWARD)
    bwd = hitting_profile(system, b_mask, BACKWARD)
    pos = _positive_mask(system.weights)
    for prof in (fwd, bwd):
        if not np.all(prof.finite[b_mask & pos]):
            raise InternalInconsistencyError(
                "a positive-weight point of the base set never returns; "
                "the system cannot be measure-preserving")
    zero = Fraction(0) if system.exact else 0.0
    int_fwd = zero
    int_bwd = zero
    for i in np.flatnonzero(b_mask & pos):
        int_fwd = int_fwd + system.weights[i] * int(fwd.times[i])
        int_bwd = int_bwd + system.weights[i] * int(bwd.times[i])
    hits_bwd = system.mass(bwd.finite)
    hits_fwd = system.mass(fwd.finite)
    expected_return = int_fwd / mass_b
    conditional_hit = system.mass(b_mask & bwd.finite) / hits_bwd
    return KacReport(
        mass=mass_b,
        expected_return=expected_return,
        conditional_hit=conditional_hit,
        product_residual=abs(expected_return * conditional_hit - 1),
        integral_residual_forward=abs(int_fwd - hits_bwd),
        integral_residual_backward=abs(int_bwd - hits_fwd),
    )


class PositivityReport(NamedTuple):
    set_mass: object
    forward_hit_mass: object
    backward_hit_mass: object
    equivalent: bool
    bound_residual: object


def positivity_equivalence(system, members):
    """The base set, its forward hitting set and its backward hitting set
    are positive together or null together, and the set mass never
    exceeds either hitting mass.  Reports the three masses, whether the
    positivity flags agree, and the bound violation (zero when fine)."""
    if not system.invertible:
        raise UnsupportedOperationError(
            "positivity equivalence compares both orbit directions; it "
            "requires a permutation")
    b_mask = system.mask(members)
    mass_b = system.mass(b_mask)
    fwd_mass = system.mass(hitting_profile(system, b_mask, FORWARD).finite)
    bwd_mass = system.mass(hitting_profile(system, b_mask, BACKWARD).finite)
    flags = (mass_b > 0, fwd_mass > 0, bwd_mass > 0)
    zero = Fraction(0) if system.exact else 0.0
    bound = max(zero, mass_b - min(fwd_mass, bwd_mass))
    return PositivityReport(mass_b, fwd_mass, bwd_mass,
                            flags[0] == flags[1] == flags[2], bound)


def poincare_residual(system, members):
    """Recurrence defect of the base set: mass of B minus mass of the
    points of B whose orbit comes back.  Forward works for any map;
    backward needs invertibility and is None otherwise."""
    b_mask = system.mask(members)
    fwd = hitting_profile(system, b_mask, FORWARD)
    forward = abs(system.mass(b_mask) - system.mass(b_mask & fwd.finite))
    backward = None
    if system.invertible:
        bwd = hitting_profile(system, b_mask, BACKWARD)
        backward = abs(system.mass(b_mask) - system.mass(b_mask & bwd.finite))
    return ResidualPair(forward, backward)


def precapacity_residual(system, a_members, b_members):
    """The forward excursion measure of A over B must weigh exactly the
    points of A whose strict backward orbit meets B.  The right side is
    enumerated directly from inverse iterates, not through hitting
    times, so the two sides are independent computations."""
    if not system.invertible:
        raise UnsupportedOperationError(
            "the backward-orbit identity requires a permutation")
    _require_probability(system)
    a_mask = system.mask(a_members)
    b_mask = system.mask(b_members)
    lhs = cycle_measure(system, b_mask, FORWARD).mass(a_mask)
    reach = _kernels.backward_hits(system.inverse_mapping, b_mask)
    rhs = system.mass(a_mask & reach)
    return abs(lhs - rhs)


def induced_map(system, members):
    """First-return system on a base set: each point of B is sent to the
    point where its forward orbit re-enters B, keeping its weight.

    Every point of B must return (always true on a permutation); the
    result declares itself invertible exactly when the return map
    permutes B.
    """
    b_mask = system.mask(members)
    b_idx = np.flatnonzero(b_mask)
    if b_idx.size == 0:
        raise PreconditionError("base set is empty", field="members")
    prof = hitting_profile(system, b_mask, FORWARD)
    if not np.all(prof.finite[b_idx]):
        missing = [system.points[i] for i in b_idx if not prof.finite[i]]
        raise PreconditionError(
            "first-return map undefined, these points never return: %r"
            % (missing,))
    reindex = -np.ones(system.size, dtype=np.int64)
    reindex[b_idx] = np.arange(b_idx.size)
    sub_map = reindex[prof.entry[b_idx]]
    bijective = np.bincount(sub_map, minlength=b_idx.size).max() == 1
    return FiniteSystem(
        sub_map,
        system.weights[b_idx],
        invertible=bool(bijective),
        points=[system.points[i] for i in b_idx],
    )


# ---------------------------------------------------------------------------
# whole-lattice identity suite


@lru_cache(maxsize=16)
def _subset_matrix(m):
    # row k of the matrix is the indicator of subset k, bit i <-> point i
    bits = (np.arange(2 ** m)[:, None] >> np.arange(m)) & 1
    return bits.astype(np.float64)


@dataclass
class IdentitySuiteResult:
    exhaustive: bool
    exact: bool
    n_base_sets: int
    n_pairs: int
    residuals: dict
    worst: dict
    positivity_violations: int


def _suite_masks(m, exhaustive_limit, sample_pairs, seed):
    """Base sets and per-base-set A collections to examine."""
    if m <= exhaustive_limit:
        full = _subset_matrix(m).astype(bool)
        return True, [(full[k], full) for k in range(2 ** m)]
    rng = np.random.default_rng(seed)
    groups = {}
    for _ in range(sample_pairs):
        b = rng.random(m) < rng.uniform(0.1, 0.9)
        a = rng.random(m) < rng.uniform(0.1, 0.9)
        groups.setdefault(b.tobytes(), [b, []])[1].append(a)
    out = []
    for b, a_list in groups.values():
        out.append((b, np.array(a_list)))
    return False, out


def _max_subset_sum(diff_cols, a_masks, exact):
    """Largest |sum over A| per column, with the witnessing A row."""
    if exact:
        best = [Fraction(0)] * len(diff_cols)
        arg = [0] * len(diff_cols)
        for r, row in enumerate(a_masks):
            idx = np.flatnonzero(row)
            for c, col in enumerate(diff_cols):
                s = abs(sum((col[i] for i in idx), Fraction(0)))
                if s > best[c]:
                    best[c] = s
                    arg[c] = r
        return best, arg
    stacked = np.column_stack(diff_cols)
    vals = np.abs(a_masks.astype(np.float64) @ stacked)
    return vals.max(axis=0), vals.argmax(axis=0)


def identity_suite(system, exhaustive_limit=8, sample_pairs=50, seed=0):
    """Evaluate every excursion identity over the subset lattice.

    Systems with at most ``exhaustive_limit`` points are checked over all
    pairs of subsets (A, B); larger systems over ``sample_pairs`` seeded
    random pairs.  The system is normalised internally so probability
    statements apply.  Residuals are reported as maxima over everything
    examined, together with the worst witnessing pair.

    Non-invertible systems get the forward recurrence check only; the
    other identities need both orbit directions.
    """
    sysn = system.normalized()
    m = sysn.size
    exact = sysn.exact
    zero = Fraction(0) if exact else 0.0
    w = sysn.weights
    pos = _positive_mask(w)
    exhaustive, plan = _suite_masks(m, exhaustive_limit, sample_pairs, seed)

    vector_names = (
        "excursion_identity_forward", "excursion_identity_backward",
        "entrance_invariance_forward", "entrance_invariance_backward",
        "shift_invariance_forward", "shift_invariance_backward",
        "shift_invariance_restriction", "precapacity",
    )
    scalar_names = ("poincare_forward", "poincare_backward", "kac_product",
                    "kac_integral_forward", "kac_integral_backward",
                    "positivity_bound")
    if not sysn.invertible:
        vector_names = ("restriction_preimage_invariance",)
        scalar_names = ("poincare_forward",)

    residuals = {name: zero for name in vector_names + scalar_names}
    worst = {name: (None, None) for name in residuals}
    violations = 0
    n_pairs = 0

    def bump(name, value, b_mask, a_mask=None):
        if value > residuals[name]:
            residuals[name] = value
            worst[name] = (_indices(b_mask),
                           None if a_mask is None else _indices(a_mask))

    for b_mask, a_masks in plan:
        b_sel = b_mask & pos
        fwd = hitting_profile(sysn, b_mask, FORWARD)
        mass_b = sysn.mass(b_mask)
        bump("poincare_forward", abs(mass_b - sysn.mass(b_mask & fwd.finite)),
             b_mask)
        if not sysn.invertible:
            # restriction to the hitting set is still preimage-invariant
            # for an endomorphism; image invariance would be false
            if exact:
                nu = np.array([wi if f else Fraction(0)
                               for wi, f in zip(w, fwd.finite)], dtype=object)
            else:
                nu = np.where(fwd.finite, w, 0.0)
            cols = [_pushforward(sysn, nu) - nu]
            maxima, argrows = _max_subset_sum(cols, a_masks, exact)
            bump("restriction_preimage_invariance", maxima[0], b_mask,
                 np.asarray(a_masks[argrows[0]]))
            n_pairs += len(a_masks)
            continue
        bwd = hitting_profile(sysn, b_mask, BACKWARD)
        bump("poincare_backward", abs(mass_b - sysn.mass(b_mask & bwd.finite)),
             b_mask)

        mu_f = _excursion_values(sysn, b_mask, FORWARD)
        mu_b = _excursion_values(sysn, b_mask, BACKWARD)
        if exact:
            nu = np.array([wi if f else Fraction(0)
                           for wi, f in zip(w, fwd.finite)], dtype=object)
            wb = np.array([wi if b else Fraction(0)
                           for wi, b in zip(w, b_mask)], dtype=object)
            ent_f = np.array([Fraction(0)] * m, dtype=object)
            ent_b = np.array([Fraction(0)] * m, dtype=object)
            for i in np.flatnonzero(b_sel):
                ent_f[fwd.entry[i]] += w[i]
                ent_b[bwd.entry[i]] += w[i]
            hit_f = np.array([wi if f else Fraction(0)
                              for wi, f in zip(w, fwd.finite)], dtype=object)
            hit_b = np.array([wi if f else Fraction(0)
                              for wi, f in zip(w, bwd.finite)], dtype=object)
        else:
            nu = np.where(fwd.finite, w, 0.0)
            wb = np.where(b_mask, w, 0.0)
            ent_f = np.bincount(fwd.entry[b_sel], weights=w[b_sel], minlength=m)
            ent_b = np.bincount(bwd.entry[b_sel], weights=w[b_sel], minlength=m)
            hit_f = np.where(fwd.finite, w, 0.0)
            hit_b = np.where(bwd.finite, w, 0.0)
        reach = _kernels.backward_hits(sysn.inverse_mapping, b_mask)
        if exact:
            reach_w = np.array([wi if r else Fraction(0)
                                for wi, r in zip(w, reach)], dtype=object)
        else:
            reach_w = np.where(reach, w, 0.0)

        cols = [
            mu_f - hit_b,                      # excursion_identity_forward
            mu_b - hit_f,                      # excursion_identity_backward
            ent_f - wb,                        # entrance_invariance_forward
            ent_b - wb,                        # entrance_invariance_backward
            _pushforward(sysn, mu_f) - mu_f,   # shift_invariance_forward
            _pushforward(sysn, mu_b) - mu_b,   # shift_invariance_backward
            _pushforward(sysn, nu) - nu,       # shift_invariance_restriction
            mu_f - reach_w,                    # precapacity
        ]
        maxima, argrows = _max_subset_sum(cols, a_masks, exact)
        for name, value, row in zip(vector_names, maxima, argrows):
            bump(name, value, b_mask, np.asarray(a_masks[row]))
        n_pairs += len(a_masks)

        hits_fwd_mass = sysn.mass(fwd.finite)
        hits_bwd_mass = sysn.mass(bwd.finite)
        flags = (mass_b > 0, hits_fwd_mass > 0, hits_bwd_mass > 0)
        if not flags[0] == flags[1] == flags[2]:
            violations += 1
        bump("positivity_bound",
             max(zero, mass_b - min(hits_fwd_mass, hits_bwd_mass)), b_mask)

        if mass_b > 0:
            int_fwd = zero
            int_bwd = zero
            for i in np.flatnonzero(b_sel):
                int_fwd = int_fwd + w[i] * int(fwd.times[i])
                int_bwd = int_bwd + w[i] * int(bwd.times[i])
            expected = int_fwd / mass_b
            conditional = sysn.mass(b_mask & bwd.finite) / hits_bwd_mass
            bump("kac_product", abs(expected * conditional - 1), b_mask)
            bump("kac_integral_forward", abs(int_fwd - hits_bwd_mass), b_mask)
            bump("kac_integral_backward", abs(int_bwd - hits_fwd_mass), b_mask)

    return IdentitySuiteResult(
        exhaustive=exhaustive,
        exact=exact,
        n_base_sets=len(plan),
        n_pairs=n_pairs,
        residuals=residuals,
        worst=worst,
        positivity_violations=violations,
    )
