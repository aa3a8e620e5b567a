"""Client-side parameter calculus.

Given a keyspace size and a desired candidate count r, the client sizes
its decoy set as nv = r * 16^l / |DS|.  Decoy-set cardinalities are
products of per-position range widths in [1, 16], i.e. 13-smooth numbers
whose prime factors fit into l slots with per-slot product at most 16.
smooth_search finds the packable 13-smooth value nearest nv in log
space; gen_v then turns a slot packing into a concrete vector around the
target digest.

The search enumerates exponent pairs for (2, 3) against a sorted table
of (5, 7, 11, 13) products and walks merged nearest neighbors outward,
so it is exact: the returned value minimizes |ln(value/nv)| among all
packable 13-smooth numbers, ties broken toward the smaller value.
"""

from __future__ import annotations

import heapq
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from pathlib import Path

import numpy as np

from .predicate import Digest, PredicateVector, cardinality, serialize_vector

_LN2, _LN3, _LN5, _LN7, _LN11, _LN13 = (math.log(p) for p in (2, 3, 5, 7, 11, 13))
_TIE_EPS = 1e-9  # float log-error slack before exact rational comparison
DEFAULT_TOLERANCE = 0.05


class DuplicatePlanError(RuntimeError):
    """A vector was already generated for this target in this plan store."""


@dataclass(frozen=True)
class SmoothFactorization:
    """value = 2^A * 3^B * 5^C * 7^D * 11^E * 13^F."""

    exponents: tuple[int, int, int, int, int, int]
    value: int

    def __post_init__(self) -> None:
        recomputed = prod(p ** e for p, e in zip((2, 3, 5, 7, 11, 13),
                                                 self.exponents))
        if recomputed != self.value:
            raise ValueError("stored value does not match exponents")

    @classmethod
    def from_exponents(cls, exponents) -> "SmoothFactorization":
        exponents = tuple(int(e) for e in exponents)
        value = prod(p ** e for p, e in zip((2, 3, 5, 7, 11, 13), exponents))
        return cls(exponents, value)


@dataclass(frozen=True)
class SlotPacking:
    """Per-position range widths f_i in [1, 16] with prod(f_i) = value."""

    slot_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(not 1 <= f <= 16 for f in self.slot_sizes):
            raise ValueError("slot sizes must be in [1, 16]")

    @property
    def value(self) -> int:
        return prod(self.slot_sizes)


@dataclass(frozen=True)
class PlanParameters:
    keyspace_size: int
    r: Fraction
    digest_length: int
    nv_target: Fraction

    @property
    def nv_float(self) -> float:
        return float(self.nv_target)


@dataclass(frozen=True)
class SmoothSearchResult:
    factorization: SmoothFactorization
    packing: SlotPacking
    log_error: float  # signed ln(value / nv_target)


class WidenToleranceError(ValueError):
    def __init__(self, nv_target: float, tolerance: float,
                 nearest: SmoothSearchResult):
        self.nearest = nearest
        super().__init__(
            f"no packable 13-smooth cardinality within tolerance "
            f"{tolerance:g} of {nv_target:.6g}; nearest is "
            f"{nearest.factorization.value} (log error "
            f"{nearest.log_error:+.4g}) -- widen the tolerance to proceed"
        )


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x)  # floats convert exactly


def _ln_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def plan_nv(keyspace_size: int, r, digest_length: int) -> PlanParameters:
    """nv = r * 16^l / |DS|, kept exact as a rational."""
    if keyspace_size < 1:
        raise ValueError("keyspace_size must be >= 1")
    r = _as_fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    nv = r * Fraction(16 ** digest_length, keyspace_size)
    return PlanParameters(keyspace_size, r, digest_length, nv)


def pack_into_slots(exponents, n_slots: int) -> tuple[int, ...] | None:
    """First-fit-decreasing of the prime factors (largest first) into
    n_slots with per-slot product capped at 16; None if it does not fit."""
    slots = [1] * n_slots
    for p, e in zip((13, 11, 7, 5, 3, 2), reversed(tuple(exponents))):
        for _ in range(e):
            for i in range(n_slots):
                if slots[i] * p <= 16:
                    slots[i] *= p
                    break
            else:
                return None
    return tuple(slots)


def _fast_unpackable(exponents, n_slots: int) -> bool:
    """Cheap necessary-condition check: 13s, 11s, 7s and 5s each need a
    slot of their own, and 3s fit at most one per 5-slot or two per empty
    slot.  False negatives are fine; pack_into_slots is the authority."""
    _, b, c, d, e, f = exponents
    needed = c + d + e + f
    if needed > n_slots:
        return True
    spill3 = b - c
    return spill3 > 0 and needed + (spill3 + 1) // 2 > n_slots


class _SmoothGroups:
    """Cached per-digest-length enumeration tables for the search.

    left:  2^A * 3^B           <= 16^l  (packed A | B << 16)
    right: 5^C 7^D 11^E 13^F   <= 16^l  (packed C | D<<8 | E<<16 | F<<24),
           sorted by log value.
    """

    def __init__(self, digest_length: int):
        cap = digest_length * math.log(16) + 1e-9
        self.cap = cap

        left_logs, left_packed = [], []
        a = 0
        while a * _LN2 <= cap:
            b = 0
            base = a * _LN2
            while base + b * _LN3 <= cap:
                left_logs.append(base + b * _LN3)
                left_packed.append(a | (b << 16))
                b += 1
            a += 1
        self.left_logs = np.asarray(left_logs)
        self.left_packed = np.asarray(left_packed, dtype=np.int64)

        right_logs, right_packed = [], []
        c = 0
        while c * _LN5 <= cap:
            lc = c * _LN5
            d = 0
            while lc + d * _LN7 <= cap:
                ld = lc + d * _LN7
                e = 0
                while ld + e * _LN11 <= cap:
                    le = ld + e * _LN11
                    f = 0
                    while le + f * _LN13 <= cap:
                        right_logs.append(le + f * _LN13)
                        right_packed.append(c | (d << 8) | (e << 16) | (f << 24))
                        f += 1
                    e += 1
                d += 1
            c += 1
        logs = np.asarray(right_logs)
        order = np.argsort(logs, kind="stable")
        self.right_logs = logs[order]
        self.right_packed = np.asarray(right_packed, dtype=np.int64)[order]
        # plain list: the ring walk reads single elements, where numpy
        # scalar indexing would dominate the cost
        self.right_logs_list = self.right_logs.tolist()

    def exponents(self, left_idx: int, right_idx: int
                  ) -> tuple[int, int, int, int, int, int]:
        ab = int(self.left_packed[left_idx])
        cdef = int(self.right_packed[right_idx])
        return (ab & 0xFFFF, ab >> 16, cdef & 0xFF, (cdef >> 8) & 0xFF,
                (cdef >> 16) & 0xFF, cdef >> 24)


_GROUP_CACHE: dict[int, _SmoothGroups] = {}


def _groups_for(digest_length: int) -> _SmoothGroups:
    if digest_length not in _GROUP_CACHE:
        _GROUP_CACHE[digest_length] = _SmoothGroups(digest_length)
    return _GROUP_CACHE[digest_length]


# Near the 16^l ceiling almost no 13-smooth number is packable (every
# below-16 slot product wastes capacity), so a neighbor walk would grind
# through millions of rejects there.  But the packable values in that
# band have a closed form: 16^(l-k) times k slot products f_i, where the
# total capacity deficit sum(ln(16/f_i)) is below the band depth.  That
# is a small, enumerable catalog; the walk handles everything deeper.
_ZONE_DEPTH = 2.0


def _factor_exponents(value: int) -> tuple[int, int, int, int, int, int]:
    exps = []
    for p in (2, 3, 5, 7, 11, 13):
        e = 0
        while value % p == 0:
            value //= p
            e += 1
        exps.append(e)
    assert value == 1
    return tuple(exps)


class _ZoneCatalog:
    """All packable values with ln(16^l / v) < _ZONE_DEPTH, exact."""

    def __init__(self, digest_length: int):
        deltas = [(f, _factor_exponents(f), math.log(16 / f))
                  for f in range(15, 2, -1)
                  if math.log(16 / f) <= _ZONE_DEPTH + 1e-9]
        seen: set[tuple] = set()

        def rec(idx: int, budget: float, k: int, exps):
            if k > 0:
                full = (exps[0] + 4 * (digest_length - k),) + exps[1:]
                if full not in seen and pack_into_slots(
                        full, digest_length) is not None:
                    seen.add(full)
            if k == digest_length:
                return
            for at in range(idx, len(deltas)):
                _, fe, delta = deltas[at]
                if delta <= budget:
                    rec(at, budget - delta, k + 1,
                        tuple(a + b for a, b in zip(exps, fe)))

        seen.add((4 * digest_length, 0, 0, 0, 0, 0))
        rec(0, _ZONE_DEPTH + 1e-9, 0, (0, 0, 0, 0, 0, 0))
        entries = [SmoothFactorization.from_exponents(e) for e in seen]
        pairs = sorted(((math.log(e.value), e) for e in entries),
                       key=lambda p: (p[0], p[1].value))
        self.logs = np.asarray([p[0] for p in pairs])
        self.facts = [p[1] for p in pairs]


_ZONE_CACHE: dict[int, _ZoneCatalog] = {}


def _zone_for(digest_length: int) -> _ZoneCatalog:
    if digest_length not in _ZONE_CACHE:
        _ZONE_CACHE[digest_length] = _ZoneCatalog(digest_length)
    return _ZONE_CACHE[digest_length]


def smooth_search(nv_target, digest_length: int,
                  tolerance: float = DEFAULT_TOLERANCE) -> SmoothSearchResult:
    """Best packable 13-smooth approximation of nv_target.

    Raises WidenToleranceError (carrying the nearest packable candidate)
    if nothing lands within |ln(value/nv_target)| <= tolerance.
    """
    target = _as_fraction(nv_target)
    if target < 1:
        raise ValueError("nv_target must be >= 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    groups = _groups_for(digest_length)
    ln_target = _ln_fraction(target)
    zone_floor = groups.cap - _ZONE_DEPTH

    resid = ln_target - groups.left_logs
    right_logs = groups.right_logs
    # pairs above the zone floor are the catalog's job; excluding them
    # here keeps near-ceiling targets from flooding the walk
    limit = np.searchsorted(right_logs, zone_floor - groups.left_logs + 1e-6,
                            side="right")
    pos = np.minimum(np.searchsorted(right_logs, resid), limit)

    # Per left entry, walk right neighbors outward from the insertion
    # point; the per-entry error sequence is nondecreasing, so a global
    # merge visits all admissible (left, right) pairs in |log error| order.
    lo0 = pos - 1
    hi0 = pos
    n_right = len(right_logs)
    err_lo = np.where(lo0 >= 0,
                      resid - right_logs[np.clip(lo0, 0, n_right - 1)], np.inf)
    err_hi = np.where(hi0 < limit,
                      right_logs[np.clip(hi0, 0, n_right - 1)] - resid, np.inf)
    take_lo = err_lo <= err_hi
    err0 = np.where(take_lo, err_lo, err_hi)
    order = np.argsort(err0, kind="stable")
    err0_sorted = err0[order]

    rlogs = groups.right_logs_list
    resid_list = resid.tolist()
    limit_list = limit.tolist()

    def advance(i: int, lo: int, hi: int):
        # next neighbor for left entry i given ring pointers; None when spent
        r = resid_list[i]
        lim = limit_list[i]
        if lo < 0 and hi >= lim:
            return None
        if hi >= lim or (lo >= 0 and r - rlogs[lo] <= rlogs[hi] - r):
            return r - rlogs[lo], i, lo, lo - 1, hi
        return rlogs[hi] - r, i, hi, lo, hi + 1

    overflow: list[tuple] = []
    first_at = 0
    n_left = len(resid)

    def pop_next():
        nonlocal first_at
        take_first = first_at < n_left and (
            not overflow or err0_sorted[first_at] <= overflow[0][0])
        if take_first:
            i = int(order[first_at])
            first_at += 1
            if take_lo[i]:
                cand = (float(err0[i]), i, int(lo0[i]), int(lo0[i]) - 1,
                        int(hi0[i]))
            else:
                cand = (float(err0[i]), i, int(hi0[i]), int(lo0[i]),
                        int(hi0[i]) + 1)
        elif overflow:
            cand = heapq.heappop(overflow)
        else:
            return None
        if math.isinf(cand[0]):
            return None  # only spent rings remain
        nxt = advance(cand[1], cand[3], cand[4])
        if nxt is not None:
            heapq.heappush(overflow, nxt)
        return cand

    best: tuple[float, SmoothFactorization] | None = None
    ties: list[SmoothFactorization] = []

    # seed best from the near-ceiling catalog when the target can reach it
    if ln_target > zone_floor - 1.0:
        zone = _zone_for(digest_length)
        errs = np.abs(zone.logs - ln_target)
        z_best = float(errs.min())
        for idx in np.flatnonzero(errs <= z_best + _TIE_EPS):
            fact = zone.facts[int(idx)]
            if best is None:
                best = (z_best, fact)
            else:
                ties.append(fact)

    while True:
        cand = pop_next()
        if cand is None:
            break
        err, i, j = cand[0], cand[1], cand[2]
        if best is not None and err > best[0] + _TIE_EPS:
            break
        exps = groups.exponents(i, j)
        if _fast_unpackable(exps, digest_length):
            continue
        slots = pack_into_slots(exps, digest_length)
        if slots is None:
            continue
        fact = SmoothFactorization.from_exponents(exps)
        if best is None or err < best[0] - _TIE_EPS:
            if best is not None:
                ties.append(best[1])
            best = (err, fact)
        else:
            ties.append(fact)

    if best is None:
        raise RuntimeError("smooth search found no packable value")

    fact = best[1]
    if ties:
        def exact_key(f: SmoothFactorization):
            ratio = Fraction(f.value) / target
            dist = ratio if ratio >= 1 else 1 / ratio
            return (dist, f.value)

        for tie_fact in ties:
            if exact_key(tie_fact) < exact_key(fact):
                fact = tie_fact

    slots = pack_into_slots(fact.exponents, digest_length)
    assert slots is not None

    log_error = _ln_fraction(Fraction(fact.value) / target)
    result = SmoothSearchResult(fact, SlotPacking(slots), log_error)
    if abs(log_error) > tolerance + 1e-12:
        raise WidenToleranceError(float(target), tolerance, result)
    return result


def gen_v(target: Digest, packing: SlotPacking,
          rng: random.Random | int | None = None) -> PredicateVector:
    """Place one window of the packed width around each target nibble.

    Slot sizes are shuffled across positions, then each window offset is
    drawn uniformly from the placements that keep the target inside, so
    the vector never deterministically centers on the target.
    """
    if len(packing.slot_sizes) != len(target):
        raise ValueError(
            f"packing has {len(packing.slot_sizes)} slots for digest "
            f"length {len(target)}"
        )
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    widths = list(packing.slot_sizes)
    rng.shuffle(widths)
    bounds = []
    for t, f in zip(target.nibbles, widths):
        lo = rng.randint(max(0, t - f + 1), min(16 - f, t))
        bounds.append((lo, lo + f - 1))
    return PredicateVector(tuple(bounds))


def expected_candidates(v: PredicateVector, keyspace_size: int) -> float:
    """Expected hit count: cardinality(v) * |DS| / 16^l."""
    return float(Fraction(cardinality(v) * keyspace_size, 16 ** len(v)))


def deniability(v: PredicateVector) -> float:
    """Probability that an arbitrary digest lands in the decoy set."""
    return float(Fraction(cardinality(v), 16 ** len(v)))


def guess_probability(keyspace_size: int, num_sorted_out: int) -> float:
    """The server's best conditional guess after sorting out that many
    keyspace members."""
    if not 0 <= num_sorted_out < keyspace_size:
        raise ValueError("num_sorted_out must be in [0, keyspace_size)")
    return 1.0 / (keyspace_size - num_sorted_out)


@dataclass(frozen=True)
class DatasetProjection:
    per_set: tuple[float, ...]
    cumulative: float


def multi_dataset_projection(v: PredicateVector,
                             sizes) -> DatasetProjection:
    """Expected hits per disjoint data set plus the saturating cumulative
    total (never exceeding the decoy-set size)."""
    card = cardinality(v)
    space = 16 ** len(v)
    per_set = tuple(float(Fraction(card * int(n), space)) for n in sizes)
    total = Fraction(card * sum(int(n) for n in sizes), space)
    cumulative = float(min(total, Fraction(card)))
    return DatasetProjection(per_set, cumulative)


# ---------------------------------------------------------------------------
# Plan files


@dataclass
class Plan:
    target_hex: str
    algo_id: str
    keyspace_descriptor: str
    keyspace_size: int
    r: float
    nv_target: float
    tolerance: float
    seed: int
    vector_hex: str
    cardinality: int
    expected_candidates: float
    deniability: float

    def to_text(self) -> str:
        lines = ["# threepc plan"]
        for key, value in (
            ("target", self.target_hex),
            ("algo", self.algo_id),
            ("keyspace", self.keyspace_descriptor),
            ("keyspace_size", self.keyspace_size),
            ("r", repr(self.r)),
            ("nv_target", repr(self.nv_target)),
            ("tolerance", repr(self.tolerance)),
            ("seed", self.seed),
            ("vector", self.vector_hex),
            ("cardinality", self.cardinality),
            ("expected_candidates", repr(self.expected_candidates)),
            ("deniability", repr(self.deniability)),
        ):
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Plan":
        fields: dict[str, str] = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = re.fullmatch(r"(\w+)\s*=\s*(.*)", line)
            if not m:
                raise ValueError(f"plan line {line_no}: expected key = value")
            fields[m.group(1)] = m.group(2)
        try:
            return cls(
                target_hex=fields["target"],
                algo_id=fields["algo"],
                keyspace_descriptor=fields["keyspace"],
                keyspace_size=int(fields["keyspace_size"]),
                r=float(fields["r"]),
                nv_target=float(fields["nv_target"]),
                tolerance=float(fields["tolerance"]),
                seed=int(fields["seed"]),
                vector_hex=fields["vector"],
                cardinality=int(fields["cardinality"]),
                expected_candidates=float(fields["expected_candidates"]),
                deniability=float(fields["deniability"]),
            )
        except KeyError as exc:
            raise ValueError(f"plan is missing field {exc.args[0]!r}") from None


def build_plan(target: Digest, algo_id: str, keyspace_descriptor: str,
               keyspace_size: int, r, tolerance: float = DEFAULT_TOLERANCE,
               seed: int | None = None) -> Plan:
    """Full client-side planning: nv, smooth search, vector generation."""
    if seed is None:
        seed = random.SystemRandom().getrandbits(64)
    params = plan_nv(keyspace_size, r, len(target))
    found = smooth_search(params.nv_target, len(target), tolerance)
    vector = gen_v(target, found.packing, random.Random(seed))
    return Plan(
        target_hex=target.hex,
        algo_id=algo_id,
        keyspace_descriptor=keyspace_descriptor,
        keyspace_size=keyspace_size,
        r=float(_as_fraction(r)),
        nv_target=params.nv_float,
        tolerance=tolerance,
        seed=seed,
        vector_hex=serialize_vector(vector),
        cardinality=found.factorization.value,
        expected_candidates=expected_candidates(vector, keyspace_size),
        deniability=deniability(vector),
    )


class PlanStore:
    """Directory of plan files; refuses a second vector for any target."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path_for(self, target_hex: str) -> Path:
        return self.root / f"{target_hex.lower()}.plan"

    def find(self, target_hex: str) -> Plan | None:
        target_hex = target_hex.lower()
        if not self.root.is_dir():
            return None
        for path in self.root.glob("*.plan"):
            try:
                plan = Plan.from_text(path.read_text())
            except ValueError:
                continue
            if plan.target_hex.lower() == target_hex:
                return plan
        return None

    def save(self, plan: Plan) -> Path:
        if self.find(plan.target_hex) is not None:
            raise DuplicatePlanError(
                f"a vector was already generated for target "
                f"{plan.target_hex}; generating another would narrow the "
                f"decoy set, refusing"
            )
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path_for(plan.target_hex)
        path.write_text(plan.to_text())
        return path

    def load(self, path: str | Path) -> Plan:
        return Plan.from_text(Path(path).read_text())
