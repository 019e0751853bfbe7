"""
Moments of X + Y straight from the independence definitions, without transforms.

Each moment μ((X+Y) b_1 (X+Y) ⋯ b_{k-1} (X+Y)) is split over letter patterns.
A pattern cuts the word into maximal single-letter blocks joined by spacer
slots, and the block word is reduced symbolically:

- free: center blocks against E_B one at a time; alternating centered
  words vanish,
- boolean: θ factors over the blocks directly,
- cfree: centering under E_B as in the free case, with θ factoring over
  alternating E_B-centered words.

Symbolic expressions are nested tuples (hashable) and are evaluated to
coefficient tensors once, through a MomentCache private to the call.
"""
import itertools
import logging
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .algebra import InclusionSpec
from .distribution import DistPair, OVDistribution, distribution_from_tensors
from .guardrails import DimensionException, ResourceGuard, SeriesTypeException, enforce
from .ncseries import plug_slots, product_tensor
from .performance import MomentCache
from .types import ConvolutionKind, validate_convolution_kind

logger = logging.getLogger(__name__)

# ---- symbolic B-valued / D-valued expressions ----
#   ('one',)                       unit of B
#   ('slot', i)                    the argument b_i
#   ('prod', (e_1, …, e_n))        ordered product
#   ('sum', ((c_1, e_1), …))       linear combination
#   ('E', letter, poly)            E_B of a single-letter polynomial
#   ('theta', letter, poly)        θ of a single-letter polynomial (D-valued)
#   ('iota', e)                    ι applied to a B-valued expression
# A poly is a tuple of (coefficient, monomial); the monomial (g_0, …, g_p)
# stands for g_0 X g_1 X ⋯ X g_p.

ONE = ("one",)
D_ONE = ("iota", ONE)

Expr = tuple
Poly = Tuple[Tuple[int, Tuple[Expr, ...]], ...]
Block = Tuple[str, Poly, bool]


def prod(*factors: Expr) -> Expr:
    flat = []
    for f in factors:
        if f == ONE or f == D_ONE:
            continue
        if f[0] == "prod":
            flat.extend(f[1])
        else:
            flat.append(f)
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return ("prod", tuple(flat))


def iota(e: Expr) -> Expr:
    return e if e[0] in ("iota", "theta") else ("iota", e)


def expect(letter: str, poly: Poly) -> Expr:
    if len(poly) == 1 and poly[0][0] == 1 and len(poly[0][1]) == 1:
        return poly[0][1][0]
    return ("E", letter, poly)


def theta(letter: str, poly: Poly) -> Expr:
    if len(poly) == 1 and poly[0][0] == 1 and len(poly[0][1]) == 1:
        return iota(poly[0][1][0])
    return ("theta", letter, poly)


def centered_theta(letter: str, poly: Poly) -> Expr:
    """θ(A − E_B(A)) = θ(A) − ι(E_B(A))."""
    return ("sum", ((1, theta(letter, poly)), (-1, iota(expect(letter, poly)))))


def block_poly(start: int, end: int) -> Poly:
    """X b_start X ⋯ b_{end-1} X as a polynomial."""
    return ((1, (ONE,) + tuple(("slot", i) for i in range(start, end)) + (ONE,)),)


def left_mul(g: Expr, poly: Poly) -> Poly:
    return tuple((c, (prod(g, m[0]),) + m[1:]) for c, m in poly)


def right_mul(poly: Poly, g: Expr) -> Poly:
    return tuple((c, m[:-1] + (prod(m[-1], g),)) for c, m in poly)


def poly_mul(P: Poly, Q: Poly) -> Poly:
    return tuple((cp * cq, mp[:-1] + (prod(mp[-1], mq[0]),) + mq[1:]) for cp, mp in P for cq, mq in Q)


def materialize(block: Block) -> Poly:
    """The polynomial a block stands for, centering included."""
    letter, poly, centered = block
    if not centered:
        return poly
    return poly + ((-1, (expect(letter, poly),)),)


def split_pattern(pattern: Tuple[str, ...]) -> Tuple[Tuple[Block, ...], Tuple[Expr, ...]]:
    """Maximal single-letter blocks of a letter pattern and the slots joining them."""
    blocks, spacers = [], []
    start = 1
    for end in range(1, len(pattern) + 1):
        if end == len(pattern) or pattern[end] != pattern[start - 1]:
            blocks.append((pattern[start - 1], block_poly(start, end), False))
            if end < len(pattern):
                spacers.append(("slot", end))
            start = end + 1
    return tuple(blocks), tuple(spacers)


def center(blocks: Tuple[Block, ...], j: int) -> Tuple[Block, ...]:
    letter, poly, _ = blocks[j]
    return blocks[:j] + ((letter, poly, True),) + blocks[j + 1:]


def absorb(blocks: Tuple[Block, ...], spacers: Tuple[Expr, ...], j: int):
    """Replace block j by its E_B value and merge it into its neighbours."""
    letter, poly, _ = blocks[j]
    e = expect(letter, poly)
    r = len(blocks)
    if j == 0:
        l2, p2, c2 = blocks[1]
        return ((l2, left_mul(prod(e, spacers[0]), p2), c2),) + blocks[2:], spacers[1:]
    if j == r - 1:
        l0, p0, c0 = blocks[r - 2]
        return blocks[:r - 2] + ((l0, right_mul(p0, prod(spacers[r - 2], e)), c0),), spacers[:r - 2]
    left, right = blocks[j - 1], blocks[j + 1]
    merged = poly_mul(right_mul(materialize(left), prod(spacers[j - 1], e, spacers[j])), materialize(right))
    return blocks[:j - 1] + ((left[0], merged, False),) + blocks[j + 2:], spacers[:j - 1] + spacers[j + 1:]


class WordExpander:
    """Reduces block words and evaluates the resulting expressions."""

    def __init__(self, inclusion: InclusionSpec, e_dists: Dict[str, OVDistribution],
                 theta_dists: Dict[str, OVDistribution]):
        self.inclusion = inclusion
        self.e_dists = e_dists
        self.theta_dists = theta_dists
        self.q = inclusion.d_B ** 2
        self.values = MomentCache()
        self.words = MomentCache()

    # ----- reductions -----

    def free(self, blocks: Tuple[Block, ...], spacers: Tuple[Expr, ...]) -> tuple:
        """E_B of an alternating block word, as (coefficient, expression) terms."""
        key = ("free", blocks, spacers)
        cached = self.words.get(key)
        if cached is not None:
            return cached
        j = next((i for i, b in enumerate(blocks) if not b[2]), None)
        if j is None:
            result = ()
        elif len(blocks) == 1:
            result = ((1, expect(blocks[0][0], blocks[0][1])),)
        else:
            result = self.free(center(blocks, j), spacers) + self.free(*absorb(blocks, spacers, j))
        self.words.set(key, result)
        return result

    def cfree(self, blocks: Tuple[Block, ...], spacers: Tuple[Expr, ...]) -> tuple:
        """θ of an alternating block word under conditional freeness."""
        key = ("cfree", blocks, spacers)
        cached = self.words.get(key)
        if cached is not None:
            return cached
        j = next((i for i, b in enumerate(blocks) if not b[2]), None)
        if len(blocks) == 1 and j == 0:
            result = ((1, theta(blocks[0][0], blocks[0][1])),)
        elif j is None:
            factors = [centered_theta(blocks[0][0], blocks[0][1])]
            for c, (letter, poly, _) in zip(spacers, blocks[1:]):
                factors += [iota(c), centered_theta(letter, poly)]
            result = ((1, prod(*factors)),)
        else:
            result = self.cfree(center(blocks, j), spacers) + self.cfree(*absorb(blocks, spacers, j))
        self.words.set(key, result)
        return result

    @staticmethod
    def boolean(blocks: Tuple[Block, ...], spacers: Tuple[Expr, ...]) -> tuple:
        """θ(A_1) ι(c_1) θ(A_2) ⋯ θ(A_r)."""
        factors = [theta(blocks[0][0], blocks[0][1])]
        for c, (letter, poly, _) in zip(spacers, blocks[1:]):
            factors += [iota(c), theta(letter, poly)]
        return ((1, prod(*factors)),)

    # ----- evaluation -----

    def value(self, expr: Expr) -> np.ndarray:
        cached = self.values.get(expr)
        if cached is not None:
            return cached
        head = expr[0]
        if head == "one":
            result = np.eye(self.inclusion.d_B, dtype=complex)
        elif head == "slot":
            result = np.eye(self.q, dtype=complex).reshape(self.q, self.inclusion.d_B, self.inclusion.d_B)
        elif head == "iota":
            result = self.inclusion.embed_values(self.value(expr[1]))
        elif head == "prod":
            result = self.value(expr[1][0])
            for f in expr[1][1:]:
                result = product_tensor(result, self.value(f))
        elif head == "sum":
            result = sum(c * self.value(e) for c, e in expr[1])
        elif head == "E":
            result = self._poly_value(self.e_dists[expr[1]], expr[2], embed=False)
        elif head == "theta":
            result = self._poly_value(self.theta_dists[expr[1]], expr[2], embed=True)
        else:
            raise ValueError(f"unknown expression head '{head}'")
        self.values.set(expr, result)
        return result

    def _poly_value(self, dist: OVDistribution, poly: Poly, embed: bool) -> np.ndarray:
        total = None
        for coeff, monomial in poly:
            term = coeff * self._monomial_value(dist, monomial, embed)
            total = term if total is None else total + term
        return total

    def _monomial_value(self, dist: OVDistribution, monomial: Tuple[Expr, ...], embed: bool) -> np.ndarray:
        first, last = self.value(monomial[0]), self.value(monomial[-1])
        if embed:
            first = self.inclusion.embed_values(first)
            last = self.inclusion.embed_values(last)
        p = len(monomial) - 1
        if p == 0:
            return first
        inner = [self.value(g) for g in monomial[1:-1]]
        middle = plug_slots(dist.moment_tensor(p), [g.reshape(g.shape[:-2] + (self.q,)) for g in inner])
        return product_tensor(product_tensor(first, middle), last)

    # ----- moments -----

    def moment(self, kind: str, k: int) -> np.ndarray:
        """m_k of X + Y summed over all 2^k letter patterns."""
        reduce = {"free": self.free, "boolean": self.boolean, "cfree": self.cfree}[kind]
        total = None
        for pattern in itertools.product("XY", repeat=k):
            for coeff, expr in reduce(*split_pattern(pattern)):
                term = coeff * self.value(expr)
                total = term if total is None else total + term
        return total


def _sum_bound(x: OVDistribution, y: OVDistribution) -> Optional[float]:
    if x.bound is None or y.bound is None:
        return None
    return x.bound + y.bound


def _expand(kind: str, inclusion: InclusionSpec, e_dists, theta_dists, order: int,
            formal: bool, bound: Optional[float]) -> OVDistribution:
    expander = WordExpander(inclusion, e_dists, theta_dists)
    tensors = [expander.moment(kind, k) for k in range(1, order + 1)]
    logger.debug(f"Oracle {kind} expansion to order {order}: {expander.values.get_stats()}")
    return distribution_from_tensors(inclusion, tensors, formal=formal, bound=bound)


def _check_compatible(x: OVDistribution, y: OVDistribution) -> None:
    if x.order != y.order:
        raise DimensionException(f"orders differ: {x.order} vs {y.order}")
    if not x.inclusion.same_as(y.inclusion):
        raise DimensionException("distributions have different inclusions")


def _single(kind: str, x: OVDistribution, y: OVDistribution) -> OVDistribution:
    _check_compatible(x, y)
    formal = x.formal or y.formal
    if kind == "free":
        if not x.inclusion.is_identity:
            raise SeriesTypeException("free convolution needs B-valued distributions")
        return _expand("free", x.inclusion, {"X": x, "Y": y}, {}, x.order, formal, _sum_bound(x, y))
    return _expand("boolean", x.inclusion, {}, {"X": x, "Y": y}, x.order, formal, _sum_bound(x, y))


def oracle_convolve(kind: ConvolutionKind, x: Union[OVDistribution, DistPair],
                    y: Union[OVDistribution, DistPair]) -> Union[OVDistribution, DistPair]:
    """Convolve by word expansion over the independence definition.

    Args:
        kind: 'free', 'boolean' or 'cfree'
        x: Distribution or pair
        y: Same shape as x

    Returns:
        Moments of X + Y (pairs for cfree; pairs convolve coordinatewise otherwise)

    Raises:
        ResourceException: If 2^N words exceed the oracle guardrail
        SeriesTypeException: If cfree is asked of single distributions
    """
    validate_convolution_kind(kind)
    if isinstance(x, DistPair) != isinstance(y, DistPair):
        raise SeriesTypeException("cannot convolve a pair with a single distribution")
    enforce(ResourceGuard.check_oracle(x.order))

    if kind == "cfree":
        if not isinstance(x, DistPair):
            raise SeriesTypeException("c-free convolution needs pairs")
        _check_compatible(x.mu, y.mu)
        nu = _single("free", x.nu, y.nu)
        mu = _expand("cfree", x.mu.inclusion, {"X": x.nu, "Y": y.nu}, {"X": x.mu, "Y": y.mu}, x.order,
                     x.mu.formal or y.mu.formal, _sum_bound(x.mu, y.mu))
        return DistPair(mu, nu)
    if isinstance(x, DistPair):
        return DistPair(_single(kind, x.mu, y.mu), _single(kind, x.nu, y.nu))
    return _single(kind, x, y)
