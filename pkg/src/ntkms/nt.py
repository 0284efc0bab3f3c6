"""Exact normal forms in the Nica-Toeplitz algebra of a product system.

Every element handled here is a finite sum of monomials i_s(xi) i_r(eta)*
where xi, eta are vectors in the fibers at s and r.  Two reductions make
the representation canonical:

* the right leg is always a plain basis vector: using the right module
  action, i_s(xi) i_r(eta)* = sum_l i_s(xi . eta_l*) i_r(1_l)*, so a term
  is a triple (s, r, l) carrying one fiber vector;
* terms with equal (s, r, l) merge by adding their vectors, and terms
  with zero vector are dropped.

Equality of canonical forms is exact dict equality, so algebraic
identities can be asserted with no tolerance.

Multiplication reduces to the core identity for i_r(1_l)* i_g(zeta).
With w = lub(r, g), g'' = r\\w and r'' = g\\w, each basis index i of the
fiber at w splits two ways, i = m(r, g''; i_r, i_g'') = m(g, r''; i_g,
i_r''), and

    i_r(1_l)* i_g(zeta)
        = sum_u i_g''(1_u) i_r''(phi(zeta_(i_g)*) 1_(i_r''))*

over u < N_g'' with i = m(r, g''; l, u).  Outer legs then absorb through
the module product and the result is re-canonicalised.  The number of
raw terms emitted during a product is capped; crossing the cap raises
TermBudgetExceeded rather than grinding on.
"""

from __future__ import annotations

import cmath
from contextlib import contextmanager

from .coeff import CoefficientElement
from .product_system import ModuleVector, ProductSystem

__all__ = [
    "NTElement",
    "TermBudgetExceeded",
    "term_budget",
    "set_term_budget",
    "get_term_budget",
    "unit_projection",
]

DEFAULT_TERM_BUDGET = 1_000_000

_budget = DEFAULT_TERM_BUDGET


class TermBudgetExceeded(RuntimeError):
    """A product would emit more raw terms than the configured cap."""


def get_term_budget() -> int:
    return _budget


def set_term_budget(n: int) -> int:
    """Set the raw-term cap for products; returns the previous value."""
    global _budget
    if n < 1:
        raise ValueError("term budget must be positive")
    old = _budget
    _budget = int(n)
    return old


@contextmanager
def term_budget(n: int):
    old = set_term_budget(n)
    try:
        yield
    finally:
        set_term_budget(old)


class NTElement:
    """A canonical finite sum of terms i_s(xi) i_r(1_l)*.

    ``terms`` maps (s, r, l) to the fiber vector xi; vectors are nonzero
    and the dict is the whole state, so == is exact equality of normal
    forms.
    """

    __slots__ = ("system", "terms")

    def __init__(self, system: ProductSystem, terms: dict[tuple[int, int, int], ModuleVector] | None = None):
        self.system = system
        clean: dict[tuple[int, int, int], ModuleVector] = {}
        for key, vec in (terms or {}).items():
            if not vec.is_zero():
                clean[key] = vec
        self.terms = clean

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, system: ProductSystem) -> "NTElement":
        return cls(system, {})

    @classmethod
    def unit(cls, system: ProductSystem) -> "NTElement":
        e = system.identity_fiber()
        return cls(system, {(e, e, 0): system.basis_vector(e, 0)})

    @classmethod
    def embed(cls, system: ProductSystem, s: int, xi: ModuleVector) -> "NTElement":
        """i_s(xi), a creation-type element."""
        if xi.fiber != s:
            raise ValueError("vector not in the requested fiber")
        e = system.identity_fiber()
        return cls(system, {(s, e, 0): xi})

    @classmethod
    def embed_coeff(cls, system: ProductSystem, a: CoefficientElement) -> "NTElement":
        """i_e(a), the copy of the coefficient algebra."""
        e = system.identity_fiber()
        return cls.embed(system, e, ModuleVector(system, e, (a,)))

    @classmethod
    def from_monomial(
        cls, system: ProductSystem, s: int, xi: ModuleVector, r: int, eta: ModuleVector
    ) -> "NTElement":
        """i_s(xi) i_r(eta)*, split so the right leg is a basis vector."""
        if xi.fiber != s or eta.fiber != r:
            raise ValueError("vectors not in the stated fibers")
        out: dict[tuple[int, int, int], ModuleVector] = {}
        for l, c in enumerate(eta.coords):
            if c.is_zero():
                continue
            vec = xi.right_mul(c.adjoint())
            _accumulate(out, (s, r, l), vec)
        return cls(system, out)

    # -- linear structure ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def term_count(self) -> int:
        return len(self.terms)

    def __add__(self, other: "NTElement") -> "NTElement":
        self._same(other)
        out = dict(self.terms)
        for key, vec in other.terms.items():
            _accumulate(out, key, vec)
        return NTElement(self.system, out)

    def __sub__(self, other: "NTElement") -> "NTElement":
        return self + other.scale(-1.0)

    def __neg__(self) -> "NTElement":
        return self.scale(-1.0)

    def scale(self, w: complex) -> "NTElement":
        if w == 0:
            return NTElement.zero(self.system)
        return NTElement(self.system, {k: v.scale(w) for k, v in self.terms.items()})

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    # -- star algebra ---------------------------------------------------------

    def adjoint(self) -> "NTElement":
        """Termwise [i_s(xi) i_r(1_l)*]* = i_r(1_l) i_s(xi)*."""
        sys = self.system
        out = NTElement.zero(sys)
        for (s, r, l), vec in self.terms.items():
            out = out + NTElement.from_monomial(sys, r, sys.basis_vector(r, l), s, vec)
        return out

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        self._same(other)
        sys = self.system
        sg = sys.semigroup
        out: dict[tuple[int, int, int], ModuleVector] = {}
        emitted = 0
        for (s, r, l), xi in self.terms.items():
            for (g, h, m), zeta in other.terms.items():
                w = sg.lub(r, g)
                gg = sg.quotient(w, r)
                rr = sg.quotient(w, g)
                sgg = sg.mul(s, gg)
                hrr = sg.mul(h, rr)
                for u in range(sys.basis_count(gg)):
                    i = sys.index_map(r, gg, l, u)
                    ig, irr = sys.index_split(g, rr, i)
                    b = zeta.coords[ig]
                    if b.is_zero():
                        continue
                    emitted += 1
                    if emitted > _budget:
                        raise TermBudgetExceeded(
                            f"product exceeded the raw-term cap ({_budget}); "
                            "raise the budget or shrink the operands"
                        )
                    left = sys.module_product(xi, sys.basis_vector(gg, u))
                    right = sys.module_product(
                        sys.basis_vector(h, m, coeff=b.adjoint()),
                        sys.basis_vector(rr, irr),
                    )
                    for lr, c in enumerate(right.coords):
                        if c.is_zero():
                            continue
                        _accumulate(out, (sgg, hrr, lr), left.right_mul(c.adjoint()))
        return NTElement(sys, out)

    # -- structure maps -------------------------------------------------------

    def core_expectation(self) -> "NTElement":
        """Keep the terms with equal fibers; the projection onto the core."""
        return NTElement(
            self.system, {k: v for k, v in self.terms.items() if k[0] == k[1]}
        )

    def alpha(self, s: int) -> "NTElement":
        """alpha_s(y) = sum_j i_s(1_j) y i_s(1_j)*."""
        sys = self.system
        e = sys.identity_fiber()
        out = NTElement.zero(sys)
        for j in range(sys.basis_count(s)):
            pj = NTElement(sys, {(s, e, 0): sys.basis_vector(s, j)})
            qj = NTElement(sys, {(e, s, j): sys.basis_vector(e, 0)})
            out = out + pj * self * qj
        return out

    def dynamics(self, z: complex) -> "NTElement":
        """Scale each term by (N(s)/N(r))^(iz); z = i*beta gives the
        KMS-side factor (N(s)/N(r))^(-beta)."""
        sys = self.system
        nof = sys.scaling.of
        out: dict[tuple[int, int, int], ModuleVector] = {}
        for (s, r, l), vec in self.terms.items():
            ratio = nof(s) / nof(r)
            factor = cmath.exp(1j * z * cmath.log(ratio)) if ratio != 1.0 else 1.0
            _accumulate(out, (s, r, l), vec.scale(factor))
        return NTElement(sys, out)

    # -- inspection -------------------------------------------------------------

    def sorted_terms(self) -> list[tuple[tuple[int, int, int], ModuleVector]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def one_norm(self) -> float:
        return sum(v.one_norm() for v in self.terms.values())

    def fiber_pairs(self) -> set[tuple[int, int]]:
        return {(s, r) for (s, r, _) in self.terms}

    def __eq__(self, other):
        if not isinstance(other, NTElement):
            return NotImplemented
        return self.system is other.system and self.terms == other.terms

    def __hash__(self):
        return hash((id(self.system), frozenset(self.terms.items())))

    def _same(self, other: "NTElement") -> None:
        if self.system is not other.system:
            raise ValueError("elements live over different product systems")

    def __repr__(self):
        if not self.terms:
            return "NT<0>"
        bits = []
        for (s, r, l), vec in self.sorted_terms()[:4]:
            bits.append(f"i[{s}]({vec!r}) i[{r}](1@{l})*")
        more = "" if len(self.terms) <= 4 else f" ... ({len(self.terms)} terms)"
        return "NT<" + " + ".join(bits) + more + ">"


def _accumulate(store: dict, key: tuple[int, int, int], vec: ModuleVector) -> None:
    cur = store.get(key)
    if cur is None:
        if not vec.is_zero():
            store[key] = vec
        return
    tot = cur + vec
    if tot.is_zero():
        del store[key]
    else:
        store[key] = tot


def unit_projection(system: ProductSystem, s: int) -> NTElement:
    """alpha_s(1) = sum_j i_s(1_j) i_s(1_j)*, the range projection."""
    return NTElement(
        system,
        {(s, s, j): system.basis_vector(s, j) for j in range(system.basis_count(s))},
    )
