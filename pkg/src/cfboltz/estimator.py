"""Estimator-style front end.

``BoltzmannSampler().fit(spec).sample(n, n_samples)`` solves the critical
system once per spec and caches one sampling context per size.
"""
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bridge import build_context, sample_structure
from .critical import CriticalSolver, derived_constants
from .errors import EmptySizeClass, SizeTooSmall
from .oracle import oracle_sample, size_class_nonempty
from .randomness import BitSource
from .spec import compute_catalog
from .validation import check_size, check_spec

METHODS = ("accelerated", "oracle")
MODES = ("excursion", "bridge")


class BoltzmannSampler(BaseEstimator):
    """Exact sampler of weighted colored trees of a fixed size.

    Parameters
    ----------
    method : "accelerated" or "oracle"
        The oracle method uses exact counting (quadratic in n); it is also
        the fallback when n is at most v0 or too small for the mixture.
    mode : "excursion" gives trees, "bridge" gives shuffled subtree lists.
    seed : seed of the bit stream created by ``fit``.
    budget : restart budget per sample.
    tune : choose the mixture shift maximizing the certified constant.
    """

    def __init__(self, method="accelerated", mode="excursion", seed=0, budget=10 ** 6,
                 tune=True):
        self.method = method
        self.mode = mode
        self.seed = seed
        self.budget = budget
        self.tune = tune

    def fit(self, spec, y=None):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.spec_ = check_spec(spec)
        self.catalog_ = compute_catalog(self.spec_)
        self.solver_ = CriticalSolver(self.spec_)
        self.critical_ = self.solver_.solve_characteristic()
        self.constants_ = derived_constants(self.solver_, self.critical_, self.catalog_)
        self.bits_ = BitSource(self.seed)
        self.contexts_ = {}
        return self

    def context(self, n):
        """Sampling context for size n, or None when the oracle is used."""
        check_is_fitted(self, "spec_")
        n = check_size(n)
        if n in self.contexts_:
            return self.contexts_[n]
        if not size_class_nonempty(self.spec_, n):
            raise EmptySizeClass(f"no structure of size {n}")
        ctx = None
        # bridge lists only come from the walk, so that mode shrinks the
        # shift instead of handing small sizes to the oracle
        bridge = self.mode == "bridge"
        if self.method == "accelerated" and (n > self.catalog_.v0 or bridge):
            try:
                ctx = build_context(self.spec_, n, self.solver_, self.critical_,
                                    self.constants_, self.catalog_, clamp=bridge,
                                    budget=self.budget, tune=self.tune)
            except SizeTooSmall:
                ctx = None
        self.contexts_[n] = ctx
        return ctx

    def sample(self, n, n_samples=1, bits=None):
        """List of ``n_samples`` independent structures of size n."""
        ctx = self.context(n)
        bits = bits if bits is not None else self.bits_
        if ctx is None:
            if self.mode == "bridge":
                raise ValueError("bridge mode needs the accelerated method")
            return [oracle_sample(self.spec_, n, bits) for _ in range(n_samples)]
        return [sample_structure(ctx, bits, self.mode) for _ in range(n_samples)]

    def stats(self, n):
        ctx = self.context(n)
        return None if ctx is None else ctx.stats
