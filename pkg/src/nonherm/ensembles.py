"""Random matrix and eigenvalue samplers.

Exact samplers draw each matrix from its own Philox substream keyed by
``(seed, draw)``, so results do not depend on how draws are spread over
threads. Markov chains use one substream per chain index.

Both MCMC targets (elliptic fixed trace and trace squared) depend on J only
through a = Tr A^2 and b = Tr B^2 where J = A + iB with A, B Hermitian,
because Tr JJ* = a + b and Re Tr J^2 = a - b. The default ``"radial"`` kernel
therefore refreshes the directions A/|A|, B/|B| exactly (uniform on the
Frobenius sphere) and runs Metropolis-Hastings on the radii only, with an
independence proposal fitted to the mode. ``"rwm"`` is the plain random walk
on the matrix entries (sphere-projected for the fixed-trace target), and
``"geodesic"`` moves along great circles of the sphere.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import optimize, stats

from . import eig
from .params import ModelParams, covariance_pab, solve_k

TAGS = ("gue", "ginibre", "elliptic", "pab", "ft_ginibre", "ft_elliptic", "trace_squared", "coulomb")
MCMC_TAGS = ("ft_elliptic", "trace_squared", "coulomb")
T_DOF = 7.0


class SamplerWarning(UserWarning):
    pass


def substream(seed, *key):
    """Independent Philox generator for the integer key path ``key``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _complex_normal(rng, n, var):
    # real and imaginary parts each N(0, var)
    s = math.sqrt(var)
    return s * rng.standard_normal((n, n)) + 1j * s * rng.standard_normal((n, n))


def _gue(rng, n):
    g = _complex_normal(rng, n, 1.0 / (2 * n))
    return 0.5 * (g + g.conj().T)


def sample_gue(n, seed, draw=0):
    """Hermitian matrix with density proportional to exp(-N Tr J^2)."""
    return _gue(substream(seed, 0, draw), n)


def sample_ginibre(n, seed, draw=0):
    """i.i.d. entries with E|J_jk|^2 = 1/N."""
    return _complex_normal(substream(seed, 1, draw), n, 1.0 / (2 * n))


def sample_elliptic(n, tau, seed, draw=0):
    """sqrt(1+tau) J1 + i sqrt(1-tau) J2 with J1, J2 independent GUE."""
    rng = substream(seed, 2, draw)
    j1 = _gue(rng, n)
    j2 = _gue(rng, n)
    return math.sqrt(1 + tau) * j1 + 1j * math.sqrt(1 - tau) * j2


def sample_pab_cov(cov, seed, draw=0):
    """Exact Gaussian draw from the 2x2 block structure of ``cov``."""
    n = cov.n
    rng = substream(seed, 3, draw)
    lp, lm = math.sqrt(cov.lambda_plus_sq), math.sqrt(cov.lambda_minus_sq)
    r2 = math.sqrt(0.5)
    p, q = lp * rng.standard_normal((n, n)), lm * rng.standard_normal((n, n))
    re = np.triu(r2 * (p + q), 1) + np.triu(r2 * (p - q), 1).T
    p, q = lm * rng.standard_normal((n, n)), lp * rng.standard_normal((n, n))
    im = np.triu(r2 * (p + q), 1) + np.triu(r2 * (p - q), 1).T
    d = math.sqrt(cov.var_diag_re) * rng.standard_normal(n) + 1j * math.sqrt(cov.var_diag_im) * rng.standard_normal(n)
    j = re + 1j * im
    j[np.diag_indices(n)] = d
    return j


def sample_pab(params: ModelParams, seed, draw=0):
    """Linearized Gaussian with a = N(1/(1-tau^2) + 2 gamma K), b = tau N/(1-tau^2)."""
    return sample_pab_cov(covariance_pab(params), seed, draw)


def sample_ft_ginibre(n, k_p, seed, draw=0):
    """sqrt(N K_p) G / |G|_F with G Ginibre; Tr JJ* = N K_p."""
    rng = substream(seed, 4, draw)
    while True:
        g = _complex_normal(rng, n, 0.5)
        norm = np.linalg.norm(g)
        if norm > 0:
            return math.sqrt(n * k_p) * g / norm


# ---------------------------------------------------------------------------
# Markov chains


@dataclass
class ChainConfig:
    """Hyperparameters of one Markov chain; ``burn_in`` and ``thin`` count
    sweeps (one sweep = one proposal for the matrix kernels, N single-point
    proposals for the eigenvalue gas)."""

    step_size: float = 0.05
    burn_in: int = 1000
    thin: int = 1
    target_accept: float = 0.3
    method: str = "radial"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.burn_in < 0 or self.thin < 0:
            raise ValueError("burn_in and thin must be >= 0")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.method not in ("radial", "rwm", "geodesic"):
            raise ValueError(f"unknown chain method {self.method!r}")


@dataclass
class ChainStats:
    proposed: int = 0
    accepted: int = 0
    step_size: float = 0.0

    @property
    def accept_rate(self):
        return self.accepted / self.proposed if self.proposed else float("nan")


def _adapt(step, rate, target):
    # Robbins-Monro style multiplicative tuning during burn-in
    return step * math.exp(rate - target)


def _unit_hermitian(rng, n):
    h = _gue(rng, n)
    return h / np.linalg.norm(h)


class _RadialTarget:
    """Log-density of the radii (a, b) = (Tr A^2, Tr B^2) in log coordinates."""

    def __init__(self, n, tau, gamma, k_p):
        self.n, self.tau, self.gamma, self.k_p = n, tau, gamma, k_p
        self.m = n * n / 2.0
        self.r = n * k_p

    def logpdf(self, x):
        a, b = np.exp(x[0]), np.exp(x[1])
        n, tau = self.n, self.tau
        return (self.m * (x[0] + x[1]) - n * a / (1 + tau) - n * b / (1 - tau)
                - self.gamma * (a + b - self.r) ** 2)

    def grad(self, x):
        a, b = np.exp(x[0]), np.exp(x[1])
        n, tau, g = self.n, self.tau, self.gamma
        e = a + b - self.r
        return np.array([self.m - n * a / (1 + tau) - 2 * g * a * e,
                         self.m - n * b / (1 - tau) - 2 * g * b * e])

    def hess(self, x):
        a, b = np.exp(x[0]), np.exp(x[1])
        n, tau, g = self.n, self.tau, self.gamma
        e = a + b - self.r
        return np.array([[-n * a / (1 + tau) - 2 * g * a * e - 2 * g * a * a, -2 * g * a * b],
                         [-2 * g * a * b, -n * b / (1 - tau) - 2 * g * b * e - 2 * g * b * b]])

    def laplace(self):
        x0 = np.log([self.m * (1 + self.tau) / self.n, self.m * (1 - self.tau) / self.n])
        res = optimize.minimize(lambda x: -self.logpdf(x), x0, jac=lambda x: -self.grad(x),
                                hess=lambda x: -self.hess(x), method="trust-exact",
                                options={"gtol": 1e-10})
        cov = np.linalg.inv(-self.hess(res.x))
        return res.x, cov


class _SphereTarget:
    """Log-density of x = logit(a / (N K_p)) on the sphere a + b = N K_p."""

    def __init__(self, n, tau, k_p):
        self.m = n * n / 2.0
        self.r = n * k_p
        self.kappa = tau * n / (1 - tau * tau)

    def logpdf(self, x):
        s = 1.0 / (1.0 + np.exp(-x))
        return self.m * (np.log(s) + np.log1p(-s)) + 2 * self.kappa * self.r * s

    def laplace(self):
        m, kr = self.m, self.kappa * self.r

        def dlog(s):
            return m * (1 - 2 * s) + 2 * kr * s * (1 - s)

        s = optimize.brentq(dlog, 1e-300, 1 - 1e-16, xtol=1e-300, rtol=8.9e-16)
        h = -2 * m * s * (1 - s) + 2 * kr * s * (1 - s) * (1 - 2 * s)
        return np.array([math.log(s / (1 - s))]), np.array([[-1.0 / h]])


class _IndependenceProposal:
    def __init__(self, mean, cov, scale=1.2):
        self.dist = stats.multivariate_t(loc=mean, shape=cov * scale**2, df=T_DOF)

    def draw(self, rng):
        return np.atleast_1d(self.dist.rvs(random_state=rng))

    def logpdf(self, x):
        return float(self.dist.logpdf(x))


class MatrixChain:
    """Metropolis chain over complex N x N matrices; iterate to get states.

    ``fixed_trace=True`` targets the elliptic fixed-trace ensemble
    (Tr JJ* = N K_p); otherwise the trace-squared ensemble with the given
    gamma. States are yielded as fresh arrays.
    """

    def __init__(self, params: ModelParams, seed, chain: ChainConfig | None = None, fixed_trace=False,
                 chain_index=0):
        self.params = params
        self.chain = chain or ChainConfig()
        self.fixed_trace = fixed_trace
        self.seed = seed
        self.chain_index = chain_index
        self.stats = ChainStats(step_size=self.chain.step_size)
        self._rng = substream(seed, 5 if fixed_trace else 6, chain_index)
        n, tau = params.n, params.tau
        self._coef = n / (1 - tau * tau)
        self._radius_sq = n * params.k_p
        if self.chain.method == "radial":
            self._target = _SphereTarget(n, tau, params.k_p) if fixed_trace else _RadialTarget(
                n, tau, params.gamma, params.k_p)
            mean, cov = self._target.laplace()
            self._proposal = _IndependenceProposal(mean, cov)
            self._x = mean.copy()
        else:
            j = sample_elliptic(n, tau, seed, draw=2**31 + chain_index)
            if fixed_trace:
                j *= math.sqrt(self._radius_sq) / np.linalg.norm(j)
            self._j = j
        self._warned = False

    # -- log densities on matrices (used by the random-walk kernels)
    def log_density(self, j):
        tr_jj = float(np.vdot(j, j).real)
        re_tr_j2 = float(np.sum(j * j.T).real)
        if self.fixed_trace:
            return self._coef * self.params.tau * re_tr_j2
        return (-self._coef * (tr_jj - self.params.tau * re_tr_j2)
                - self.params.gamma * (tr_jj - self._radius_sq) ** 2)

    def _radial_step(self, build=True):
        rng = self._rng
        y = self._proposal.draw(rng)
        log_ratio = (self._target.logpdf(y) - self._target.logpdf(self._x)
                     + self._proposal.logpdf(self._x) - self._proposal.logpdf(y))
        self.stats.proposed += 1
        if math.log(rng.random()) < log_ratio:
            self._x = y
            self.stats.accepted += 1
        if not build:
            # directions are refreshed exactly at every kept step, so
            # burn-in only has to move the radii
            return None
        n = self.params.n
        a_dir = _unit_hermitian(rng, n)
        b_dir = _unit_hermitian(rng, n)
        if self.fixed_trace:
            s = 1.0 / (1.0 + math.exp(-self._x[0]))
            j = math.sqrt(self._radius_sq * s) * a_dir + 1j * math.sqrt(self._radius_sq * (1 - s)) * b_dir
            return j * (math.sqrt(self._radius_sq) / np.linalg.norm(j))
        a, b = np.exp(self._x)
        return math.sqrt(a) * a_dir + 1j * math.sqrt(b) * b_dir

    def _walk_step(self):
        rng, n = self._rng, self.params.n
        step = self.stats.step_size
        noise = _complex_normal(rng, n, 0.5)
        if self.fixed_trace:
            radius = math.sqrt(self._radius_sq)
            if self.chain.method == "geodesic":
                u = noise - np.vdot(self._j, noise).real / self._radius_sq * self._j
                u /= np.linalg.norm(u)
                theta = step * rng.standard_normal() / radius
                prop = math.cos(theta) * self._j + math.sin(theta) * radius * u
            else:
                prop = self._j + step * noise
            prop *= radius / np.linalg.norm(prop)
        else:
            prop = self._j + step * noise
        log_ratio = self.log_density(prop) - self.log_density(self._j)
        self.stats.proposed += 1
        accepted = math.log(rng.random()) < log_ratio
        if accepted:
            self._j = prop
            self.stats.accepted += 1
        return accepted

    def _step(self, build=True):
        if self.chain.method == "radial":
            return self._radial_step(build)
        self._walk_step()
        return self._j.copy()

    def _burn(self):
        cfg = self.chain
        window_acc, window = 0, 0
        for _ in range(cfg.burn_in):
            before = self.stats.accepted
            self._step(build=False)
            if cfg.method != "radial":
                window_acc += self.stats.accepted - before
                window += 1
                if window == 50:
                    self.stats.step_size = _adapt(self.stats.step_size, window_acc / window, cfg.target_accept)
                    window_acc, window = 0, 0
        self.stats.proposed = self.stats.accepted = 0

    def run(self, n_states):
        """Yield ``n_states`` kept states after burn-in and thinning."""
        self._burn()
        thin = max(self.chain.thin, 1)
        for _ in range(n_states):
            for _ in range(thin - 1):
                self._step(build=False)
            yield self._step()
        rate = self.stats.accept_rate
        if self.chain.method != "radial" and not 0.05 <= rate <= 0.95 and self.params.tau != 0:
            warnings.warn(f"acceptance rate {rate:.3f} outside [0.05, 0.95]", SamplerWarning, stacklevel=2)


def mcmc_ft_elliptic(params: ModelParams, seed, n_states, chain: ChainConfig | None = None, chain_index=0):
    """States of the elliptic fixed-trace chain (a generator) and its stats."""
    c = MatrixChain(params, seed, chain, fixed_trace=True, chain_index=chain_index)
    return c.run(n_states), c.stats


def mcmc_trace_squared(params: ModelParams, seed, n_states, chain: ChainConfig | None = None, chain_index=0):
    """States of the trace-squared chain (a generator) and its stats."""
    c = MatrixChain(params, seed, chain, fixed_trace=False, chain_index=chain_index)
    return c.run(n_states), c.stats


# ---------------------------------------------------------------------------
# eigenvalue Coulomb gas


@njit(cache=True)
def _coulomb_sweep(z, steps, noise, unif, coef, tau, gamma, target_sq):
    n = z.shape[0]
    acc = 0
    sq = 0.0
    for k in range(n):
        sq += z[k].real ** 2 + z[k].imag ** 2
    for k in range(n):
        old = z[k]
        new = old + steps * complex(noise[k, 0], noise[k, 1])
        d_rep = 0.0
        coincident = False
        for l in range(n):
            if l == k:
                continue
            dn = abs(new - z[l])
            if dn == 0.0:
                coincident = True
                break
            d_rep += 2.0 * (math.log(dn) - math.log(abs(old - z[l])))
        if coincident:
            continue
        on, oo = new.real ** 2 + new.imag ** 2, old.real ** 2 + old.imag ** 2
        d_quad = -coef * ((on - oo) - tau * ((new * new).real - (old * old).real))
        sq_new = sq + on - oo
        d_conf = -gamma * ((sq_new - target_sq) ** 2 - (sq - target_sq) ** 2)
        if math.log(unif[k]) < d_rep + d_quad + d_conf:
            z[k] = new
            sq = sq_new
            acc += 1
    return acc


def coulomb_log_density(z, params: ModelParams):
    """Unnormalized log-density of the eigenvalue gas at the point set ``z``."""
    z = np.asarray(z, dtype=complex)
    n = params.n
    diff = np.abs(z[:, None] - z[None, :])
    iu = np.triu_indices(len(z), 1)
    with np.errstate(divide="ignore"):
        rep = 2.0 * np.sum(np.log(diff[iu]))
    sq = np.sum(np.abs(z) ** 2)
    quad = -n / (1 - params.tau**2) * (sq - params.tau * np.sum(z * z).real)
    return rep + quad - params.gamma * (sq - n * params.k_p) ** 2


class CoulombChain:
    """Single-point Metropolis updates of N eigenvalues; one sweep moves every point once."""

    def __init__(self, params: ModelParams, seed, chain: ChainConfig | None = None, chain_index=0):
        self.params = params
        self.chain = chain or ChainConfig(step_size=0.1)
        self.stats = ChainStats(step_size=self.chain.step_size)
        self._rng = substream(seed, 7, chain_index)
        self._z = np.linalg.eigvals(sample_elliptic(params.n, params.tau, seed, draw=2**31 + chain_index))
        if params.gamma > 0:
            self._z *= math.sqrt(params.n * params.k_p / max(np.sum(np.abs(self._z) ** 2), 1e-300))
        self._coef = params.n / (1 - params.tau**2)

    def _sweep(self):
        n = self.params.n
        noise = self._rng.standard_normal((n, 2)) / math.sqrt(2.0)
        unif = self._rng.random(n)
        acc = _coulomb_sweep(self._z, self.stats.step_size, noise, unif, self._coef, self.params.tau,
                             self.params.gamma, self.params.n * self.params.k_p)
        self.stats.proposed += n
        self.stats.accepted += acc
        return acc / n

    def run(self, n_states):
        cfg = self.chain
        rates = []
        for _ in range(cfg.burn_in):
            rates.append(self._sweep())
            if len(rates) == 20:
                self.stats.step_size = _adapt(self.stats.step_size, float(np.mean(rates)), cfg.target_accept)
                rates = []
        self.stats.proposed = self.stats.accepted = 0
        thin = max(cfg.thin, 1)
        for _ in range(n_states):
            for _ in range(thin):
                self._sweep()
            yield self._z.copy()


def mcmc_coulomb(params: ModelParams, seed, n_states, chain: ChainConfig | None = None, chain_index=0):
    """States (arrays of N points) of the eigenvalue gas chain and its stats."""
    c = CoulombChain(params, seed, chain, chain_index)
    return c.run(n_states), c.stats


# ---------------------------------------------------------------------------
# batch driver


@dataclass
class SpectrumSample:
    eigenvalues: np.ndarray
    ensemble_tag: str
    seed: int
    draw: int
    accept_rate: float = float("nan")
    trace_jj: float = float("nan")


@dataclass
class SampleRun:
    """Spectra of a batch of draws (rows) with per-run diagnostics."""

    tag: str
    params: ModelParams
    seed: int
    eigenvalues: np.ndarray
    trace_jj: np.ndarray
    accept_rates: list = field(default_factory=list)

    def samples(self):
        rate = float(np.mean(self.accept_rates)) if self.accept_rates else float("nan")
        return [SpectrumSample(ev, self.tag, self.seed, i, rate, float(t))
                for i, (ev, t) in enumerate(zip(self.eigenvalues, self.trace_jj))]


def _exact_matrix(tag, params, seed, draw):
    n = params.n
    if tag == "gue":
        return sample_gue(n, seed, draw)
    if tag == "ginibre":
        return sample_ginibre(n, seed, draw)
    if tag == "elliptic":
        return sample_elliptic(n, params.tau, seed, draw)
    if tag == "pab":
        return sample_pab(params, seed, draw)
    if tag == "ft_ginibre":
        return sample_ft_ginibre(n, params.k_p, seed, draw)
    raise ValueError(f"{tag!r} is not an exact sampler")


def _spectrum(j, backend):
    return eig.eigenvalues(j, backend=backend), float(np.vdot(j, j).real)


def sample_spectra(tag, params: ModelParams, seed, draws, chain: ChainConfig | None = None, chains=1,
                   threads=1, backend="lapack"):
    """Eigenvalues of ``draws`` matrices (or gas states) from ensemble ``tag``.

    MCMC draws are split evenly over ``chains`` independent chains; the
    output only depends on ``(tag, params, seed, draws, chain, chains)``.
    """
    if tag not in TAGS:
        raise ValueError(f"unknown ensemble tag {tag!r}")
    n = params.n
    evs = np.empty((draws, n), dtype=complex)
    tr = np.empty(draws)
    rates = []
    if tag not in MCMC_TAGS:
        def one(i):
            return _spectrum(_exact_matrix(tag, params, seed, i), backend)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            for i, (ev, t) in enumerate(pool.map(one, range(draws))):
                evs[i], tr[i] = ev, t
        return SampleRun(tag, params, seed, evs, tr, rates)

    counts = [draws // chains + (1 if c < draws % chains else 0) for c in range(chains)]

    def run_chain(c):
        if tag == "coulomb":
            gen, st = mcmc_coulomb(params, seed, counts[c], chain, chain_index=c)
            out = [(eig.sort_spectrum(z), float(np.sum(np.abs(z) ** 2))) for z in gen]
        else:
            f = mcmc_ft_elliptic if tag == "ft_elliptic" else mcmc_trace_squared
            gen, st = f(params, seed, counts[c], chain, chain_index=c)
            out = [_spectrum(j, backend) for j in gen]
        return out, st.accept_rate

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(run_chain, range(chains)))
    i = 0
    for out, rate in results:
        rates.append(rate)
        for ev, t in out:
            evs[i], tr[i] = ev, t
            i += 1
    return SampleRun(tag, params, seed, evs, tr, rates)


def expected_trace_jj(params: ModelParams):
    """N (K_p + K) for the trace-squared ensemble."""
    return params.n * (params.k_p + solve_k(params.tau, params.gamma, params.k_p))
