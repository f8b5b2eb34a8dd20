"""
Verification Suite
Property and oracle checks for the objective, the steppers and the warm start

Every check is deterministic given its seed and returns a JSON-ready dict
with a "passed" flag and the worst-case slack it observed.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import logging
import math
import time
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import RunConfig
from engine.errors import InsufficientSamplesError, RunError, SubspaceNotConvergedError
from engine.experiment import execute
from engine.initialization import init_quality, initialize_asym, initialize_psd
from engine.linalg import qr_thin, scaled_projection, svd_product
from engine.metrics import (alignment_sigma_min, fit_decay, frob_error_sq, full_gradient_asym,
                            full_gradient_psd, product_distance, product_norm)
from engine.model import GroundTruth, gen_ground_truth, stats
from engine.sampling import ONLINE_STREAM, TRIAL_STREAM_BASE, EntrySampler
from engine.sgd import (RunTrace, make_state, refresh_grams, resolve_eta, sg_asym, sg_psd,
                        step_asym_practical, step_asym_theoretical)
from engine.state import AsymState, PsdState, Variant

logger = logging.getLogger(__name__)


def _haar_rotation(rng: np.random.Generator, k: int) -> np.ndarray:
    q, _ = qr_thin(rng.standard_normal((k, k)))
    return q


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    w = rng.standard_normal(n)
    return w / np.linalg.norm(w)


def _bounded_factor(rng: np.random.Generator, d: int, k: int, cap: float) -> np.ndarray:
    """Scaled Gaussian with spectral norm at most cap (rejection on the scale draw)"""
    while True:
        g = rng.standard_normal((d, k))
        u = g * (rng.uniform(0.1, 1.2) * cap / np.linalg.norm(g, 2))
        if np.linalg.norm(u, 2) <= cap:
            return u


def _balanced(u: np.ndarray, v: np.ndarray):
    triple = svd_product(u, v)
    root = np.sqrt(triple.singular_values)
    return triple.left * root, triple.right * root


def _near_optimum(gt: GroundTruth, rng: np.random.Generator, eps: float):
    """Balanced factors of a small perturbation of the exact product"""
    ustar, vstar = gt.sqrt_factors()
    u = ustar + eps * rng.standard_normal(ustar.shape) / math.sqrt(gt.d1)
    if gt.symmetric_psd:
        return u, None
    v = vstar + eps * rng.standard_normal(vstar.shape) / math.sqrt(gt.d2)
    return _balanced(u, v)


class VerificationSuite:
    """
    Checks for every implementable inequality and identity of the method:
    unbiasedness, gradient correctness, smoothness, pseudo-strong convexity,
    the local region, stepper equivalence, warm-start scaling and threshold,
    per-step cost and the convergence envelope.
    """

    PSD_SMOOTHNESS_FACTOR = 16.0
    ASYM_SMOOTHNESS_FACTOR = 8.0
    # Additive roundoff slack on every inequality
    SLACK = 1e-8

    def __init__(self):
        self.name = "VerificationSuite"

    @staticmethod
    def _report(name: str, passed: bool, **details) -> Dict[str, Any]:
        return {"name": name, "passed": bool(passed), **details}

    # ------------------------------------------------------------------
    # Stochastic gradient and full gradient
    # ------------------------------------------------------------------

    def check_unbiasedness(self, gt: GroundTruth, state) -> Dict[str, Any]:
        """
        Average SG over all d1·d2 cells (weight 1/(d1·d2)) against the full gradient

        Args:
            gt: Ground truth with d1·d2 ≤ 10⁴
            state: PsdState or AsymState

        Returns:
            Report with max_abs_dev
        """
        d1, d2 = gt.d1, gt.d2
        if d1 * d2 > 10_000:
            raise ValueError('exact enumeration needs d1*d2 <= 10^4')
        dense = gt.dense()
        weight = 1.0 / (d1 * d2)

        if isinstance(state, PsdState):
            average = np.zeros_like(state.u)
            for i in range(d1):
                for j in range(d2):
                    for row, grad in sg_psd(state.u, i, j, dense[i, j]):
                        average[row] += grad
            deviation = float(np.max(np.abs(average * weight - full_gradient_psd(gt, state.u))))
        else:
            average_u = np.zeros_like(state.u)
            average_v = np.zeros_like(state.v)
            for i in range(d1):
                for j in range(d2):
                    (row_u, grad_u), (row_v, grad_v) = sg_asym(state.u, state.v, i, j, dense[i, j])
                    average_u[row_u] += grad_u
                    average_v[row_v] += grad_v
            grad_u, grad_v = full_gradient_asym(gt, state.u, state.v)
            deviation = max(float(np.max(np.abs(average_u * weight - grad_u))),
                            float(np.max(np.abs(average_v * weight - grad_v))))

        return self._report('unbiasedness', deviation <= 1e-10, max_abs_dev=deviation)

    def run_unbiasedness(self, trials: int = 10, seed: int = 0) -> Dict[str, Any]:
        """Unbiasedness on random states: PSD d=20 and asymmetric 15×10, k=2"""
        rng = np.random.default_rng(seed)
        psd = gen_ground_truth(20, 20, 2, kappa_target=2.0, seed=seed, symmetric_psd=True)
        asym = gen_ground_truth(15, 10, 2, kappa_target=2.0, seed=seed + 1)
        worst = 0.0
        for _ in range(trials):
            state = PsdState.from_factor(0.5 * rng.standard_normal((20, 2)))
            worst = max(worst, self.check_unbiasedness(psd, state)["max_abs_dev"])
            state = AsymState.from_factors(0.5 * rng.standard_normal((15, 2)),
                                           0.5 * rng.standard_normal((10, 2)))
            worst = max(worst, self.check_unbiasedness(asym, state)["max_abs_dev"])
        return self._report('unbiasedness', worst <= 1e-10, max_abs_dev=worst, trials=trials,
                            worst_slack=1e-10 - worst)

    def check_gradient(self, gt: GroundTruth, trials: int = 10, seed: int = 0,
                       h: float = 1e-5) -> Dict[str, Any]:
        """Factored gradient against central finite differences of frob_error_sq"""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            u = 0.5 * rng.standard_normal((gt.d1, gt.k))
            if gt.symmetric_psd:
                blocks = [u]
                analytic = [full_gradient_psd(gt, u)]
                objective = lambda: frob_error_sq(gt, u)
            else:
                v = 0.5 * rng.standard_normal((gt.d2, gt.k))
                blocks = [u, v]
                analytic = list(full_gradient_asym(gt, u, v))
                objective = lambda: frob_error_sq(gt, u, v)

            numeric = []
            for block in blocks:
                approx = np.zeros_like(block)
                for index in np.ndindex(*block.shape):
                    original = block[index]
                    block[index] = original + h
                    plus = objective()
                    block[index] = original - h
                    minus = objective()
                    block[index] = original
                    approx[index] = (plus - minus) / (2.0 * h)
                numeric.append(approx)

            error = math.sqrt(sum(float(np.sum((a - n) ** 2)) for a, n in zip(analytic, numeric)))
            scale = math.sqrt(sum(float(np.sum(a ** 2)) for a in analytic))
            worst = max(worst, error / max(scale, 1e-300))

        return self._report('gradient', worst <= 1e-5, max_rel_error=worst, trials=trials,
                            worst_slack=1e-5 - worst)

    # ------------------------------------------------------------------
    # Geometry of the objective
    # ------------------------------------------------------------------

    def check_smoothness(self, gt: GroundTruth, gamma_cap: float = 2.0, trials: int = 1000,
                         seed: int = 0) -> Dict[str, Any]:
        """
        Gradient Lipschitz bound on {‖U‖ ≤ Γ}

        PSD: ‖∇f(U1) − ∇f(U2)‖_F ≤ 16·max{Γ², ‖M‖}·‖U1 − U2‖_F. Asymmetric: the
        same in squared-sum form over (U, V) with factor 8. Γ is the measured
        largest spectral norm in each pair. Every other trial is a radial pair
        (U, 0.99·U) along a rank-one direction at norm Γ, which nearly attains
        the bound.
        """
        rng = np.random.default_rng(seed)
        norm_m = float(gt.s[0])
        symmetric = gt.symmetric_psd
        factor = self.PSD_SMOOTHNESS_FACTOR if symmetric else self.ASYM_SMOOTHNESS_FACTOR
        d1, d2, k = gt.d1, gt.d2, gt.k

        violations = 0
        worst_slack = math.inf
        max_ratio = 0.0
        for trial in range(trials):
            if trial % 2 == 0:
                z = _unit(rng, k)
                u1 = gamma_cap * np.outer(_unit(rng, d1), z)
                u2 = 0.99 * u1
                v1 = gamma_cap * np.outer(_unit(rng, d2), z)
                v2 = 0.99 * v1
            else:
                u1 = _bounded_factor(rng, d1, k, gamma_cap)
                u2 = _bounded_factor(rng, d1, k, gamma_cap)
                v1 = _bounded_factor(rng, d2, k, gamma_cap)
                v2 = _bounded_factor(rng, d2, k, gamma_cap)

            if symmetric:
                gamma = max(np.linalg.norm(u1, 2), np.linalg.norm(u2, 2))
                lhs = float(np.linalg.norm(full_gradient_psd(gt, u1) - full_gradient_psd(gt, u2)))
                step = float(np.linalg.norm(u1 - u2))
            else:
                gamma = max(np.linalg.norm(u1, 2), np.linalg.norm(u2, 2),
                            np.linalg.norm(v1, 2), np.linalg.norm(v2, 2))
                gu1, gv1 = full_gradient_asym(gt, u1, v1)
                gu2, gv2 = full_gradient_asym(gt, u2, v2)
                lhs = math.sqrt(float(np.sum((gu1 - gu2) ** 2) + np.sum((gv1 - gv2) ** 2)))
                step = math.sqrt(float(np.sum((u1 - u2) ** 2) + np.sum((v1 - v2) ** 2)))

            scale = max(gamma ** 2, norm_m)
            rhs = factor * scale * step + self.SLACK
            worst_slack = min(worst_slack, rhs - lhs)
            if step > 0:
                max_ratio = max(max_ratio, lhs / (step * scale))
            if lhs > rhs:
                violations += 1

        return self._report('smoothness', violations == 0, violations=violations, trials=trials,
                            factor=factor, max_ratio=max_ratio, worst_slack=worst_slack)

    def check_pseudo_strong_convexity(self, gt: GroundTruth, trials: int = 1000,
                                      seed: int = 0) -> Dict[str, Any]:
        """
        ‖∇f‖²_F ≥ 4γ²·f − slack with γ the realized σ_min(XᵀU)
        (asymmetric: the smaller of σ_min(XᵀU) and σ_min(YᵀV))
        """
        rng = np.random.default_rng(seed)
        ustar, vstar = gt.sqrt_factors()
        violations = 0
        worst_slack = math.inf

        for trial in range(trials):
            if trial == 0:
                u, v = ustar.copy(), vstar.copy()
            else:
                alpha = rng.uniform(0.3, 1.5)
                beta = rng.uniform(0.0, 0.5)
                u = alpha * ustar @ _haar_rotation(rng, gt.k) + beta * rng.standard_normal(ustar.shape) / math.sqrt(gt.d1)
                v = alpha * vstar @ _haar_rotation(rng, gt.k) + beta * rng.standard_normal(vstar.shape) / math.sqrt(gt.d2)

            if gt.symmetric_psd:
                gamma = alignment_sigma_min(gt.x, u)
                grad_sq = float(np.sum(full_gradient_psd(gt, u) ** 2))
                f = frob_error_sq(gt, u)
            else:
                gamma = min(alignment_sigma_min(gt.x, u), alignment_sigma_min(gt.y, v))
                grad_u, grad_v = full_gradient_asym(gt, u, v)
                grad_sq = float(np.sum(grad_u ** 2) + np.sum(grad_v ** 2))
                f = frob_error_sq(gt, u, v)

            slack = grad_sq - 4.0 * gamma ** 2 * f + self.SLACK
            worst_slack = min(worst_slack, slack)
            if slack < 0:
                violations += 1

        return self._report('pseudo_strong_convexity', violations == 0, violations=violations,
                            trials=trials, worst_slack=worst_slack)

    def check_local_region(self, gt: GroundTruth, trials: int = 500, seed: int = 0) -> Dict[str, Any]:
        """
        Inside ‖M − UVᵀ‖_F ≤ σ_k/10: ‖U‖ ≤ √(2‖M‖) and σ_min(XᵀU) ≥ √(σ_k/2)
        (asymmetric: the same for V and Y, with U, V in balanced form)
        """
        rng = np.random.default_rng(seed)
        ustar, vstar = gt.sqrt_factors()
        norm_m = float(gt.s[0])
        sigma_k = gt.sigma_min
        limit = sigma_k / 10.0
        # Perturbation size that puts roughly half of the draws inside the ball
        base = limit / (2.0 * math.sqrt(norm_m) * math.sqrt(gt.d1 * gt.k))

        accepted = attempts = violations = 0
        worst_slack = math.inf
        spectral_cap = math.sqrt(2.0 * norm_m)
        align_floor = math.sqrt(sigma_k / 2.0)
        while accepted < trials and attempts < 50 * trials:
            attempts += 1
            eps = rng.uniform(0.0, 2.0) * base
            rotation = _haar_rotation(rng, gt.k)
            u = ustar @ rotation + eps * rng.standard_normal(ustar.shape)
            if gt.symmetric_psd:
                if math.sqrt(frob_error_sq(gt, u)) > limit:
                    continue
                spectral = [np.linalg.norm(u, 2)]
                alignment = [alignment_sigma_min(gt.x, u)]
            else:
                v = vstar @ rotation + eps * rng.standard_normal(vstar.shape)
                u, v = _balanced(u, v)
                if math.sqrt(frob_error_sq(gt, u, v)) > limit:
                    continue
                spectral = [np.linalg.norm(u, 2), np.linalg.norm(v, 2)]
                alignment = [alignment_sigma_min(gt.x, u), alignment_sigma_min(gt.y, v)]

            accepted += 1
            slack = min(min(spectral_cap - s for s in spectral),
                        min(a - align_floor for a in alignment)) + self.SLACK
            worst_slack = min(worst_slack, slack)
            if slack < 0:
                violations += 1

        return self._report('local_region', violations == 0 and accepted == trials,
                            violations=violations, accepted=accepted, attempts=attempts,
                            worst_slack=worst_slack)

    # ------------------------------------------------------------------
    # Steppers
    # ------------------------------------------------------------------

    def check_equivalence(self, gt: GroundTruth, config: RunConfig, seed: Optional[int] = None,
                          compare_every: int = 25) -> Dict[str, Any]:
        """
        Theoretical and practical asymmetric steppers on one observation stream

        Both start from the same balanced (U0, V0) near the optimum and consume
        identical observations; products are compared in factored form.
        """
        seed = config.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        u0, v0 = _near_optimum(gt, rng, eps=0.05 * gt.sigma_min)
        theoretical = AsymState.from_factors(u0, v0, Variant.THEORETICAL)
        practical = AsymState.from_factors(u0, v0, Variant.PRACTICAL)
        eta = resolve_eta(config, stats(gt))
        sampler = EntrySampler(gt.d1, gt.d2, seed=seed, stream=ONLINE_STREAM)

        def relative_gap() -> float:
            scale = product_norm(theoretical.u, theoretical.v)
            gap = product_distance(theoretical.u, theoretical.v, practical.u, practical.v)
            return gap / scale if scale > 0 else gap

        worst = relative_gap()
        for t in range(1, config.T + 1):
            obs = sampler.next_entry(gt)
            step_asym_theoretical(theoretical, obs, eta)
            step_asym_practical(practical, obs, eta)
            if t % config.gram_refresh_interval == 0:
                refresh_grams(practical)
            if t % compare_every == 0 or t == config.T:
                worst = max(worst, relative_gap())

        return self._report('equivalence', worst <= 1e-8, max_rel_product_diff=worst,
                            steps=config.T, eta=eta, worst_slack=1e-8 - worst)

    def check_step_cost(self, d_small: int = 500, d_large: int = 2000, k: int = 5,
                        steps: int = 1000, repeats: int = 9, seed: int = 0,
                        max_ratio: float = 1.5) -> Dict[str, Any]:
        """
        Per-step step_asym_practical time at d_large is at most max_ratio× that at d_small

        The two sizes run in interleaved blocks (order alternating per repeat)
        so both see the same clock and cache drift. Each block contributes its
        median per-step time; the statistic per size is the minimum over repeats.
        """

        def setup(d: int):
            gt = gen_ground_truth(d, d, k, kappa_target=2.0, seed=seed)
            u0, v0 = _near_optimum(gt, np.random.default_rng(seed), eps=0.05 * gt.sigma_min)
            state = AsymState.from_factors(u0, v0)
            config = RunConfig(algorithm='asym-practical', d1=d, d2=d, k=k, kappa=2.0)
            eta = resolve_eta(config, stats(gt))
            sampler = EntrySampler(d, d, seed=seed, stream=ONLINE_STREAM)
            for _ in range(100):
                step_asym_practical(state, sampler.next_entry(gt), eta)
            return gt, state, eta, sampler

        def block_median_ns(gt, state, eta, sampler) -> float:
            times = np.empty(steps)
            for n in range(steps):
                obs = sampler.next_entry(gt)
                start = time.perf_counter_ns()
                step_asym_practical(state, obs, eta)
                times[n] = time.perf_counter_ns() - start
            return float(np.median(times))

        runs = {d_small: setup(d_small), d_large: setup(d_large)}
        blocks = {d_small: [], d_large: []}
        for r in range(repeats):
            order = (d_small, d_large) if r % 2 == 0 else (d_large, d_small)
            for d in order:
                blocks[d].append(block_median_ns(*runs[d]))

        small = min(blocks[d_small])
        large = min(blocks[d_large])
        ratio = large / small
        return self._report('step_cost', ratio <= max_ratio, median_ns_small=small, median_ns_large=large,
                            ratio=ratio, d_small=d_small, d_large=d_large, k=k, repeats=repeats,
                            block_ns_small=blocks[d_small], block_ns_large=blocks[d_large],
                            worst_slack=max_ratio - ratio)

    # ------------------------------------------------------------------
    # Warm start
    # ------------------------------------------------------------------

    def check_init_scaling(self, gt: GroundTruth, m_values: Sequence[int], trials: int = 20,
                           seed: int = 0) -> Dict[str, Any]:
        """
        Median spectral error ‖M − (d1d2/m)·P_Ω(M)‖ over trials for each m

        Passes when the error falls by at least 1.3 per doubling of m at every rung.
        """
        if gt.d > 200:
            raise ValueError('the dense spectral-norm oracle needs d <= 200')
        dense = gt.dense()
        medians = []
        for index, m in enumerate(m_values):
            errors = []
            for trial in range(trials):
                sampler = EntrySampler(gt.d1, gt.d2, seed=seed,
                                       stream=TRIAL_STREAM_BASE + index * trials + trial)
                batch = sampler.sample_init_set(gt, m)
                scaled = scaled_projection(batch, gt.d1 * gt.d2 / m, gt.d1, gt.d2).toarray()
                errors.append(float(np.linalg.norm(dense - scaled, 2)))
            medians.append(float(np.median(errors)))

        rungs = []
        worst_slack = math.inf
        for index in range(1, len(m_values)):
            ratio = medians[index - 1] / medians[index] if medians[index] > 0 else math.inf
            required = 1.3 ** math.log2(m_values[index] / m_values[index - 1])
            worst_slack = min(worst_slack, ratio - required)
            rungs.append({"m": m_values[index], "ratio": ratio, "required": required,
                          "passed": ratio >= required})

        return self._report('init_scaling', all(r["passed"] for r in rungs),
                            m_values=list(m_values), median_errors=medians, rungs=rungs,
                            worst_slack=worst_slack)

    def check_init_threshold(self, gt: GroundTruth, ladder: Optional[Sequence[int]] = None,
                             trials: int = 20, seed: int = 0, required: int = 18) -> Dict[str, Any]:
        """
        Smallest m on a doubling ladder where the warm start meets the σ_min/20
        Frobenius bound in at least `required` of `trials` draws

        The row-norm bound must hold in as many draws at that m. Whether that m
        is below d1·d2/2 is reported as sub_quadratic.
        """
        area = gt.d1 * gt.d2
        if ladder is None:
            ladder = [area * 2 ** p // 16 for p in range(0, 13)]

        rungs = []
        smallest = None
        rows_at_smallest = 0
        for index, m in enumerate(ladder):
            frob_passes = row_passes = failures = 0
            for trial in range(trials):
                sampler = EntrySampler(gt.d1, gt.d2, seed=seed,
                                       stream=TRIAL_STREAM_BASE + 100_000 + index * trials + trial)
                batch = sampler.sample_init_set(gt, m)
                try:
                    if gt.symmetric_psd:
                        state = make_state('psd', initialize_psd(batch, gt.d1, gt.k, seed=seed + trial))
                    else:
                        u0, v0 = initialize_asym(batch, gt.d1, gt.d2, gt.k, seed=seed + trial)
                        state = make_state('asym-practical', u0, v0)
                except (InsufficientSamplesError, SubspaceNotConvergedError):
                    failures += 1
                    continue
                quality = init_quality(gt, state)
                frob_passes += quality["frob_ok"]
                row_passes += quality["rows_ok"]
            rungs.append({"m": int(m), "frob_passes": frob_passes, "row_passes": row_passes,
                          "failures": failures})
            logger.info("init threshold: m=%d frob %d/%d rows %d/%d", m, frob_passes, trials,
                        row_passes, trials)
            if frob_passes >= required:
                smallest = int(m)
                rows_at_smallest = row_passes
                break

        passed = smallest is not None and rows_at_smallest >= required
        return self._report('init_threshold', passed, smallest_m=smallest,
                            m_over_d1d2=None if smallest is None else smallest / area,
                            sub_quadratic=None if smallest is None else smallest <= 0.5 * area,
                            row_passes=rows_at_smallest, rungs=rungs, required=required,
                            trials=trials)

    # ------------------------------------------------------------------
    # Trajectories
    # ------------------------------------------------------------------

    def check_convergence_envelope(self, trace: RunTrace, sigma_min: float,
                                   spectral_norm: float = 1.0,
                                   min_reduction: float = 1e6) -> Dict[str, Any]:
        """
        Geometric decay of f within [1 − 16·η·‖M‖, 1 − 0.1·η·σ_min] per step,
        with an overall reduction of at least min_reduction
        """
        decay = fit_decay(trace.checkpoints)
        lower = 1.0 - 16.0 * trace.eta * spectral_norm
        upper = 1.0 - 0.1 * trace.eta * sigma_min
        factor = decay["decay_factor"]
        in_envelope = math.isfinite(factor) and lower <= factor <= upper
        passed = decay["slope"] < 0 and decay["reduction"] >= min_reduction and in_envelope
        return self._report('convergence_envelope', passed, decay_factor=factor,
                            lower=lower, upper=upper, slope=decay["slope"],
                            reduction=decay["reduction"], steps=trace.steps_done)

    @staticmethod
    def incoherence_bounds(gt: GroundTruth):
        """Init-time row-leverage bounds 10μkκ²/d (PSD) or 10μkκ²/d1, 10μkκ²/d2"""
        problem = stats(gt)
        base = 10.0 * problem.mu * gt.k * problem.kappa ** 2 * problem.spectral_norm
        if gt.symmetric_psd:
            return base / gt.d, None
        return base / gt.d1, base / gt.d2

    def check_incoherence_containment(self, trace: RunTrace, bound_u: float,
                                      bound_v: Optional[float] = None,
                                      multiple: float = 2.0) -> Dict[str, Any]:
        """Traced max row leverage never exceeds multiple × the init-time bound"""
        violations = 0
        worst_slack = math.inf
        for point in trace.checkpoints:
            slack = multiple * bound_u - point.max_g
            if bound_v is not None and point.max_h is not None:
                slack = min(slack, multiple * bound_v - point.max_h)
            worst_slack = min(worst_slack, slack)
            if slack < 0:
                violations += 1
        return self._report('incoherence_containment', violations == 0, violations=violations,
                            checkpoints=len(trace.checkpoints), worst_slack=worst_slack)

    def run_convergence(self, seeds: Iterable[int] = range(5), T: int = 200_000) -> Dict[str, Any]:
        """Acceptance-scale PSD (d=200) and asymmetric practical (150×250) runs per seed"""
        setups = [
            dict(algorithm='psd', d1=200, d2=200, k=3, kappa=2.0),
            dict(algorithm='asym-practical', d1=150, d2=250, k=3, kappa=2.0),
        ]
        runs = []
        for setup in setups:
            for seed in seeds:
                config = RunConfig(T=T, trace_interval=1000, seed=seed, **setup)
                entry = {"algorithm": setup["algorithm"], "seed": seed}
                try:
                    experiment, trace = execute(config)
                except RunError as err:
                    entry.update(passed=False, error=str(err))
                    runs.append(entry)
                    continue
                envelope = self.check_convergence_envelope(trace, experiment.gt.sigma_min)
                containment = self.check_incoherence_containment(trace, *self.incoherence_bounds(experiment.gt))
                entry.update(passed=envelope["passed"] and containment["passed"],
                             envelope=envelope, containment=containment)
                runs.append(entry)
        return self._report('convergence', all(r["passed"] for r in runs), runs=runs)

    # ------------------------------------------------------------------
    # Suite
    # ------------------------------------------------------------------

    def _registry(self, seed: int) -> Dict[str, Callable[[], Dict[str, Any]]]:
        psd30 = lambda: gen_ground_truth(30, 30, 3, kappa_target=2.0, seed=seed, symmetric_psd=True)
        asym30 = lambda: gen_ground_truth(30, 40, 3, kappa_target=2.0, seed=seed)
        psd40 = lambda: gen_ground_truth(40, 40, 3, kappa_target=2.0, seed=seed, symmetric_psd=True)
        asym40 = lambda: gen_ground_truth(40, 40, 3, kappa_target=2.0, seed=seed)
        return {
            'unbiasedness': lambda: self.run_unbiasedness(seed=seed),
            'gradient': lambda: self._combine('gradient', [
                self.check_gradient(gen_ground_truth(20, 20, 3, seed=seed, symmetric_psd=True), seed=seed),
                self.check_gradient(gen_ground_truth(20, 15, 3, seed=seed), seed=seed)]),
            'smoothness': lambda: self._combine('smoothness', [
                self.check_smoothness(psd30(), seed=seed), self.check_smoothness(asym30(), seed=seed)]),
            'pseudo_strong_convexity': lambda: self._combine('pseudo_strong_convexity', [
                self.check_pseudo_strong_convexity(psd30(), seed=seed),
                self.check_pseudo_strong_convexity(asym30(), seed=seed)]),
            'local_region': lambda: self._combine('local_region', [
                self.check_local_region(psd40(), seed=seed), self.check_local_region(asym40(), seed=seed)]),
            'equivalence': lambda: self.check_equivalence(
                gen_ground_truth(30, 40, 3, kappa_target=2.0, seed=seed),
                RunConfig(algorithm='asym-practical', d1=30, d2=40, k=3, kappa=2.0, T=500, seed=seed)),
            'init_scaling': lambda: self.check_init_scaling(
                gen_ground_truth(100, 100, 3, kappa_target=2.0, seed=seed, symmetric_psd=True),
                [1000, 2000, 4000, 8000, 16000], seed=seed),
            'step_cost': lambda: self.check_step_cost(seed=seed),
            'init_threshold': lambda: self.check_init_threshold(
                gen_ground_truth(100, 100, 3, kappa_target=2.0, seed=seed, symmetric_psd=True), seed=seed),
            'convergence': lambda: self.run_convergence(),
        }

    def _combine(self, name: str, reports: List[Dict[str, Any]]) -> Dict[str, Any]:
        slacks = [r["worst_slack"] for r in reports if r.get("worst_slack") is not None]
        return self._report(name, all(r["passed"] for r in reports),
                            worst_slack=min(slacks) if slacks else None, parts=reports)

    def run_suite(self, selection: Optional[Sequence[str]] = None, seed: int = 0) -> Dict[str, Any]:
        """
        Run the selected checks

        Args:
            selection: Check names; None runs DEFAULT_SELECTION, an empty list runs nothing
            seed: Master seed for every check

        Returns:
            {"status": "passed" | "failed", "checks": [...], "selection": [...]}
        """
        registry = self._registry(seed)
        names = list(DEFAULT_SELECTION if selection is None else selection)
        unknown = [n for n in names if n not in registry]
        if unknown:
            raise ValueError(f"unknown checks: {', '.join(unknown)}")

        checks = []
        for name in names:
            start = time.perf_counter()
            report = registry[name]()
            report["seconds"] = time.perf_counter() - start
            logger.info("check %s: %s (%.2fs)", name, 'passed' if report["passed"] else 'FAILED',
                        report["seconds"])
            checks.append(report)

        return {
            "status": "passed" if all(c["passed"] for c in checks) else "failed",
            "selection": names,
            "seed": seed,
            "checks": checks,
        }


ALL_CHECKS = ['unbiasedness', 'gradient', 'smoothness', 'pseudo_strong_convexity', 'local_region',
              'equivalence', 'init_scaling', 'step_cost', 'init_threshold', 'convergence']
# init_threshold and convergence take minutes; they run only when named
DEFAULT_SELECTION = ALL_CHECKS[:8]

verifier = VerificationSuite()
