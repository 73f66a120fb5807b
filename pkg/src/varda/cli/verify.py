"""Oracle suites behind ``varda verify``.

Each check draws its instances from a generator seeded by (suite seed, check
code), compares a closed form or an optimized routine against a brute-force
reference and reports the worst error it saw.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..data import SynthSpec, assd, brute_assd, brute_dice, dice, generate, one_hot
from ..errors import ContractViolation
from ..gaussian import (
    DiagGaussianBatch,
    kl_to_standard_normal,
    mixture_l2_distance,
    pair_kernel,
    sliced_l2_distance,
)
from ..gaussian.oracles import (
    monte_carlo_kl,
    naive_pair_kernel,
    quad_mixture_l2,
    quad_pair_kernel,
    quad_sliced_l2,
)
from ..networks import NetConfig, ParameterSet, init_params
from ..objectives import source_elbo_loss, target_elbo_loss, total_loss
from ..tensor import (
    Tensor,
    get_default_dtype,
    grad_check,
    grad_check_params,
    ops,
    set_default_dtype,
)
from ..trainer import TrainConfig, train
from ..types import LossWeights

logger = logging.getLogger(__name__)

KernelFn = Callable[[DiagGaussianBatch, DiagGaussianBatch], Tensor]

NODES_1D = 4001
NODES_2D = 1001
SPOT_KERNEL = 1.0 / (2.0 * math.sqrt(math.pi))
SPOT_MIXTURE = 0.3566358


def _plain(value: Any) -> Any:
    """Numpy scalars and arrays inside a report turned into JSON types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.generic, np.ndarray)):
        return value.tolist()
    return value


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    instances: int
    seconds: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.passed = bool(self.passed)
        self.max_error = float(self.max_error)
        self.tolerance = float(self.tolerance)
        self.instances = int(self.instances)
        self.details = _plain(self.details)


@dataclass
class VerifyReport:
    seed: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "failures": self.failures,
            "checks": [asdict(c) for c in self.checks],
        }


def _gaussian(means, variances) -> DiagGaussianBatch:
    return DiagGaussianBatch.from_variances(np.atleast_2d(means), np.atleast_2d(variances))


def _batch_from(x: Tensor, offset: int = 0) -> DiagGaussianBatch:
    return DiagGaussianBatch(ops.take(x, offset, axis=0), ops.take(x, offset + 1, axis=0))


class VerifySuite:
    """The full oracle battery.

    ``kernel_fn`` is the pair-kernel implementation under test; swapping in a
    broken one must make the kernel checks fail.
    """

    CHECKS = (
        "kernel_quadrature",
        "mixture_quadrature",
        "kl_monte_carlo",
        "zero_iff_identical",
        "kernel_stability",
        "gradients",
        "metric_oracles",
        "determinism",
    )

    def __init__(
        self,
        seed: int = 0,
        *,
        kernel_fn: KernelFn = pair_kernel,
        kernel_instances: int = 500,
        mixture_instances: int = 40,
        kl_instances: int = 50,
        kl_samples: int = 1_000_000,
        zero_instances: int = 200,
        mask_instances: int = 200,
        grad_tol: float = 1e-4,
    ):
        self.seed = seed
        self.kernel_fn = kernel_fn
        self.kernel_instances = kernel_instances
        self.mixture_instances = mixture_instances
        self.kl_instances = kl_instances
        self.kl_samples = kl_samples
        self.zero_instances = zero_instances
        self.mask_instances = mask_instances
        self.grad_tol = grad_tol

    def _rng(self, code: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, code])

    def run(self, only: list[str] | None = None) -> VerifyReport:
        names = list(only) if only else list(self.CHECKS)
        unknown = set(names) - set(self.CHECKS)
        if unknown:
            raise ContractViolation(f"unknown checks: {sorted(unknown)}")
        report = VerifyReport(self.seed)
        saved = get_default_dtype().name
        set_default_dtype("float64")
        try:
            for name in names:
                started = time.perf_counter()
                result: CheckResult = getattr(self, f"check_{name}")()
                result.seconds = time.perf_counter() - started
                level = logging.INFO if result.passed else logging.ERROR
                logger.log(
                    level,
                    f"{name}: {'PASS' if result.passed else 'FAIL'} "
                    f"max_error={result.max_error:.3g} tol={result.tolerance:g} "
                    f"({result.instances} instances, {result.seconds:.1f}s)",
                )
                report.checks.append(result)
        finally:
            set_default_dtype(saved)
        return report

    def check_kernel_quadrature(self) -> CheckResult:
        rng = self._rng(1)
        worst = 0.0
        for i in range(self.kernel_instances):
            n = 1 + i % 2
            u1, u2 = rng.uniform(-2.0, 2.0, n), rng.uniform(-2.0, 2.0, n)
            v1, v2 = rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, n)
            value = self.kernel_fn(_gaussian(u1, v1), _gaussian(u2, v2)).item()
            nodes = NODES_1D if n == 1 else NODES_2D
            worst = max(worst, abs(value - quad_pair_kernel(u1, v1, u2, v2, nodes)))
        spot = self.kernel_fn(_gaussian([0.0], [1.0]), _gaussian([0.0], [1.0])).item()
        spot_err = abs(spot - SPOT_KERNEL)
        tol = 1e-8
        return CheckResult(
            "kernel_quadrature",
            worst < tol and spot_err < tol,
            max(worst, spot_err),
            tol,
            self.kernel_instances,
            details={"spot_value": spot},
        )

    def check_mixture_quadrature(self) -> CheckResult:
        rng = self._rng(2)
        full_err = sliced_err = 0.0
        for i in range(self.mixture_instances):
            m, n = 1 + i % 4, 1 + (i // 4) % 2
            su, tu = rng.uniform(-1.5, 1.5, (m, n)), rng.uniform(-1.5, 1.5, (m, n))
            sv, tv = rng.uniform(0.5, 2.0, (m, n)), rng.uniform(0.5, 2.0, (m, n))
            s, t = _gaussian(su, sv), _gaussian(tu, tv)
            nodes = NODES_1D if n == 1 else NODES_2D
            full = quad_mixture_l2(su, sv, tu, tv, nodes)
            full_err = max(full_err, abs(mixture_l2_distance(s, t).item() - full))
            sliced = quad_sliced_l2(su, sv, tu, tv, NODES_1D)
            sliced_err = max(sliced_err, abs(sliced_l2_distance(s, t).item() - sliced))
        spot = mixture_l2_distance(_gaussian([0.0], [1.0]), _gaussian([2.0], [1.0])).item()
        spot_err = abs(spot - SPOT_MIXTURE)
        tol = 1e-6
        worst = max(full_err, sliced_err)
        return CheckResult(
            "mixture_quadrature",
            worst < tol and spot_err < 1e-7,
            max(worst, spot_err),
            tol,
            self.mixture_instances,
            details={"full": full_err, "sliced": sliced_err, "spot_value": spot},
        )

    def check_kl_monte_carlo(self) -> CheckResult:
        rng = self._rng(3)
        worst = 0.0
        for i in range(self.kl_instances):
            n = 1 + i % 3
            u = rng.choice([-1.0, 1.0], n) * rng.uniform(0.8, 1.5, n)
            lam = rng.uniform(0.5, 2.0, n)
            closed = kl_to_standard_normal(_gaussian(u, lam)).item()
            estimate = monte_carlo_kl(u, lam, self.kl_samples, rng)
            worst = max(worst, abs(estimate - closed) / closed)
        tol = 0.01
        return CheckResult("kl_monte_carlo", worst < tol, worst, tol, self.kl_instances)

    def check_zero_iff_identical(self) -> CheckResult:
        rng = self._rng(4)
        violations = 0
        smallest_gap = math.inf
        for i in range(self.zero_instances):
            n = 1 + i % 4
            u, lam = rng.uniform(-2.0, 2.0, (1, n)), rng.uniform(0.5, 2.0, (1, n))
            s = _gaussian(u, lam)
            if i % 2 == 0:
                t = _gaussian(u.copy(), lam.copy())
                full, sliced = mixture_l2_distance(s, t).item(), sliced_l2_distance(s, t).item()
                violations += int(full != 0.0 or sliced != 0.0)
                continue
            u2, lam2 = u.copy(), lam.copy()
            j = int(rng.integers(n))
            if rng.random() < 0.5:
                u2[0, j] += rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 1.0)
            else:
                lam2[0, j] *= rng.uniform(1.2, 2.0)
            t = _gaussian(u2, lam2)
            full, sliced = mixture_l2_distance(s, t).item(), sliced_l2_distance(s, t).item()
            smallest_gap = min(smallest_gap, full, sliced)
            violations += int(not (full > 0.0 and sliced > 0.0))
        return CheckResult(
            "zero_iff_identical",
            violations == 0,
            float(violations),
            0.0,
            self.zero_instances,
            details={"smallest_distinct_distance": smallest_gap},
        )

    def check_kernel_stability(self) -> CheckResult:
        rng = self._rng(5)
        n = 256
        u1, u2 = 0.5 * rng.standard_normal(n), 0.5 * rng.standard_normal(n)
        v1, v2 = rng.uniform(0.5, 1.5, n), rng.uniform(0.5, 1.5, n)
        value = self.kernel_fn(_gaussian(u1, v1), _gaussian(u2, v2)).item()
        naive = naive_pair_kernel(u1, v1, u2, v2)
        stable = math.isfinite(value) and value > 0.0
        naive_broken = naive == 0.0 or not math.isfinite(naive)
        return CheckResult(
            "kernel_stability",
            stable and naive_broken,
            0.0 if stable else math.inf,
            0.0,
            1,
            details={"log_space": value, "naive_float32": naive, "n": n},
        )

    def _grad_fixture(self) -> tuple[ParameterSet, dict[str, np.ndarray]]:
        config = NetConfig(
            height=8, width=8, hidden=4, encoder_blocks=2, latent_channels=2, seed=self.seed
        )
        params = init_params(config)
        rng = self._rng(6)
        m, n = 2, config.latent_dim
        labels = rng.integers(0, config.num_classes, (m, config.height, config.width))
        batch = {
            "xs": rng.uniform(0.0, 1.0, (m, config.channels, config.height, config.width)),
            "ys": np.stack([one_hot(lab, config.num_classes) for lab in labels]),
            "xt": rng.uniform(0.0, 1.0, (m, config.channels, config.height, config.width)),
            "eps_s": rng.standard_normal((m, 1, n)),
            "eps_t": rng.standard_normal((m, 1, n)),
            "gauss": rng.uniform(-1.0, 1.0, (4, m, n)),
        }
        return params, batch

    def check_gradients(self) -> CheckResult:
        params, b = self._grad_fixture()
        xs, ys, xt = Tensor(b["xs"]), Tensor(b["ys"]), Tensor(b["xt"])
        atol = 1e-8

        def roles(*names: str) -> dict[str, Tensor]:
            out: dict[str, Tensor] = {}
            for name in names:
                out.update(params.by_role(name))
            return out

        errors = {
            "kl": grad_check(
                lambda x: ops.sum(kl_to_standard_normal(_batch_from(x))), b["gauss"][:2], atol=atol
            ),
            "mixture_l2": grad_check(
                lambda x: mixture_l2_distance(_batch_from(x), _batch_from(x, 2)),
                b["gauss"],
                atol=atol,
            ),
            "sliced_l2": grad_check(
                lambda x: sliced_l2_distance(_batch_from(x), _batch_from(x, 2)),
                b["gauss"],
                atol=atol,
            ),
        }
        per_param = {
            "source_elbo": grad_check_params(
                lambda: source_elbo_loss(params, xs, ys, b["eps_s"])[0],
                roles("encoder_S", "decoder_S", "segmentor_shared"),
                max_coords=8,
                seed=self.seed,
                atol=atol,
            ),
            "target_elbo": grad_check_params(
                lambda: target_elbo_loss(params, xt, b["eps_t"])[0],
                roles("encoder_T", "decoder_T", "segmentor_shared"),
                max_coords=8,
                seed=self.seed,
                atol=atol,
            ),
            "total": grad_check_params(
                lambda: total_loss(
                    params, (xs, ys), xt, LossWeights(), b["eps_s"], b["eps_t"]
                ).tensor,
                dict(params.items()),
                max_coords=8,
                seed=self.seed,
                atol=atol,
            ),
        }
        for term, report in per_param.items():
            errors[term] = max(report.values())
        worst = max(errors.values())
        return CheckResult(
            "gradients",
            worst < self.grad_tol,
            worst,
            self.grad_tol,
            len(errors),
            details={"max_rel_err": errors},
        )

    def check_metric_oracles(self) -> CheckResult:
        rng = self._rng(7)
        mismatches = 0
        undefined = 0
        for i in range(self.mask_instances):
            density_p, density_t = rng.uniform(0.05, 0.7, 2)
            pred = rng.random((16, 16)) < density_p
            truth = rng.random((16, 16)) < density_t
            if i % 25 == 0:
                pred[:] = False
            if i % 40 == 7:
                truth[:] = False
            got_dice = dice(pred, truth).value
            got_assd = assd(pred, truth)
            want_assd = brute_assd(pred, truth)
            undefined += int(want_assd is None)
            mismatches += int(got_dice != brute_dice(pred, truth))
            mismatches += int(got_assd != want_assd)
        return CheckResult(
            "metric_oracles",
            mismatches == 0,
            float(mismatches),
            0.0,
            self.mask_instances,
            details={"undefined_assd": undefined},
        )

    def check_determinism(self) -> CheckResult:
        spec = SynthSpec(
            height=16, width=16, n_source=6, n_target_train=6, n_target_test=2, seed=self.seed
        )
        first, second = generate(spec), generate(spec)
        data_equal = all(
            np.array_equal(a.images(), b.images())
            and (not a.has_labels or np.array_equal(a.label_maps(), b.label_maps()))
            for a, b in zip(first.splits(), second.splits())
        )

        net = NetConfig(height=16, width=16, hidden=4, encoder_blocks=2, seed=self.seed)
        runs = []
        for prefetch in (0, 0, 2):
            config = TrainConfig(
                batch_size=2, iterations=4, log_every=10, prefetch=prefetch, seed=self.seed
            )
            result = train(config, first.source, first.target_train, net_config=net)
            runs.append([h.total for h in result.history])
        losses_equal = runs[0] == runs[1] == runs[2]
        return CheckResult(
            "determinism",
            data_equal and losses_equal,
            0.0 if data_equal and losses_equal else 1.0,
            0.0,
            len(runs),
            details={"dataset_equal": data_equal, "loss_curves_equal": losses_equal},
        )
