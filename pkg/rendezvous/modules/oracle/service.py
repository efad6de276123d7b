"""Randomized equivalence suite: IRLS against the LP oracle and the KKT certificates."""
from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from rendezvous.core.errors import RendezvousError
from rendezvous.modules.irls.schemas import IrlsConfig
from rendezvous.modules.irls.service import solve_irls
from rendezvous.modules.oracle.certificates import certificate_l1, certificate_l21
from rendezvous.modules.oracle.schemas import SuiteReport
from rendezvous.modules.oracle.simplex import solve_l1_lp
from rendezvous.modules.orbit.schemas import CONTROL_DIM, STATE_DIM

logger = logging.getLogger(__name__)

L1_GAP = 1e-3
L1_FLOOR = 1e-9
LP_CERTIFICATE_TOL = 1e-6
L21_CERTIFICATE_TOL = 1e-3
PERTURBATION = 1e-2


def suite_config() -> IrlsConfig:
    return IrlsConfig(jmax=20_000, eps_rule="continuation", tau=0.0, scaling="none", weight_rule="block")


def random_instance(rng: np.random.Generator, n_max: int = 10):
    N = int(rng.integers(2, n_max + 1))
    C = rng.standard_normal((STATE_DIM, CONTROL_DIM * N))
    U_true = rng.standard_normal(CONTROL_DIM * N)
    return C, C @ U_true


def run_verification_suite(
    instances: int = 200,
    seed: int = 0,
    n_max: int = 10,
    config: Optional[IrlsConfig] = None,
) -> SuiteReport:
    config = config or suite_config()
    rng = np.random.default_rng(seed)
    report = SuiteReport(instances=instances, seed=seed)
    started = time.perf_counter()

    for index in range(instances):
        C, b = random_instance(rng, n_max)
        try:
            lp = solve_l1_lp(C, b)
            l1 = solve_irls(C, b, config, mode="l1")
            l21 = solve_irls(C, b, config, mode="l21")
        except RendezvousError as exc:
            report.failures.append({"instance": index, "check": "solve", "error": str(exc)})
            logger.warning("suite instance %d failed to solve: %s", index, exc)
            continue

        gap = (l1.norm_l1 - lp.objective) / max(lp.objective, 1.0)
        report.max_l1_gap = max(report.max_l1_gap, gap)
        if lp.objective - L1_FLOOR <= l1.norm_l1 <= (1.0 + L1_GAP) * lp.objective:
            report.l1_within_gap += 1
        else:
            report.failures.append({"instance": index, "check": "l1-gap", "irls": l1.norm_l1, "lp": lp.objective})
            logger.warning("suite instance %d: IRLS l1 %.9f vs LP %.9f", index, l1.norm_l1, lp.objective)

        lp_cert = certificate_l1(C, b, lp.U, LP_CERTIFICATE_TOL)
        if lp_cert.accepted:
            report.lp_certified += 1
        else:
            report.failures.append({"instance": index, "check": "lp-certificate", **lp_cert.to_dict()})
            logger.warning("suite instance %d: LP optimum rejected (%s)", index, lp_cert.reason)

        kernel = null_space(C)
        if kernel.shape[1]:
            direction = kernel @ rng.standard_normal(kernel.shape[1])
            direction *= PERTURBATION * max(1.0, float(np.max(np.abs(lp.U)))) / float(np.max(np.abs(direction)))
            report.perturbed_total += 1
            perturbed = certificate_l1(C, b, lp.U + direction, LP_CERTIFICATE_TOL)
            if not perturbed.accepted:
                report.perturbed_rejected += 1
            else:
                report.failures.append({"instance": index, "check": "perturbed-accepted", **perturbed.to_dict()})
                logger.warning("suite instance %d: perturbed point accepted", index)

        l21_cert = certificate_l21(C, b, l21.U, L21_CERTIFICATE_TOL)
        report.max_l21_violation = max(report.max_l21_violation, l21_cert.max_violation)
        if l21_cert.accepted:
            report.l21_certified += 1
        else:
            report.failures.append({"instance": index, "check": "l21-certificate", **l21_cert.to_dict()})
            logger.warning(
                "suite instance %d: l2/l1 certificate rejected (%s, max violation %.3e)",
                index, l21_cert.reason, l21_cert.max_violation,
            )

    report.elapsed_seconds = time.perf_counter() - started
    logger.info(
        "verification suite: %d instances, l1 %d/%d, lp certificates %d/%d, perturbed rejected %d/%d, l2/l1 %.1f%%",
        instances,
        report.l1_within_gap, instances,
        report.lp_certified, instances,
        report.perturbed_rejected, report.perturbed_total,
        100.0 * report.l21_rate,
    )
    return report
