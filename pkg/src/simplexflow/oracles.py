"""Independent verification oracles and the claim-adjudication matrix.

Every oracle here is deliberately implementation-independent of the code it
checks: derivatives come from central finite differences, the prox step is
certified against a numerical constrained maximizer (cyclic coordinate
ascent in the softmax parameterization), and the literal flow is certified
against its closed-form solution.  Only primitive arithmetic and
log-sum-exp are shared with the checked modules.

``run_adjudication`` assembles the claim matrix: for each claimed property
and each dynamics variant it reports whether the property holds at the
stated tolerance, backed either by a passing statistic or by a concrete
counterexample.  The expected matrix committed under ``data/`` was produced
by this module and is re-derivable with ``--seed`` defaults.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import InvalidInputError, InteriorityError, OracleFailureError
from . import mirror
from .mirror import MirrorStepKind
from . import replicator as rep
from .replicator import FieldKind, IntegratorControls, ConstantSchedule, ExponentialSchedule, PiecewiseConstantSchedule
from .simplex import (
    ScoreVector,
    SimplexPoint,
    check_step_size,
    check_temperature,
    kl_divergence,
    log_partition,
    softmax,
)

DEFAULT_SEED = 20250808
DEFAULT_FD_STEP = 1e-5

#: claim registry: identifier -> behavioral statement being adjudicated
CLAIMS = {
    "prop-ascent": "one-step free-energy gain of at least KL(new, old)/eta",
    "prop-lyapunov": "free energy is nondecreasing along the flow",
    "thm-manifold-3": "softmax is the unique interior equilibrium and attracts",
    "cor-convergence": "interior trajectories converge to softmax",
    "cor-temp-rescale": "temperature schedules reparameterize time along one path",
    "lemma-forward-invariance": "coordinates starting at zero stay exactly zero",
    "cor-faces": "face-restricted runs match the restricted-system runs",
}


# ---------------------------------------------------------------------------
# primitive oracles
# ---------------------------------------------------------------------------


def fd_gradient(f: Callable[[np.ndarray], float], x, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference gradient, componentwise; error O(step^2)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty(x.size)
    for i in range(x.size):
        bump = np.zeros(x.size)
        bump[i] = step
        grad[i] = (f(x + bump) - f(x - bump)) / (2.0 * step)
    return grad


def fd_gradient_checked(
    f: Callable[[np.ndarray], float],
    x,
    step: float = DEFAULT_FD_STEP,
    limit: float = 1e-6,
) -> np.ndarray:
    """Gradient with a Richardson pair at 2*step certifying the O(step^2) model.

    If the two estimates disagree beyond ``limit`` the oracle itself is
    declared broken (wrong step, non-smooth target) and the check aborts.
    """
    g1 = fd_gradient(f, x, step)
    g2 = fd_gradient(f, x, 2.0 * step)
    disc = float(np.max(np.abs(g1 - g2)))
    if disc > limit:
        raise OracleFailureError(
            f"finite-difference pair disagrees by {disc:.3g} (> {limit:.3g})"
        )
    return g1


def fd_jacobian(
    f: Callable[[np.ndarray], np.ndarray], x, step: float = DEFAULT_FD_STEP
) -> np.ndarray:
    """Central-difference Jacobian of a vector map, column by column."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for j in range(x.size):
        bump = np.zeros(x.size)
        bump[j] = step
        cols.append((f(x + bump) - f(x - bump)) / (2.0 * step))
    return np.column_stack(cols)


def closed_form_literal(
    p0: SimplexPoint, s: ScoreVector, temperature: float, t: float
) -> SimplexPoint:
    """Exact solution of the literal flow: p_i(t) proportional to p_i(0) exp(s_i t / T).

    The fitness does not depend on the state, so the flow integrates in
    closed form; this is the integrator's ground truth.  Scores are
    max-shifted before scaling by t so arbitrarily large times stay finite.
    """
    temp = check_temperature(temperature)
    t = float(t)
    if t < 0 or not math.isfinite(t):
        raise InvalidInputError(f"time must be nonnegative and finite, got {t}")
    if t == 0.0:
        return p0
    shifted = (s.values - s.values.max()) * (t / temp)
    with np.errstate(divide="ignore"):
        ell = np.log(p0.probs) + shifted
    m = float(ell.max())
    w = np.exp(ell - m)
    return SimplexPoint(w / w.sum())


def prox_objective_maximizer(
    p: SimplexPoint,
    s: ScoreVector,
    temperature: float,
    eta: float,
    objective_tol: float = 1e-12,
    max_sweeps: int = 500,
) -> SimplexPoint:
    """Numerically maximize <q,s> + T H(q) - D(q||p)/eta over the simplex.

    Cyclic coordinate ascent in the softmax parameterization q = softmax(z):
    with b = s + log(p)/eta and c = T + 1/eta the objective is
    <q, b> - c <q, log q>, and the restriction to one coordinate z_k has a
    unique stationary point available in closed form (the other coordinates
    enter only through their unnormalized weights).  Sweeps stop when the
    objective improves by less than ``objective_tol``; failure to converge
    fails the oracle, never the target under test.
    """
    temp = check_temperature(temperature)
    eta = check_step_size(eta)
    if not p.interior:
        raise InteriorityError("prox objective needs log p, so p must be interior")
    b = s.values + np.log(p.probs) / eta
    c = temp + 1.0 / eta

    def normalized(z: np.ndarray) -> np.ndarray:
        m = float(z.max())
        return z - (m + math.log(float(np.exp(z - m).sum())))

    def objective(z: np.ndarray) -> float:
        ell = normalized(z)
        q = np.exp(ell)
        return float(q @ b) - c * float(q @ ell)

    z = normalized(np.log(p.probs))
    value = objective(z)
    for _ in range(max_sweeps):
        w = np.exp(z)
        weighted = w * (b - c * z)
        total_w = float(w.sum())
        total_weighted = float(weighted.sum())
        moved = 0.0
        for k in range(z.size):
            rest_w = total_w - w[k]
            if rest_w <= 0.0:
                continue
            mu = (total_weighted - weighted[k]) / rest_w
            z_new = (b[k] - mu) / c
            w_new = math.exp(z_new)
            total_w += w_new - w[k]
            total_weighted += w_new * (b[k] - c * z_new) - weighted[k]
            moved = max(moved, abs(z_new - z[k]))
            z[k] = z_new
            w[k] = w_new
            weighted[k] = w_new * (b[k] - c * z_new)
        z = normalized(z)
        new_value = objective(z)
        # objective tolerance alone can leave the argument a few ulps short of
        # stationary, so also require the sweep itself to have stopped moving
        if abs(new_value - value) < objective_tol and moved < 1e-10:
            return SimplexPoint(np.exp(normalized(z)))
        value = new_value
    raise OracleFailureError(
        f"prox maximizer did not converge within {max_sweeps} sweeps"
    )


# ---------------------------------------------------------------------------
# reproducible random instances
# ---------------------------------------------------------------------------

#: vocabulary sizes used by the stochastic property runs
INSTANCE_SIZES = (2, 3, 8, 64, 1000)


def random_scores(rng: np.random.Generator, size: int) -> ScoreVector:
    """Scores i.i.d. uniform on [-3, 3]."""
    return ScoreVector(rng.uniform(-3.0, 3.0, int(size)))


def random_interior_point(rng: np.random.Generator, size: int) -> SimplexPoint:
    return SimplexPoint(rng.dirichlet(np.ones(int(size))))


# ---------------------------------------------------------------------------
# oracle self-tests (run before any cross-check)
# ---------------------------------------------------------------------------


def oracle_self_test() -> list:
    """Exercise each oracle on inputs with independently known answers.

    Returns a list of (name, detail) entries; raises OracleFailureError on
    the first failure.  A broken oracle certifies nothing, so adjudication
    refuses to run until this passes.
    """
    results = []

    def check(name: str, ok: bool, detail: str):
        if not ok:
            raise OracleFailureError(f"oracle self-test failed: {name} ({detail})")
        results.append((name, detail))

    coeffs = np.array([2.0, -1.0, 0.5])
    grad = fd_gradient(lambda v: float(coeffs @ v), np.array([0.3, -0.2, 1.0]))
    check(
        "fd-linear",
        bool(np.max(np.abs(grad - coeffs)) < 1e-9),
        f"max err {np.max(np.abs(grad - coeffs)):.3g}",
    )

    s10 = ScoreVector([1.0, 0.0])
    grad_a = fd_gradient_checked(lambda v: log_partition(ScoreVector(v), 1.0), s10.values)
    err = float(np.max(np.abs(grad_a - softmax(s10, 1.0).probs)))
    check("fd-log-partition", err < 1e-6, f"max err {err:.3g}")

    grad_shift = fd_gradient(
        lambda v: log_partition(ScoreVector(v), 1.0), s10.values + 3.0
    )
    err = float(np.max(np.abs(grad_shift - grad_a)))
    check("fd-shift-invariance", err < 1e-6, f"max err {err:.3g}")

    p0 = SimplexPoint([0.5, 0.3, 0.2])
    s3 = ScoreVector([1.0, 0.0, -1.0])
    same = closed_form_literal(p0, s3, 1.0, 0.0)
    check(
        "closed-form-at-zero",
        bool(np.max(np.abs(same.probs - p0.probs)) == 0.0),
        "t=0 returns the start",
    )
    frozen = closed_form_literal(p0, ScoreVector([2.0, 2.0, 2.0]), 1.0, 7.5)
    check(
        "closed-form-constant-scores",
        bool(np.max(np.abs(frozen.probs - p0.probs)) < 1e-15),
        "constant scores freeze the flow",
    )
    vertex = closed_form_literal(p0, s3, 1.0, 1e6)
    check(
        "closed-form-vertex-limit",
        abs(vertex.probs[0] - 1.0) < 1e-12,
        f"mass on argmax {vertex.probs[0]!r}",
    )

    near_start = prox_objective_maximizer(p0, s3, 1.0, 1e-9)
    err = float(np.max(np.abs(near_start.probs - p0.probs)))
    check("prox-maximizer-small-eta", err < 1e-7, f"max err {err:.3g}")
    near_softmax = prox_objective_maximizer(p0, s3, 1.0, 1e9)
    err = float(np.max(np.abs(near_softmax.probs - softmax(s3, 1.0).probs)))
    check("prox-maximizer-large-eta", err < 1e-7, f"max err {err:.3g}")

    return results


# ---------------------------------------------------------------------------
# claim adjudication
# ---------------------------------------------------------------------------


@dataclass
class ClaimVerdict:
    claim_id: str
    dynamics: str
    holds: bool
    tolerance: float
    witness: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "dynamics": self.dynamics,
            "statement": CLAIMS[self.claim_id],
            "holds": self.holds,
            "tolerance": self.tolerance,
            "witness": self.witness,
        }


def _entropic_batch(rng: np.random.Generator, n_runs: int):
    """Shared convergence/monotonicity evidence for the entropic field."""
    controls = IntegratorControls(n_samples=60)
    terminal_kls = []
    worst_drop = 0.0
    temperatures = (0.25, 1.0, 4.0)
    for i in range(n_runs):
        size = int(rng.choice((2, 3, 8)))
        s = random_scores(rng, size)
        p0 = random_interior_point(rng, size)
        temp = temperatures[i % len(temperatures)]
        traj = rep.integrate(FieldKind.ENTROPIC, p0, s, temp, 1e3, controls)
        terminal_kls.append(kl_divergence(traj.terminal.p, softmax(s, temp)))
        report = rep.lyapunov_report(traj, s, temp)
        worst_drop = min(worst_drop, report.worst_drop)
    return float(max(terminal_kls)), float(worst_drop)


def _literal_from_softmax(rng: np.random.Generator):
    """Literal-field run started exactly at softmax; the adjudication witness."""
    s = ScoreVector([1.0, 0.0])
    temp = 1.0
    pi = softmax(s, temp)
    field_at_pi = rep.eval_field(FieldKind.LITERAL, pi, s, temp)
    controls = IntegratorControls(n_samples=80)
    traj = rep.integrate(FieldKind.LITERAL, pi, s, temp, 50.0, controls)
    report = rep.lyapunov_report(traj, s, temp)
    terminal = traj.terminal.p
    return {
        "scores": s.values.tolist(),
        "temperature": temp,
        "softmax": pi.probs.tolist(),
        "field_norm_at_softmax": float(np.max(np.abs(field_at_pi))),
        "free_energy_worst_drop": report.worst_drop,
        "terminal_point": terminal.probs.tolist(),
        "terminal_kl_to_softmax": kl_divergence(terminal, pi),
        "terminal_mass_on_argmax": float(terminal.probs[0]),
    }


def run_adjudication(
    seed: int = DEFAULT_SEED, include: Optional[Sequence[str]] = None
) -> list:
    """Produce the full claim matrix; see module docstring.

    ``include`` filters by claim id; unknown ids raise InvalidInputError.
    Oracle self-tests run first and abort everything on failure.
    """
    if include is not None:
        unknown = sorted(set(include) - set(CLAIMS))
        if unknown:
            raise InvalidInputError(f"unknown claim ids: {', '.join(unknown)}")
        wanted = set(include)
    else:
        wanted = set(CLAIMS)

    oracle_self_test()
    rng = np.random.default_rng(seed)
    verdicts: list[ClaimVerdict] = []

    if "prop-ascent" in wanted:
        worst_slack = math.inf
        checked = 0
        for size in (2, 3, 8, 64):
            for _ in range(100):
                s = random_scores(rng, size)
                p = random_interior_point(rng, size)
                temp = float(rng.uniform(0.25, 4.0))
                eta = float(rng.uniform(0.05, 2.0))
                cert = mirror.ascent_certificate(MirrorStepKind.EXACT_PROX, p, s, temp, eta)
                worst_slack = min(worst_slack, cert.slack)
                checked += 1
        verdicts.append(
            ClaimVerdict(
                claim_id="prop-ascent",
                dynamics=MirrorStepKind.EXACT_PROX.value,
                holds=bool(worst_slack >= -1e-10),
                tolerance=1e-10,
                witness={"trials": checked, "worst_slack": worst_slack, "seed": seed},
            )
        )
        s_wit = ScoreVector([1.0, 0.0])
        pi = softmax(s_wit, 1.0)
        cert = mirror.ascent_certificate(MirrorStepKind.PRINTED_MW, pi, s_wit, 1.0, 0.5)
        verdicts.append(
            ClaimVerdict(
                claim_id="prop-ascent",
                dynamics=MirrorStepKind.PRINTED_MW.value,
                holds=bool(cert.slack >= -1e-10 and cert.f_after >= cert.f_before),
                tolerance=1e-10,
                witness={
                    "start": "softmax((1,0), T=1)",
                    "f_before": cert.f_before,
                    "f_after": cert.f_after,
                    "slack": cert.slack,
                    "note": "free energy strictly decreases on the first step",
                },
            )
        )

    needs_entropic = wanted & {"prop-lyapunov", "thm-manifold-3", "cor-convergence"}
    if needs_entropic:
        worst_kl, worst_drop = _entropic_batch(rng, n_runs=60)
        literal_wit = _literal_from_softmax(rng)
        if "prop-lyapunov" in wanted:
            verdicts.append(
                ClaimVerdict(
                    claim_id="prop-lyapunov",
                    dynamics=FieldKind.ENTROPIC.value,
                    holds=bool(worst_drop >= -1e-9),
                    tolerance=1e-9,
                    witness={"runs": 60, "worst_drop": worst_drop, "seed": seed},
                )
            )
            verdicts.append(
                ClaimVerdict(
                    claim_id="prop-lyapunov",
                    dynamics=FieldKind.LITERAL.value,
                    holds=bool(literal_wit["free_energy_worst_drop"] >= -1e-9),
                    tolerance=1e-9,
                    witness=literal_wit,
                )
            )
        if "thm-manifold-3" in wanted:
            verdicts.append(
                ClaimVerdict(
                    claim_id="thm-manifold-3",
                    dynamics=FieldKind.ENTROPIC.value,
                    holds=bool(worst_kl < 1e-8),
                    tolerance=1e-8,
                    witness={"runs": 60, "worst_terminal_kl": worst_kl, "seed": seed},
                )
            )
            verdicts.append(
                ClaimVerdict(
                    claim_id="thm-manifold-3",
                    dynamics=FieldKind.LITERAL.value,
                    holds=bool(literal_wit["field_norm_at_softmax"] <= 1e-12),
                    tolerance=1e-12,
                    witness=literal_wit,
                )
            )
        if "cor-convergence" in wanted:
            verdicts.append(
                ClaimVerdict(
                    claim_id="cor-convergence",
                    dynamics=FieldKind.ENTROPIC.value,
                    holds=bool(worst_kl < 1e-8),
                    tolerance=1e-8,
                    witness={"runs": 60, "worst_terminal_kl": worst_kl, "seed": seed},
                )
            )
            verdicts.append(
                ClaimVerdict(
                    claim_id="cor-convergence",
                    dynamics=FieldKind.LITERAL.value,
                    holds=bool(literal_wit["terminal_kl_to_softmax"] < 1e-8),
                    tolerance=1e-8,
                    witness=literal_wit,
                )
            )

    if "cor-temp-rescale" in wanted:
        s = random_scores(rng, 3)
        p0 = random_interior_point(rng, 3)
        controls = IntegratorControls(rel_tol=1e-10, abs_tol=1e-12, n_samples=40)
        schedules = {
            "constant": ConstantSchedule(2.0),
            "piecewise": PiecewiseConstantSchedule((1.0,), (1.0, 0.5)),
            "exponential": ExponentialSchedule(1.0, 0.3),
        }
        deviations = {
            name: rep._reparameterization_deviation(
                FieldKind.LITERAL, s, p0, sched, 5.0, controls
            )
            for name, sched in schedules.items()
        }
        verdicts.append(
            ClaimVerdict(
                claim_id="cor-temp-rescale",
                dynamics=FieldKind.LITERAL.value,
                holds=bool(max(deviations.values()) < 1e-7),
                tolerance=1e-7,
                witness={"deviations": deviations, "seed": seed},
            )
        )
        entropic_dev = rep._reparameterization_deviation(
            FieldKind.ENTROPIC, s, p0, ConstantSchedule(2.0), 5.0, controls
        )
        verdicts.append(
            ClaimVerdict(
                claim_id="cor-temp-rescale",
                dynamics=FieldKind.ENTROPIC.value,
                holds=bool(entropic_dev < 1e-7),
                tolerance=1e-7,
                witness={
                    "constant_schedule_deviation": entropic_dev,
                    "note": "temperature also enters the entropic fitness, so the "
                    "scheduled flow is not a time reparameterization",
                },
            )
        )

    if "lemma-forward-invariance" in wanted:
        probs = np.array([0.4, 0.0, 0.35, 0.25, 0.0])
        p0 = SimplexPoint(probs)
        s = random_scores(rng, 5)
        traj = rep.integrate(
            FieldKind.LITERAL, p0, s, 1.0, 50.0, IntegratorControls(n_samples=60)
        )
        off_face = [sample.p.probs[[1, 4]] for sample in traj.samples]
        stayed_zero = bool(all(np.all(v == 0.0) for v in off_face))
        verdicts.append(
            ClaimVerdict(
                claim_id="lemma-forward-invariance",
                dynamics=FieldKind.LITERAL.value,
                holds=stayed_zero,
                tolerance=0.0,
                witness={
                    "zero_coordinates": [1, 4],
                    "samples_checked": len(traj.samples),
                    "stayed_exactly_zero": stayed_zero,
                    "seed": seed,
                },
            )
        )

    if "cor-faces" in wanted:
        from .simplex import build_face_topk, embed_in_face, restrict_to_face

        s = random_scores(rng, 5)
        mask = build_face_topk(s, 3)
        p_face = SimplexPoint(rng.dirichlet(np.ones(3)))
        s_face, _ = restrict_to_face(s, embed_in_face(mask, p_face), mask)
        grid = tuple(np.linspace(0.0, 20.0, 21))
        controls = IntegratorControls(sample_times=grid, convergence_kl=0.0)
        full = rep.integrate(
            FieldKind.LITERAL, embed_in_face(mask, p_face), s, 1.0, 20.0, controls
        )
        restricted = rep.integrate(FieldKind.LITERAL, p_face, s_face, 1.0, 20.0, controls)
        gap = max(
            float(np.max(np.abs(a.p.probs[mask.support] - b.p.probs)))
            for a, b in zip(full.samples, restricted.samples)
        )
        verdicts.append(
            ClaimVerdict(
                claim_id="cor-faces",
                dynamics=FieldKind.LITERAL.value,
                holds=bool(gap < 1e-8),
                tolerance=1e-8,
                witness={"max_gap": gap, "face": mask.indices.tolist(), "seed": seed},
            )
        )

    verdicts.sort(key=lambda v: (v.claim_id, v.dynamics))
    return verdicts


def matrix_from_verdicts(verdicts: Sequence[ClaimVerdict]) -> dict:
    matrix: dict = {}
    for v in verdicts:
        matrix.setdefault(v.claim_id, {})[v.dynamics] = v.holds
    return matrix


def expected_claim_matrix() -> dict:
    """The committed claim matrix this build must reproduce."""
    payload = (
        importlib.resources.files("simplexflow")
        .joinpath("data/expected_claims.json")
        .read_text()
    )
    return json.loads(payload)


def compare_to_expected(
    verdicts: Sequence[ClaimVerdict], expected: Optional[dict] = None
) -> list:
    """Human-readable mismatch list between verdicts and the committed matrix."""
    if expected is None:
        expected = expected_claim_matrix()
    got = matrix_from_verdicts(verdicts)
    problems = []
    for claim_id, row in got.items():
        for dynamics, holds in row.items():
            want = expected.get(claim_id, {}).get(dynamics)
            if want is None:
                problems.append(f"{claim_id}/{dynamics}: not in the committed matrix")
            elif want != holds:
                problems.append(
                    f"{claim_id}/{dynamics}: got holds={holds}, committed matrix says {want}"
                )
    return problems
