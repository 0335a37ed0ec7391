"""Two-layer mean-field steady states and exact infection-probability oracles.

The closed-form infection probability treats a node's contacts through its
two-layer profile; the exact oracle enumerates transmission-count
distributions neighbor by neighbor and works for any threshold. Verification
helpers compare multiplexed/de-multiplexed configurations and report whether
the observed orderings match the predicted regime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .multigraph import MultiGraph, layer_set, neighbors
from .multiplexity import Profile, ProfileDistribution, find_demultiplex_move
from .transmission import TransmissionModel, corr_condition, transmission_pmf
from . import multiplexity


@dataclass(frozen=True)
class SteadyState:
    rho: float
    per_profile: dict[Profile, float]
    iterations: int
    residual: float


@dataclass(frozen=True)
class PropositionReport:
    """Outcome of one numerical proposition check."""

    proposition: str
    condition: str
    ordering: str          # 'less_mpx_higher' | 'more_mpx_higher' | 'equal'
    margin: float          # P(less multiplexed) - P(more multiplexed), or rho gap
    passed: bool | None    # None when inconclusive
    conclusive: bool = True
    details: dict = field(default_factory=dict)


EQUALITY_TOL = 1e-12


def infection_prob_profile(d: Profile, rho: float, model: TransmissionModel) -> float:
    """Steady-state infection probability for a susceptible node with profile d.

    One minus the product of per-neighbor no-transmission factors: (1 - rho*qA)
    per A-only neighbor, (1 - rho*qB) per B-only, and
    (1 - rho*(qA + qB - f2)) per neighbor linked on both layers.
    """
    qa, qb, f2 = model.two_layer_params()
    none_a = (1.0 - rho * qa) ** d.dA
    none_b = (1.0 - rho * qb) ** d.dB
    none_ab = (1.0 - rho * (qa + qb - f2)) ** d.dAB
    return 1.0 - none_a * none_b * none_ab


def steady_state_profile(d: Profile, rho: float, delta: float,
                         model: TransmissionModel) -> float:
    """Per-profile steady infection rate: the balance point pi / (pi + delta)."""
    pi = infection_prob_profile(d, rho, model)
    if pi == 0.0:
        return 0.0
    if delta == 0.0:
        return 1.0
    return pi / (pi + delta)


def profile_neighbor_sets(d: Profile) -> list[frozenset[int]]:
    """Canonical neighbor realization of a profile: singletons plus doubletons."""
    return ([frozenset({0})] * d.dA + [frozenset({1})] * d.dB
            + [frozenset({0, 1})] * d.dAB)


def individual_infection_prob_exact(neighbor_layer_sets: list[frozenset[int]],
                                    rho: float, model: TransmissionModel,
                                    tau: int) -> float:
    """Exact P(at least tau transmissions) for one susceptible node.

    Each neighbor is infected independently with probability rho; its
    transmission count then follows the contact pmf over its layer set. The
    total-count distribution is the convolution across neighbors.
    """
    if tau < 1:
        raise ValueError("threshold tau must be >= 1")
    if not neighbor_layer_sets:
        raise ValueError("need at least one neighbor")
    total = np.array([1.0])
    for s in neighbor_layer_sets:
        contact = transmission_pmf(model, sorted(s))
        pmf = rho * contact
        pmf[0] += 1.0 - rho
        total = np.convolve(total, pmf)
    return float(total[tau:].sum())


def solve_steady_state(dist: ProfileDistribution, delta: float,
                       model: TransmissionModel, tau: int = 1,
                       tol: float = 1e-12, max_iters: int = 10 ** 6) -> SteadyState:
    """Largest steady-state infection rate of the population fixed point.

    Iterates rho -> sum_D P(D) * pi(D, rho) / (pi(D, rho) + delta) downward
    from rho = 1; the map is monotone in rho, so the iterates decrease to the
    largest fixed point. Returns rho = 0 when no positive fixed point exists.
    For tau > 1 the per-profile infection probability comes from the exact
    oracle on the profile's canonical neighbor realization.
    """
    if delta <= 0.0 or delta > 1.0:
        raise ValueError("delta must lie in (0, 1]")
    support = dist.support()
    masses = np.array([dist.mass(p) for p in support])

    def pi_of(p: Profile, rho: float) -> float:
        if (p.dA, p.dB, p.dAB) == (0, 0, 0):
            return 0.0
        if tau == 1:
            return infection_prob_profile(p, rho, model)
        return individual_infection_prob_exact(profile_neighbor_sets(p), rho, model, tau)

    def step(rho: float) -> float:
        pis = np.array([pi_of(p, rho) for p in support])
        return float((masses * pis / (pis + delta)).sum())

    rho = 1.0
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new = step(rho)
        gap = abs(new - rho)
        rho = new
        if rho < tol:
            rho = 0.0
            break
        if gap < tol:
            break

    per_profile = {p: (pi_of(p, rho) / (pi_of(p, rho) + delta) if pi_of(p, rho) > 0 else 0.0)
                   for p in support}
    residual = abs(step(rho) - rho)
    return SteadyState(rho=rho, per_profile=per_profile,
                       iterations=iterations, residual=residual)


def _node_sets(g: MultiGraph, i: int) -> list[frozenset[int]]:
    return [layer_set(g, i, j) for j in sorted(neighbors(g, i))]


def _check_model_graph(model: TransmissionModel, g: MultiGraph) -> None:
    if model.layer_names != g.layer_names:
        raise ValueError(f"model layers {model.layer_names} do not match graph layers "
                         f"{g.layer_names}")


def verify_simple_individual(g: MultiGraph, g_hat: MultiGraph, i: int, rho: float,
                             model: TransmissionModel) -> PropositionReport:
    """Check the simple-contagion individual ordering against the correlation condition.

    Requires g_hat to differ from g by a single dominance move at node i.
    The exact infection probabilities must order the way qA*qB*rho <= f2
    predicts, with equality on the boundary.
    """
    _check_model_graph(model, g)
    move = multiplexity.is_dominance_move(g, g_hat)
    if move is None or move.i != i:
        raise ValueError("g_hat is not one dominance move below g at node i")
    p_g = individual_infection_prob_exact(_node_sets(g, i), rho, model, tau=1)
    p_hat = individual_infection_prob_exact(_node_sets(g_hat, i), rho, model, tau=1)
    margin = p_hat - p_g

    qa, qb, f2 = model.two_layer_params()
    boundary = abs(qa * qb * rho - f2) <= EQUALITY_TOL
    holds = corr_condition(model, rho)

    ordering = _ordering(margin)
    if boundary:
        passed = abs(margin) <= EQUALITY_TOL
        expected = "equal"
    elif holds:
        passed = margin > 0.0
        expected = "less_mpx_higher"
    else:
        passed = margin < 0.0
        expected = "more_mpx_higher"
    return PropositionReport(
        proposition="simple-individual",
        condition=f"qA*qB*rho <= f2 is {holds} (boundary={boundary})",
        ordering=ordering, margin=margin, passed=passed,
        details={"expected": expected, "p_less_mpx": p_hat, "p_more_mpx": p_g,
                 "rho": rho, "move": move})


def verify_complex_individual(g: MultiGraph, g_hat: MultiGraph, i: int, rho: float,
                              model: TransmissionModel, tau: int,
                              regime: str) -> PropositionReport:
    """Check the complex-contagion individual ordering in a stated rate regime.

    regime='low': with low infection and transmission rates the multiplexed
    network makes infection more likely. regime='high': the reverse. Requires
    tau > 1, nonnegative transmission correlation, and that node i has more
    than tau layer-links in g.
    """
    _check_model_graph(model, g)
    if tau <= 1:
        raise ValueError("complex contagion needs tau > 1")
    if regime not in ("low", "high"):
        raise ValueError("regime must be 'low' or 'high'")
    move = multiplexity.is_dominance_move(g, g_hat)
    if move is None or move.i != i:
        raise ValueError("g_hat is not one dominance move below g at node i")
    if int(g.adjacency[:, i, :].sum()) <= tau:
        raise ValueError("node i needs more than tau layer-links")
    qa, qb, f2 = model.two_layer_params()
    if f2 < qa * qb - EQUALITY_TOL:
        raise ValueError("complex-contagion check assumes nonnegative correlation (f2 >= qA*qB)")

    p_g = individual_infection_prob_exact(_node_sets(g, i), rho, model, tau)
    p_hat = individual_infection_prob_exact(_node_sets(g_hat, i), rho, model, tau)
    margin = p_hat - p_g
    ordering = _ordering(margin)
    passed = margin < 0.0 if regime == "low" else margin > 0.0
    return PropositionReport(
        proposition="complex-individual",
        condition=f"regime={regime}, tau={tau}, f2>=qA*qB",
        ordering=ordering, margin=margin, passed=passed,
        details={"p_less_mpx": p_hat, "p_more_mpx": p_g, "rho": rho, "move": move})


def verify_sis_ordering(dist: ProfileDistribution, dist_prime: ProfileDistribution,
                        delta: float, model: TransmissionModel, tau: int = 1,
                        regime: str | None = None) -> PropositionReport:
    """Compare population steady states across one demultiplexing move.

    For tau = 1 the prediction follows the correlation condition evaluated at
    the steady state of the more multiplexed distribution. For tau > 1 a
    regime must be stated: 'low' predicts the multiplexed distribution
    diffuses more, 'high' the reverse. Reports inconclusive when either
    steady state is zero.
    """
    move = find_demultiplex_move(dist, dist_prime)
    if move is None:
        raise ValueError("dist_prime is not one demultiplexing move below dist")
    if tau > 1 and regime not in ("low", "high"):
        raise ValueError("tau > 1 requires regime 'low' or 'high'")

    state = solve_steady_state(dist, delta, model, tau=tau)
    state_prime = solve_steady_state(dist_prime, delta, model, tau=tau)
    margin = state_prime.rho - state.rho
    shared = [p for p in state.per_profile if p in state_prime.per_profile]
    profile_gaps = [state_prime.per_profile[p] - state.per_profile[p] for p in shared]
    details = {
        "rho_more_mpx": state.rho, "rho_less_mpx": state_prime.rho,
        "residuals": (state.residual, state_prime.residual),
        "move": move,
        "per_profile_consistent": all(gap * margin >= 0.0 for gap in profile_gaps),
    }

    if state.rho == 0.0 or state_prime.rho == 0.0:
        return PropositionReport(
            proposition="sis-simple" if tau == 1 else "sis-complex",
            condition="inconclusive: zero steady state",
            ordering=_ordering(margin), margin=margin,
            passed=None, conclusive=False, details=details)

    if tau == 1:
        holds = corr_condition(model, state.rho)
        passed = margin > 0.0 if holds else margin < 0.0
        condition = f"qA*qB*rho(P) <= f2 is {holds} at rho(P)={state.rho:.6g}"
        proposition = "sis-simple"
    else:
        passed = margin < 0.0 if regime == "low" else margin > 0.0
        condition = f"regime={regime}, tau={tau}"
        proposition = "sis-complex"
    return PropositionReport(proposition=proposition, condition=condition,
                             ordering=_ordering(margin), margin=margin,
                             passed=passed, details=details)


def _ordering(margin: float) -> str:
    if margin > EQUALITY_TOL:
        return "less_mpx_higher"
    if margin < -EQUALITY_TOL:
        return "more_mpx_higher"
    return "equal"
