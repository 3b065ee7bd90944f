"""Numerical identity checks behind the guard-pilot observation model.

Each check returns a :class:`Check` with the measured error so the CLI can
print a pass/fail line per identity.
"""
from dataclasses import dataclass

import numpy as np

from .bem import basis_offsets, cebem_basis, dft_matrix, shift_matrix
from .channel import apply_channel_time, generate_bem_channel, generate_support, ofdm_demodulate, ofdm_modulate
from .config import SystemConfig
from .metrics import nmse_db
from .pilots import assemble_frame, index_sets, make_pilot_plan
from .recovery import build_measurement_matrix, estimate_channel, extract_observations, pack_coefficients


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3e} (limit {self.threshold:.1e})"


def shift_identity_error(N, D):
    """Largest Frobenius error of ``W diag(v_d) W^H`` against a circular shift by ``d - (D-1)/2``."""
    W = dft_matrix(N)
    V = cebem_basis(N, D)
    errs = [
        np.linalg.norm((W * V[:, d]) @ W.conj().T - shift_matrix(N, int(alpha)))
        for d, alpha in enumerate(basis_offsets(D))
    ]
    return float(max(errs))


def selection_products(plan, S):
    """Dense ``U_dbar @ E_shift(alpha_d) @ diag(S)`` for every ``(dbar, d)`` pair."""
    N, D = plan.N, plan.D
    sets = index_sets(plan)
    eye = np.eye(N)
    out = {}
    for dbar in range(D):
        U = eye[sets[dbar]]
        for d, alpha in enumerate(basis_offsets(D)):
            out[dbar, d] = U @ shift_matrix(N, int(alpha)) @ np.diag(S)
    return out


def selection_identity_error(N=32, G=3, D=3, seed=0):
    """Worst deviation from the selection identity on a random frame with data.

    Off-diagonal pairs must vanish; diagonal pairs must equal
    ``diag(P) @ I_N[S_cen]``.
    """
    rng = np.random.default_rng(seed)
    plan = make_pilot_plan(N, G, D, 1, rng)
    data = rng.standard_normal(plan.data_indices().size) + 1j * rng.standard_normal(plan.data_indices().size)
    S = assemble_frame(plan, data, 0)
    target = plan.values[:, 0, None] * np.eye(N)[plan.centers]
    err = 0.0
    for (dbar, d), prod in selection_products(plan, S).items():
        ref = target if dbar == d else np.zeros_like(prod)
        err = max(err, float(np.abs(prod - ref).max()))
    return err


def noiseless_instance(cfg, rng):
    """Noiseless BEM-exact link with zero data; returns ``(Y, channel, theta, plan)``."""
    support = generate_support(cfg.L, cfg.K, rng)
    ch, coef = generate_bem_channel(cfg, support, rng)
    plan = make_pilot_plan(cfg.N, cfg.G, cfg.D, cfg.n_antennas, rng)
    zeros = np.zeros(plan.data_indices().size)
    S = np.stack([assemble_frame(plan, zeros, a) for a in range(cfg.n_antennas)])
    Y = ofdm_demodulate(apply_channel_time(ch, ofdm_modulate(S)))
    return Y, ch, coef, plan


def observation_model_error(cfg, rng):
    """Relative Frobenius error of ``Y_R`` against ``Phi @ X_true``."""
    Y, _, coef, plan = noiseless_instance(cfg, rng)
    yR = extract_observations(Y, index_sets(plan))
    model = build_measurement_matrix(plan, cfg.L) @ pack_coefficients(coef)
    return float(np.linalg.norm(yR - model) / np.linalg.norm(model))


def run_checks(seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    for N in (8, 16, 64):
        err = shift_identity_error(N, 3)
        checks.append(Check(f"shift identity N={N}", err < 1e-9, err, 1e-9))
    err = selection_identity_error(N=32, seed=seed)
    checks.append(Check("selection identity N=32", err < 1e-9, err, 1e-9))

    cfg = SystemConfig(N=256, G=24, L=16, K=2, D=3, n_antennas=4, snr_db=float("inf"), bem_exact=True)
    err = observation_model_error(cfg, rng)
    checks.append(Check("observation model Y_R = Phi X", err < 1e-9, err, 1e-9))
    Y, ch, _, plan = noiseless_instance(cfg, rng)
    nmse = nmse_db(estimate_channel(Y, plan, cfg), ch)
    checks.append(Check("noiseless end-to-end NMSE (dB)", nmse <= -120, nmse, -120))
    return checks
