"""Reference device families used by demos, tests and example configurations.

Two six-resonator families of quarter-wave wires: 13 nm NbN (L_k about
89 pH/sq) and 50 nm granular aluminium (about 150 pH/sq). Values are the
measured zero-field summaries of those devices and serve as generator truth.
"""
from __future__ import annotations

import math

from .models import length_from_impedance

NBN_FILM = {"lk_sheet": 89e-12, "thickness_t": 13e-9, "critical_temp_Tc": 4.0}
GRAL_FILM = {"lk_sheet": 150e-12, "thickness_t": 50e-9, "critical_temp_Tc": 2.1,
             "grain_size_a": 6e-9}

# width (nm), f0 (GHz), Q_i, Q_c, Z (kOhm), K/2pi (Hz/photon), B_C par (T), B_C perp (mT)
NBN_TABLE = (
    (200, 4.0743, 13805, 28241, 2.725, -4.506, 13.537, 1076.6),
    (300, 4.8282, 20344, 17156, 2.225, -3.877, 12.977, 577.9),
    (400, 5.4080, 17324, 14008, 1.927, -2.690, 11.938, 400.1),
    (500, 5.7831, 28542, 14264, 1.724, -2.479, 10.934, 315.3),
    (600, 6.2537, 25832, 12617, 1.582, -2.323, 9.893, 254.9),
    (700, 6.6245, 30575, 10316, 1.457, -1.999, 9.148, 220.1),
)
NBN_I_STAR_UA = (74, 112, 149, 186, 223, 260)

GRAL_TABLE = (
    (200, 4.2809, 6.75e5, 8893, 3.530, -49.999, 3.028, 328.4),
    (300, 5.0666, 12.65e5, 6545, 2.882, -44.198, None, None),
    (400, 5.5379, 10.40e5, 5955, 2.496, -32.788, None, None),
    (500, 5.9991, 10.66e5, 5850, 2.232, -25.354, None, None),
    (600, 6.4067, 4.16e5, 4544, 2.038, -21.259, None, None),
    (700, 6.8399, 3.83e5, 3421, 1.887, -19.179, 2.851, 70.1),
)
GRAL_I_SW_UA = (6.8, 10.2, 13.6, 17.0, 20.4, 23.8)


def family_lengths(table, film):
    """Quarter-wave lengths (m) consistent with each row's f0 and Z."""
    return [length_from_impedance(row[1] * 1e9, row[4] * 1e3, film["lk_sheet"] / (row[0] * 1e-9))
            for row in table]


def nbn_campaign_config(orientation: str = "in_plane", max_field: float = 6.0,
                        step: float = 0.1, noise_sigma: float = 1e-3, seed: int = 2024,
                        env: dict | None = None, powers=(), kerr_powers=(),
                        power_scan_fields=()) -> dict:
    """Campaign document for the NbN family with table values as truth."""
    env = env if env is not None else {"amplitude_a": 0.8, "phase_alpha": 0.4,
                                      "delay_tau": 47e-9, "impedance_mismatch_phi": 0.1}
    lengths = family_lengths(NBN_TABLE, NBN_FILM)
    resonators = []
    for i, (row, length) in enumerate(zip(NBN_TABLE, lengths)):
        w, f0, qi, qc, _, k, bpar, bperp = row
        resonators.append({
            "name": f"res{i}", "film": "nbn", "width": w * 1e-9, "design_f0": f0 * 1e9,
            "length": length,
            "truth": {"q_i": qi, "q_c": qc, "kerr_hz": k, "env": dict(env),
                      "b_c_par": bpar, "b_c_perp": bperp * 1e-3},
        })
    return {
        "schema": 1,
        "name": f"nbn-{orientation.replace('_', '-')}",
        "films": {"nbn": dict(NBN_FILM)},
        "resonators": resonators,
        "field": {"orientation": orientation, "max_field": max_field, "step": step,
                  "ramp_rate_mt_per_min": 100.0, "settle_time_s": 120.0,
                  "power_scan_fields": list(power_scan_fields)},
        "powers": list(powers),
        "kerr_powers": list(kerr_powers),
        "attenuation_db": 70.0,
        "scan": {"fast_width_hz": 80e6, "fast_points": 801, "detail_linewidths": 20,
                 "detail_points": 401, "power_dbm": -60.0},
        "qc": {"max_std_error": 1e3},
        "simulation": {"noise_sigma": noise_sigma, "seed": seed},
    }


def nbn_misalignment_config(theta_b_deg: float = 1.08, **kwargs) -> dict:
    """In-plane NbN campaign whose critical fields follow the diffusion law.

    The film diffusion constant is chosen so that the 200 nm wire keeps its
    tabulated in-plane critical field at ``theta_b_deg``; the other widths
    then follow from the width dependence of the misaligned-field term.
    """
    from .models import diffusion_for_critical_field
    from .params import FilmProperties

    doc = nbn_campaign_config("in_plane", **kwargs)
    film = dict(NBN_FILM)
    w0, b_c0 = NBN_TABLE[0][0] * 1e-9, NBN_TABLE[0][6]
    film["diffusion_D"] = diffusion_for_critical_field(
        FilmProperties(**film), b_c0, w0, math.radians(theta_b_deg))
    doc["films"]["nbn"] = film
    doc["name"] = "nbn-misalignment"
    for item in doc["resonators"]:
        truth = item["truth"]
        del truth["b_c_par"]
        truth["theta_b_deg"] = theta_b_deg
    return doc
