"""Recover the self-Kerr coefficient from transmission at several drive powers.

The linear parameters come from a low-power fit. The Kerr coefficient is then
fitted jointly across a power map whose strongest drive stays just below the
bistability onset. A trace above that onset is flagged and left out.

    python3 demos/kerr_power_map.py
"""
from resforge.constants import TWO_PI
from resforge.fitting import bifurcation_flags, fit_kerr_2d, fit_linear_resonance, resonance_from_fit
from resforge.models import power_for_flux
from resforge.params import KerrModelParams, ResonanceParams
from resforge.synth import (GeneratorTruth, NoiseSpec, centered_grid, expected_bifurcation_flux,
                            generate_power_map, generate_trace)

ATTENUATION_DB = 70.0
KERR_HZ = -49.999  # granular aluminium, 200 nm wide

res = ResonanceParams.from_quality(4.2809e9, 6.75e5, 8893)
truth = GeneratorTruth(res, kerr=KerrModelParams(TWO_PI * KERR_HZ))
grid = centered_grid(res, linewidths=10, points=401)
noise = NoiseSpec(1e-3, seed=11)

low = fit_linear_resonance(generate_trace(truth, grid, noise))
res_fixed = resonance_from_fit(low)
print(f"low-power fit: f0 {low['f0']:.9g} Hz, Q_i {low['q_i']:.4g}, Q_c {low['q_c']:.4g}")

onset = expected_bifurcation_flux(res, TWO_PI * KERR_HZ)
fractions = (0.1, 0.4, 0.7, 0.9, 2.0)
powers = [float(power_for_flux(f * onset, ATTENUATION_DB, res.omega0)) for f in fractions]
traces = generate_power_map(truth, powers, grid, noise, ATTENUATION_DB)

flags = bifurcation_flags(traces, res_fixed, TWO_PI * KERR_HZ)
for p, f, bistable in zip(powers, fractions, flags):
    print(f"  {p:8.2f} dBm  ({f:.1f} x onset)  {'bistable, skipped' if bistable else 'used'}")

kept = [t for t, bistable in zip(traces, flags) if not bistable]
fit = fit_kerr_2d(kept, res_fixed)
print(f"K/2pi = {fit['kerr_hz']:.4f} +- {fit.error('kerr_hz'):.2g} Hz/photon (truth {KERR_HZ})")
