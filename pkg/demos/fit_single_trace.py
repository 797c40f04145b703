"""Fit one noisy transmission trace and check the result against the truth.

A 4.07 GHz NbN quarter-wave wire is simulated behind a realistic feedline
(attenuated amplitude, phase offset, 47 ns cable delay, slight impedance
mismatch). The fitter finds the dip, guesses the parameters from the
resonance circle and then refines them by damped least squares.

    python3 demos/fit_single_trace.py
"""
from resforge.fitting import fit_linear_resonance, qc_filter
from resforge.params import EnvironmentParams, ResonanceParams
from resforge.synth import GeneratorTruth, NoiseSpec, centered_grid, generate_trace

res = ResonanceParams.from_quality(4.0743e9, 13805, 28241)
env = EnvironmentParams(amplitude_a=0.8, phase_alpha=0.4, delay_tau=47e-9,
                        impedance_mismatch_phi=0.1)
truth = GeneratorTruth(res, env)

trace = generate_trace(truth, centered_grid(res, linewidths=10, points=401), NoiseSpec(1e-3, seed=7))
fit = fit_linear_resonance(trace)

print(f"converged after {fit.n_iterations} iterations, residual norm {fit.residual_norm:.3e}")
expected = {"f0": res.f0, "q_i": res.q_i, "q_c": res.q_c, "tau": env.delay_tau,
            "phi": env.impedance_mismatch_phi}
for key, true in expected.items():
    print(f"{key:>4}: {fit[key]:.8g} +- {fit.error(key):.2g}   (truth {true:.8g})")

verdict = qc_filter(fit)
print("quality check:", "accepted" if verdict.accepted else f"rejected {verdict}")
