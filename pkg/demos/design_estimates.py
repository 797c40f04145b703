"""Closed-form design numbers for a thin-film quarter-wave wire.

Starting from the sheet inductance, width and measured frequency and impedance,
the chain yields the length, the capacitance per unit length and the expected
Kerr coefficient. The same chain is available as ``resforge estimate``.
For granular aluminium the junction-chain estimate lands about 30% below the
measured -50 Hz/photon; it is an order-of-magnitude guide only.

    python3 demos/design_estimates.py
"""
import json

from resforge.cli import estimate_chain

nbn = {"film": {"lk_sheet": 89e-12, "thickness_t": 13e-9, "critical_temp_Tc": 4.0},
       "width": 200e-9, "f0_hz": 4.0743e9, "impedance_ohm": 2725.0, "i_star": 74e-6}
gral = {"film": {"lk_sheet": 150e-12, "thickness_t": 50e-9, "critical_temp_Tc": 2.1,
                 "grain_size_a": 6e-9, "switching_current_Isw": 6.8e-6},
        "width": 200e-9, "f0_hz": 4.2809e9, "impedance_ohm": 3530.0}

for label, doc in (("NbN", nbn), ("granular Al", gral)):
    print(label)
    print(json.dumps(estimate_chain(doc)["estimates"], indent=2))
