"""
How much do estimated error variances cost?
===========================================

The genie variants of IMS/Q replace the estimated error variances by the
squared errors of the current realization. Comparing them with plain IMS/Q
shows how much the variance estimates limit performance.
"""

from discrete_cs import harness

config = harness.ExperimentConfig(
    algorithms=["ims", "ims_genie_ee", "ims_genie_dd", "ims_genie_both"],
    noise_levels_db=[11.0, 12.0, 13.0, 14.0],
    trials=100,
)
curve = harness.run_curve(config)

for name in config.algorithms:
    at = harness.crossing_db(curve.series(name), 1e-2)
    print(f"{harness.LABELS[name]:18s} reaches SER 1e-2 at {at:.2f} dB")

harness.emit_svg(curve, harness.default_output_dir() / "genie.svg")
