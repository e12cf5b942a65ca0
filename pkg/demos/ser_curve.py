"""
Symbol error rate against noise level
=====================================

A short Monte Carlo run of the comparison experiment. The full curves use
2000 trials per point; 100 keep this script under a few minutes.
"""

from discrete_cs import harness

config = harness.ExperimentConfig(trials=100, noise_levels_db=[15.0, 16.0, 17.0, 18.0], tuning_trials=50)
curve = harness.run_curve(config)

for name in curve.algorithms:
    row = "  ".join(f"{p.ser:.1e}" for p in curve.series(name))
    print(f"{harness.LABELS[name]:6s} {row}")

# IST/Q thresholds picked by the grid search, in units of sigma_n
sigma_n = {db: harness.noise_level_db_to_variance(db) ** 0.5 for db in curve.ist_tau}
print("IST thresholds:", {db: round(tau / sigma_n[db], 2) for db, tau in curve.ist_tau.items()})

out = harness.default_output_dir()
harness.emit_csv(curve, out / "ser_curve.csv")
harness.emit_svg(curve, out / "ser_curve.svg", title="L=258, K=129, s=20")
print("wrote", out)
