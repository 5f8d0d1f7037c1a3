"""Calibrating one sensor and checking the posterior predictive.

Runs a short adaptive Metropolis chain on a synthetic sensor-16 record
(pass --iterations to change its length), prints the posterior summary
next to the truth and the 2-sigma predictive coverage.

    python demos/03_calibrate_sensor.py --iterations 20000
"""
import argparse

from aecal.config import ExperimentConfig
from aecal.inference import posterior_predictive
from aecal.pipeline import calibrate_sensor, detect
from aecal.synthetic import default_truth, generate_synthetic

parser = argparse.ArgumentParser()
parser.add_argument("--iterations", type=int, default=20000)
parser.add_argument("--alpha", type=float, default=0.01)
args = parser.parse_args()

cfg = ExperimentConfig.from_dict().override(
    mcmc={"n_iter": args.iterations, "burn_in": args.iterations // 2, "seed": 1})
traces, _ = generate_synthetic(cfg, default_truth(cfg), args.alpha, seed=1, sensor_ids=[16])
tr = traces[16]
target, result = calibrate_sensor(tr, detect(tr, cfg), cfg)

s = result.summary
truth = {"v0": 1.31, "a": 0.61, "omega_s": 350.0, "epsilon": 20.0}
print(f"acceptance rate {s.acceptance_rate:.3f}, {s.n_samples} kept samples")
print("parameter   truth      mean         std        z")
for name, value in truth.items():
    z = (s.mean[name] - value) / s.std[name]
    print(f"{name:9s} {value:7.3f} {s.mean[name]:12.6f} {s.std[name]:10.3g} {z:8.2f}")
print(f"sigma_t2 mean {s.mean['sigma_t2']:.3g} s^2, gain C {s.c_gain:.4g} counts/m")

env = posterior_predictive(result.samples, target, 200)
print(f"\n2-sigma predictive coverage: {env.coverage(2):.4f}")
print("interval residuals (us):", ((env.interval_observed - env.interval_mean) * 1e6).round(3))
