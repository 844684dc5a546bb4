"""Estimate a worst-case dirty rate and fit model parameters to timings.

Uses the measurement records embedded in the demo scenario: a short
dirty-page trace for the rate estimate and three timed checkpoint /
transfer / restore runs for the parameter fit.
"""

from pathlib import Path

from edgemig import (
    DirtySample,
    SyntheticWorkload,
    calibration_fit,
    estimate_dirty_rate,
    load_scenario,
    synthetic_dirty_trace,
)

scenario = load_scenario(Path(__file__).parent / "scenario.json")
profile = scenario.ms_profiles[0].profile

estimate = estimate_dirty_rate(scenario.dirty_samples,
                               profile.state_size_bytes)
print("dirty-rate estimate from recorded windows:")
print(f"  worst window  {estimate.rate_pages_per_s:.1f} pages/s "
      f"(mean {estimate.mean_rate_pages_per_s:.1f})")
print(f"  normalized    {estimate.normalized:.5f} of the state per round")

# The estimator also digests synthetic write traces: generate page-level
# events, bucket them into one-second windows, estimate again.
workload = SyntheticWorkload(state_size_bytes=profile.state_size_bytes,
                             target_dirty_rate_pages_per_s=12.0,
                             duration_s=8.0, seed=7)
trace = synthetic_dirty_trace(workload)
windows: dict[int, set[int]] = {}
for time_s, page in trace:
    windows.setdefault(int(time_s), set()).add(page)
samples = [DirtySample(window_s=1.0, pages_modified=len(pages))
           for _, pages in sorted(windows.items())]
again = estimate_dirty_rate(samples, profile.state_size_bytes)
print(f"  synthetic 12 pages/s workload estimated at "
      f"{again.rate_pages_per_s:.1f} pages/s over {len(samples)} windows")

fit = calibration_fit(scenario.calibration_runs)
p = fit.params
print("\nfitted model parameters:")
print(f"  checkpoint  {p.ckpt_fixed_s:.4f} s + {p.ckpt_per_byte_s:.3e} s/B")
print(f"  restore     {p.restore_fixed_s:.4f} s + "
      f"{p.restore_per_byte_s:.3e} s/B")
print(f"  signaling   {p.transfer_signaling_s:.4f} s per transfer")
print(f"  residuals   ckpt {fit.checkpoint_rms_s:.2e}  "
      f"restore {fit.restore_rms_s:.2e}  transfer {fit.transfer_rms_s:.2e}")
