"""Print a JSON digest of every jitted kernel's output; run under both numba settings."""
import json, sys
import numpy as np
from openkpz import _jit
from openkpz.asep_model import AsepParams, liggett_params
from openkpz.asep_dynamics import simulate, coupled_simulate, she_martingale_residual
from openkpz.mpa import usw_rep, mpa_sample
from openkpz.kpz_stationary import sample_stationary
from openkpz.askey_wilson import AwProcessSpec, multitime_expectation
from openkpz.asep_model import weak_asymmetry_params
p = AsepParams(0.3, 0.7, 0.4, 0.1, 0.05, 5)
out = {"numba": _jit.NUMBA_ENABLED}
tr = simulate(p, 50.0, seed=1)
out["sim"] = [tr.times[:50].tolist(), tr.final.tolist(), int(tr.n_events)]
c = coupled_simulate(liggett_params(0.5, 0.3, 0.4, 5), liggett_params(0.5, 0.6, 0.5, 5), 50.0, seed=2)
out["couple"] = [c.times[:50].tolist(), int(c.n_events)]
out["she"] = she_martingale_residual(liggett_params(0.5, 0.5, 0.5, 3), 100, 0.5, seed=3).mean.tolist()
out["mpa"] = mpa_sample(usw_rep(liggett_params(0.5, 0.7, 0.3, 6), 8), 6, 200, seed=4).sum(axis=0).tolist()
e = sample_stationary(1.0, 1.0, n_paths=300, seed=5)
out["kpz"] = [e.composed_h[:, -1].tolist(), e.log_weights.tolist()]
spec = AwProcessSpec.from_asep(weak_asymmetry_params(16, 1.0, 1.0))
out["aw"] = multitime_expectation(spec, (0.9, 1.0, 1.1))
json.dump(out, sys.stdout)
