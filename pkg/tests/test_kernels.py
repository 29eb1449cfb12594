import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stare import kernels
from stare._jit import HAVE_NUMBA, JIT_DISABLED

SNIPPET = r"""
import json, numpy as np
from stare._jit import HAVE_NUMBA
from stare.integrator import IntegrationConfig, run_protocol
from stare.microscopic import CompositeParams, run_composite
from stare.schedules import SweepSpec
cfg = IntegrationConfig(rtol=1e-9, atol=1e-11, output_grid=5)
out = {"jit": HAVE_NUMBA}
for kind in ("linear", "rc", "os"):
    traj, inf = run_protocol(SweepSpec(10.0, 30.0, -8.0, 8.0, kind), config=cfg)
    out[kind] = [inf, traj.n_accepted, traj.n_rejected]
run = run_composite(CompositeParams(x0=0.3, t_i=-2, t_f=2), cfg)
out["composite"] = [run.final_infidelity, run.full.n_accepted, run.full.n_rejected]
print(json.dumps(out))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("STARE_DISABLE_JIT", None)
    if disable:
        env["STARE_DISABLE_JIT"] = "1"
    proc = subprocess.run([sys.executable, "-c", SNIPPET], env=env,
                          capture_output=True, text=True, timeout=600, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.slow
def test_pure_numpy_fallback_matches_compiled():
    fast, slow = _run(False), _run(True)
    assert fast.pop("jit") and not slow.pop("jit")
    for key in fast:
        assert slow[key][0] == pytest.approx(fast[key][0], rel=1e-10, abs=1e-14)
        # identical step sequences
        assert slow[key][1:] == fast[key][1:]


def test_jit_flag_reflects_environment():
    assert JIT_DISABLED == (os.environ.get("STARE_DISABLE_JIT", "").lower()
                            in ("1", "true", "yes", "on"))
    assert HAVE_NUMBA != JIT_DISABLED


@given(st.lists(st.floats(-1e300, 1e300), min_size=1, max_size=8))
def test_scaled_rms_matches_hypot(values):
    # math.hypot scales internally, so it neither overflows nor underflows
    v = np.array(values)
    expect = math.hypot(*values) / math.sqrt(len(values))
    assert kernels._rms(v) == pytest.approx(expect, rel=1e-12)


def test_pack_round_trip():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    out = np.empty(32)
    assert np.array_equal(kernels.unpack(kernels.pack(m, out), 4), m)
