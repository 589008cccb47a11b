import os
import subprocess
import sys

import pytest

DEMO_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "demos")

CASES = [
    ("rate_sweep_demo.py", "limit 6"),
    ("amplitude_anatomy_demo.py", "O(epsilon^2)"),
    ("decoherence_trajectory_demo.py", "closed-form Gamma_signal"),
    ("optical_theorem_demo.py", "forward amplitude at q = q_th"),
]


@pytest.mark.parametrize("script,marker", CASES)
def test_demo_runs_clean(script, marker):
    path = os.path.join(DEMO_DIR, script)
    proc = subprocess.run([sys.executable, path], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert marker in proc.stdout