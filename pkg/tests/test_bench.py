"""Benchmark harness and kernel backend selection."""
import os
import subprocess
import sys

from firecrew.bench import compare_backends, format_results


class TestCompareBackends:
    def test_digests_match_and_speed_positive(self):
        results = compare_backends(trees=150, steps=150, seed=4)
        assert [r.backend for r in results] == ["reference", "compiled"]
        assert results[0].digest == results[1].digest
        for r in results:
            assert r.steps == 150
            assert r.steps_per_second > 0

    def test_format_mentions_speedup(self):
        results = compare_backends(trees=100, steps=80, seed=1)
        text = format_results(results)
        assert "digests match" in text
        assert "speedup" in text


class TestBackendSelection:
    def _backend_name(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop("FIRECREW_KERNELS", None)
        else:
            env["FIRECREW_KERNELS"] = env_value
        out = subprocess.run(
            [sys.executable, "-c",
             "import firecrew.kernels as k; print(k.BACKEND)"],
            capture_output=True, text=True, env=env, check=True)
        return out.stdout.strip()

    def test_env_var_selects_backend(self):
        assert self._backend_name("reference") == "reference"
        assert self._backend_name("compiled") == "compiled"

    def test_default_prefers_compiled(self):
        assert self._backend_name(None) == "compiled"

    def test_reference_backend_runs_full_episode(self):
        env = dict(os.environ)
        env["FIRECREW_KERNELS"] = "reference"
        code = (
            "from firecrew.config import WorldConfig\n"
            "from firecrew.world import init_world, step, Action, state_digest\n"
            "w = init_world(WorldConfig(tree_count=200, episode_length=120,"
            " seed=9), seed=9)\n"
            "import numpy as np\n"
            "rng = np.random.default_rng(0)\n"
            "while not w.terminal:\n"
            "    step(w, [Action(steer=float(rng.uniform(-1, 1)))"
            " for _ in range(3)])\n"
            "print(state_digest(w))\n")
        a = subprocess.run([sys.executable, "-c", code], capture_output=True,
                           text=True, env=env, check=True)
        env["FIRECREW_KERNELS"] = "compiled"
        b = subprocess.run([sys.executable, "-c", code], capture_output=True,
                           text=True, env=env, check=True)
        assert a.stdout == b.stdout
