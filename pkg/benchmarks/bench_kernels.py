#!/usr/bin/env python3
"""Compare the compiled and reference kernel backends end to end.

Usage: python benchmarks/bench_kernels.py [--trees N] [--steps N] [--seed N]

Both backends walk the identical action script through the identical world;
the final digests must match (they are bit-identical by contract), and the
table shows what buying the compiled extension gets you.
"""
import argparse

from firecrew.bench import compare_backends, format_results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trees", type=int, default=1000)
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    results = compare_backends(trees=args.trees, steps=args.steps,
                               seed=args.seed)
    print(format_results(results))
    return 1 if (len(results) == 2
                 and results[0].digest != results[1].digest) else 0


if __name__ == "__main__":
    raise SystemExit(main())
