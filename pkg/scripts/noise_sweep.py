"""Held-out accuracy of every model as label noise increases.

    python3 scripts/noise_sweep.py --levels 0 0.05 0.1 0.2
"""

import argparse

from motorpm.harness import MODEL_NAMES, pct, run_benchmark
from motorpm.synth import GeneratorConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2])
    ap.add_argument("--n", type=int, default=1050)
    ap.add_argument("--seed", type=int, default=42)
    a = ap.parse_args()

    print("noise  " + "".join(f"{m:>12}" for m in MODEL_NAMES))
    for level in a.levels:
        report = run_benchmark(generate(GeneratorConfig(n=a.n, seed=a.seed, label_noise=level)))
        acc = report.accuracies
        print(f"{level:<7}" + "".join(f"{str(pct(acc[m])):>12}" for m in MODEL_NAMES), flush=True)


if __name__ == "__main__":
    main()
