"""Fit the frozen constants in ymlab/constants.py from the N=16 corpus.

    python3 scripts/calibrate_constants.py

Takes about a minute and a half.  C0 is chosen, C1 is 1.25x the smallest value that
makes every corpus grid point satisfy the monotonicity inequality.
"""

import time

from ymlab import corpus
from ymlab.constants import EPS0

C0 = 4.0
SAFETY = 1.25


def main():
    t = time.time()
    runs = corpus.run_corpus(16)
    print(f"# corpus integrated in {time.time() - t:.0f} s")
    for r in runs:
        print(f"#   {r.name:14s} E0 = {r.E0:.4g}")
    c1 = SAFETY * corpus.monotonicity_margins(runs, C0)
    ab = corpus.antibubble_fit(runs)
    eps = corpus.eps_regularity_constants(runs, EPS0)
    print(f"MONOTONICITY_C0 = {C0}")
    print(f"MONOTONICITY_C1 = {c1:.5g}")
    print(f"ANTIBUBBLE_C = {max(ab.values()):.3g}  # per run: "
          + ", ".join(f"{k} {v:.3g}" for k, v in ab.items()))
    print(f"EPS_REGULARITY_C = {max(eps.values()):.3g}  # per run: "
          + ", ".join(f"{k} {v:.3g}" for k, v in eps.items()))


if __name__ == "__main__":
    main()
